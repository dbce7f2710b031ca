//! molfield represents molecules as multi-channel scalar fields sampled on
//! regular grids and fits compact implicit neural networks (modulated sine
//! activations, conditioned on per-molecule latent codes) to those fields.
//!
//! The pipeline: parse a structure file ([`io`]), sample its field
//! ([`field`]), fit a network in auto-decoder or auto-encoder mode
//! ([`train`]), then reconstruct, super-resolve, compare and export
//! ([`eval`], [`volio`]).

pub mod checkpoint;
pub mod elements;
pub mod eval;
pub mod field;
pub mod io;
pub mod molecule;
pub mod net;
pub mod train;
pub mod volio;

pub use elements::{ElementTable, PropertyKind};
pub use field::{ChannelSpec, GridSpec, VolumeGrid};
pub use molecule::{Atom, Molecule};

//! Molecular structure file parsing.
//!
//! Each format lives behind the [`MoleculeReader`] trait and is registered
//! by name in a [`ReaderRegistry`]; callers select a reader explicitly or by
//! file extension. The free functions [`parse_xyz`], [`parse_pdb`] and
//! [`parse_sdf`] are the direct entry points the readers delegate to.

mod pdb;
mod sdf;
mod xyz;

pub use pdb::parse_pdb;
pub use sdf::parse_sdf;
pub use xyz::{parse_xyz, write_xyz};

use crate::elements::ElementTable;
use crate::molecule::Molecule;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unknown element symbol {symbol:?}")]
    UnknownElement { line: usize, symbol: String },
    #[error("atom count mismatch: header declares {declared}, found {found}")]
    CountMismatch { declared: usize, found: usize },
    #[error("no ATOM/HETATM records found")]
    NoRecords,
    #[error("record {requested} requested but file has {available} record(s)")]
    RecordOutOfRange { requested: usize, available: usize },
    #[error("truncated atom block: counts line declares {declared} atoms, block has {found} line(s)")]
    Truncated { declared: usize, found: usize },
}

/// What to do with element symbols missing from the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnknownElements {
    /// Keep the atom; downstream field generation errors if a channel needs it.
    #[default]
    Keep,
    /// Fail the parse.
    Reject,
}

/// Parser behaviour switches shared by all formats.
#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub unknown_elements: UnknownElements,
    /// Drop PDB water residues (HOH/WAT). On by default.
    pub exclude_waters: bool,
    /// 1-based record selector for multi-record SDF files.
    pub sdf_record: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            unknown_elements: UnknownElements::default(),
            exclude_waters: true,
            sdf_record: 1,
        }
    }
}

pub(crate) fn check_element(
    table: &ElementTable,
    options: &ParseOptions,
    symbol: &str,
    line: usize,
) -> Result<(), ParseError> {
    if options.unknown_elements == UnknownElements::Reject && !table.contains(symbol) {
        return Err(ParseError::UnknownElement {
            line,
            symbol: symbol.to_string(),
        });
    }
    Ok(())
}

/// One file format behind a common interface.
pub trait MoleculeReader: Send + Sync {
    /// Short name used for registry lookup and CLI `--format` values.
    fn format_name(&self) -> &'static str;
    /// Extensions (lowercase, without dot) this reader claims.
    fn extensions(&self) -> &'static [&'static str];
    fn parse(
        &self,
        text: &str,
        table: &ElementTable,
        options: &ParseOptions,
    ) -> Result<Molecule, ParseError>;
}

struct XyzReader;
struct PdbReader;
struct SdfReader;

impl MoleculeReader for XyzReader {
    fn format_name(&self) -> &'static str {
        "xyz"
    }
    fn extensions(&self) -> &'static [&'static str] {
        &["xyz"]
    }
    fn parse(
        &self,
        text: &str,
        table: &ElementTable,
        options: &ParseOptions,
    ) -> Result<Molecule, ParseError> {
        parse_xyz(text, table, options)
    }
}

impl MoleculeReader for PdbReader {
    fn format_name(&self) -> &'static str {
        "pdb"
    }
    fn extensions(&self) -> &'static [&'static str] {
        &["pdb", "ent"]
    }
    fn parse(
        &self,
        text: &str,
        table: &ElementTable,
        options: &ParseOptions,
    ) -> Result<Molecule, ParseError> {
        parse_pdb(text, table, options)
    }
}

impl MoleculeReader for SdfReader {
    fn format_name(&self) -> &'static str {
        "sdf"
    }
    fn extensions(&self) -> &'static [&'static str] {
        &["sdf", "mol"]
    }
    fn parse(
        &self,
        text: &str,
        table: &ElementTable,
        options: &ParseOptions,
    ) -> Result<Molecule, ParseError> {
        parse_sdf(text, table, options)
    }
}

/// Name-indexed collection of format readers.
pub struct ReaderRegistry {
    readers: Vec<Box<dyn MoleculeReader>>,
}

impl Default for ReaderRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

impl ReaderRegistry {
    /// Registry preloaded with the built-in formats (xyz, pdb, sdf).
    pub fn with_builtin() -> Self {
        let mut registry = ReaderRegistry { readers: Vec::new() };
        registry.register(Box::new(XyzReader));
        registry.register(Box::new(PdbReader));
        registry.register(Box::new(SdfReader));
        registry
    }

    /// Register a reader. A reader with the same name replaces the old one.
    pub fn register(&mut self, reader: Box<dyn MoleculeReader>) {
        self.readers.retain(|r| r.format_name() != reader.format_name());
        self.readers.push(reader);
    }

    pub fn by_name(&self, name: &str) -> Option<&dyn MoleculeReader> {
        self.readers
            .iter()
            .find(|r| r.format_name() == name)
            .map(|r| r.as_ref())
    }

    /// Pick a reader from a path's extension (case-insensitive).
    pub fn for_path(&self, path: &std::path::Path) -> Option<&dyn MoleculeReader> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        self.readers
            .iter()
            .find(|r| r.extensions().contains(&ext.as_str()))
            .map(|r| r.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.readers.iter().map(|r| r.format_name()).collect()
    }
}

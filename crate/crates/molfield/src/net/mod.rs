//! Implicit neural field networks: a sine-activation synthesis stack whose
//! hidden activations are gated elementwise by a latent-conditioned relu
//! modulator, plus the 3D convolutional encoder that produces latents from
//! sampled volumes.

mod encoder;
mod modulated;
mod points;
pub mod real;

pub use encoder::{ConvEncoder, EncodeCache, EncoderConfig, EncoderGrads};
pub use modulated::{
    init_network, ForwardCache, LatentCode, ModulatedField, Modulations, NetConfig, NetGrads,
};
pub use points::{normalize_points, normalize_points_f64};
pub use real::Real;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid network config: {0}")]
    BadConfig(String),
    #[error("latent length {got} does not match configured latent_dim {expected}")]
    LatentShape { expected: usize, got: usize },
    #[error("points must be N x 3, got N x {0}")]
    PointShape(usize),
    #[error("upstream gradient shape {got:?} does not match output shape {expected:?}")]
    UpstreamShape {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("volume has {got_channels} channels / dims {got_dims:?}, encoder expects {expected_channels} / {expected_dims:?}")]
    EncoderInput {
        expected_channels: usize,
        expected_dims: [usize; 3],
        got_channels: usize,
        got_dims: [usize; 3],
    },
}

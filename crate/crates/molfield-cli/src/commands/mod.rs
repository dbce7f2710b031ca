pub mod export;
pub mod interpolate;
pub mod psnr;
pub mod reconstruct;
pub mod sample;
pub mod train;

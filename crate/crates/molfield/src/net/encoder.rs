//! 3D convolutional encoder: stride-2 convolutions with relu, global
//! average pool, and a final linear map to the latent dimension.
//!
//! Convolutions run as im2col + GEMM. Activations are stored voxel-major
//! (rows = voxels in x-fastest order, columns = channels).

use ndarray::{Array1, Array2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::VolumeGrid;

use super::real::Real;
use super::NetError;

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub in_channels: usize,
    pub input_dims: [usize; 3],
    pub conv_widths: Vec<usize>,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub latent_dim: usize,
}

impl EncoderConfig {
    /// Default stack: three stride-2 kernel-3 convolutions (16/32/64) on a
    /// 32^3 input, pooled and mapped to the latent dimension.
    pub fn with_input(in_channels: usize, latent_dim: usize) -> Self {
        EncoderConfig {
            in_channels,
            input_dims: [32, 32, 32],
            conv_widths: vec![16, 32, 64],
            kernel: 3,
            stride: 2,
            padding: 1,
            latent_dim,
        }
    }

    fn conv_out(&self, dim: usize) -> Option<usize> {
        (dim + 2 * self.padding)
            .checked_sub(self.kernel)
            .map(|v| v / self.stride + 1)
    }

    /// Spatial dims after every conv layer, input first.
    pub fn layer_dims(&self) -> Result<Vec<[usize; 3]>, NetError> {
        let mut dims = vec![self.input_dims];
        for _ in &self.conv_widths {
            let prev = *dims.last().unwrap();
            let mut next = [0usize; 3];
            for axis in 0..3 {
                next[axis] = self
                    .conv_out(prev[axis])
                    .filter(|&v| v >= 1)
                    .ok_or_else(|| {
                        NetError::BadConfig(format!(
                            "conv stack collapses dims {prev:?} below 1 voxel"
                        ))
                    })?;
            }
            dims.push(next);
        }
        Ok(dims)
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.in_channels == 0 || self.latent_dim == 0 || self.conv_widths.is_empty() {
            return Err(NetError::BadConfig("encoder has a zero dimension".into()));
        }
        if self.kernel == 0 || self.stride == 0 {
            return Err(NetError::BadConfig("kernel and stride must be positive".into()));
        }
        self.layer_dims().map(|_| ())
    }
}

/// Encoder parameters. Declaration order: conv layers (weight, bias) in
/// depth order, then the linear head (weight, bias).
#[derive(Debug, Clone)]
pub struct ConvEncoder<F: Real> {
    pub config: EncoderConfig,
    /// Per layer: c_out x (c_in * kernel^3)
    pub conv_w: Vec<Array2<F>>,
    pub conv_b: Vec<Array1<F>>,
    /// latent_dim x last_conv_width
    pub linear_w: Array2<F>,
    pub linear_b: Array1<F>,
}

#[derive(Debug, Clone)]
pub struct EncoderGrads<F: Real> {
    pub conv_w: Vec<Array2<F>>,
    pub conv_b: Vec<Array1<F>>,
    pub linear_w: Array2<F>,
    pub linear_b: Array1<F>,
}

/// Intermediate state for the encoder backward pass.
pub struct EncodeCache<F: Real> {
    /// im2col matrices per conv layer (layer 0 gathers the input volume).
    cols: Vec<Array2<F>>,
    /// post-relu activations per conv layer, voxel-major
    acts: Vec<Array2<F>>,
    gap: Array1<F>,
}

impl<F: Real> ConvEncoder<F> {
    /// He-style uniform init: conv and linear weights
    /// Uniform(+-sqrt(6/fan_in)), biases zero. Deterministic in `seed`.
    pub fn init(config: &EncoderConfig, seed: u64) -> Result<Self, NetError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k3 = config.kernel.pow(3);
        let mut conv_w = Vec::new();
        let mut conv_b = Vec::new();
        let mut c_in = config.in_channels;
        for &c_out in &config.conv_widths {
            let fan_in = c_in * k3;
            let limit = (6.0 / fan_in as f64).sqrt();
            let mut data = Vec::with_capacity(c_out * fan_in);
            for _ in 0..c_out * fan_in {
                data.push(F::from_f64(rng.random_range(-limit..limit)));
            }
            conv_w.push(Array2::from_shape_vec((c_out, fan_in), data).expect("fill matches shape"));
            conv_b.push(Array1::zeros(c_out));
            c_in = c_out;
        }
        let limit = (6.0 / c_in as f64).sqrt();
        let mut data = Vec::with_capacity(config.latent_dim * c_in);
        for _ in 0..config.latent_dim * c_in {
            data.push(F::from_f64(rng.random_range(-limit..limit)));
        }
        let linear_w =
            Array2::from_shape_vec((config.latent_dim, c_in), data).expect("fill matches shape");
        Ok(ConvEncoder {
            config: config.clone(),
            conv_w,
            conv_b,
            linear_w,
            linear_b: Array1::zeros(config.latent_dim),
        })
    }

    /// Voxel-major input matrix (rows voxels x-fastest, columns channels)
    /// for a volume, cast to the network element type.
    pub fn input_matrix(volume: &VolumeGrid) -> Array2<F> {
        let v = volume.spec.voxel_count();
        let c = volume.channels;
        let mut mat = Array2::zeros((v, c));
        for ch in 0..c {
            let slab = volume.channel_data(ch);
            for (vox, &value) in slab.iter().enumerate() {
                mat[[vox, ch]] = F::from_f64(value);
            }
        }
        mat
    }

    pub fn check_volume(&self, volume: &VolumeGrid) -> Result<(), NetError> {
        if volume.channels != self.config.in_channels
            || volume.spec.dims != self.config.input_dims
        {
            return Err(NetError::EncoderInput {
                expected_channels: self.config.in_channels,
                expected_dims: self.config.input_dims,
                got_channels: volume.channels,
                got_dims: volume.spec.dims,
            });
        }
        Ok(())
    }

    /// Encode a volume to a latent vector.
    pub fn encode(&self, volume: &VolumeGrid) -> Result<Array1<F>, NetError> {
        self.check_volume(volume)?;
        let input = Self::input_matrix(volume);
        Ok(self.encode_cached(&input)?.0)
    }

    /// Encode a prepared input matrix, retaining intermediates for
    /// [`Self::backward`].
    pub fn encode_cached(&self, input: &Array2<F>) -> Result<(Array1<F>, EncodeCache<F>), NetError> {
        let dims = self.config.layer_dims()?;
        let expected_rows = dims[0][0] * dims[0][1] * dims[0][2];
        if input.dim() != (expected_rows, self.config.in_channels) {
            return Err(NetError::BadConfig(format!(
                "input matrix is {:?}, expected ({expected_rows}, {})",
                input.dim(),
                self.config.in_channels
            )));
        }

        let mut cols = Vec::with_capacity(self.conv_w.len());
        let mut acts: Vec<Array2<F>> = Vec::with_capacity(self.conv_w.len());
        for (layer, (w, b)) in self.conv_w.iter().zip(&self.conv_b).enumerate() {
            let src = if layer == 0 { input } else { &acts[layer - 1] };
            let col = im2col(
                src,
                dims[layer],
                dims[layer + 1],
                self.config.kernel,
                self.config.stride,
                self.config.padding,
            );
            let mut act = col.dot(&w.t());
            Zip::from(&mut act).and_broadcast(b).par_for_each(|a, &bv| {
                let v = *a + bv;
                *a = if v > F::zero() { v } else { F::zero() };
            });
            cols.push(col);
            acts.push(act);
        }

        let last = acts.last().expect("at least one conv layer");
        let rows = F::from_f64(last.nrows() as f64);
        let gap = last.sum_axis(Axis(0)).mapv(|v| v / rows);
        let latent = self.linear_w.dot(&gap) + &self.linear_b;
        Ok((latent, EncodeCache { cols, acts, gap }))
    }

    /// Gradients of the encoder parameters contracted with an upstream
    /// latent gradient. The gradient with respect to the input volume is
    /// not produced (inputs are data, not parameters).
    pub fn backward(&self, cache: &EncodeCache<F>, upstream: &Array1<F>) -> EncoderGrads<F> {
        let layers = self.conv_w.len();
        let linear_b_grad = upstream.clone();
        let mut linear_w_grad = Array2::<F>::zeros(self.linear_w.dim());
        for (i, &g) in upstream.iter().enumerate() {
            let mut row = linear_w_grad.row_mut(i);
            Zip::from(&mut row).and(&cache.gap).for_each(|o, &x| *o = g * x);
        }
        let dgap = self.linear_w.t().dot(upstream);

        let mut conv_w_grad: Vec<Array2<F>> = (0..layers).map(|_| Array2::zeros((0, 0))).collect();
        let mut conv_b_grad: Vec<Array1<F>> = (0..layers).map(|_| Array1::zeros(0)).collect();

        // spread the pooled gradient uniformly over voxels, then mask relu
        let last = &cache.acts[layers - 1];
        let inv_rows = F::one() / F::from_f64(last.nrows() as f64);
        let mut dact = Array2::<F>::zeros(last.dim());
        Zip::from(&mut dact)
            .and(last)
            .and_broadcast(&dgap)
            .par_for_each(|d, &a, &g| {
                *d = if a > F::zero() { g * inv_rows } else { F::zero() };
            });

        let dims = self.config.layer_dims().expect("validated at init");
        for layer in (0..layers).rev() {
            conv_b_grad[layer] = dact.sum_axis(Axis(0));
            conv_w_grad[layer] = dact.t().dot(&cache.cols[layer]);
            if layer == 0 {
                break;
            }
            let dcol = dact.dot(&self.conv_w[layer]);
            let dinput = col2im(
                &dcol,
                dims[layer],
                dims[layer + 1],
                self.config.kernel,
                self.config.stride,
                self.config.padding,
                self.config.conv_widths[layer - 1],
            );
            let prev = &cache.acts[layer - 1];
            dact = Array2::zeros(prev.dim());
            Zip::from(&mut dact)
                .and(prev)
                .and(&dinput)
                .par_for_each(|d, &a, &g| {
                    *d = if a > F::zero() { g } else { F::zero() };
                });
        }

        EncoderGrads {
            conv_w: conv_w_grad,
            conv_b: conv_b_grad,
            linear_w: linear_w_grad,
            linear_b: linear_b_grad,
        }
    }

    pub fn param_slices(&self) -> Vec<&[F]> {
        let mut out = Vec::new();
        for (w, b) in self.conv_w.iter().zip(&self.conv_b) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out.push(self.linear_w.as_slice().expect("standard layout"));
        out.push(self.linear_b.as_slice().expect("standard layout"));
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [F]> {
        let mut out = Vec::new();
        for (w, b) in self.conv_w.iter_mut().zip(self.conv_b.iter_mut()) {
            out.push(w.as_slice_mut().expect("standard layout"));
            out.push(b.as_slice_mut().expect("standard layout"));
        }
        out.push(self.linear_w.as_slice_mut().expect("standard layout"));
        out.push(self.linear_b.as_slice_mut().expect("standard layout"));
        out
    }
}

impl<F: Real> EncoderGrads<F> {
    pub fn zeros_like(encoder: &ConvEncoder<F>) -> Self {
        EncoderGrads {
            conv_w: encoder.conv_w.iter().map(|w| Array2::zeros(w.dim())).collect(),
            conv_b: encoder.conv_b.iter().map(|b| Array1::zeros(b.len())).collect(),
            linear_w: Array2::zeros(encoder.linear_w.dim()),
            linear_b: Array1::zeros(encoder.linear_b.len()),
        }
    }

    pub fn add_assign(&mut self, other: &EncoderGrads<F>) {
        for (a, b) in self.conv_w.iter_mut().zip(&other.conv_w) {
            Zip::from(a).and(b).for_each(|x, &y| *x = *x + y);
        }
        for (a, b) in self.conv_b.iter_mut().zip(&other.conv_b) {
            Zip::from(a).and(b).for_each(|x, &y| *x = *x + y);
        }
        Zip::from(&mut self.linear_w)
            .and(&other.linear_w)
            .for_each(|x, &y| *x = *x + y);
        Zip::from(&mut self.linear_b)
            .and(&other.linear_b)
            .for_each(|x, &y| *x = *x + y);
    }

    pub fn grad_slices(&self) -> Vec<&[F]> {
        let mut out = Vec::new();
        for (w, b) in self.conv_w.iter().zip(&self.conv_b) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out.push(self.linear_w.as_slice().expect("standard layout"));
        out.push(self.linear_b.as_slice().expect("standard layout"));
        out
    }
}

/// Gather conv patches: rows = output voxels (x-fastest), columns =
/// c_in * kernel^3 ordered channel-major then (kz, ky, kx). Out-of-bounds
/// taps are zero.
fn im2col<F: Real>(
    input: &Array2<F>,
    in_dims: [usize; 3],
    out_dims: [usize; 3],
    kernel: usize,
    stride: usize,
    padding: usize,
) -> Array2<F> {
    let [inx, iny, _inz] = in_dims;
    let [onx, ony, onz] = out_dims;
    let c_in = input.ncols();
    let cols = c_in * kernel * kernel * kernel;
    let mut out = Array2::<F>::zeros((onx * ony * onz, cols));

    let mut row = 0usize;
    for oz in 0..onz {
        for oy in 0..ony {
            for ox in 0..onx {
                for c in 0..c_in {
                    let base = c * kernel * kernel * kernel;
                    for kz in 0..kernel {
                        let iz = (oz * stride + kz) as isize - padding as isize;
                        if iz < 0 || iz >= in_dims[2] as isize {
                            continue;
                        }
                        for ky in 0..kernel {
                            let iy = (oy * stride + ky) as isize - padding as isize;
                            if iy < 0 || iy >= iny as isize {
                                continue;
                            }
                            for kx in 0..kernel {
                                let ix = (ox * stride + kx) as isize - padding as isize;
                                if ix < 0 || ix >= inx as isize {
                                    continue;
                                }
                                let voxel = (iz as usize * iny + iy as usize) * inx + ix as usize;
                                out[[row, base + (kz * kernel + ky) * kernel + kx]] =
                                    input[[voxel, c]];
                            }
                        }
                    }
                }
                row += 1;
            }
        }
    }
    out
}

/// Scatter-add the transpose of [`im2col`]: fold patch gradients back onto
/// the input voxel grid.
#[allow(clippy::too_many_arguments)]
fn col2im<F: Real>(
    dcol: &Array2<F>,
    in_dims: [usize; 3],
    out_dims: [usize; 3],
    kernel: usize,
    stride: usize,
    padding: usize,
    c_in: usize,
) -> Array2<F> {
    let [inx, iny, inz] = in_dims;
    let [onx, ony, onz] = out_dims;
    let mut out = Array2::<F>::zeros((inx * iny * inz, c_in));

    let mut row = 0usize;
    for oz in 0..onz {
        for oy in 0..ony {
            for ox in 0..onx {
                for c in 0..c_in {
                    let base = c * kernel * kernel * kernel;
                    for kz in 0..kernel {
                        let iz = (oz * stride + kz) as isize - padding as isize;
                        if iz < 0 || iz >= inz as isize {
                            continue;
                        }
                        for ky in 0..kernel {
                            let iy = (oy * stride + ky) as isize - padding as isize;
                            if iy < 0 || iy >= iny as isize {
                                continue;
                            }
                            for kx in 0..kernel {
                                let ix = (ox * stride + kx) as isize - padding as isize;
                                if ix < 0 || ix >= inx as isize {
                                    continue;
                                }
                                let voxel = (iz as usize * iny + iy as usize) * inx + ix as usize;
                                let idx = base + (kz * kernel + ky) * kernel + kx;
                                out[[voxel, c]] = out[[voxel, c]] + dcol[[row, idx]];
                            }
                        }
                    }
                }
                row += 1;
            }
        }
    }
    out
}

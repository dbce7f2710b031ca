//! The modulated sine network.
//!
//! Synthesis path: `h_0 = points`, `h_{i+1} = m_i * sin(w_i (W_i h_i + b_i))`
//! with `w_0 = omega0` and `w_i = 1` for `i > 0`, output `W_out h_L + b_out`.
//! Modulation path: `m_0 = relu(A_0 z + c_0)`,
//! `m_i = relu(A_i [m_{i-1}; z] + c_i)` — a function of the latent alone, so
//! it is evaluated once per latent and broadcast over the point batch.

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::real::Real;
use super::NetError;

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    pub in_dim: usize,
    pub out_dim: usize,
    pub hidden_width: usize,
    pub num_hidden_layers: usize,
    pub omega0: f64,
    pub latent_dim: usize,
}

impl NetConfig {
    /// Desk-scale defaults: width 256, 4 hidden layers, omega0 30, latent 128.
    pub fn with_out_dim(out_dim: usize) -> Self {
        NetConfig {
            in_dim: 3,
            out_dim,
            hidden_width: 256,
            num_hidden_layers: 4,
            omega0: 30.0,
            latent_dim: 128,
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.in_dim == 0
            || self.out_dim == 0
            || self.hidden_width == 0
            || self.num_hidden_layers == 0
            || self.latent_dim == 0
        {
            return Err(NetError::BadConfig(format!("{self:?} has a zero dimension")));
        }
        if !(self.omega0 > 0.0) {
            return Err(NetError::BadConfig(format!(
                "omega0 must be positive, got {}",
                self.omega0
            )));
        }
        Ok(())
    }
}

/// Per-molecule conditioning vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode<F: Real> {
    pub values: Array1<F>,
}

impl<F: Real> LatentCode<F> {
    pub fn new(values: Array1<F>) -> Self {
        LatentCode { values }
    }

    pub fn zeros(dim: usize) -> Self {
        LatentCode {
            values: Array1::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.into_f64()).collect()
    }

    pub fn from_f64_slice(values: &[f64]) -> Self {
        LatentCode {
            values: values.iter().map(|&v| F::from_f64(v)).collect(),
        }
    }
}

/// Network parameters. Tensor declaration order (the order used by
/// checkpoints and the optimizer) is: synthesis layers (weight, bias) in
/// depth order, then modulator layers (weight, bias), then the output layer.
#[derive(Debug, Clone)]
pub struct ModulatedField<F: Real> {
    pub config: NetConfig,
    pub synth_w: Vec<Array2<F>>,
    pub synth_b: Vec<Array1<F>>,
    pub mod_w: Vec<Array2<F>>,
    pub mod_b: Vec<Array1<F>>,
    pub out_w: Array2<F>,
    pub out_b: Array1<F>,
}

/// Gradients mirroring [`ModulatedField`] tensor for tensor.
#[derive(Debug, Clone)]
pub struct NetGrads<F: Real> {
    pub synth_w: Vec<Array2<F>>,
    pub synth_b: Vec<Array1<F>>,
    pub mod_w: Vec<Array2<F>>,
    pub mod_b: Vec<Array1<F>>,
    pub out_w: Array2<F>,
    pub out_b: Array1<F>,
}

impl<F: Real> NetGrads<F> {
    pub fn zeros_like(net: &ModulatedField<F>) -> Self {
        NetGrads {
            synth_w: net.synth_w.iter().map(|w| Array2::zeros(w.dim())).collect(),
            synth_b: net.synth_b.iter().map(|b| Array1::zeros(b.len())).collect(),
            mod_w: net.mod_w.iter().map(|w| Array2::zeros(w.dim())).collect(),
            mod_b: net.mod_b.iter().map(|b| Array1::zeros(b.len())).collect(),
            out_w: Array2::zeros(net.out_w.dim()),
            out_b: Array1::zeros(net.out_b.len()),
        }
    }

    pub fn add_assign(&mut self, other: &NetGrads<F>) {
        fn acc2<F: Real>(a: &mut Array2<F>, b: &Array2<F>) {
            Zip::from(a).and(b).for_each(|x, &y| *x = *x + y);
        }
        fn acc1<F: Real>(a: &mut Array1<F>, b: &Array1<F>) {
            Zip::from(a).and(b).for_each(|x, &y| *x = *x + y);
        }
        for (a, b) in self.synth_w.iter_mut().zip(&other.synth_w) {
            acc2(a, b);
        }
        for (a, b) in self.synth_b.iter_mut().zip(&other.synth_b) {
            acc1(a, b);
        }
        for (a, b) in self.mod_w.iter_mut().zip(&other.mod_w) {
            acc2(a, b);
        }
        for (a, b) in self.mod_b.iter_mut().zip(&other.mod_b) {
            acc1(a, b);
        }
        acc2(&mut self.out_w, &other.out_w);
        acc1(&mut self.out_b, &other.out_b);
    }
}

/// Modulation vectors for one latent: relu preactivations `u_i` and gates
/// `m_i = relu(u_i)`, each of hidden width.
#[derive(Debug, Clone)]
pub struct Modulations<F: Real> {
    pub preacts: Vec<Array1<F>>,
    pub gates: Vec<Array1<F>>,
}

/// State retained by a cached forward pass, consumed by
/// [`ModulatedField::backward`].
pub struct ForwardCache<F: Real> {
    latent: Array1<F>,
    points: Array2<F>,
    mods: Modulations<F>,
    /// sin(w_i s_i) per layer, N x W
    sines: Vec<Array2<F>>,
    /// cos(w_i s_i) per layer, N x W
    cosines: Vec<Array2<F>>,
    /// gated activations m_i * sin(..), N x W
    hidden: Vec<Array2<F>>,
}

/// Uniform(-limit, limit) fill, drawn as f64 in row-major order then cast.
/// Drawing in f64 keeps initialization bit-comparable across precisions.
fn uniform_fill<F: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize, limit: f64) -> Array2<F> {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(F::from_f64(rng.random_range(-limit..limit)));
    }
    Array2::from_shape_vec((rows, cols), data).expect("shape matches fill loop")
}

/// Initialize a network: first synthesis layer Uniform(-1/in_dim, 1/in_dim),
/// later synthesis layers and the output layer
/// Uniform(+-sqrt(6/fan_in)/omega0), modulator layers
/// Uniform(+-sqrt(6/fan_in)), all biases zero. Deterministic in `seed`.
pub fn init_network<F: Real>(config: &NetConfig, seed: u64) -> Result<ModulatedField<F>, NetError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = config.hidden_width;
    let latent = config.latent_dim;
    let layers = config.num_hidden_layers;

    let mut synth_w = Vec::with_capacity(layers);
    let mut synth_b = Vec::with_capacity(layers);
    for i in 0..layers {
        let fan_in = if i == 0 { config.in_dim } else { width };
        let limit = if i == 0 {
            1.0 / config.in_dim as f64
        } else {
            (6.0 / fan_in as f64).sqrt() / config.omega0
        };
        synth_w.push(uniform_fill(&mut rng, width, fan_in, limit));
        synth_b.push(Array1::zeros(width));
    }

    let mut mod_w = Vec::with_capacity(layers);
    let mut mod_b = Vec::with_capacity(layers);
    for i in 0..layers {
        let fan_in = if i == 0 { latent } else { width + latent };
        let limit = (6.0 / fan_in as f64).sqrt();
        mod_w.push(uniform_fill(&mut rng, width, fan_in, limit));
        mod_b.push(Array1::zeros(width));
    }

    let out_limit = (6.0 / width as f64).sqrt() / config.omega0;
    let out_w = uniform_fill(&mut rng, config.out_dim, width, out_limit);
    let out_b = Array1::zeros(config.out_dim);

    Ok(ModulatedField {
        config: config.clone(),
        synth_w,
        synth_b,
        mod_w,
        mod_b,
        out_w,
        out_b,
    })
}

impl<F: Real> ModulatedField<F> {
    fn check_latent(&self, latent: &Array1<F>) -> Result<(), NetError> {
        if latent.len() != self.config.latent_dim {
            return Err(NetError::LatentShape {
                expected: self.config.latent_dim,
                got: latent.len(),
            });
        }
        Ok(())
    }

    fn layer_omega(&self, layer: usize) -> F {
        if layer == 0 {
            F::from_f64(self.config.omega0)
        } else {
            F::one()
        }
    }

    /// Evaluate the modulation stack for one latent.
    pub fn modulations(&self, latent: &Array1<F>) -> Result<Modulations<F>, NetError> {
        self.check_latent(latent)?;
        let layers = self.config.num_hidden_layers;
        let mut preacts: Vec<Array1<F>> = Vec::with_capacity(layers);
        let mut gates: Vec<Array1<F>> = Vec::with_capacity(layers);
        for i in 0..layers {
            let u = if i == 0 {
                self.mod_w[i].dot(latent) + &self.mod_b[i]
            } else {
                let input = concatenate![Axis(0), gates[i - 1], *latent];
                self.mod_w[i].dot(&input) + &self.mod_b[i]
            };
            let m = u.mapv(|v| if v > F::zero() { v } else { F::zero() });
            preacts.push(u);
            gates.push(m);
        }
        Ok(Modulations { preacts, gates })
    }

    /// Forward pass for a batch of points (N x 3), producing N x out_dim.
    /// Lean path without caches, suitable for large inference batches.
    pub fn forward(&self, latent: &Array1<F>, points: ArrayView2<F>) -> Result<Array2<F>, NetError> {
        if points.ncols() != self.config.in_dim {
            return Err(NetError::PointShape(points.ncols()));
        }
        let mods = self.modulations(latent)?;
        let mut h: Array2<F> = points.to_owned();
        for i in 0..self.config.num_hidden_layers {
            let omega = self.layer_omega(i);
            let mut s = h.dot(&self.synth_w[i].t());
            Zip::from(&mut s)
                .and_broadcast(&self.synth_b[i])
                .and_broadcast(&mods.gates[i])
                .par_for_each(|sv, &b, &m| {
                    *sv = m * (omega * (*sv + b)).sin();
                });
            h = s;
        }
        let mut out = h.dot(&self.out_w.t());
        Zip::from(&mut out)
            .and_broadcast(&self.out_b)
            .par_for_each(|o, &b| *o = *o + b);
        Ok(out)
    }

    /// Forward pass retaining everything [`Self::backward`] needs.
    pub fn forward_cached(
        &self,
        latent: &Array1<F>,
        points: ArrayView2<F>,
    ) -> Result<(Array2<F>, ForwardCache<F>), NetError> {
        if points.ncols() != self.config.in_dim {
            return Err(NetError::PointShape(points.ncols()));
        }
        let mods = self.modulations(latent)?;
        let layers = self.config.num_hidden_layers;
        let n = points.nrows();
        let width = self.config.hidden_width;

        let mut sines = Vec::with_capacity(layers);
        let mut cosines = Vec::with_capacity(layers);
        let mut hidden: Vec<Array2<F>> = Vec::with_capacity(layers);

        let points = points.to_owned();
        for i in 0..layers {
            let omega = self.layer_omega(i);
            let input = if i == 0 { &points } else { &hidden[i - 1] };
            let s = input.dot(&self.synth_w[i].t());
            let mut sin_a = Array2::<F>::zeros((n, width));
            let mut cos_a = Array2::<F>::zeros((n, width));
            let mut h = Array2::<F>::zeros((n, width));
            Zip::from(&mut sin_a)
                .and(&mut cos_a)
                .and(&mut h)
                .and(&s)
                .and_broadcast(&self.synth_b[i])
                .and_broadcast(&mods.gates[i])
                .par_for_each(|sn, cs, hv, &sv, &b, &m| {
                    let (s_val, c_val) = (omega * (sv + b)).sin_cos();
                    *sn = s_val;
                    *cs = c_val;
                    *hv = m * s_val;
                });
            sines.push(sin_a);
            cosines.push(cos_a);
            hidden.push(h);
        }

        let mut out = hidden[layers - 1].dot(&self.out_w.t());
        Zip::from(&mut out)
            .and_broadcast(&self.out_b)
            .par_for_each(|o, &b| *o = *o + b);

        Ok((
            out,
            ForwardCache {
                latent: latent.clone(),
                points,
                mods,
                sines,
                cosines,
                hidden,
            },
        ))
    }

    /// Exact analytic gradients of the forward map contracted with
    /// `upstream` (N x out_dim): parameter gradients plus the latent
    /// gradient. All reductions run in a fixed order.
    pub fn backward(
        &self,
        cache: &ForwardCache<F>,
        upstream: ArrayView2<F>,
    ) -> Result<(NetGrads<F>, Array1<F>), NetError> {
        let layers = self.config.num_hidden_layers;
        let n = cache.points.nrows();
        if upstream.dim() != (n, self.config.out_dim) {
            return Err(NetError::UpstreamShape {
                expected: (n, self.config.out_dim),
                got: upstream.dim(),
            });
        }

        let out_w_grad = upstream.t().dot(&cache.hidden[layers - 1]);
        let out_b_grad = upstream.sum_axis(Axis(0));
        let mut dh = upstream.dot(&self.out_w);

        let width = self.config.hidden_width;
        let latent_dim = self.config.latent_dim;
        let mut synth_w_grad = Vec::with_capacity(layers);
        let mut synth_b_grad = Vec::with_capacity(layers);
        // gate gradients from the synthesis path, collected top layer first
        let mut gate_grads: Vec<Array1<F>> = Vec::with_capacity(layers);

        for i in (0..layers).rev() {
            let omega = self.layer_omega(i);

            let mut dm = Array1::<F>::zeros(width);
            for (dh_row, sin_row) in dh.outer_iter().zip(cache.sines[i].outer_iter()) {
                Zip::from(&mut dm).and(&dh_row).and(&sin_row).for_each(|acc, &g, &s| {
                    *acc = *acc + g * s;
                });
            }
            gate_grads.push(dm);

            // ds = dh ⊙ m ⊙ cos ⊙ omega, reusing the dh buffer
            let mut ds = dh;
            Zip::from(&mut ds)
                .and(&cache.cosines[i])
                .and_broadcast(&cache.mods.gates[i])
                .par_for_each(|g, &c, &m| {
                    *g = *g * m * c * omega;
                });

            synth_b_grad.push(ds.sum_axis(Axis(0)));
            let input = if i == 0 { &cache.points } else { &cache.hidden[i - 1] };
            synth_w_grad.push(ds.t().dot(input));
            dh = ds.dot(&self.synth_w[i]);
        }
        synth_w_grad.reverse();
        synth_b_grad.reverse();
        gate_grads.reverse();

        // Modulator chain, top layer first; each layer adds to the previous
        // gate's gradient and to the latent gradient.
        let mut mod_w_grad: Vec<Array2<F>> = (0..layers).map(|_| Array2::zeros((0, 0))).collect();
        let mut mod_b_grad: Vec<Array1<F>> = (0..layers).map(|_| Array1::zeros(0)).collect();
        let mut latent_grad = Array1::<F>::zeros(latent_dim);

        for i in (0..layers).rev() {
            // relu: pass gradient only where the preactivation was positive
            let mut du = gate_grads[i].clone();
            Zip::from(&mut du)
                .and(&cache.mods.preacts[i])
                .for_each(|g, &u| {
                    if u <= F::zero() {
                        *g = F::zero();
                    }
                });

            if i == 0 {
                let dw = outer(&du, &cache.latent.view());
                mod_w_grad[i] = dw;
                latent_grad = latent_grad + self.mod_w[i].t().dot(&du);
            } else {
                let input = concatenate![Axis(0), cache.mods.gates[i - 1], cache.latent];
                mod_w_grad[i] = outer(&du, &input.view());
                let dinput = self.mod_w[i].t().dot(&du);
                let (dgate_prev, dlatent_part) = dinput.view().split_at(Axis(0), width);
                gate_grads[i - 1] = &gate_grads[i - 1] + &dgate_prev;
                latent_grad = latent_grad + &dlatent_part;
            }
            mod_b_grad[i] = du;
        }

        Ok((
            NetGrads {
                synth_w: synth_w_grad,
                synth_b: synth_b_grad,
                mod_w: mod_w_grad,
                mod_b: mod_b_grad,
                out_w: out_w_grad,
                out_b: out_b_grad,
            },
            latent_grad,
        ))
    }

    /// Flat views of all parameter tensors in declaration order.
    pub fn param_slices(&self) -> Vec<&[F]> {
        let mut out = Vec::new();
        for (w, b) in self.synth_w.iter().zip(&self.synth_b) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        for (w, b) in self.mod_w.iter().zip(&self.mod_b) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out.push(self.out_w.as_slice().expect("standard layout"));
        out.push(self.out_b.as_slice().expect("standard layout"));
        out
    }

    /// Mutable flat views, same order as [`Self::param_slices`].
    pub fn param_slices_mut(&mut self) -> Vec<&mut [F]> {
        let mut out = Vec::new();
        for (w, b) in self.synth_w.iter_mut().zip(self.synth_b.iter_mut()) {
            out.push(w.as_slice_mut().expect("standard layout"));
            out.push(b.as_slice_mut().expect("standard layout"));
        }
        for (w, b) in self.mod_w.iter_mut().zip(self.mod_b.iter_mut()) {
            out.push(w.as_slice_mut().expect("standard layout"));
            out.push(b.as_slice_mut().expect("standard layout"));
        }
        out.push(self.out_w.as_slice_mut().expect("standard layout"));
        out.push(self.out_b.as_slice_mut().expect("standard layout"));
        out
    }
}

impl<F: Real> NetGrads<F> {
    pub fn grad_slices(&self) -> Vec<&[F]> {
        let mut out = Vec::new();
        for (w, b) in self.synth_w.iter().zip(&self.synth_b) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        for (w, b) in self.mod_w.iter().zip(&self.mod_b) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out.push(self.out_w.as_slice().expect("standard layout"));
        out.push(self.out_b.as_slice().expect("standard layout"));
        out
    }
}

fn outer<F: Real>(a: &Array1<F>, b: &ndarray::ArrayView1<F>) -> Array2<F> {
    let mut out = Array2::<F>::zeros((a.len(), b.len()));
    for (i, &av) in a.iter().enumerate() {
        let mut row = out.row_mut(i);
        Zip::from(&mut row).and(b).for_each(|o, &bv| *o = av * bv);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tiny_config() -> NetConfig {
        NetConfig {
            in_dim: 3,
            out_dim: 2,
            hidden_width: 8,
            num_hidden_layers: 2,
            omega0: 30.0,
            latent_dim: 4,
        }
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let cfg = tiny_config();
        let a: ModulatedField<f64> = init_network(&cfg, 7).unwrap();
        let b: ModulatedField<f64> = init_network(&cfg, 7).unwrap();
        let c: ModulatedField<f64> = init_network(&cfg, 8).unwrap();
        assert_eq!(a.param_slices(), b.param_slices());
        assert_ne!(a.param_slices(), c.param_slices());
    }

    #[test]
    fn first_layer_weights_within_third() {
        let net: ModulatedField<f64> = init_network(&tiny_config(), 3).unwrap();
        for &w in net.synth_w[0].iter() {
            assert!(w > -1.0 / 3.0 && w < 1.0 / 3.0);
        }
        let later_limit = (6.0f64 / 8.0).sqrt() / 30.0;
        for &w in net.synth_w[1].iter() {
            assert!(w.abs() < later_limit);
        }
    }

    #[test]
    fn biases_start_zero() {
        let net: ModulatedField<f64> = init_network(&tiny_config(), 3).unwrap();
        assert!(net.synth_b.iter().all(|b| b.iter().all(|&v| v == 0.0)));
        assert!(net.mod_b.iter().all(|b| b.iter().all(|&v| v == 0.0)));
        assert!(net.out_b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_latent_closes_the_gate() {
        // zero latent and zero modulator biases: every gate is relu(0) = 0,
        // so the output equals out_b for any point
        let net: ModulatedField<f64> = init_network(&tiny_config(), 11).unwrap();
        let latent = Array1::zeros(4);
        let points = array![[0.3, -0.4, 0.9], [0.0, 0.0, 0.0]];
        let out = net.forward(&latent, points.view()).unwrap();
        for row in out.outer_iter() {
            for (o, b) in row.iter().zip(net.out_b.iter()) {
                assert_eq!(o, b);
            }
        }
    }

    #[test]
    fn batch_membership_is_bit_exact() {
        let net: ModulatedField<f64> = init_network(&tiny_config(), 5).unwrap();
        let latent = array![0.3, -0.1, 0.2, 0.05];
        let points = Array2::from_shape_fn((33, 3), |(i, j)| {
            ((i * 3 + j) as f64 * 0.137).sin() * 0.9
        });
        let full = net.forward(&latent, points.view()).unwrap();
        for i in [0usize, 7, 32] {
            let single = points.row(i).insert_axis(Axis(0)).to_owned();
            let alone = net.forward(&latent, single.view()).unwrap();
            for j in 0..2 {
                assert_eq!(full[[i, j]].to_bits(), alone[[0, j]].to_bits());
            }
        }
    }

    #[test]
    fn cached_and_lean_forward_agree() {
        let net: ModulatedField<f64> = init_network(&tiny_config(), 5).unwrap();
        let latent = array![0.3, -0.1, 0.2, 0.05];
        let points = Array2::from_shape_fn((17, 3), |(i, j)| ((i + j) as f64 * 0.21).cos());
        let lean = net.forward(&latent, points.view()).unwrap();
        let (cached, _) = net.forward_cached(&latent, points.view()).unwrap();
        for (a, b) in lean.iter().zip(cached.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn latent_shape_mismatch_is_an_error() {
        let net: ModulatedField<f64> = init_network(&tiny_config(), 5).unwrap();
        let latent = Array1::zeros(3);
        let points = Array2::zeros((1, 3));
        assert!(matches!(
            net.forward(&latent, points.view()).unwrap_err(),
            NetError::LatentShape { expected: 4, got: 3 }
        ));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net: ModulatedField<f64> = init_network(&tiny_config(), 5).unwrap();
        let latent = array![0.3, -0.1, 0.2, 0.05];
        let points = Array2::from_shape_fn((9, 3), |(i, j)| ((i * 2 + j) as f64 * 0.3).sin());
        let (_, cache) = net.forward_cached(&latent, points.view()).unwrap();
        let upstream = Array2::zeros((9, 2));
        let (grads, dz) = net.backward(&cache, upstream.view()).unwrap();
        for slice in grads.grad_slices() {
            assert!(slice.iter().all(|&v| v == 0.0));
        }
        assert!(dz.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn out_bias_gradient_is_upstream_column_sum() {
        let net: ModulatedField<f64> = init_network(&tiny_config(), 5).unwrap();
        let latent = array![0.3, -0.1, 0.2, 0.05];
        let points = Array2::from_shape_fn((6, 3), |(i, j)| ((i + 2 * j) as f64 * 0.4).sin());
        let (_, cache) = net.forward_cached(&latent, points.view()).unwrap();
        let upstream = Array2::from_shape_fn((6, 2), |(i, j)| (i as f64 + 1.0) * (j as f64 - 0.5));
        let (grads, _) = net.backward(&cache, upstream.view()).unwrap();
        let expected = upstream.sum_axis(Axis(0));
        for (a, b) in grads.out_b.iter().zip(expected.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn single_layer_with_unit_gate_is_periodic() {
        // width-1 net, one hidden layer; force the gate to 1 via biases
        let cfg = NetConfig {
            in_dim: 3,
            out_dim: 1,
            hidden_width: 1,
            num_hidden_layers: 1,
            omega0: 30.0,
            latent_dim: 2,
        };
        let mut net: ModulatedField<f64> = init_network(&cfg, 1).unwrap();
        net.mod_w[0].fill(0.0);
        net.mod_b[0].fill(1.0);

        let w = [net.synth_w[0][[0, 0]], net.synth_w[0][[0, 1]], net.synth_w[0][[0, 2]]];
        let norm2: f64 = w.iter().map(|v| v * v).sum();
        let period = 2.0 * std::f64::consts::PI / (cfg.omega0 * norm2.sqrt());
        let unit = {
            let n = norm2.sqrt();
            [w[0] / n, w[1] / n, w[2] / n]
        };

        let latent = array![0.4, -0.7];
        let base = array![[0.1, -0.2, 0.05]];
        let shifted = array![[
            0.1 + period * unit[0],
            -0.2 + period * unit[1],
            0.05 + period * unit[2]
        ]];
        let a = net.forward(&latent, base.view()).unwrap();
        let b = net.forward(&latent, shifted.view()).unwrap();
        assert!((a[[0, 0]] - b[[0, 0]]).abs() < 1e-9);
    }
}

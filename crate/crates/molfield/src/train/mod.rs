//! Fitting modulated field networks to sampled volumes.
//!
//! Auto-decoder mode jointly optimizes the shared network and one free
//! latent per volume (decoupled learning rates); auto-encoder mode trains a
//! convolutional encoder end to end instead of free latents. Minibatches
//! are (volume, voxel) pairs drawn from a seeded shuffle keyed on volume
//! *content* order, so training is invariant to the order volumes are
//! listed in.

mod adam;
mod stream;

pub use adam::{Adam, AdamParams};
use stream::PairStream;

use ndarray::{Array2, Axis, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::eval::psnr;
use crate::field::{GridSpec, VolumeGrid};
use crate::net::{
    init_network, normalize_points, ConvEncoder, EncoderConfig, EncoderGrads, LatentCode,
    ModulatedField, NetConfig, NetError, NetGrads, Real,
};

/// Points per forward chunk during full-grid inference.
const RECONSTRUCT_CHUNK: usize = 32768;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    AutoDecoder,
    AutoEncoder,
}

/// Optional early exit: stop once the mean reconstruction PSNR over the
/// training volumes reaches a target. Checked deterministically every
/// `check_every` steps, so it cannot break seeded reproducibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub target_psnr: f64,
    pub check_every: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub steps: u64,
    pub learning_rate: f64,
    pub latent_learning_rate: f64,
    pub batch_voxels: usize,
    pub seed: u64,
    pub latent_init_scale: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub stop: Option<StopRule>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: TrainMode::AutoDecoder,
            steps: 5000,
            learning_rate: 1e-4,
            latent_learning_rate: 1e-3,
            batch_voxels: 4096,
            seed: 0,
            latent_init_scale: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            stop: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_voxels == 0 {
            return Err(TrainError::BadConfig("batch_voxels must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.latent_learning_rate > 0.0) {
            return Err(TrainError::BadConfig("learning rates must be positive".into()));
        }
        if !(self.adam_beta1 > 0.0 && self.adam_beta1 < 1.0)
            || !(self.adam_beta2 > 0.0 && self.adam_beta2 < 1.0)
        {
            return Err(TrainError::BadConfig("adam betas must lie in (0, 1)".into()));
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(TrainError::BadConfig("adam epsilon must be positive".into()));
        }
        if self.latent_init_scale < 0.0 {
            return Err(TrainError::BadConfig("latent_init_scale must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error("no volumes supplied")]
    NoVolumes,
    #[error("volume {index} has dims {dims:?} / {channels} channels, expected {expected_dims:?} / {expected_channels}")]
    InconsistentVolumes {
        index: usize,
        dims: [usize; 3],
        channels: usize,
        expected_dims: [usize; 3],
        expected_channels: usize,
    },
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: u64 },
    #[error("checkpoint/state mismatch: {0}")]
    StateMismatch(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

fn derive_seed(seed: u64, salt: u64) -> u64 {
    seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

const SALT_LATENTS: u64 = 1;
const SALT_STREAM: u64 = 2;
const SALT_ENCODER: u64 = 3;

/// Content order: volume indices sorted by content digest (ties broken by
/// raw data comparison, then input position). Identical volumes keep their
/// relative input order, and any permutation of distinct volumes maps to
/// the same canonical sequence.
fn canonical_order(volumes: &[VolumeGrid]) -> Vec<usize> {
    let digests: Vec<u64> = volumes.iter().map(|v| v.content_digest()).collect();
    let mut order: Vec<usize> = (0..volumes.len()).collect();
    order.sort_by(|&a, &b| {
        digests[a].cmp(&digests[b]).then_with(|| {
            volumes[a]
                .data
                .iter()
                .map(|v| v.to_bits())
                .cmp(volumes[b].data.iter().map(|v| v.to_bits()))
        })
    });
    order
}

/// Voxel-major target matrix (rows voxels, columns channels).
fn target_matrix<F: Real>(volume: &VolumeGrid) -> Array2<F> {
    ConvEncoder::<F>::input_matrix(volume)
}

/// Evaluate the network over a full grid in chunks (no gradient state) and
/// reshape into a channel-major volume. Network outputs are unclamped, so
/// reconstructed values may be negative.
pub fn reconstruct<F: Real>(
    net: &ModulatedField<F>,
    latent: &LatentCode<F>,
    grid: &GridSpec,
) -> Result<VolumeGrid, NetError> {
    let points = normalize_points::<F>(grid);
    let voxels = points.nrows();
    let d = net.config.out_dim;
    let mut data = vec![0.0f64; d * voxels];
    let mut start = 0usize;
    while start < voxels {
        let end = (start + RECONSTRUCT_CHUNK).min(voxels);
        let out = net.forward(&latent.values, points.slice(ndarray::s![start..end, ..]))?;
        for (row, voxel) in (start..end).enumerate() {
            for c in 0..d {
                data[c * voxels + voxel] = out[[row, c]].into_f64();
            }
        }
        start = end;
    }
    Ok(VolumeGrid::new(grid.clone(), d, data).expect("constructed length matches"))
}

/// Everything needed to run (or resume) a fit. Latents and targets are
/// indexed in input order; the pair stream emits canonical ranks.
pub struct Trainer<F: Real> {
    pub config: TrainConfig,
    pub net_config: NetConfig,
    pub net: ModulatedField<F>,
    /// K x latent_dim, input order. Unused (empty) in auto-encoder mode.
    pub latents: Array2<F>,
    pub encoder: Option<ConvEncoder<F>>,
    pub step: u64,
    pub losses: Vec<f64>,
    net_opt: Adam<F>,
    latent_opt: Option<Adam<F>>,
    canonical: Vec<usize>,
    grid: GridSpec,
    volumes: Vec<VolumeGrid>,
    targets: Vec<Array2<F>>,
    input_mats: Vec<Array2<F>>,
    points: Array2<F>,
    stream: PairStream,
    /// Set when a stop rule fired; records the step and achieved PSNR.
    pub stopped_early: Option<(u64, f64)>,
}

fn check_volumes(volumes: &[VolumeGrid], out_dim: usize) -> Result<(), TrainError> {
    let first = volumes.first().ok_or(TrainError::NoVolumes)?;
    for (index, v) in volumes.iter().enumerate() {
        if v.spec.dims != first.spec.dims || v.channels != first.channels {
            return Err(TrainError::InconsistentVolumes {
                index,
                dims: v.spec.dims,
                channels: v.channels,
                expected_dims: first.spec.dims,
                expected_channels: first.channels,
            });
        }
    }
    if first.channels != out_dim {
        return Err(TrainError::BadConfig(format!(
            "volumes have {} channels but the network outputs {}",
            first.channels, out_dim
        )));
    }
    Ok(())
}

impl<F: Real> Trainer<F> {
    pub fn new_auto_decoder(
        volumes: &[VolumeGrid],
        config: TrainConfig,
        net_config: NetConfig,
    ) -> Result<Self, TrainError> {
        config.validate()?;
        net_config.validate().map_err(TrainError::Net)?;
        check_volumes(volumes, net_config.out_dim)?;

        let net = init_network::<F>(&net_config, config.seed)?;
        let canonical = canonical_order(volumes);
        let k = volumes.len();
        let latent_dim = net_config.latent_dim;

        // latent rows are drawn in canonical order so initialization is
        // content-keyed, then scattered to input positions
        let mut latents = Array2::<F>::zeros((k, latent_dim));
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, SALT_LATENTS));
        for rank in 0..k {
            let input_idx = canonical[rank];
            for j in 0..latent_dim {
                let z: f64 = StandardNormal.sample(&mut rng);
                latents[[input_idx, j]] = F::from_f64(config.latent_init_scale * z);
            }
        }

        let net_sizes: Vec<usize> = net.param_slices().iter().map(|s| s.len()).collect();
        let net_opt = Adam::new(
            AdamParams {
                learning_rate: config.learning_rate,
                beta1: config.adam_beta1,
                beta2: config.adam_beta2,
                epsilon: config.adam_epsilon,
            },
            &net_sizes,
        );
        let latent_opt = Adam::new(
            AdamParams {
                learning_rate: config.latent_learning_rate,
                beta1: config.adam_beta1,
                beta2: config.adam_beta2,
                epsilon: config.adam_epsilon,
            },
            &[k * latent_dim],
        );

        let grid = volumes[0].spec.clone();
        let stream = PairStream::new(k, grid.voxel_count(), derive_seed(config.seed, SALT_STREAM));
        Ok(Trainer {
            config,
            net_config,
            net,
            latents,
            encoder: None,
            step: 0,
            losses: Vec::new(),
            net_opt,
            latent_opt: Some(latent_opt),
            canonical,
            points: normalize_points(&grid),
            grid,
            volumes: volumes.to_vec(),
            targets: volumes.iter().map(target_matrix).collect(),
            input_mats: Vec::new(),
            stream,
            stopped_early: None,
        })
    }

    pub fn new_auto_encoder(
        volumes: &[VolumeGrid],
        config: TrainConfig,
        net_config: NetConfig,
        encoder_config: EncoderConfig,
    ) -> Result<Self, TrainError> {
        config.validate()?;
        net_config.validate().map_err(TrainError::Net)?;
        check_volumes(volumes, net_config.out_dim)?;
        encoder_config.validate().map_err(TrainError::Net)?;
        if encoder_config.latent_dim != net_config.latent_dim {
            return Err(TrainError::BadConfig(format!(
                "encoder latent_dim {} != network latent_dim {}",
                encoder_config.latent_dim, net_config.latent_dim
            )));
        }
        let first = &volumes[0];
        if encoder_config.input_dims != first.spec.dims
            || encoder_config.in_channels != first.channels
        {
            return Err(TrainError::BadConfig(format!(
                "volume dims {:?} x {} channels do not match encoder input {:?} x {}",
                first.spec.dims,
                first.channels,
                encoder_config.input_dims,
                encoder_config.in_channels
            )));
        }

        let net = init_network::<F>(&net_config, config.seed)?;
        let encoder = ConvEncoder::<F>::init(&encoder_config, derive_seed(config.seed, SALT_ENCODER))?;
        let canonical = canonical_order(volumes);
        let k = volumes.len();

        let mut sizes: Vec<usize> = net.param_slices().iter().map(|s| s.len()).collect();
        sizes.extend(encoder.param_slices().iter().map(|s| s.len()));
        let net_opt = Adam::new(
            AdamParams {
                learning_rate: config.learning_rate,
                beta1: config.adam_beta1,
                beta2: config.adam_beta2,
                epsilon: config.adam_epsilon,
            },
            &sizes,
        );

        let grid = volumes[0].spec.clone();
        let stream = PairStream::new(k, grid.voxel_count(), derive_seed(config.seed, SALT_STREAM));
        Ok(Trainer {
            config,
            net_config,
            net,
            latents: Array2::zeros((0, 0)),
            encoder: Some(encoder),
            step: 0,
            losses: Vec::new(),
            net_opt,
            latent_opt: None,
            canonical,
            points: normalize_points(&grid),
            grid,
            volumes: volumes.to_vec(),
            targets: volumes.iter().map(target_matrix).collect(),
            input_mats: volumes.iter().map(|v| ConvEncoder::input_matrix(v)).collect(),
            stream,
            stopped_early: None,
        })
    }

    pub fn mode(&self) -> TrainMode {
        if self.encoder.is_some() {
            TrainMode::AutoEncoder
        } else {
            TrainMode::AutoDecoder
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn volume_digests(&self) -> Vec<u64> {
        self.volumes.iter().map(|v| v.content_digest()).collect()
    }

    /// Latent for input volume `index`: the trained row (auto-decoder) or
    /// the encoder output (auto-encoder).
    pub fn latent_for(&self, index: usize) -> Result<LatentCode<F>, TrainError> {
        match &self.encoder {
            None => Ok(LatentCode::new(self.latents.row(index).to_owned())),
            Some(encoder) => {
                let (latent, _) = encoder.encode_cached(&self.input_mats[index])?;
                Ok(LatentCode::new(latent))
            }
        }
    }

    pub fn latents_input_order(&self) -> Result<Vec<LatentCode<F>>, TrainError> {
        (0..self.volumes.len()).map(|i| self.latent_for(i)).collect()
    }

    /// Mean reconstruction PSNR over all training volumes at training
    /// resolution.
    pub fn mean_psnr(&self) -> Result<f64, TrainError> {
        let mut total = 0.0;
        for (idx, volume) in self.volumes.iter().enumerate() {
            let latent = self.latent_for(idx)?;
            let recon = reconstruct(&self.net, &latent, &volume.spec)?;
            let report = psnr(volume, &recon).map_err(|e| TrainError::BadConfig(e.to_string()))?;
            total += report.overall_psnr;
        }
        Ok(total / self.volumes.len() as f64)
    }

    fn step_once(&mut self) -> Result<f64, TrainError> {
        let k = self.volumes.len();
        let d = self.net_config.out_dim;
        let batch = self.stream.next_batch(self.config.batch_voxels);
        let scale = F::from_f64(2.0 / (batch.len() * d) as f64);

        // stable partition by canonical rank
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
        for &(rank, voxel) in &batch {
            groups[rank as usize].push(voxel as usize);
        }

        let mut net_grads = NetGrads::zeros_like(&self.net);
        let mut latent_grads = Array2::<F>::zeros(self.latents.dim());
        let mut encoder_grads = self.encoder.as_ref().map(EncoderGrads::zeros_like);
        let mut sq_sum = F::zero();

        for rank in 0..k {
            if groups[rank].is_empty() {
                continue;
            }
            let input_idx = self.canonical[rank];
            let voxel_ids = &groups[rank];
            let pts = self.points.select(Axis(0), voxel_ids);
            let tgt = self.targets[input_idx].select(Axis(0), voxel_ids);

            let (latent, enc_cache) = match &self.encoder {
                None => (self.latents.row(input_idx).to_owned(), None),
                Some(encoder) => {
                    let (latent, cache) = encoder.encode_cached(&self.input_mats[input_idx])?;
                    (latent, Some(cache))
                }
            };

            let (pred, cache) = self.net.forward_cached(&latent, pts.view())?;
            let mut diff = pred;
            Zip::from(&mut diff).and(&tgt).for_each(|p, &t| *p = *p - t);
            for v in diff.iter() {
                sq_sum = sq_sum + *v * *v;
            }
            diff.mapv_inplace(|v| v * scale);

            let (grads, dz) = self.net.backward(&cache, diff.view())?;
            net_grads.add_assign(&grads);

            match (&self.encoder, enc_cache) {
                (None, _) => {
                    let mut row = latent_grads.row_mut(input_idx);
                    Zip::from(&mut row).and(&dz).for_each(|a, &b| *a = b);
                }
                (Some(encoder), Some(enc_cache)) => {
                    let grads = encoder.backward(&enc_cache, &dz);
                    encoder_grads.as_mut().unwrap().add_assign(&grads);
                }
                _ => unreachable!(),
            }
        }

        let denom = (batch.len() * d) as f64;
        let loss = sq_sum.into_f64() / denom;
        if !loss.is_finite() {
            return Err(TrainError::NonFiniteLoss { step: self.step });
        }

        match (&mut self.encoder, &mut encoder_grads) {
            (None, _) => {
                let mut params = self.net.param_slices_mut();
                let grads = net_grads.grad_slices();
                self.net_opt.step(&mut params, &grads);
                let latent_opt = self.latent_opt.as_mut().expect("auto-decoder has latent opt");
                let flat = self
                    .latents
                    .as_slice_mut()
                    .expect("latents are standard layout");
                let gflat = latent_grads
                    .as_slice()
                    .expect("latent grads are standard layout");
                latent_opt.step(&mut [flat], &[gflat]);
            }
            (Some(encoder), Some(egrads)) => {
                let mut params = self.net.param_slices_mut();
                params.extend(encoder.param_slices_mut());
                let mut grads = net_grads.grad_slices();
                grads.extend(egrads.grad_slices());
                self.net_opt.step(&mut params, &grads);
            }
            _ => unreachable!(),
        }

        self.step += 1;
        Ok(loss)
    }

    /// Run until `config.steps` total steps (or the stop rule fires).
    /// Returns the losses of the steps executed by this call.
    pub fn run(&mut self) -> Result<Vec<f64>, TrainError> {
        let mut session = Vec::new();
        while self.step < self.config.steps {
            let loss = self.step_once()?;
            self.losses.push(loss);
            session.push(loss);
            if let Some(rule) = self.config.stop {
                if rule.check_every > 0 && self.step % rule.check_every == 0 {
                    let mean = self.mean_psnr()?;
                    if mean >= rule.target_psnr {
                        self.stopped_early = Some((self.step, mean));
                        break;
                    }
                }
            }
        }
        Ok(session)
    }

    pub fn optimizer_state(&self) -> OptimizerState {
        let (net_step, net_m, net_v) = self.net_opt.export_moments();
        let latent = self.latent_opt.as_ref().map(|o| o.export_moments());
        OptimizerState {
            net_step,
            net_m,
            net_v,
            latent,
        }
    }

    pub fn restore_optimizer_state(&mut self, state: &OptimizerState) -> Result<(), TrainError> {
        self.net_opt
            .restore_moments(state.net_step, &state.net_m, &state.net_v)
            .map_err(TrainError::StateMismatch)?;
        match (&mut self.latent_opt, &state.latent) {
            (Some(opt), Some((step, m, v))) => opt
                .restore_moments(*step, m, v)
                .map_err(TrainError::StateMismatch)?,
            (None, None) => {}
            _ => {
                return Err(TrainError::StateMismatch(
                    "latent optimizer state does not match training mode".into(),
                ))
            }
        }
        Ok(())
    }

    /// Reposition the pair stream and step counter when resuming.
    pub fn resume_at(&mut self, step: u64) {
        self.step = step;
        self.stream
            .advance_to(step.saturating_mul(self.config.batch_voxels as u64));
    }

    /// Full training checkpoint: network, grid, latent table or encoder,
    /// optimizer state, and the training meta needed to resume.
    pub fn to_checkpoint(&self, channel_names: &[String]) -> crate::checkpoint::Checkpoint {
        use crate::checkpoint::{
            encoder_to_tensors, net_to_tensors, Checkpoint, GridMeta, TrainMeta,
        };
        let latents = match self.mode() {
            TrainMode::AutoDecoder => Some(
                self.latents
                    .outer_iter()
                    .map(|row| row.iter().map(|v| v.into_f64()).collect())
                    .collect(),
            ),
            TrainMode::AutoEncoder => None,
        };
        Checkpoint {
            net_config: self.net_config.clone(),
            net_tensors: net_to_tensors(&self.net),
            grid: Some(GridMeta {
                spec: self.grid.clone(),
                channel_names: channel_names.to_vec(),
            }),
            latents,
            encoder_config: self.encoder.as_ref().map(|e| e.config.clone()),
            encoder_tensors: self.encoder.as_ref().map(encoder_to_tensors),
            optimizer: Some(self.optimizer_state()),
            train: Some(TrainMeta {
                mode: self.mode(),
                steps: self.config.steps,
                completed_steps: self.step,
                learning_rate: self.config.learning_rate,
                latent_learning_rate: self.config.latent_learning_rate,
                batch_voxels: self.config.batch_voxels as u64,
                seed: self.config.seed,
                latent_init_scale: self.config.latent_init_scale,
                adam_beta1: self.config.adam_beta1,
                adam_beta2: self.config.adam_beta2,
                adam_epsilon: self.config.adam_epsilon,
                stop: self.config.stop,
                volume_digests: self.volume_digests(),
            }),
        }
    }

    /// Rebuild a trainer from a checkpoint and the original volumes.
    /// Volume content is verified against the stored digests so latents
    /// cannot silently attach to the wrong molecule.
    pub fn from_checkpoint(
        volumes: &[VolumeGrid],
        ckpt: &crate::checkpoint::Checkpoint,
    ) -> Result<Self, TrainError> {
        let meta = ckpt
            .train
            .as_ref()
            .ok_or_else(|| TrainError::StateMismatch("not a training checkpoint".into()))?;
        let digests: Vec<u64> = volumes.iter().map(|v| v.content_digest()).collect();
        if digests != meta.volume_digests {
            return Err(TrainError::StateMismatch(
                "volume contents differ from the checkpointed dataset".into(),
            ));
        }
        let config = meta.to_train_config();
        let mut trainer = match meta.mode {
            TrainMode::AutoDecoder => {
                let mut t =
                    Trainer::new_auto_decoder(volumes, config, ckpt.net_config.clone())?;
                let rows = ckpt.latents.as_ref().ok_or_else(|| {
                    TrainError::StateMismatch("auto-decoder checkpoint lacks latent table".into())
                })?;
                if rows.len() != volumes.len() {
                    return Err(TrainError::StateMismatch(format!(
                        "{} latents for {} volumes",
                        rows.len(),
                        volumes.len()
                    )));
                }
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != t.net_config.latent_dim {
                        return Err(TrainError::StateMismatch("latent dim mismatch".into()));
                    }
                    for (j, &v) in row.iter().enumerate() {
                        t.latents[[i, j]] = F::from_f64(v);
                    }
                }
                t
            }
            TrainMode::AutoEncoder => {
                let enc_cfg = ckpt.encoder_config.clone().ok_or_else(|| {
                    TrainError::StateMismatch("auto-encoder checkpoint lacks encoder".into())
                })?;
                let mut t = Trainer::new_auto_encoder(
                    volumes,
                    config,
                    ckpt.net_config.clone(),
                    enc_cfg,
                )?;
                t.encoder = Some(
                    ckpt.encoder::<F>()
                        .map_err(|e| TrainError::StateMismatch(e.to_string()))?
                        .expect("encoder config implies tensors"),
                );
                t
            }
        };
        trainer.net = ckpt
            .network::<F>()
            .map_err(|e| TrainError::StateMismatch(e.to_string()))?;
        if let Some(opt) = &ckpt.optimizer {
            trainer.restore_optimizer_state(opt)?;
        }
        trainer.resume_at(meta.completed_steps);
        Ok(trainer)
    }
}

/// Exported Adam moments for persistence (always f64).
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub net_step: u64,
    pub net_m: Vec<Vec<f64>>,
    pub net_v: Vec<Vec<f64>>,
    pub latent: Option<(u64, Vec<Vec<f64>>, Vec<Vec<f64>>)>,
}

/// Jointly fit network parameters and one latent per volume.
pub fn train_auto_decoder<F: Real>(
    volumes: &[VolumeGrid],
    config: TrainConfig,
    net_config: NetConfig,
) -> Result<(ModulatedField<F>, Vec<LatentCode<F>>, Vec<f64>), TrainError> {
    let mut trainer = Trainer::new_auto_decoder(volumes, config, net_config)?;
    trainer.run()?;
    let latents = trainer.latents_input_order()?;
    Ok((trainer.net, latents, trainer.losses))
}

/// Fit network plus convolutional encoder end to end with the default
/// encoder stack sized for the volumes' dims.
pub fn train_auto_encoder<F: Real>(
    volumes: &[VolumeGrid],
    config: TrainConfig,
    net_config: NetConfig,
) -> Result<(ModulatedField<F>, ConvEncoder<F>, Vec<f64>), TrainError> {
    let first = volumes.first().ok_or(TrainError::NoVolumes)?;
    let mut encoder_config = EncoderConfig::with_input(first.channels, net_config.latent_dim);
    encoder_config.input_dims = first.spec.dims;
    train_auto_encoder_with(volumes, config, net_config, encoder_config)
}

/// Auto-encoder training with an explicit encoder architecture.
pub fn train_auto_encoder_with<F: Real>(
    volumes: &[VolumeGrid],
    config: TrainConfig,
    net_config: NetConfig,
    encoder_config: EncoderConfig,
) -> Result<(ModulatedField<F>, ConvEncoder<F>, Vec<f64>), TrainError> {
    let mut trainer = Trainer::new_auto_encoder(volumes, config, net_config, encoder_config)?;
    trainer.run()?;
    let encoder = trainer.encoder.take().expect("auto-encoder trainer");
    Ok((trainer.net, encoder, trainer.losses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample_grid, auto_grid, Channel, ChannelSpec};
    use crate::molecule::{Atom, Molecule};
    use crate::ElementTable;

    fn small_volume(seed_positions: &[[f64; 3]], dims: usize) -> VolumeGrid {
        let mut mol = Molecule::new("test");
        for &p in seed_positions {
            mol.atoms.push(Atom::new("C", p));
        }
        let spec = ChannelSpec::new(vec![Channel::wildcard("all")], 2.0);
        let grid = auto_grid(&mol, [dims, dims, dims], 2.0).unwrap();
        sample_grid(&mol, &spec, &ElementTable::default(), &grid, None).unwrap()
    }

    fn tiny_net(out_dim: usize) -> NetConfig {
        NetConfig {
            in_dim: 3,
            out_dim,
            hidden_width: 16,
            num_hidden_layers: 2,
            omega0: 30.0,
            latent_dim: 8,
        }
    }

    fn quick_config(steps: u64) -> TrainConfig {
        TrainConfig {
            steps,
            batch_voxels: 256,
            learning_rate: 1e-3,
            latent_learning_rate: 1e-2,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_steps_returns_initial_state() {
        let vol = small_volume(&[[0.0, 0.0, 0.0]], 8);
        let cfg = quick_config(0);
        let (net, latents, losses) =
            train_auto_decoder::<f64>(&[vol], cfg, tiny_net(1)).unwrap();
        assert!(losses.is_empty());
        assert_eq!(latents.len(), 1);
        let fresh: ModulatedField<f64> = init_network(&tiny_net(1), 0).unwrap();
        assert_eq!(net.param_slices(), fresh.param_slices());
    }

    #[test]
    fn loss_decreases_on_single_volume() {
        let vol = small_volume(&[[0.0, 0.0, 0.0], [1.4, 0.3, -0.2]], 8);
        let (_, _, losses) =
            train_auto_decoder::<f64>(&[vol], quick_config(400), tiny_net(1)).unwrap();
        assert_eq!(losses.len(), 400);
        let head: f64 = losses[..20].iter().sum::<f64>() / 20.0;
        let tail: f64 = losses[380..].iter().sum::<f64>() / 20.0;
        assert!(
            tail < 0.1 * head,
            "expected at least 10x loss decrease, got {head} -> {tail}"
        );
    }

    #[test]
    fn training_is_seed_deterministic() {
        let vol = small_volume(&[[0.0, 0.0, 0.0]], 6);
        let cfg = quick_config(25);
        let (net_a, lat_a, loss_a) =
            train_auto_decoder::<f64>(&[vol.clone()], cfg.clone(), tiny_net(1)).unwrap();
        let (net_b, lat_b, loss_b) =
            train_auto_decoder::<f64>(&[vol], cfg, tiny_net(1)).unwrap();
        assert_eq!(net_a.param_slices(), net_b.param_slices());
        assert_eq!(lat_a, lat_b);
        assert_eq!(loss_a, loss_b);
    }

    #[test]
    fn dataset_permutation_gives_identical_loss() {
        let a = small_volume(&[[0.0, 0.0, 0.0]], 6);
        let b = small_volume(&[[0.5, 0.5, 0.5], [-0.4, 0.2, 0.1]], 6);
        let cfg = quick_config(30);
        let (_, lat_ab, loss_ab) =
            train_auto_decoder::<f64>(&[a.clone(), b.clone()], cfg.clone(), tiny_net(1)).unwrap();
        let (_, lat_ba, loss_ba) =
            train_auto_decoder::<f64>(&[b, a], cfg, tiny_net(1)).unwrap();
        assert_eq!(loss_ab, loss_ba, "loss trajectory must not depend on volume order");
        // per-volume latents also swap with the permutation
        assert_eq!(lat_ab[0], lat_ba[1]);
        assert_eq!(lat_ab[1], lat_ba[0]);
    }

    #[test]
    fn identical_volumes_reconstruct_similarly() {
        let vol = small_volume(&[[0.0, 0.0, 0.0]], 8);
        let cfg = TrainConfig {
            steps: 600,
            batch_voxels: 256,
            learning_rate: 1e-3,
            latent_learning_rate: 1e-2,
            ..TrainConfig::default()
        };
        let volumes = vec![vol.clone(), vol.clone()];
        let (net, latents, _) =
            train_auto_decoder::<f64>(&volumes, cfg, tiny_net(1)).unwrap();
        let r0 = reconstruct(&net, &latents[0], &vol.spec).unwrap();
        let r1 = reconstruct(&net, &latents[1], &vol.spec).unwrap();
        let p0 = psnr(&vol, &r0).unwrap().overall_psnr;
        let p1 = psnr(&vol, &r1).unwrap().overall_psnr;
        assert!(
            (p0 - p1).abs() < 1.0,
            "identical volumes should train to similar quality: {p0} vs {p1}"
        );
    }

    #[test]
    fn psnr_improves_over_initialization() {
        let vol = small_volume(&[[0.0, 0.0, 0.0]], 8);
        let net0: ModulatedField<f64> = init_network(&tiny_net(1), 0).unwrap();
        let cfg = quick_config(300);

        // latent at init (content-keyed draw, scale 0.01)
        let trainer = Trainer::<f64>::new_auto_decoder(&[vol.clone()], cfg.clone(), tiny_net(1)).unwrap();
        let init_latent = trainer.latent_for(0).unwrap();
        let recon0 = reconstruct(&net0, &init_latent, &vol.spec).unwrap();
        let before = psnr(&vol, &recon0).unwrap().overall_psnr;

        let (net, latents, _) = train_auto_decoder::<f64>(&[vol.clone()], cfg, tiny_net(1)).unwrap();
        let recon = reconstruct(&net, &latents[0], &vol.spec).unwrap();
        let after = psnr(&vol, &recon).unwrap().overall_psnr;
        assert!(after > before, "training must beat initialization: {before} -> {after}");
    }

    #[test]
    fn auto_encoder_single_volume_smoke() {
        let vol = small_volume(&[[0.0, 0.0, 0.0]], 8);
        let enc_cfg = EncoderConfig {
            in_channels: 1,
            input_dims: [8, 8, 8],
            conv_widths: vec![4, 8],
            kernel: 3,
            stride: 2,
            padding: 1,
            latent_dim: 8,
        };
        let cfg = quick_config(300);
        let (_, _, losses) =
            train_auto_encoder_with::<f64>(&[vol], cfg, tiny_net(1), enc_cfg).unwrap();
        // averaged loss decreases over 100-step windows
        let w1: f64 = losses[..100].iter().sum::<f64>() / 100.0;
        let w3: f64 = losses[200..300].iter().sum::<f64>() / 100.0;
        assert!(w3 < w1, "windowed loss should trend down: {w1} -> {w3}");
    }

    #[test]
    fn auto_encoder_rejects_mismatched_dims() {
        let vol = small_volume(&[[0.0, 0.0, 0.0]], 8);
        let enc_cfg = EncoderConfig {
            in_channels: 1,
            input_dims: [16, 16, 16],
            conv_widths: vec![4],
            kernel: 3,
            stride: 2,
            padding: 1,
            latent_dim: 8,
        };
        let err = Trainer::<f64>::new_auto_encoder(&[vol], quick_config(1), tiny_net(1), enc_cfg)
            .err()
            .expect("mismatched dims must fail");
        assert!(matches!(err, TrainError::BadConfig(_)));
    }

    #[test]
    fn inconsistent_volume_shapes_rejected() {
        let a = small_volume(&[[0.0, 0.0, 0.0]], 8);
        let b = small_volume(&[[0.0, 0.0, 0.0]], 6);
        let err = Trainer::<f64>::new_auto_decoder(&[a, b], quick_config(1), tiny_net(1))
            .err()
            .expect("inconsistent shapes must fail");
        assert!(matches!(err, TrainError::InconsistentVolumes { .. }));
    }

    #[test]
    fn reconstruct_matches_forward_at_training_dims() {
        let vol = small_volume(&[[0.0, 0.0, 0.0]], 6);
        let (net, latents, _) =
            train_auto_decoder::<f64>(&[vol.clone()], quick_config(10), tiny_net(1)).unwrap();
        let recon = reconstruct(&net, &latents[0], &vol.spec).unwrap();
        let pts = normalize_points::<f64>(&vol.spec);
        let direct = net.forward(&latents[0].values, pts.view()).unwrap();
        let voxels = vol.spec.voxel_count();
        for v in 0..voxels {
            assert_eq!(recon.data[v].to_bits(), direct[[v, 0]].to_bits());
        }
    }

    #[test]
    fn reconstruct_at_higher_dims_is_legal() {
        let vol = small_volume(&[[0.0, 0.0, 0.0]], 6);
        let (net, latents, _) =
            train_auto_decoder::<f64>(&[vol.clone()], quick_config(5), tiny_net(1)).unwrap();
        let fine = reconstruct(&net, &latents[0], &vol.spec.refine(4)).unwrap();
        assert_eq!(fine.spec.dims, [24, 24, 24]);
        let again = reconstruct(&net, &latents[0], &vol.spec.refine(4)).unwrap();
        assert_eq!(
            fine.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            again.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}

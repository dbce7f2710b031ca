//! Binary checkpoints.
//!
//! Core network layout (all little-endian):
//!
//! ```text
//! magic   4 bytes  "MNF1"
//! config  5 x u32  in_dim, out_dim, hidden_width, num_hidden_layers, latent_dim
//! omega0  f64
//! tensors             in declaration order: synthesis (weight, bias) per
//!                     layer, modulator (weight, bias) per layer, output
//!                     (weight, bias); each tensor is
//!                     rank u32, dims rank x u32, data f64 row-major
//! ```
//!
//! A training checkpoint appends tagged sections, each
//! `tag 4 bytes + payload length u64 + payload`:
//!
//! * `GRID` training grid: dims 3 x u32, origin 3 x f64, spacing 3 x f64,
//!   channel count u32, channel names (u32 length + UTF-8) each.
//! * `LATB` latent table (auto-decoder): count u32, latent_dim u32, rows
//!   as f64 in input order.
//! * `ENCD` encoder (auto-encoder): in_channels u32, input dims 3 x u32,
//!   conv count u32 + widths, kernel u32, stride u32, padding u32,
//!   latent_dim u32, then tensors as in the core (conv weight/bias pairs,
//!   then linear weight/bias).
//! * `OPTM` optimizer state: group count u32; per group step u64, tensor
//!   count u32, then per tensor length u64 + first moments f64, and the
//!   same again for second moments.
//! * `TCFG` training meta: mode u8 (0 auto-decoder, 1 auto-encoder),
//!   steps u64, completed u64, learning rates f64 x 2, batch u64, seed u64,
//!   latent_init_scale f64, betas f64 x 2, epsilon f64, stop-rule flag u8
//!   (+ target f64, check u64 when set), volume digest count u32 + u64 each
//!   (input order).
//!
//! Parameters are always stored as f64 regardless of the in-memory
//! precision.

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::field::GridSpec;
use crate::net::{ConvEncoder, EncoderConfig, ModulatedField, NetConfig, Real};
use crate::train::{OptimizerState, StopRule, TrainConfig, TrainMode};

pub const NET_MAGIC: &[u8; 4] = b"MNF1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic: expected \"MNF1\"")]
    BadMagic,
    #[error("truncated checkpoint: needed {needed} more byte(s) at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("unknown section {0:?}")]
    UnknownSection([u8; 4]),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("checkpoint does not match: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorData {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GridMeta {
    pub spec: GridSpec,
    pub channel_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainMeta {
    pub mode: TrainMode,
    pub steps: u64,
    pub completed_steps: u64,
    pub learning_rate: f64,
    pub latent_learning_rate: f64,
    pub batch_voxels: u64,
    pub seed: u64,
    pub latent_init_scale: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub stop: Option<StopRule>,
    pub volume_digests: Vec<u64>,
}

impl TrainMeta {
    pub fn to_train_config(&self) -> TrainConfig {
        TrainConfig {
            mode: self.mode,
            steps: self.steps,
            learning_rate: self.learning_rate,
            latent_learning_rate: self.latent_learning_rate,
            batch_voxels: self.batch_voxels as usize,
            seed: self.seed,
            latent_init_scale: self.latent_init_scale,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_epsilon: self.adam_epsilon,
            stop: self.stop,
        }
    }
}

/// A parsed checkpoint: always a network, optionally the training state
/// around it.
#[derive(Debug)]
pub struct Checkpoint {
    pub net_config: NetConfig,
    pub net_tensors: Vec<TensorData>,
    pub grid: Option<GridMeta>,
    /// Latent table in input order (auto-decoder checkpoints).
    pub latents: Option<Vec<Vec<f64>>>,
    pub encoder_config: Option<EncoderConfig>,
    pub encoder_tensors: Option<Vec<TensorData>>,
    pub optimizer: Option<OptimizerState>,
    pub train: Option<TrainMeta>,
}

pub fn net_to_tensors<F: Real>(net: &ModulatedField<F>) -> Vec<TensorData> {
    let mut out = Vec::new();
    for (w, b) in net.synth_w.iter().zip(&net.synth_b) {
        out.push(tensor2(w));
        out.push(tensor1(b));
    }
    for (w, b) in net.mod_w.iter().zip(&net.mod_b) {
        out.push(tensor2(w));
        out.push(tensor1(b));
    }
    out.push(tensor2(&net.out_w));
    out.push(tensor1(&net.out_b));
    out
}

fn tensor2<F: Real>(a: &Array2<F>) -> TensorData {
    TensorData {
        dims: vec![a.nrows(), a.ncols()],
        data: a.iter().map(|v| v.into_f64()).collect(),
    }
}

fn tensor1<F: Real>(a: &Array1<F>) -> TensorData {
    TensorData {
        dims: vec![a.len()],
        data: a.iter().map(|v| v.into_f64()).collect(),
    }
}

fn take2<F: Real>(t: &TensorData, what: &str) -> Result<Array2<F>, CheckpointError> {
    if t.dims.len() != 2 {
        return Err(CheckpointError::Malformed(format!("{what}: expected rank 2")));
    }
    let data: Vec<F> = t.data.iter().map(|&v| F::from_f64(v)).collect();
    Array2::from_shape_vec((t.dims[0], t.dims[1]), data)
        .map_err(|e| CheckpointError::Malformed(format!("{what}: {e}")))
}

fn take1<F: Real>(t: &TensorData, what: &str) -> Result<Array1<F>, CheckpointError> {
    if t.dims.len() != 1 {
        return Err(CheckpointError::Malformed(format!("{what}: expected rank 1")));
    }
    Ok(t.data.iter().map(|&v| F::from_f64(v)).collect())
}

pub fn net_from_tensors<F: Real>(
    config: &NetConfig,
    tensors: &[TensorData],
) -> Result<ModulatedField<F>, CheckpointError> {
    let layers = config.num_hidden_layers;
    let expected = 4 * layers + 2;
    if tensors.len() != expected {
        return Err(CheckpointError::Malformed(format!(
            "expected {expected} tensors for {layers} layers, found {}",
            tensors.len()
        )));
    }
    let mut iter = tensors.iter();
    let mut synth_w = Vec::with_capacity(layers);
    let mut synth_b = Vec::with_capacity(layers);
    for i in 0..layers {
        synth_w.push(take2(iter.next().unwrap(), &format!("synthesis weight {i}"))?);
        synth_b.push(take1(iter.next().unwrap(), &format!("synthesis bias {i}"))?);
    }
    let mut mod_w = Vec::with_capacity(layers);
    let mut mod_b = Vec::with_capacity(layers);
    for i in 0..layers {
        mod_w.push(take2(iter.next().unwrap(), &format!("modulator weight {i}"))?);
        mod_b.push(take1(iter.next().unwrap(), &format!("modulator bias {i}"))?);
    }
    let out_w = take2(iter.next().unwrap(), "output weight")?;
    let out_b = take1(iter.next().unwrap(), "output bias")?;

    let net = ModulatedField {
        config: config.clone(),
        synth_w,
        synth_b,
        mod_w,
        mod_b,
        out_w,
        out_b,
    };
    // shape sanity against the config
    let width = config.hidden_width;
    if net.synth_w[0].dim() != (width, config.in_dim)
        || net.out_w.dim() != (config.out_dim, width)
        || net.mod_w[0].dim() != (width, config.latent_dim)
    {
        return Err(CheckpointError::Malformed(
            "tensor shapes do not match the config header".into(),
        ));
    }
    Ok(net)
}

pub fn encoder_to_tensors<F: Real>(encoder: &ConvEncoder<F>) -> Vec<TensorData> {
    let mut out = Vec::new();
    for (w, b) in encoder.conv_w.iter().zip(&encoder.conv_b) {
        out.push(tensor2(w));
        out.push(tensor1(b));
    }
    out.push(tensor2(&encoder.linear_w));
    out.push(tensor1(&encoder.linear_b));
    out
}

pub fn encoder_from_tensors<F: Real>(
    config: &EncoderConfig,
    tensors: &[TensorData],
) -> Result<ConvEncoder<F>, CheckpointError> {
    let convs = config.conv_widths.len();
    let expected = 2 * convs + 2;
    if tensors.len() != expected {
        return Err(CheckpointError::Malformed(format!(
            "expected {expected} encoder tensors, found {}",
            tensors.len()
        )));
    }
    let mut iter = tensors.iter();
    let mut conv_w = Vec::with_capacity(convs);
    let mut conv_b = Vec::with_capacity(convs);
    for i in 0..convs {
        conv_w.push(take2(iter.next().unwrap(), &format!("conv weight {i}"))?);
        conv_b.push(take1(iter.next().unwrap(), &format!("conv bias {i}"))?);
    }
    let linear_w = take2(iter.next().unwrap(), "linear weight")?;
    let linear_b = take1(iter.next().unwrap(), "linear bias")?;
    Ok(ConvEncoder {
        config: config.clone(),
        conv_w,
        conv_b,
        linear_w,
        linear_b,
    })
}

// ---------------------------------------------------------------------------
// byte-level encoding

struct Writer {
    bytes: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.bytes.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
    fn tensor(&mut self, t: &TensorData) {
        self.u32(t.dims.len() as u32);
        for &d in &t.dims {
            self.u32(d as u32);
        }
        for &v in &t.data {
            self.f64(v);
        }
    }
    fn section(&mut self, tag: &[u8; 4], payload: Vec<u8>) {
        self.bytes.extend_from_slice(tag);
        self.u64(payload.len() as u64);
        self.bytes.extend_from_slice(&payload);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.offset + n > self.bytes.len() {
            return Err(CheckpointError::Truncated {
                offset: self.offset,
                needed: self.offset + n - self.bytes.len(),
            });
        }
        let s = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn done(&self) -> bool {
        self.offset == self.bytes.len()
    }
    fn tensor(&mut self) -> Result<TensorData, CheckpointError> {
        let rank = self.u32()? as usize;
        if rank > 4 {
            return Err(CheckpointError::Malformed(format!("tensor rank {rank}")));
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(self.u32()? as usize);
        }
        let len: usize = dims.iter().product();
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(self.f64()?);
        }
        Ok(TensorData { dims, data })
    }
}

impl Checkpoint {
    pub fn network_only<F: Real>(net: &ModulatedField<F>) -> Self {
        Checkpoint {
            net_config: net.config.clone(),
            net_tensors: net_to_tensors(net),
            grid: None,
            latents: None,
            encoder_config: None,
            encoder_tensors: None,
            optimizer: None,
            train: None,
        }
    }

    pub fn network<F: Real>(&self) -> Result<ModulatedField<F>, CheckpointError> {
        net_from_tensors(&self.net_config, &self.net_tensors)
    }

    pub fn encoder<F: Real>(&self) -> Result<Option<ConvEncoder<F>>, CheckpointError> {
        match (&self.encoder_config, &self.encoder_tensors) {
            (Some(cfg), Some(tensors)) => Ok(Some(encoder_from_tensors(cfg, tensors)?)),
            (None, None) => Ok(None),
            _ => Err(CheckpointError::Malformed(
                "encoder config and tensors must appear together".into(),
            )),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer { bytes: Vec::new() };
        w.bytes.extend_from_slice(NET_MAGIC);
        w.u32(self.net_config.in_dim as u32);
        w.u32(self.net_config.out_dim as u32);
        w.u32(self.net_config.hidden_width as u32);
        w.u32(self.net_config.num_hidden_layers as u32);
        w.u32(self.net_config.latent_dim as u32);
        w.f64(self.net_config.omega0);
        for t in &self.net_tensors {
            w.tensor(t);
        }

        if let Some(grid) = &self.grid {
            let mut p = Writer { bytes: Vec::new() };
            for axis in 0..3 {
                p.u32(grid.spec.dims[axis] as u32);
            }
            for axis in 0..3 {
                p.f64(grid.spec.origin[axis]);
            }
            for axis in 0..3 {
                p.f64(grid.spec.spacing[axis]);
            }
            p.u32(grid.channel_names.len() as u32);
            for name in &grid.channel_names {
                p.u32(name.len() as u32);
                p.bytes.extend_from_slice(name.as_bytes());
            }
            w.section(b"GRID", p.bytes);
        }

        if let Some(latents) = &self.latents {
            let mut p = Writer { bytes: Vec::new() };
            p.u32(latents.len() as u32);
            let dim = latents.first().map_or(0, |r| r.len());
            p.u32(dim as u32);
            for row in latents {
                for &v in row {
                    p.f64(v);
                }
            }
            w.section(b"LATB", p.bytes);
        }

        if let (Some(cfg), Some(tensors)) = (&self.encoder_config, &self.encoder_tensors) {
            let mut p = Writer { bytes: Vec::new() };
            p.u32(cfg.in_channels as u32);
            for axis in 0..3 {
                p.u32(cfg.input_dims[axis] as u32);
            }
            p.u32(cfg.conv_widths.len() as u32);
            for &width in &cfg.conv_widths {
                p.u32(width as u32);
            }
            p.u32(cfg.kernel as u32);
            p.u32(cfg.stride as u32);
            p.u32(cfg.padding as u32);
            p.u32(cfg.latent_dim as u32);
            for t in tensors {
                p.tensor(t);
            }
            w.section(b"ENCD", p.bytes);
        }

        if let Some(opt) = &self.optimizer {
            let mut p = Writer { bytes: Vec::new() };
            let groups: Vec<(u64, &Vec<Vec<f64>>, &Vec<Vec<f64>>)> = match &opt.latent {
                Some((step, m, v)) => vec![(opt.net_step, &opt.net_m, &opt.net_v), (*step, m, v)],
                None => vec![(opt.net_step, &opt.net_m, &opt.net_v)],
            };
            p.u32(groups.len() as u32);
            for (step, m, v) in groups {
                p.u64(step);
                p.u32(m.len() as u32);
                for tensor in m {
                    p.u64(tensor.len() as u64);
                    for &x in tensor {
                        p.f64(x);
                    }
                }
                for tensor in v {
                    p.u64(tensor.len() as u64);
                    for &x in tensor {
                        p.f64(x);
                    }
                }
            }
            w.section(b"OPTM", p.bytes);
        }

        if let Some(meta) = &self.train {
            let mut p = Writer { bytes: Vec::new() };
            p.u8(match meta.mode {
                TrainMode::AutoDecoder => 0,
                TrainMode::AutoEncoder => 1,
            });
            p.u64(meta.steps);
            p.u64(meta.completed_steps);
            p.f64(meta.learning_rate);
            p.f64(meta.latent_learning_rate);
            p.u64(meta.batch_voxels);
            p.u64(meta.seed);
            p.f64(meta.latent_init_scale);
            p.f64(meta.adam_beta1);
            p.f64(meta.adam_beta2);
            p.f64(meta.adam_epsilon);
            match meta.stop {
                Some(rule) => {
                    p.u8(1);
                    p.f64(rule.target_psnr);
                    p.u64(rule.check_every);
                }
                None => p.u8(0),
            }
            p.u32(meta.volume_digests.len() as u32);
            for &d in &meta.volume_digests {
                p.u64(d);
            }
            w.section(b"TCFG", p.bytes);
        }

        w.bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, offset: 0 };
        if r.take(4)? != NET_MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let net_config = NetConfig {
            in_dim: r.u32()? as usize,
            out_dim: r.u32()? as usize,
            hidden_width: r.u32()? as usize,
            num_hidden_layers: r.u32()? as usize,
            latent_dim: r.u32()? as usize,
            omega0: r.f64()?,
        };
        let tensor_count = 4 * net_config.num_hidden_layers + 2;
        let mut net_tensors = Vec::with_capacity(tensor_count);
        for _ in 0..tensor_count {
            net_tensors.push(r.tensor()?);
        }

        let mut checkpoint = Checkpoint {
            net_config,
            net_tensors,
            grid: None,
            latents: None,
            encoder_config: None,
            encoder_tensors: None,
            optimizer: None,
            train: None,
        };

        while !r.done() {
            let tag: [u8; 4] = r.take(4)?.try_into().unwrap();
            let len = r.u64()? as usize;
            let payload = r.take(len)?;
            let mut p = Reader {
                bytes: payload,
                offset: 0,
            };
            match &tag {
                b"GRID" => {
                    let dims = [p.u32()? as usize, p.u32()? as usize, p.u32()? as usize];
                    let origin = [p.f64()?, p.f64()?, p.f64()?];
                    let spacing = [p.f64()?, p.f64()?, p.f64()?];
                    let count = p.u32()? as usize;
                    let mut channel_names = Vec::with_capacity(count);
                    for _ in 0..count {
                        let n = p.u32()? as usize;
                        let raw = p.take(n)?;
                        channel_names.push(
                            String::from_utf8(raw.to_vec())
                                .map_err(|_| CheckpointError::Malformed("channel name".into()))?,
                        );
                    }
                    let spec = GridSpec::new(dims, origin, spacing)
                        .map_err(CheckpointError::Malformed)?;
                    checkpoint.grid = Some(GridMeta {
                        spec,
                        channel_names,
                    });
                }
                b"LATB" => {
                    let count = p.u32()? as usize;
                    let dim = p.u32()? as usize;
                    let mut rows = Vec::with_capacity(count);
                    for _ in 0..count {
                        let mut row = Vec::with_capacity(dim);
                        for _ in 0..dim {
                            row.push(p.f64()?);
                        }
                        rows.push(row);
                    }
                    checkpoint.latents = Some(rows);
                }
                b"ENCD" => {
                    let in_channels = p.u32()? as usize;
                    let input_dims = [p.u32()? as usize, p.u32()? as usize, p.u32()? as usize];
                    let convs = p.u32()? as usize;
                    let mut conv_widths = Vec::with_capacity(convs);
                    for _ in 0..convs {
                        conv_widths.push(p.u32()? as usize);
                    }
                    let config = EncoderConfig {
                        in_channels,
                        input_dims,
                        conv_widths,
                        kernel: p.u32()? as usize,
                        stride: p.u32()? as usize,
                        padding: p.u32()? as usize,
                        latent_dim: p.u32()? as usize,
                    };
                    let mut tensors = Vec::with_capacity(2 * convs + 2);
                    for _ in 0..2 * convs + 2 {
                        tensors.push(p.tensor()?);
                    }
                    checkpoint.encoder_config = Some(config);
                    checkpoint.encoder_tensors = Some(tensors);
                }
                b"OPTM" => {
                    let groups = p.u32()? as usize;
                    if groups == 0 || groups > 2 {
                        return Err(CheckpointError::Malformed(format!(
                            "optimizer group count {groups}"
                        )));
                    }
                    let read_group =
                        |p: &mut Reader| -> Result<(u64, Vec<Vec<f64>>, Vec<Vec<f64>>), CheckpointError> {
                            let step = p.u64()?;
                            let count = p.u32()? as usize;
                            let read_list = |p: &mut Reader| -> Result<Vec<Vec<f64>>, CheckpointError> {
                                let mut list = Vec::with_capacity(count);
                                for _ in 0..count {
                                    let len = p.u64()? as usize;
                                    let mut t = Vec::with_capacity(len);
                                    for _ in 0..len {
                                        t.push(p.f64()?);
                                    }
                                    list.push(t);
                                }
                                Ok(list)
                            };
                            let m = read_list(p)?;
                            let v = read_list(p)?;
                            Ok((step, m, v))
                        };
                    let (net_step, net_m, net_v) = read_group(&mut p)?;
                    let latent = if groups == 2 {
                        Some(read_group(&mut p)?)
                    } else {
                        None
                    };
                    checkpoint.optimizer = Some(OptimizerState {
                        net_step,
                        net_m,
                        net_v,
                        latent,
                    });
                }
                b"TCFG" => {
                    let mode = match p.u8()? {
                        0 => TrainMode::AutoDecoder,
                        1 => TrainMode::AutoEncoder,
                        other => {
                            return Err(CheckpointError::Malformed(format!("train mode {other}")))
                        }
                    };
                    let steps = p.u64()?;
                    let completed_steps = p.u64()?;
                    let learning_rate = p.f64()?;
                    let latent_learning_rate = p.f64()?;
                    let batch_voxels = p.u64()?;
                    let seed = p.u64()?;
                    let latent_init_scale = p.f64()?;
                    let adam_beta1 = p.f64()?;
                    let adam_beta2 = p.f64()?;
                    let adam_epsilon = p.f64()?;
                    let stop = match p.u8()? {
                        0 => None,
                        _ => Some(StopRule {
                            target_psnr: p.f64()?,
                            check_every: p.u64()?,
                        }),
                    };
                    let count = p.u32()? as usize;
                    let mut volume_digests = Vec::with_capacity(count);
                    for _ in 0..count {
                        volume_digests.push(p.u64()?);
                    }
                    checkpoint.train = Some(TrainMeta {
                        mode,
                        steps,
                        completed_steps,
                        learning_rate,
                        latent_learning_rate,
                        batch_voxels,
                        seed,
                        latent_init_scale,
                        adam_beta1,
                        adam_beta2,
                        adam_epsilon,
                        stop,
                        volume_digests,
                    });
                }
                other => return Err(CheckpointError::UnknownSection(*other)),
            }
            if !p.done() {
                return Err(CheckpointError::Malformed(format!(
                    "section {:?} has {} trailing byte(s)",
                    String::from_utf8_lossy(&tag),
                    payload.len() - p.offset
                )));
            }
        }
        Ok(checkpoint)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::init_network;

    #[test]
    fn network_roundtrip_is_byte_exact() {
        let config = NetConfig {
            in_dim: 3,
            out_dim: 2,
            hidden_width: 8,
            num_hidden_layers: 2,
            omega0: 30.0,
            latent_dim: 4,
        };
        let net: ModulatedField<f64> = init_network(&config, 5).unwrap();
        let ckpt = Checkpoint::network_only(&net);
        let bytes = ckpt.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.net_config, config);
        let net2: ModulatedField<f64> = back.network().unwrap();
        assert_eq!(net.param_slices(), net2.param_slices());
        // serialize again: identical bytes
        assert_eq!(bytes, Checkpoint::network_only(&net2).to_bytes());
    }

    #[test]
    fn header_starts_with_magic_and_omega_as_f64() {
        let config = NetConfig {
            in_dim: 3,
            out_dim: 1,
            hidden_width: 4,
            num_hidden_layers: 1,
            omega0: 30.0,
            latent_dim: 2,
        };
        let net: ModulatedField<f64> = init_network(&config, 0).unwrap();
        let bytes = Checkpoint::network_only(&net).to_bytes();
        assert_eq!(&bytes[..4], b"MNF1");
        let omega = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
        assert_eq!(omega, 30.0);
    }

    #[test]
    fn truncation_and_unknown_sections_error() {
        let config = NetConfig {
            in_dim: 3,
            out_dim: 1,
            hidden_width: 4,
            num_hidden_layers: 1,
            omega0: 30.0,
            latent_dim: 2,
        };
        let net: ModulatedField<f64> = init_network(&config, 0).unwrap();
        let bytes = Checkpoint::network_only(&net).to_bytes();
        assert!(matches!(
            Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).unwrap_err(),
            CheckpointError::Truncated { .. }
        ));
        let mut with_junk = bytes.clone();
        with_junk.extend_from_slice(b"XXXX");
        with_junk.extend_from_slice(&0u64.to_le_bytes());
        assert!(matches!(
            Checkpoint::from_bytes(&with_junk).unwrap_err(),
            CheckpointError::UnknownSection(_)
        ));
        let mut bad_magic = bytes;
        bad_magic[0] = b'Z';
        assert!(matches!(
            Checkpoint::from_bytes(&bad_magic).unwrap_err(),
            CheckpointError::BadMagic
        ));
    }
}

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Deserialize;
use serde_json::json;

use molfield::checkpoint::Checkpoint;
use molfield::net::{EncoderConfig, NetConfig, Real};
use molfield::train::{StopRule, TrainConfig, TrainMode, Trainer};
use molfield::VolumeGrid;

use crate::manifest::RunManifest;
use crate::util::{collect_volume_paths, load_volume, read_bytes, sha256_hex, write_atomic};
use crate::{ModeArg, Precision, TrainArgs};

/// Hyperparameters loadable from a TOML file. Explicit CLI flags override
/// any value given here.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mode: Option<String>,
    steps: Option<u64>,
    learning_rate: Option<f64>,
    latent_learning_rate: Option<f64>,
    batch_voxels: Option<usize>,
    seed: Option<u64>,
    latent_init_scale: Option<f64>,
    adam_beta1: Option<f64>,
    adam_beta2: Option<f64>,
    adam_epsilon: Option<f64>,
    width: Option<usize>,
    layers: Option<usize>,
    omega0: Option<f64>,
    latent_dim: Option<usize>,
    encoder_widths: Option<Vec<usize>>,
    psnr_target: Option<f64>,
    psnr_check_every: Option<u64>,
}

struct Resolved {
    mode: TrainMode,
    train: TrainConfig,
    net: NetConfig,
    encoder_widths: Option<Vec<usize>>,
}

fn resolve_config(args: &TrainArgs, out_dim: usize) -> Result<(Resolved, Option<(PathBuf, String)>)> {
    let (file, file_digest) = match &args.config {
        Some(path) => {
            let bytes = read_bytes(path)?;
            let cfg: FileConfig = toml::from_str(&String::from_utf8_lossy(&bytes))
                .with_context(|| format!("parsing config {}", path.display()))?;
            (cfg, Some((path.clone(), sha256_hex(&bytes))))
        }
        None => (FileConfig::default(), None),
    };

    let mode = match (args.mode, file.mode.as_deref()) {
        (ModeArg::AutoDecoder, Some("auto_encoder") | Some("auto-encoder")) => TrainMode::AutoEncoder,
        (ModeArg::AutoDecoder, _) => TrainMode::AutoDecoder,
        (ModeArg::AutoEncoder, _) => TrainMode::AutoEncoder,
    };

    let defaults = TrainConfig::default();
    let stop = match (
        args.psnr_target.or(file.psnr_target),
        args.psnr_check_every.or(file.psnr_check_every),
    ) {
        (Some(target), every) => Some(StopRule {
            target_psnr: target,
            check_every: every.unwrap_or(250),
        }),
        (None, _) => None,
    };
    let train = TrainConfig {
        mode,
        steps: args.steps.or(file.steps).unwrap_or(defaults.steps),
        learning_rate: args.lr.or(file.learning_rate).unwrap_or(defaults.learning_rate),
        latent_learning_rate: args
            .latent_lr
            .or(file.latent_learning_rate)
            .unwrap_or(defaults.latent_learning_rate),
        batch_voxels: args
            .batch_voxels
            .or(file.batch_voxels)
            .unwrap_or(defaults.batch_voxels),
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        latent_init_scale: args
            .latent_init_scale
            .or(file.latent_init_scale)
            .unwrap_or(defaults.latent_init_scale),
        adam_beta1: args.adam_beta1.or(file.adam_beta1).unwrap_or(defaults.adam_beta1),
        adam_beta2: args.adam_beta2.or(file.adam_beta2).unwrap_or(defaults.adam_beta2),
        adam_epsilon: args
            .adam_epsilon
            .or(file.adam_epsilon)
            .unwrap_or(defaults.adam_epsilon),
        stop,
    };

    let base_net = NetConfig::with_out_dim(out_dim);
    let net = NetConfig {
        in_dim: 3,
        out_dim,
        hidden_width: args.width.or(file.width).unwrap_or(base_net.hidden_width),
        num_hidden_layers: args.layers.or(file.layers).unwrap_or(base_net.num_hidden_layers),
        omega0: args.omega0.or(file.omega0).unwrap_or(base_net.omega0),
        latent_dim: args.latent_dim.or(file.latent_dim).unwrap_or(base_net.latent_dim),
    };

    let encoder_widths = match &args.encoder_widths {
        Some(raw) => Some(
            raw.split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| format!("invalid --encoder-widths {raw:?}"))?,
        ),
        None => file.encoder_widths,
    };

    Ok((
        Resolved {
            mode,
            train,
            net,
            encoder_widths,
        },
        file_digest,
    ))
}

pub fn run(args: TrainArgs) -> Result<()> {
    match args.precision {
        Precision::F64 => run_typed::<f64>(args),
        Precision::F32 => run_typed::<f32>(args),
    }
}

fn run_typed<F: Real>(args: TrainArgs) -> Result<()> {
    let paths = collect_volume_paths(&args.volumes)?;
    let mut volumes: Vec<VolumeGrid> = Vec::with_capacity(paths.len());
    let mut channel_names: Vec<String> = Vec::new();
    let mut input_records = Vec::new();
    for path in &paths {
        let input = load_volume(path)?;
        if channel_names.is_empty() {
            channel_names = input.names.clone();
        }
        input_records.push((input.path.clone(), input.sha256.clone()));
        volumes.push(input.volume);
    }
    let out_dim = volumes[0].channels;

    let (resolved, config_digest) = resolve_config(&args, out_dim)?;

    let mut trainer: Trainer<F> = match &args.resume {
        Some(ckpt_path) => {
            let bytes = read_bytes(ckpt_path)?;
            let ckpt = Checkpoint::from_bytes(&bytes)
                .with_context(|| format!("reading checkpoint {}", ckpt_path.display()))?;
            let mut t = Trainer::from_checkpoint(&volumes, &ckpt)?;
            // a larger --steps extends the run; other hyperparameters stay
            // pinned to the checkpoint for reproducibility
            if let Some(steps) = args.steps {
                t.config.steps = steps;
            }
            if resolved.train.stop.is_some() {
                t.config.stop = resolved.train.stop;
            }
            t
        }
        None => match resolved.mode {
            TrainMode::AutoDecoder => {
                Trainer::new_auto_decoder(&volumes, resolved.train.clone(), resolved.net.clone())?
            }
            TrainMode::AutoEncoder => {
                let mut encoder_config =
                    EncoderConfig::with_input(out_dim, resolved.net.latent_dim);
                encoder_config.input_dims = volumes[0].spec.dims;
                if let Some(widths) = &resolved.encoder_widths {
                    encoder_config.conv_widths = widths.clone();
                }
                Trainer::new_auto_encoder(
                    &volumes,
                    resolved.train.clone(),
                    resolved.net.clone(),
                    encoder_config,
                )?
            }
        },
    };

    let start_step = trainer.step;
    let losses = trainer.run()?;
    if let Some((step, psnr)) = trainer.stopped_early {
        println!("stop rule fired at step {step}: mean PSNR {psnr:.2} dB");
    }
    println!(
        "trained {} step(s), final loss {:?}",
        losses.len(),
        losses.last()
    );

    let ckpt = trainer.to_checkpoint(&channel_names);
    write_atomic(&args.checkpoint, &ckpt.to_bytes())?;

    let loss_log = args
        .loss_log
        .clone()
        .unwrap_or_else(|| args.checkpoint.with_extension("loss.csv"));
    let mut csv = String::from("step,loss\n");
    for (offset, loss) in losses.iter().enumerate() {
        let _ = writeln!(csv, "{},{:.17e}", start_step + 1 + offset as u64, loss);
    }
    write_atomic(&loss_log, csv.as_bytes())?;

    let mut manifest = RunManifest::new(
        "train",
        json!({
            "mode": match trainer.mode() {
                TrainMode::AutoDecoder => "auto_decoder",
                TrainMode::AutoEncoder => "auto_encoder",
            },
            "steps": trainer.config.steps,
            "completed_steps": trainer.step,
            "learning_rate": trainer.config.learning_rate,
            "latent_learning_rate": trainer.config.latent_learning_rate,
            "batch_voxels": trainer.config.batch_voxels,
            "seed": trainer.config.seed,
            "latent_init_scale": trainer.config.latent_init_scale,
            "adam_beta1": trainer.config.adam_beta1,
            "adam_beta2": trainer.config.adam_beta2,
            "adam_epsilon": trainer.config.adam_epsilon,
            "psnr_target": trainer.config.stop.map(|s| s.target_psnr),
            "psnr_check_every": trainer.config.stop.map(|s| s.check_every),
            "width": trainer.net_config.hidden_width,
            "layers": trainer.net_config.num_hidden_layers,
            "omega0": trainer.net_config.omega0,
            "latent_dim": trainer.net_config.latent_dim,
            "out_dim": trainer.net_config.out_dim,
            "precision": match args.precision {
                Precision::F64 => "f64",
                Precision::F32 => "f32",
            },
            "resumed_from": args.resume.as_ref().map(|p| p.display().to_string()),
        }),
    );
    for (path, digest) in &input_records {
        manifest.input(path, digest);
    }
    if let Some((path, digest)) = &config_digest {
        manifest.input(path, digest);
    }
    if let Some(resume) = &args.resume {
        let digest = sha256_hex(&read_bytes(resume)?);
        manifest.input(resume, &digest);
    }
    manifest.output(&args.checkpoint);
    manifest.output(&loss_log);
    manifest.write_for(&args.checkpoint)?;
    Ok(())
}

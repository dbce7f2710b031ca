use std::fs;

use anyhow::{anyhow, Context, Result};
use serde_json::json;

use molfield::checkpoint::Checkpoint;
use molfield::eval::{interpolate_latents, parse_latent_table};
use molfield::net::{LatentCode, Real};
use molfield::train::reconstruct;

use crate::commands::reconstruct::{channel_names_for, output_grid};
use crate::manifest::RunManifest;
use crate::util::{read_bytes, sha256_hex, write_volume_file};
use crate::{InterpolateArgs, Precision};

pub fn run(args: InterpolateArgs) -> Result<()> {
    match args.precision {
        Precision::F64 => run_typed::<f64>(args),
        Precision::F32 => run_typed::<f32>(args),
    }
}

fn latent_at<F: Real>(rows: &[Vec<f64>], index: usize, what: &str) -> Result<LatentCode<F>> {
    rows.get(index)
        .map(|row| LatentCode::from_f64_slice(row))
        .ok_or_else(|| anyhow!("{what} {index} out of range: {} latent(s) available", rows.len()))
}

fn run_typed<F: Real>(args: InterpolateArgs) -> Result<()> {
    // fail before any compute if the output directory is unusable
    fs::create_dir_all(&args.output_dir)
        .with_context(|| format!("creating {}", args.output_dir.display()))?;
    let probe = args.output_dir.join(format!(".write-probe.{}", std::process::id()));
    fs::write(&probe, b"")
        .with_context(|| format!("output directory {} is not writable", args.output_dir.display()))?;
    fs::remove_file(&probe).ok();

    let ckpt_bytes = read_bytes(&args.checkpoint)?;
    let ckpt = Checkpoint::from_bytes(&ckpt_bytes)
        .with_context(|| format!("reading checkpoint {}", args.checkpoint.display()))?;
    let net = ckpt.network::<F>()?;

    let mut manifest = RunManifest::new(
        "interpolate",
        json!({
            "index_a": args.index_a,
            "index_b": args.index_b,
            "steps": args.steps,
            "dims": args.dims,
            "precision": match args.precision { Precision::F64 => "f64", Precision::F32 => "f32" },
        }),
    );
    manifest.input(&args.checkpoint, &sha256_hex(&ckpt_bytes));

    let rows: Vec<Vec<f64>> = match &args.latent_file {
        Some(path) => {
            let bytes = read_bytes(path)?;
            manifest.input(path, &sha256_hex(&bytes));
            parse_latent_table(&String::from_utf8_lossy(&bytes))?.1
        }
        None => ckpt
            .latents
            .clone()
            .ok_or_else(|| anyhow!("checkpoint has no latent table; pass --latent-file"))?,
    };
    let a: LatentCode<F> = latent_at(&rows, args.index_a, "--index-a")?;
    let b: LatentCode<F> = latent_at(&rows, args.index_b, "--index-b")?;

    let base_grid = ckpt
        .grid
        .as_ref()
        .map(|g| g.spec.clone())
        .ok_or_else(|| anyhow!("checkpoint carries no training grid; cannot size the output"))?;
    let grid = output_grid(&args.dims, None, &base_grid)?;
    let names = channel_names_for(&ckpt, net.config.out_dim);

    let latents = interpolate_latents(&a, &b, args.steps)?;
    let width = latents.len().to_string().len().max(3);
    for (k, latent) in latents.iter().enumerate() {
        let volume = reconstruct(&net, latent, &grid)?;
        let path = args.output_dir.join(format!("interp_{k:0width$}.mvf"));
        write_volume_file(&path, &volume, &names)?;
        manifest.output(&path);
    }
    manifest.write_for(&args.output_dir)?;
    Ok(())
}

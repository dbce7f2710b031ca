use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use molfield::checkpoint::Checkpoint;
use molfield::eval::{parse_latent_table, psnr, PsnrReport};
use molfield::net::{LatentCode, Real};
use molfield::train::reconstruct;
use molfield::GridSpec;

use crate::manifest::RunManifest;
use crate::util::{load_volume, parse_dims, read_bytes, sha256_hex, write_atomic, write_volume_file};
use crate::{Precision, ReconstructArgs};

pub fn run(args: ReconstructArgs) -> Result<()> {
    match args.precision {
        Precision::F64 => run_typed::<f64>(args),
        Precision::F32 => run_typed::<f32>(args),
    }
}

/// Pick the latent: checkpoint table row, CSV row, or encoded volume.
fn resolve_latent<F: Real>(
    args: &ReconstructArgs,
    ckpt: &Checkpoint,
    manifest: &mut RunManifest,
) -> Result<LatentCode<F>> {
    if let Some(volume_path) = &args.encode_volume {
        let encoder = ckpt
            .encoder::<F>()?
            .ok_or_else(|| anyhow!("checkpoint has no encoder; use --latent-index"))?;
        let input = load_volume(volume_path)?;
        manifest.input(&input.path, &input.sha256);
        let latent = encoder.encode(&input.volume)?;
        return Ok(LatentCode::new(latent));
    }
    let index = args.latent_index.ok_or_else(|| {
        anyhow!("need --latent-index (or --encode-volume for auto-encoder checkpoints)")
    })?;
    if let Some(table_path) = &args.latent_file {
        let bytes = read_bytes(table_path)?;
        manifest.input(table_path, &sha256_hex(&bytes));
        let (_, rows) = parse_latent_table(&String::from_utf8_lossy(&bytes))?;
        let row = rows
            .get(index)
            .ok_or_else(|| anyhow!("latent index {index} out of range: table has {} row(s)", rows.len()))?;
        return Ok(LatentCode::from_f64_slice(row));
    }
    let table = ckpt
        .latents
        .as_ref()
        .ok_or_else(|| anyhow!("checkpoint has no latent table; use --encode-volume or --latent-file"))?;
    let row = table.get(index).ok_or_else(|| {
        anyhow!("latent index {index} out of range: checkpoint has {} latent(s)", table.len())
    })?;
    Ok(LatentCode::from_f64_slice(row))
}

pub fn output_grid(args_dims: &Option<String>, factor: Option<usize>, base: &GridSpec) -> Result<GridSpec> {
    match (args_dims, factor) {
        (Some(_), Some(_)) => bail!("--dims and --factor are mutually exclusive"),
        (Some(raw), None) => {
            let dims = parse_dims(raw)?;
            base.with_dims(dims).map_err(|e| anyhow!(e))
        }
        (None, Some(f)) => {
            if f == 0 {
                bail!("--factor must be >= 1");
            }
            Ok(base.refine(f))
        }
        (None, None) => Ok(base.clone()),
    }
}

pub fn report_lines(report: &PsnrReport) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "psnr_db={}", report.overall_psnr);
    let _ = writeln!(out, "peak={}", report.peak);
    let _ = writeln!(out, "mse={}", report.mse);
    for (i, p) in report.per_channel_psnr.iter().enumerate() {
        let _ = writeln!(out, "channel_{i}_psnr_db={p}");
    }
    out
}

fn json_f64(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

pub fn report_json(report: &PsnrReport) -> serde_json::Value {
    json!({
        "overall_psnr_db": json_f64(report.overall_psnr),
        "per_channel_psnr_db": report.per_channel_psnr.iter().map(|&p| json_f64(p)).collect::<Vec<_>>(),
        "peak": json_f64(report.peak),
        "mse": json_f64(report.mse),
        "per_channel_mse": report.per_channel_mse.iter().map(|&p| json_f64(p)).collect::<Vec<_>>(),
    })
}

pub fn channel_names_for(ckpt: &Checkpoint, out_dim: usize) -> Vec<String> {
    let from_ckpt = ckpt
        .grid
        .as_ref()
        .map(|g| g.channel_names.clone())
        .unwrap_or_default();
    (0..out_dim)
        .map(|i| from_ckpt.get(i).cloned().unwrap_or_else(|| format!("ch{i}")))
        .collect()
}

fn run_typed<F: Real>(args: ReconstructArgs) -> Result<()> {
    let ckpt_bytes = read_bytes(&args.checkpoint)?;
    let ckpt = Checkpoint::from_bytes(&ckpt_bytes)
        .with_context(|| format!("reading checkpoint {}", args.checkpoint.display()))?;
    let net = ckpt.network::<F>()?;

    let mut manifest = RunManifest::new(
        "reconstruct",
        json!({
            "dims": args.dims,
            "factor": args.factor,
            "latent_index": args.latent_index,
            "precision": match args.precision { Precision::F64 => "f64", Precision::F32 => "f32" },
        }),
    );
    manifest.input(&args.checkpoint, &sha256_hex(&ckpt_bytes));

    let base_grid = ckpt
        .grid
        .as_ref()
        .map(|g| g.spec.clone())
        .ok_or_else(|| anyhow!("checkpoint carries no training grid; cannot size the output"))?;
    let grid = output_grid(&args.dims, args.factor, &base_grid)?;

    let latent = resolve_latent::<F>(&args, &ckpt, &mut manifest)?;
    let volume = reconstruct(&net, &latent, &grid)?;
    let names = channel_names_for(&ckpt, net.config.out_dim);
    write_volume_file(&args.output, &volume, &names)?;
    manifest.output(&args.output);

    if let Some(ref_path) = &args.reference {
        let reference = load_volume(ref_path)?;
        manifest.input(&reference.path, &reference.sha256);
        let report = psnr(&reference.volume, &volume)?;
        print!("{}", report_lines(&report));
        let report_path = report_path_for(&args.output);
        write_atomic(
            &report_path,
            serde_json::to_string_pretty(&report_json(&report))?.as_bytes(),
        )?;
        manifest.output(&report_path);
    }

    manifest.write_for(&args.output)?;
    Ok(())
}

pub fn report_path_for(output: &Path) -> std::path::PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".psnr.json");
    output.with_file_name(name)
}

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use molfield::checkpoint::Checkpoint;
use molfield::elements::ElementTable;
use molfield::eval::export_latents;
use molfield::io::ParseOptions;
use molfield::net::LatentCode;
use molfield::volio::export_cube;
use molfield::Molecule;

use crate::manifest::RunManifest;
use crate::util::{collect_volume_paths, load_molecule, load_volume, read_bytes, sha256_hex, write_atomic};
use crate::{ExportArgs, ExportFormat};

pub fn run(args: ExportArgs) -> Result<()> {
    match args.format {
        ExportFormat::Cube => run_cube(args),
        ExportFormat::Latents => run_latents(args),
    }
}

fn run_cube(args: ExportArgs) -> Result<()> {
    let table = ElementTable::default();
    let input = load_volume(&args.input)?;
    let mut manifest = RunManifest::new(
        "export",
        json!({ "format": "cube", "channel": args.channel }),
    );
    manifest.input(&input.path, &input.sha256);

    let molecule = match &args.molecule {
        Some(path) => {
            let loaded = load_molecule(
                path,
                args.molecule_format.as_deref(),
                &table,
                &ParseOptions::default(),
            )?;
            manifest.input(&loaded.path, &sha256_hex(&loaded.bytes));
            loaded.molecule
        }
        None => Molecule::new("no atoms"),
    };

    let channel_name = input
        .names
        .get(args.channel)
        .cloned()
        .unwrap_or_else(|| format!("channel {}", args.channel));
    let comment = format!("molfield volume export: {channel_name}");
    let cube = export_cube(&input.volume, args.channel, &molecule, &table, &comment)
        .with_context(|| format!("exporting channel {} of {}", args.channel, args.input.display()))?;
    write_atomic(&args.output, cube.as_bytes())?;
    manifest.output(&args.output);
    manifest.write_for(&args.output)?;
    Ok(())
}

fn run_latents(args: ExportArgs) -> Result<()> {
    let bytes = read_bytes(&args.input)?;
    let ckpt = Checkpoint::from_bytes(&bytes)
        .with_context(|| format!("reading checkpoint {}", args.input.display()))?;
    let mut manifest = RunManifest::new("export", json!({ "format": "latents" }));
    manifest.input(&args.input, &sha256_hex(&bytes));

    let (latents, names): (Vec<LatentCode<f64>>, Vec<String>) = match &ckpt.latents {
        Some(rows) => {
            if !args.volumes.is_empty() {
                bail!("checkpoint already has a latent table; --volumes only applies to auto-encoder checkpoints");
            }
            let latents = rows.iter().map(|r| LatentCode::from_f64_slice(r)).collect();
            let names = (0..rows.len()).map(|i| i.to_string()).collect();
            (latents, names)
        }
        None => {
            let encoder = ckpt
                .encoder::<f64>()?
                .ok_or_else(|| anyhow!("checkpoint has neither latents nor an encoder"))?;
            if args.volumes.is_empty() {
                bail!("auto-encoder checkpoint: pass --volumes to encode");
            }
            let paths = collect_volume_paths(&args.volumes)?;
            let mut latents = Vec::with_capacity(paths.len());
            let mut names = Vec::with_capacity(paths.len());
            for path in &paths {
                let input = load_volume(path)?;
                manifest.input(&input.path, &input.sha256);
                let latent = encoder.encode(&input.volume)?;
                latents.push(LatentCode::new(latent));
                names.push(
                    path.file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| path.display().to_string()),
                );
            }
            (latents, names)
        }
    };

    let table = export_latents(&latents, &names)?;
    write_atomic(&args.output, table.as_bytes())?;
    manifest.output(&args.output);
    manifest.write_for(&args.output)?;
    Ok(())
}

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use molfield::elements::ElementTable;
use molfield::field::{auto_grid, centered_grid, sample_grid, shared_extent, ChannelSpec};
use molfield::io::ReaderRegistry;

use crate::manifest::RunManifest;
use crate::util::{
    load_molecule, parse_dims, parse_options_from_flags, read_bytes, sha256_hex,
    write_volume_file, MoleculeInput,
};
use crate::SampleArgs;

fn print_stats(label: &str, volume: &molfield::VolumeGrid, names: &[String]) {
    for (c, name) in names.iter().enumerate() {
        let data = volume.channel_data(c);
        let min = data.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("{label} channel {c} ({name}): min {min:.6} max {max:.6}");
    }
}

pub fn run(args: SampleArgs) -> Result<()> {
    let dims = parse_dims(&args.dims)?;
    let options = parse_options_from_flags(args.include_waters, args.strict_elements, args.sdf_record);

    let mut table = ElementTable::default();
    let mut override_digest = None;
    if let Some(path) = &args.element_overrides {
        let bytes = read_bytes(path)?;
        table
            .apply_overrides(&String::from_utf8_lossy(&bytes))
            .with_context(|| format!("applying overrides from {}", path.display()))?;
        override_digest = Some((path.clone(), sha256_hex(&bytes)));
    }

    let (mut spec, channels_digest) = match &args.channels {
        Some(path) => {
            let bytes = read_bytes(path)?;
            let spec = ChannelSpec::parse(&String::from_utf8_lossy(&bytes))
                .with_context(|| format!("parsing channel config {}", path.display()))?;
            (spec, Some((path.clone(), sha256_hex(&bytes))))
        }
        None => (ChannelSpec::default_single(), None),
    };
    if let Some(beta) = args.beta {
        spec.beta = beta;
    }
    let names = spec.channel_names();

    let mut manifest = RunManifest::new(
        "sample",
        json!({
            "dims": dims,
            "padding": args.padding,
            "beta": spec.beta,
            "channels": spec.to_config_text(),
            "cull_epsilon": args.cull_epsilon,
            "include_waters": args.include_waters,
            "strict_elements": args.strict_elements,
            "sdf_record": args.sdf_record,
            "format": args.format,
        }),
    );
    if let Some((path, digest)) = &channels_digest {
        manifest.input(path, digest);
    }
    if let Some((path, digest)) = &override_digest {
        manifest.input(path, digest);
    }

    if args.input.is_dir() {
        sample_directory(&args, dims, &options, &table, &spec, &names, manifest)
    } else {
        let input = load_molecule(&args.input, args.format.as_deref(), &table, &options)?;
        manifest.input(&input.path, &sha256_hex(&input.bytes));
        let grid = auto_grid(&input.molecule, dims, args.padding)?;
        let volume = sample_grid(&input.molecule, &spec, &table, &grid, args.cull_epsilon)?;
        print_stats(&input.molecule.name, &volume, &names);
        write_volume_file(&args.output, &volume, &names)?;
        manifest.output(&args.output);
        manifest.write_for(&args.output)?;
        Ok(())
    }
}

/// Directory mode: every structure file sampled onto its own grid, all
/// grids sharing one cubic extent (the maximum padded extent over the set)
/// so volumes live on a common world scale.
fn sample_directory(
    args: &SampleArgs,
    dims: [usize; 3],
    options: &molfield::io::ParseOptions,
    table: &ElementTable,
    spec: &ChannelSpec,
    names: &[String],
    mut manifest: RunManifest,
) -> Result<()> {
    let registry = ReaderRegistry::with_builtin();
    let mut paths: Vec<PathBuf> = fs::read_dir(&args.input)
        .with_context(|| format!("listing {}", args.input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && registry.for_path(p).is_some())
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!(
            "no structure files with known extensions in {}",
            args.input.display()
        );
    }

    let inputs: Result<Vec<MoleculeInput>> = paths
        .iter()
        .map(|p| load_molecule(p, args.format.as_deref(), table, options))
        .collect();
    let inputs = inputs?;
    for input in &inputs {
        manifest.input(&input.path, &sha256_hex(&input.bytes));
    }

    let molecules: Vec<_> = inputs.iter().map(|i| i.molecule.clone()).collect();
    let extent = shared_extent(&molecules, args.padding)?;
    println!("shared cubic extent over {} molecules: {extent:.4} A", molecules.len());

    fs::create_dir_all(&args.output)
        .with_context(|| format!("creating {}", args.output.display()))?;
    for input in &inputs {
        let grid = centered_grid(&input.molecule, dims, extent)?;
        let volume = sample_grid(&input.molecule, spec, table, &grid, args.cull_epsilon)?;
        print_stats(&input.molecule.name, &volume, names);
        let stem = input
            .path
            .file_stem()
            .ok_or_else(|| anyhow!("no file stem for {}", input.path.display()))?;
        let out = args.output.join(Path::new(stem)).with_extension("mvf");
        write_volume_file(&out, &volume, names)?;
        manifest.output(&out);
    }
    manifest.write_for(&args.output)?;
    Ok(())
}

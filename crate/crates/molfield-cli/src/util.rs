//! Shared plumbing: atomic writes, input digests, molecule/volume loading.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};

use molfield::elements::ElementTable;
use molfield::io::{ParseOptions, ReaderRegistry, UnknownElements};
use molfield::molecule::Molecule;
use molfield::volio::{read_volume, write_volume};
use molfield::VolumeGrid;

/// Write through a temp file in the same directory plus rename, so a
/// failing command never leaves a partial output at the target path.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = {
        let mut name = path
            .file_name()
            .ok_or_else(|| anyhow!("output path {} has no file name", path.display()))?
            .to_os_string();
        name.push(format!(".tmp.{}", std::process::id()));
        match dir {
            Some(d) => d.join(name),
            None => PathBuf::from(name),
        }
    };
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| {
        let _ = fs::remove_file(&tmp);
        format!("renaming into place: {}", path.display())
    })?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

/// Parse "32" as a cube or "32,16,8" as per-axis dims.
pub fn parse_dims(raw: &str) -> Result<[usize; 3]> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    let nums: Result<Vec<usize>, _> = parts.iter().map(|p| p.parse::<usize>()).collect();
    let nums = nums.with_context(|| format!("invalid dims {raw:?}"))?;
    match nums.as_slice() {
        [n] => Ok([*n, *n, *n]),
        [a, b, c] => Ok([*a, *b, *c]),
        _ => bail!("dims must be one value or three comma-separated values, got {raw:?}"),
    }
}

pub struct MoleculeInput {
    pub molecule: Molecule,
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

pub fn load_molecule(
    path: &Path,
    format: Option<&str>,
    table: &ElementTable,
    options: &ParseOptions,
) -> Result<MoleculeInput> {
    let registry = ReaderRegistry::with_builtin();
    let reader = match format {
        Some(name) => registry
            .by_name(name)
            .ok_or_else(|| anyhow!("unknown format {name:?}; known: {:?}", registry.names()))?,
        None => registry.for_path(path).ok_or_else(|| {
            anyhow!(
                "cannot infer format of {} (known extensions: xyz, pdb, ent, sdf, mol); use --format",
                path.display()
            )
        })?,
    };
    let bytes = read_bytes(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let mut molecule = reader
        .parse(&text, table, options)
        .with_context(|| format!("parsing {} as {}", path.display(), reader.format_name()))?;
    if molecule.name.is_empty() {
        molecule.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    molecule.source = path.display().to_string();
    Ok(MoleculeInput {
        molecule,
        path: path.to_path_buf(),
        bytes,
    })
}

pub fn parse_options_from_flags(
    include_waters: bool,
    strict_elements: bool,
    sdf_record: usize,
) -> ParseOptions {
    ParseOptions {
        unknown_elements: if strict_elements {
            UnknownElements::Reject
        } else {
            UnknownElements::Keep
        },
        exclude_waters: !include_waters,
        sdf_record,
    }
}

pub struct VolumeInput {
    pub volume: VolumeGrid,
    pub names: Vec<String>,
    pub path: PathBuf,
    pub sha256: String,
}

pub fn load_volume(path: &Path) -> Result<VolumeInput> {
    let bytes = read_bytes(path)?;
    let (volume, names) =
        read_volume(&bytes).with_context(|| format!("reading volume {}", path.display()))?;
    Ok(VolumeInput {
        volume,
        names,
        path: path.to_path_buf(),
        sha256: sha256_hex(&bytes),
    })
}

/// Expand a volume argument list: a single directory means every `*.mvf`
/// inside, sorted by file name for a stable order.
pub fn collect_volume_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    if inputs.len() == 1 && inputs[0].is_dir() {
        let mut paths: Vec<PathBuf> = fs::read_dir(&inputs[0])
            .with_context(|| format!("listing {}", inputs[0].display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().map(|e| e == "mvf").unwrap_or(false))
            .collect();
        paths.sort();
        if paths.is_empty() {
            bail!("no .mvf volumes found in {}", inputs[0].display());
        }
        Ok(paths)
    } else {
        Ok(inputs.to_vec())
    }
}

pub fn write_volume_file(path: &Path, volume: &VolumeGrid, names: &[String]) -> Result<String> {
    let bytes = write_volume(volume, names)?;
    write_atomic(path, &bytes)?;
    Ok(sha256_hex(&bytes))
}

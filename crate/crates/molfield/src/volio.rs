//! Volume persistence: the MVF1 binary format and Gaussian cube export.
//!
//! MVF1 layout (all integers little-endian):
//!
//! ```text
//! magic   4 bytes  "MVF1"
//! version u32      1
//! dims    3 x u32  nx, ny, nz
//! chans   u32      d
//! origin  3 x f64  world origin, Angstrom
//! spacing 3 x f64  per-axis step, Angstrom
//! names   d x (u32 length + UTF-8 bytes)
//! data    d*nx*ny*nz x f32, channel-major then x-fastest
//! ```
//!
//! Values are stored as binary32; internal compute stays binary64, so a
//! write/read round trip is exact at binary32 quantization.

use thiserror::Error;

use crate::elements::ElementTable;
use crate::field::{GridSpec, VolumeGrid};
use crate::molecule::Molecule;

pub const MVF_MAGIC: &[u8; 4] = b"MVF1";
pub const MVF_VERSION: u32 = 1;

/// 1 Angstrom in Bohr, the conversion used by cube-format tooling.
pub const ANGSTROM_TO_BOHR: f64 = 1.8897259886;

#[derive(Debug, Error)]
pub enum VolumeIoError {
    #[error("bad magic: expected \"MVF1\"")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u32),
    #[error("truncated stream: needed {needed} more byte(s) at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("channel name count {names} does not match channel count {channels}")]
    NameCount { names: usize, channels: usize },
    #[error("invalid volume: {0}")]
    BadVolume(String),
    #[error("channel index {index} out of range ({channels} channels)")]
    BadChannel { index: usize, channels: usize },
    #[error("cube export: unknown element {0:?} (no atomic number)")]
    UnknownElement(String),
    #[error("non-UTF8 channel name")]
    BadName,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], VolumeIoError> {
        if self.offset + n > self.bytes.len() {
            return Err(VolumeIoError::Truncated {
                offset: self.offset,
                needed: self.offset + n - self.bytes.len(),
            });
        }
        let slice = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, VolumeIoError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, VolumeIoError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, VolumeIoError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Serialize a volume with channel names. Byte-exact per the format above.
pub fn write_volume(volume: &VolumeGrid, names: &[String]) -> Result<Vec<u8>, VolumeIoError> {
    if names.len() != volume.channels {
        return Err(VolumeIoError::NameCount {
            names: names.len(),
            channels: volume.channels,
        });
    }
    let mut out = Vec::with_capacity(72 + volume.data.len() * 4);
    out.extend_from_slice(MVF_MAGIC);
    out.extend_from_slice(&MVF_VERSION.to_le_bytes());
    for axis in 0..3 {
        out.extend_from_slice(&(volume.spec.dims[axis] as u32).to_le_bytes());
    }
    out.extend_from_slice(&(volume.channels as u32).to_le_bytes());
    for axis in 0..3 {
        out.extend_from_slice(&volume.spec.origin[axis].to_le_bytes());
    }
    for axis in 0..3 {
        out.extend_from_slice(&volume.spec.spacing[axis].to_le_bytes());
    }
    for name in names {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    for &v in &volume.data {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

/// Inverse of [`write_volume`] up to binary32 quantization.
pub fn read_volume(bytes: &[u8]) -> Result<(VolumeGrid, Vec<String>), VolumeIoError> {
    let mut cur = Cursor { bytes, offset: 0 };
    if cur.take(4)? != MVF_MAGIC {
        return Err(VolumeIoError::BadMagic);
    }
    let version = cur.u32()?;
    if version != MVF_VERSION {
        return Err(VolumeIoError::BadVersion(version));
    }
    let dims = [cur.u32()? as usize, cur.u32()? as usize, cur.u32()? as usize];
    let channels = cur.u32()? as usize;
    let origin = [cur.f64()?, cur.f64()?, cur.f64()?];
    let spacing = [cur.f64()?, cur.f64()?, cur.f64()?];
    let mut names = Vec::with_capacity(channels);
    for _ in 0..channels {
        let len = cur.u32()? as usize;
        let raw = cur.take(len)?;
        names.push(String::from_utf8(raw.to_vec()).map_err(|_| VolumeIoError::BadName)?);
    }
    let spec = GridSpec::new(dims, origin, spacing).map_err(VolumeIoError::BadVolume)?;
    let count = channels * spec.voxel_count();
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        data.push(cur.f32()? as f64);
    }
    let volume = VolumeGrid::new(spec, channels, data).map_err(VolumeIoError::BadVolume)?;
    Ok((volume, names))
}

/// C-style scientific notation with a signed two-digit exponent, the layout
/// cube readers expect (`1.23456E+02`).
fn cube_value(v: f64) -> String {
    let formatted = format!("{v:.5E}");
    // Rust prints "1.23456E2" / "1.23456E-2"; normalize the exponent field.
    let (mantissa, exp) = formatted.split_once('E').expect("always has exponent");
    let (sign, digits) = match exp.strip_prefix('-') {
        Some(rest) => ('-', rest),
        None => ('+', exp),
    };
    format!("{mantissa}E{sign}{digits:0>2}")
}

/// Export one channel as a Gaussian cube file. Positions and grid geometry
/// convert from Angstrom to Bohr; data is written x-outer / z-inner, six
/// values per line.
pub fn export_cube(
    volume: &VolumeGrid,
    channel: usize,
    molecule: &Molecule,
    table: &ElementTable,
    comment: &str,
) -> Result<String, VolumeIoError> {
    use std::fmt::Write;
    if channel >= volume.channels {
        return Err(VolumeIoError::BadChannel {
            index: channel,
            channels: volume.channels,
        });
    }
    let spec = &volume.spec;
    let mut out = String::new();
    let _ = writeln!(out, "{comment}");
    let _ = writeln!(out, "channel {channel} of {}", volume.channels);
    let _ = writeln!(
        out,
        "{:5} {:11.6} {:11.6} {:11.6}",
        molecule.atoms.len(),
        spec.origin[0] * ANGSTROM_TO_BOHR,
        spec.origin[1] * ANGSTROM_TO_BOHR,
        spec.origin[2] * ANGSTROM_TO_BOHR
    );
    let axes = [
        [spec.spacing[0], 0.0, 0.0],
        [0.0, spec.spacing[1], 0.0],
        [0.0, 0.0, spec.spacing[2]],
    ];
    for (axis, step) in axes.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:5} {:11.6} {:11.6} {:11.6}",
            spec.dims[axis],
            step[0] * ANGSTROM_TO_BOHR,
            step[1] * ANGSTROM_TO_BOHR,
            step[2] * ANGSTROM_TO_BOHR
        );
    }
    for atom in &molecule.atoms {
        let z = table
            .atomic_number(&atom.element)
            .map_err(|_| VolumeIoError::UnknownElement(atom.element.clone()))?;
        let _ = writeln!(
            out,
            "{:5} {:11.6} {:11.6} {:11.6} {:11.6}",
            z,
            0.0,
            atom.position[0] * ANGSTROM_TO_BOHR,
            atom.position[1] * ANGSTROM_TO_BOHR,
            atom.position[2] * ANGSTROM_TO_BOHR
        );
    }

    let [nx, ny, nz] = spec.dims;
    let mut on_line = 0usize;
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let value = volume.data[volume.index(channel, i, j, k)];
                let _ = write!(out, " {}", cube_value(value));
                on_line += 1;
                if on_line == 6 {
                    out.push('\n');
                    on_line = 0;
                }
            }
            // cube convention: each x,y scanline starts a fresh line
            if on_line != 0 {
                out.push('\n');
                on_line = 0;
            }
        }
    }
    Ok(out)
}

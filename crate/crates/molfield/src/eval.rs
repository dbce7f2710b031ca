//! Reconstruction quality metrics, super-resolution sampling, and latent
//! table tooling.

use ndarray::Array1;
use thiserror::Error;

use crate::field::{GridSpec, VolumeGrid};
use crate::net::{LatentCode, ModulatedField, NetError, Real};
use crate::train::reconstruct;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("shape mismatch: reference is {ref_channels} x {ref_dims:?}, test is {test_channels} x {test_dims:?}")]
    ShapeMismatch {
        ref_dims: [usize; 3],
        ref_channels: usize,
        test_dims: [usize; 3],
        test_channels: usize,
    },
    #[error("latent dims differ: {0} vs {1}")]
    LatentDimMismatch(usize, usize),
    #[error("{latents} latents but {names} names")]
    NameCountMismatch { latents: usize, names: usize },
    #[error("latent name {0:?} may not contain commas or line breaks")]
    BadName(String),
    #[error("interpolation needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
    #[error("latent table line {line}: {message}")]
    BadTable { line: usize, message: String },
    #[error(transparent)]
    Net(#[from] NetError),
}

/// PSNR of a test volume against a reference. The peak is always the
/// maximum of the *reference* grid (recorded in the report), so the metric
/// is not symmetric in its arguments.
#[derive(Debug, Clone)]
pub struct PsnrReport {
    pub overall_psnr: f64,
    pub per_channel_psnr: Vec<f64>,
    /// Value used as MAX in 10*log10(peak^2 / mse).
    pub peak: f64,
    pub mse: f64,
    pub per_channel_mse: Vec<f64>,
}

fn psnr_db(peak: f64, mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// Mean squared error over all voxels and channels, peak from `reference`.
pub fn psnr(reference: &VolumeGrid, test: &VolumeGrid) -> Result<PsnrReport, EvalError> {
    if reference.spec.dims != test.spec.dims || reference.channels != test.channels {
        return Err(EvalError::ShapeMismatch {
            ref_dims: reference.spec.dims,
            ref_channels: reference.channels,
            test_dims: test.spec.dims,
            test_channels: test.channels,
        });
    }
    let peak = reference.max_value();
    let voxels = reference.spec.voxel_count();
    let mut per_channel_mse = Vec::with_capacity(reference.channels);
    let mut total = 0.0f64;
    for c in 0..reference.channels {
        let a = reference.channel_data(c);
        let b = test.channel_data(c);
        let mut acc = 0.0f64;
        for (x, y) in a.iter().zip(b.iter()) {
            let d = x - y;
            acc += d * d;
        }
        total += acc;
        per_channel_mse.push(acc / voxels as f64);
    }
    let mse = total / (voxels * reference.channels) as f64;
    Ok(PsnrReport {
        overall_psnr: psnr_db(peak, mse),
        per_channel_psnr: per_channel_mse.iter().map(|&m| psnr_db(peak, m)).collect(),
        peak,
        mse,
        per_channel_mse,
    })
}

/// Evaluate the network on a `factor`-times denser grid spanning the same
/// world bounds as `base_grid`. Factor 1 reproduces [`reconstruct`] exactly.
pub fn superresolve<F: Real>(
    net: &ModulatedField<F>,
    latent: &LatentCode<F>,
    base_grid: &GridSpec,
    factor: usize,
) -> Result<VolumeGrid, NetError> {
    reconstruct(net, latent, &base_grid.refine(factor))
}

/// Linear interpolation between two latents: entries (1 - t) a + t b for
/// t = k/(steps-1). Endpoints are exactly `a` and `b`.
pub fn interpolate_latents<F: Real>(
    a: &LatentCode<F>,
    b: &LatentCode<F>,
    steps: usize,
) -> Result<Vec<LatentCode<F>>, EvalError> {
    if a.dim() != b.dim() {
        return Err(EvalError::LatentDimMismatch(a.dim(), b.dim()));
    }
    if steps < 2 {
        return Err(EvalError::TooFewSteps(steps));
    }
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let t = F::from_f64(k as f64 / (steps - 1) as f64);
        let one_minus = F::one() - t;
        let values: Array1<F> = a
            .values
            .iter()
            .zip(b.values.iter())
            .map(|(&av, &bv)| one_minus * av + t * bv)
            .collect();
        out.push(LatentCode::new(values));
    }
    Ok(out)
}

/// Comma-delimited latent table: header `name,z0,...`, one row per latent,
/// values printed with 17 significant digits so binary64 round-trips.
pub fn export_latents<F: Real>(
    latents: &[LatentCode<F>],
    names: &[String],
) -> Result<String, EvalError> {
    if latents.len() != names.len() {
        return Err(EvalError::NameCountMismatch {
            latents: latents.len(),
            names: names.len(),
        });
    }
    for name in names {
        if name.contains(',') || name.contains('\n') || name.contains('\r') {
            return Err(EvalError::BadName(name.clone()));
        }
    }
    use std::fmt::Write;
    let mut out = String::from("name");
    if let Some(first) = latents.first() {
        for i in 0..first.dim() {
            let _ = write!(out, ",z{i}");
        }
    }
    out.push('\n');
    for (latent, name) in latents.iter().zip(names) {
        let _ = write!(out, "{name}");
        for v in latent.values.iter() {
            let _ = write!(out, ",{:.16e}", v.into_f64());
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parse a table produced by [`export_latents`].
pub fn parse_latent_table(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), EvalError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(EvalError::BadTable {
        line: 1,
        message: "empty table".into(),
    })?;
    let dim = header.split(',').count() - 1;
    let mut names = Vec::new();
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let name = fields.next().unwrap_or("").to_string();
        let values: Result<Vec<f64>, _> = fields.map(|f| f.parse::<f64>()).collect();
        let values = values.map_err(|e| EvalError::BadTable {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if values.len() != dim {
            return Err(EvalError::BadTable {
                line: idx + 1,
                message: format!("expected {dim} values, got {}", values.len()),
            });
        }
        names.push(name);
        rows.push(values);
    }
    Ok((names, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn flat_volume(dims: [usize; 3], channels: usize, value: f64) -> VolumeGrid {
        let spec = GridSpec::unit(dims);
        let len = channels * spec.voxel_count();
        VolumeGrid::new(spec, channels, vec![value; len]).unwrap()
    }

    #[test]
    fn identical_grids_have_infinite_psnr() {
        let a = flat_volume([2, 2, 2], 1, 0.7);
        let report = psnr(&a, &a.clone()).unwrap();
        assert!(report.overall_psnr.is_infinite());
        assert_eq!(report.mse, 0.0);
    }

    #[test]
    fn ones_vs_point_nine_is_twenty_db() {
        let a = flat_volume([4, 4, 4], 2, 1.0);
        let b = flat_volume([4, 4, 4], 2, 0.9);
        let report = psnr(&a, &b).unwrap();
        assert_eq!(report.peak, 1.0);
        assert!((report.mse - 0.01).abs() < 1e-15);
        assert!((report.overall_psnr - 20.0).abs() < 1e-9);
    }

    #[test]
    fn matches_independent_recomputation() {
        // brute-force oracle over a random 4^3 pair
        let spec = GridSpec::unit([4, 4, 4]);
        let n = 2 * spec.voxel_count();
        let mut state = 0x243F6A8885A308D3u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let a_data: Vec<f64> = (0..n).map(|_| next() * 3.0).collect();
        let b_data: Vec<f64> = (0..n).map(|_| next() * 3.0).collect();
        let a = VolumeGrid::new(spec.clone(), 2, a_data.clone()).unwrap();
        let b = VolumeGrid::new(spec, 2, b_data.clone()).unwrap();

        let mut peak = f64::NEG_INFINITY;
        for &v in &a_data {
            peak = peak.max(v);
        }
        let mut mse = 0.0;
        for i in 0..n {
            mse += (a_data[i] - b_data[i]).powi(2);
        }
        mse /= n as f64;
        let expected = 10.0 * (peak * peak / mse).log10();

        let report = psnr(&a, &b).unwrap();
        assert!((report.overall_psnr - expected).abs() < 1e-10);
        assert!((report.mse - mse).abs() < 1e-10);
    }

    #[test]
    fn peak_comes_from_first_argument() {
        let mut a = flat_volume([2, 2, 2], 1, 1.0);
        a.data[0] = 5.0;
        let b = flat_volume([2, 2, 2], 1, 0.5);
        let ab = psnr(&a, &b).unwrap();
        let ba = psnr(&b, &a).unwrap();
        assert_eq!(ab.peak, 5.0);
        assert_eq!(ba.peak, 0.5);
        assert_ne!(ab.overall_psnr, ba.overall_psnr);
    }

    #[test]
    fn psnr_decreases_with_noise_amplitude() {
        let reference = flat_volume([4, 4, 4], 1, 1.0);
        let mut state = 99u64;
        let mut noise_unit: Vec<f64> = Vec::new();
        for _ in 0..reference.data.len() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            noise_unit.push(((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5);
        }
        let mut last = f64::INFINITY;
        for amp_step in 1..5 {
            let amp = amp_step as f64 * 0.05;
            let mut test = reference.clone();
            for (v, n) in test.data.iter_mut().zip(&noise_unit) {
                *v += amp * n;
            }
            let report = psnr(&reference, &test).unwrap();
            assert!(report.overall_psnr < last);
            last = report.overall_psnr;
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = flat_volume([2, 2, 2], 1, 1.0);
        let b = flat_volume([2, 2, 3], 1, 1.0);
        assert!(psnr(&a, &b).is_err());
        let c = flat_volume([2, 2, 2], 2, 1.0);
        assert!(psnr(&a, &c).is_err());
    }

    #[test]
    fn interpolation_endpoints_are_exact() {
        let a: LatentCode<f64> = LatentCode::new(array![0.1, -0.7, 3.3]);
        let b: LatentCode<f64> = LatentCode::new(array![2.0, 0.25, -1.5]);
        let steps = interpolate_latents(&a, &b, 2).unwrap();
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[0], a);
        assert_eq!(steps[1], b);

        let three = interpolate_latents(&a, &b, 3).unwrap();
        for i in 0..3 {
            let mid = 0.5 * (a.values[i] + b.values[i]);
            assert!((three[1].values[i] - mid).abs() < 1e-15);
        }
    }

    #[test]
    fn interpolating_a_with_itself_is_constant() {
        let a: LatentCode<f64> = LatentCode::new(array![1.0, 2.0]);
        let steps = interpolate_latents(&a, &a.clone(), 5).unwrap();
        for s in steps {
            assert_eq!(s, a);
        }
    }

    #[test]
    fn interpolation_errors() {
        let a: LatentCode<f64> = LatentCode::new(array![1.0, 2.0]);
        let b: LatentCode<f64> = LatentCode::new(array![1.0]);
        assert!(matches!(
            interpolate_latents(&a, &b, 4).unwrap_err(),
            EvalError::LatentDimMismatch(2, 1)
        ));
        let c: LatentCode<f64> = LatentCode::new(array![0.0, 0.0]);
        assert!(matches!(
            interpolate_latents(&a, &c, 1).unwrap_err(),
            EvalError::TooFewSteps(1)
        ));
    }

    #[test]
    fn empty_latent_list_gives_header_only() {
        let table = export_latents::<f64>(&[], &[]).unwrap();
        assert_eq!(table, "name\n");
    }

    #[test]
    fn single_latent_row_shape() {
        let latents = vec![LatentCode::<f64>::new(array![0.5, -0.25])];
        let names = vec!["mol0".to_string()];
        let table = export_latents(&latents, &names).unwrap();
        let mut lines = table.lines();
        assert_eq!(lines.next(), Some("name,z0,z1"));
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 3);
        assert!(row.starts_with("mol0,"));
    }

    #[test]
    fn table_roundtrip_is_bit_exact() {
        let latents = vec![
            LatentCode::<f64>::new(array![std::f64::consts::PI, -1.0 / 3.0, 1e-300]),
            LatentCode::<f64>::new(array![0.1 + 0.2, f64::MIN_POSITIVE, 42.0]),
        ];
        let names = vec!["a".to_string(), "b".to_string()];
        let table = export_latents(&latents, &names).unwrap();
        let (parsed_names, rows) = parse_latent_table(&table).unwrap();
        assert_eq!(parsed_names, names);
        for (row, latent) in rows.iter().zip(&latents) {
            for (parsed, original) in row.iter().zip(latent.values.iter()) {
                assert_eq!(parsed.to_bits(), original.to_bits());
            }
        }
    }

    #[test]
    fn name_count_mismatch_and_bad_names() {
        let latents = vec![LatentCode::<f64>::new(array![1.0])];
        assert!(matches!(
            export_latents(&latents, &[]).unwrap_err(),
            EvalError::NameCountMismatch { latents: 1, names: 0 }
        ));
        assert!(matches!(
            export_latents(&latents, &["a,b".to_string()]).unwrap_err(),
            EvalError::BadName(_)
        ));
    }
}

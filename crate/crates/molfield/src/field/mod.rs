//! Multi-channel molecular scalar fields.
//!
//! Each channel maps a subset of atoms to a sum of radial basis
//! contributions: an atom at distance `r` from the sample point adds
//! `exp(-beta * (r^2 / r_a^2 - 1))`, where `r_a` is the atom's radius
//! parameter (van der Waals radius by default, or a tabulated property in
//! property-as-radius mode). A channel that matches no atoms is exactly 0.

mod channels;
mod grid;

pub use channels::{Channel, ChannelSpec, WeightMode, DEFAULT_BETA};
pub use grid::{GridSpec, VolumeGrid};

use crate::elements::ElementTable;
use crate::molecule::Molecule;

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("molecule has no atoms")]
    EmptyMolecule,
    #[error("channel {channel:?}: unknown element {element:?}")]
    UnknownElement { channel: String, element: String },
    #[error("channel {channel:?}: element {element:?} has non-positive radius parameter {value}")]
    NonPositiveRadius {
        channel: String,
        element: String,
        value: f64,
    },
    #[error("channel config line {line}: {message}")]
    BadChannelConfig { line: usize, message: String },
    #[error("{0}")]
    BadSpec(String),
}

/// Atoms resolved against a channel: positions plus 1/r_a^2, ready to sum.
struct ResolvedChannel {
    atoms: Vec<([f64; 3], f64)>,
    /// Squared cull distance per atom when culling is enabled.
    cull_d2: Vec<f64>,
}

struct ResolvedField {
    channels: Vec<ResolvedChannel>,
    beta: f64,
}

fn resolve(
    molecule: &Molecule,
    spec: &ChannelSpec,
    table: &ElementTable,
    cull_epsilon: Option<f64>,
) -> Result<ResolvedField, FieldError> {
    if molecule.is_empty() {
        return Err(FieldError::EmptyMolecule);
    }
    spec.validate().map_err(FieldError::BadSpec)?;
    let mut channels = Vec::with_capacity(spec.channels.len());
    for channel in &spec.channels {
        let mut atoms = Vec::new();
        let mut cull_d2 = Vec::new();
        for atom in &molecule.atoms {
            if !channel.matches(atom) {
                continue;
            }
            let kind = channel.radius_source();
            let r_a = table.lookup_property(&atom.element, kind).map_err(|_| {
                FieldError::UnknownElement {
                    channel: channel.name.clone(),
                    element: atom.element.clone(),
                }
            })?;
            if r_a <= 0.0 {
                return Err(FieldError::NonPositiveRadius {
                    channel: channel.name.clone(),
                    element: atom.element.clone(),
                    value: r_a,
                });
            }
            atoms.push((atom.position, 1.0 / (r_a * r_a)));
            if let Some(eps) = cull_epsilon {
                let d = cull_radius(spec.beta, r_a, eps);
                cull_d2.push(d * d);
            }
        }
        channels.push(ResolvedChannel { atoms, cull_d2 });
    }
    Ok(ResolvedField {
        channels,
        beta: spec.beta,
    })
}

impl ResolvedField {
    #[inline]
    fn eval_channel(&self, channel: &ResolvedChannel, point: [f64; 3]) -> f64 {
        let mut sum = 0.0;
        if channel.cull_d2.is_empty() {
            for &(pos, inv_ra2) in &channel.atoms {
                let dx = pos[0] - point[0];
                let dy = pos[1] - point[1];
                let dz = pos[2] - point[2];
                let d2 = dx * dx + dy * dy + dz * dz;
                sum += (-self.beta * (d2 * inv_ra2 - 1.0)).exp();
            }
        } else {
            for (&(pos, inv_ra2), &limit) in channel.atoms.iter().zip(&channel.cull_d2) {
                let dx = pos[0] - point[0];
                let dy = pos[1] - point[1];
                let dz = pos[2] - point[2];
                let d2 = dx * dx + dy * dy + dz * dz;
                if d2 > limit {
                    continue;
                }
                sum += (-self.beta * (d2 * inv_ra2 - 1.0)).exp();
            }
        }
        sum
    }

    fn eval(&self, point: [f64; 3]) -> Vec<f64> {
        self.channels
            .iter()
            .map(|c| self.eval_channel(c, point))
            .collect()
    }
}

/// Evaluate the field at one world-space point. Component `t` sums over the
/// atoms matching channel `t`; channels with no matching atoms return 0.
pub fn eval_field(
    molecule: &Molecule,
    spec: &ChannelSpec,
    table: &ElementTable,
    point: [f64; 3],
) -> Result<Vec<f64>, FieldError> {
    let resolved = resolve(molecule, spec, table, None)?;
    Ok(resolved.eval(point))
}

/// Cubic sampling box: the atoms' bounding box padded on every side, blown
/// up to the maximum axis extent so the box is a cube, centered on the
/// padded box center. Spacing is extent / (n - 1) per axis.
pub fn auto_grid(
    molecule: &Molecule,
    dims: [usize; 3],
    padding: f64,
) -> Result<GridSpec, FieldError> {
    let (lo, hi) = molecule.bounding_box().ok_or(FieldError::EmptyMolecule)?;
    let mut center = [0.0; 3];
    let mut extent: f64 = 0.0;
    for axis in 0..3 {
        center[axis] = 0.5 * (lo[axis] + hi[axis]);
        extent = extent.max(hi[axis] - lo[axis] + 2.0 * padding);
    }
    let origin = [
        center[0] - 0.5 * extent,
        center[1] - 0.5 * extent,
        center[2] - 0.5 * extent,
    ];
    let spacing = [
        extent / (dims[0] - 1) as f64,
        extent / (dims[1] - 1) as f64,
        extent / (dims[2] - 1) as f64,
    ];
    GridSpec::new(dims, origin, spacing).map_err(FieldError::BadSpec)
}

/// Shared cubic extent for a set of molecules sampled on a common world
/// scale: the maximum padded extent over the whole set.
pub fn shared_extent(molecules: &[Molecule], padding: f64) -> Result<f64, FieldError> {
    let mut extent: f64 = 0.0;
    for mol in molecules {
        let (lo, hi) = mol.bounding_box().ok_or(FieldError::EmptyMolecule)?;
        for axis in 0..3 {
            extent = extent.max(hi[axis] - lo[axis] + 2.0 * padding);
        }
    }
    Ok(extent)
}

/// Cubic grid of a fixed extent centered on the molecule's bounding box.
pub fn centered_grid(
    molecule: &Molecule,
    dims: [usize; 3],
    extent: f64,
) -> Result<GridSpec, FieldError> {
    let (lo, hi) = molecule.bounding_box().ok_or(FieldError::EmptyMolecule)?;
    let origin = [
        0.5 * (lo[0] + hi[0]) - 0.5 * extent,
        0.5 * (lo[1] + hi[1]) - 0.5 * extent,
        0.5 * (lo[2] + hi[2]) - 0.5 * extent,
    ];
    let spacing = [
        extent / (dims[0] - 1) as f64,
        extent / (dims[1] - 1) as f64,
        extent / (dims[2] - 1) as f64,
    ];
    GridSpec::new(dims, origin, spacing).map_err(FieldError::BadSpec)
}

/// Distance beyond which a single atom's contribution falls below `epsilon`:
/// `r_a * sqrt(1 + ln(1/epsilon) / beta)`. At `epsilon = 1` this is exactly
/// `r_a` (the exponent's zero crossing).
pub fn cull_radius(beta: f64, r_a: f64, epsilon: f64) -> f64 {
    let inner = 1.0 + (1.0 / epsilon).ln() / beta;
    if inner <= 0.0 {
        return 0.0;
    }
    r_a * inner.sqrt()
}

/// Sample the field on a regular grid. Voxel-by-voxel equal to
/// [`eval_field`]; voxels are independent, so parallel evaluation cannot
/// change results. `cull_epsilon = None` is exact.
pub fn sample_grid(
    molecule: &Molecule,
    spec: &ChannelSpec,
    table: &ElementTable,
    grid: &GridSpec,
    cull_epsilon: Option<f64>,
) -> Result<VolumeGrid, FieldError> {
    let resolved = resolve(molecule, spec, table, cull_epsilon)?;
    let [nx, ny, nz] = grid.dims;
    let per_channel = nx * ny * nz;
    let d = resolved.channels.len();
    let mut data = vec![0.0f64; d * per_channel];

    // channel-major, x-fastest; parallel over z-slabs within each channel
    for (t, chan) in resolved.channels.iter().enumerate() {
        let slab = &mut data[t * per_channel..(t + 1) * per_channel];
        slab.par_chunks_mut(nx * ny)
            .enumerate()
            .for_each(|(k, plane)| {
                for j in 0..ny {
                    for i in 0..nx {
                        let p = grid.world_point(i, j, k);
                        plane[j * nx + i] = resolved.eval_channel(chan, p);
                    }
                }
            });
    }
    VolumeGrid::new(grid.clone(), d, data).map_err(FieldError::BadSpec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::PropertyKind;
    use crate::molecule::{Atom, Molecule};

    fn table() -> ElementTable {
        ElementTable::default()
    }

    fn single_h() -> Molecule {
        let mut mol = Molecule::new("h");
        mol.atoms.push(Atom::new("H", [0.0, 0.0, 0.0]));
        mol
    }

    fn h_channel(beta: f64) -> ChannelSpec {
        ChannelSpec::new(
            vec![Channel::elements("h", ["H"])],
            beta,
        )
    }

    #[test]
    fn center_value_is_exp_beta() {
        let v = eval_field(&single_h(), &h_channel(2.0), &table(), [0.0, 0.0, 0.0]).unwrap();
        assert_eq!(v.len(), 1);
        assert!((v[0] - 2.0f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn value_at_radius_is_one() {
        // H vdW radius is 1.10
        let v = eval_field(&single_h(), &h_channel(2.0), &table(), [1.10, 0.0, 0.0]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_carbon_superposition() {
        let mut mol = Molecule::new("c2");
        mol.atoms.push(Atom::new("C", [1.0, 0.0, 0.0]));
        mol.atoms.push(Atom::new("C", [-1.0, 0.0, 0.0]));
        let spec = ChannelSpec::new(vec![Channel::elements("c", ["C"])], 2.0);
        let v = eval_field(&mol, &spec, &table(), [0.0, 0.0, 0.0]).unwrap();
        let r2 = 1.70f64 * 1.70;
        let expected = 2.0 * (-2.0 * (1.0 / r2 - 1.0)).exp();
        assert!((v[0] - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn unmatched_channel_is_exactly_zero() {
        let spec = ChannelSpec::new(
            vec![Channel::elements("h", ["H"]), Channel::elements("c", ["C"])],
            2.0,
        );
        let v = eval_field(&single_h(), &spec, &table(), [0.3, 0.2, 0.1]).unwrap();
        assert!(v[0] > 0.0);
        assert_eq!(v[1], 0.0);
    }

    #[test]
    fn entity_filter_partitions_atoms() {
        let mut mol = Molecule::new("complex");
        mol.atoms.push(Atom::new("C", [0.0, 0.0, 0.0]).with_entity("protein"));
        mol.atoms.push(Atom::new("C", [3.0, 0.0, 0.0]).with_entity("ligand"));
        let spec = ChannelSpec::new(
            vec![
                Channel::elements("prot_c", ["C"]).with_entity("protein"),
                Channel::elements("lig_c", ["C"]).with_entity("ligand"),
            ],
            2.0,
        );
        let v = eval_field(&mol, &spec, &table(), [0.0, 0.0, 0.0]).unwrap();
        assert!((v[0] - 2.0f64.exp()).abs() < 1e-12 * 2.0f64.exp());
        let r2 = 1.70f64 * 1.70;
        let expected = (-2.0 * (9.0 / r2 - 1.0)).exp();
        assert!((v[1] - expected).abs() < 1e-12);
    }

    #[test]
    fn property_as_radius_substitutes_for_ra() {
        let spec = ChannelSpec::new(
            vec![Channel::elements("en", ["H"]).with_property(PropertyKind::Electronegativity)],
            2.0,
        );
        // Pauling H = 2.20 substitutes for r_a
        let v = eval_field(&single_h(), &spec, &table(), [2.20, 0.0, 0.0]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_element_in_matched_channel_errors() {
        let mut mol = Molecule::new("odd");
        mol.atoms.push(Atom::new("Qq", [0.0, 0.0, 0.0]));
        let spec = ChannelSpec::new(vec![Channel::wildcard("all")], 2.0);
        assert!(matches!(
            eval_field(&mol, &spec, &table(), [0.0; 3]).unwrap_err(),
            FieldError::UnknownElement { .. }
        ));
    }

    #[test]
    fn zero_radius_property_errors() {
        let mut mol = Molecule::new("he");
        mol.atoms.push(Atom::new("He", [0.0, 0.0, 0.0]));
        // He has no Pauling electronegativity (0.0 in the table)
        let spec = ChannelSpec::new(
            vec![Channel::wildcard("en").with_property(PropertyKind::Electronegativity)],
            2.0,
        );
        assert!(matches!(
            eval_field(&mol, &spec, &table(), [0.0; 3]).unwrap_err(),
            FieldError::NonPositiveRadius { .. }
        ));
    }

    #[test]
    fn empty_molecule_rejected() {
        let mol = Molecule::new("empty");
        assert!(matches!(
            eval_field(&mol, &h_channel(2.0), &table(), [0.0; 3]).unwrap_err(),
            FieldError::EmptyMolecule
        ));
        assert!(matches!(
            auto_grid(&mol, [8, 8, 8], 2.0).unwrap_err(),
            FieldError::EmptyMolecule
        ));
    }

    #[test]
    fn monotonic_decay_from_single_atom() {
        let spec = h_channel(2.0);
        let mol = single_h();
        let mut prev = f64::INFINITY;
        for step in 0..40 {
            let r = step as f64 * 0.1;
            let v = eval_field(&mol, &spec, &table(), [r, 0.0, 0.0]).unwrap()[0];
            assert!(v < prev, "field must strictly decrease with distance");
            prev = v;
        }
    }

    #[test]
    fn auto_grid_single_atom() {
        let mut mol = Molecule::new("one");
        mol.atoms.push(Atom::new("H", [1.0, 1.0, 1.0]));
        let grid = auto_grid(&mol, [32, 32, 32], 2.0).unwrap();
        assert_eq!(grid.origin, [-1.0, -1.0, -1.0]);
        for axis in 0..3 {
            assert!((grid.spacing[axis] - 4.0 / 31.0).abs() < 1e-15);
        }
    }

    #[test]
    fn auto_grid_two_atoms_cubic_centered() {
        let mut mol = Molecule::new("two");
        mol.atoms.push(Atom::new("H", [0.0, 0.0, 0.0]));
        mol.atoms.push(Atom::new("H", [10.0, 0.0, 0.0]));
        let grid = auto_grid(&mol, [2, 2, 2], 0.0).unwrap();
        assert_eq!(grid.origin, [0.0, -5.0, -5.0]);
        for axis in 0..3 {
            assert!((grid.spacing[axis] - 10.0).abs() < 1e-15);
        }
        // center of the box is the bbox center (5, 0, 0)
        let hi = grid.world_point(1, 1, 1);
        assert_eq!(hi, [10.0, 5.0, 5.0]);
    }

    #[test]
    fn cull_radius_identities() {
        assert!((cull_radius(2.0, 1.5, 1.0) - 1.5).abs() < 1e-15);
        let d = cull_radius(2.0, 1.0, 1e-6);
        assert!((d - (1.0f64 + (1e6f64).ln() / 2.0).sqrt()).abs() < 1e-12);
        // contribution at the returned distance equals epsilon
        let contrib = (-2.0 * (d * d / 1.0 - 1.0)).exp();
        assert!((contrib - 1e-6).abs() < 1e-18);
        // epsilon larger than the center value culls everything
        assert_eq!(cull_radius(2.0, 1.0, 1e9), 0.0);
    }

    #[test]
    fn sample_grid_shape_and_layout() {
        let mut mol = Molecule::new("h");
        mol.atoms.push(Atom::new("H", [0.0, 0.0, 0.0]));
        let spec = ChannelSpec::new(
            vec![Channel::elements("h", ["H"]), Channel::elements("c", ["C"])],
            2.0,
        );
        let grid = GridSpec::new([3, 4, 5], [-1.0, -1.0, -1.0], [1.0, 0.5, 0.5]).unwrap();
        let vol = sample_grid(&mol, &spec, &table(), &grid, None).unwrap();
        assert_eq!(vol.channels, 2);
        assert_eq!(vol.data.len(), 2 * 3 * 4 * 5);
        // channel 2 (carbon) all zero
        assert!(vol.channel_data(1).iter().all(|&v| v == 0.0));
        // spot-check voxel (1,2,2) world point (0, 0, 0) = atom center
        let idx = vol.index(0, 1, 2, 2);
        assert!((vol.data[idx] - 2.0f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn centered_voxel_of_odd_grid_hits_exp_beta() {
        let mut mol = Molecule::new("h");
        mol.atoms.push(Atom::new("H", [0.0, 0.0, 0.0]));
        let grid = auto_grid(&mol, [3, 3, 3], 1.0).unwrap();
        let vol = sample_grid(&mol, &h_channel(2.0), &table(), &grid, None).unwrap();
        let idx = vol.index(0, 1, 1, 1);
        assert!((vol.data[idx] - 2.0f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn culled_sampling_stays_within_epsilon_times_atoms() {
        let mut mol = Molecule::new("chain");
        for i in 0..6 {
            mol.atoms.push(Atom::new("C", [i as f64 * 1.3, 0.1 * i as f64, 0.0]));
        }
        let spec = ChannelSpec::new(vec![Channel::wildcard("all")], 2.0);
        let grid = auto_grid(&mol, [9, 9, 9], 2.0).unwrap();
        let exact = sample_grid(&mol, &spec, &table(), &grid, None).unwrap();
        let eps = 1e-4;
        let culled = sample_grid(&mol, &spec, &table(), &grid, Some(eps)).unwrap();
        let bound = eps * mol.atoms.len() as f64;
        for (a, b) in exact.data.iter().zip(culled.data.iter()) {
            assert!((a - b).abs() <= bound + 1e-15);
        }
    }

    #[test]
    fn translation_equivariance() {
        let mut mol = Molecule::new("pair");
        mol.atoms.push(Atom::new("C", [0.4, -0.2, 0.9]));
        mol.atoms.push(Atom::new("O", [-0.7, 1.1, 0.3]));
        let spec = ChannelSpec::new(vec![Channel::wildcard("all")], 3.0);
        let grid = GridSpec::new([4, 4, 4], [-2.0, -2.0, -2.0], [1.0, 1.0, 1.0]).unwrap();
        let base = sample_grid(&mol, &spec, &table(), &grid, None).unwrap();

        let shift = [5.0, -3.0, 2.0];
        let mut shifted = mol.clone();
        for atom in &mut shifted.atoms {
            for axis in 0..3 {
                atom.position[axis] += shift[axis];
            }
        }
        let grid2 = GridSpec::new(
            [4, 4, 4],
            [-2.0 + shift[0], -2.0 + shift[1], -2.0 + shift[2]],
            [1.0, 1.0, 1.0],
        )
        .unwrap();
        let moved = sample_grid(&shifted, &spec, &table(), &grid2, None).unwrap();
        for (a, b) in base.data.iter().zip(moved.data.iter()) {
            let rel = (a - b).abs() / a.abs().max(1e-300);
            assert!(rel <= 1e-12, "translation changed the field: {a} vs {b}");
        }
    }

    #[test]
    fn additivity_of_disjoint_molecules() {
        let mut a = Molecule::new("a");
        a.atoms.push(Atom::new("C", [0.5, 0.0, 0.0]));
        let mut b = Molecule::new("b");
        b.atoms.push(Atom::new("N", [-0.5, 0.3, 0.0]));
        let mut ab = Molecule::new("ab");
        ab.atoms.extend(a.atoms.iter().cloned());
        ab.atoms.extend(b.atoms.iter().cloned());

        let spec = ChannelSpec::new(vec![Channel::wildcard("all")], 2.0);
        let grid = GridSpec::new([3, 3, 3], [-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]).unwrap();
        let va = sample_grid(&a, &spec, &table(), &grid, None).unwrap();
        let vb = sample_grid(&b, &spec, &table(), &grid, None).unwrap();
        let vab = sample_grid(&ab, &spec, &table(), &grid, None).unwrap();
        for i in 0..vab.data.len() {
            let sum = va.data[i] + vb.data[i];
            let rel = (vab.data[i] - sum).abs() / sum.abs().max(1e-300);
            assert!(rel <= 1e-12);
        }
    }
}

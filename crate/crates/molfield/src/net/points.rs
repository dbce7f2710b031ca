//! Normalized coordinate frames for grids.

use ndarray::Array2;

use crate::field::GridSpec;

use super::real::Real;

/// Voxel centers of a grid mapped affinely so the grid spans [-1, 1] per
/// axis: voxel (0,0,0) -> (-1,-1,-1), voxel (nx-1, ny-1, nz-1) -> (1,1,1).
/// Rows follow volume layout order (x fastest, then y, then z).
pub fn normalize_points_f64(grid: &GridSpec) -> Array2<f64> {
    let [nx, ny, nz] = grid.dims;
    let mut out = Array2::zeros((nx * ny * nz, 3));
    let step = [
        2.0 / (nx - 1) as f64,
        2.0 / (ny - 1) as f64,
        2.0 / (nz - 1) as f64,
    ];
    let mut row = 0;
    for k in 0..nz {
        let z = -1.0 + k as f64 * step[2];
        for j in 0..ny {
            let y = -1.0 + j as f64 * step[1];
            for i in 0..nx {
                out[[row, 0]] = -1.0 + i as f64 * step[0];
                out[[row, 1]] = y;
                out[[row, 2]] = z;
                row += 1;
            }
        }
    }
    out
}

/// [`normalize_points_f64`] cast to the network element type. Coordinates
/// are generated in f64 and cast, so the f32 fast path sees the same grid.
pub fn normalize_points<F: Real>(grid: &GridSpec) -> Array2<F> {
    normalize_points_f64(grid).mapv(F::from_f64)
}

//! Regular sampling lattices and the dense multi-channel volumes sampled on
//! them.

/// Axis-aligned regular lattice with a world-space transform (Angstrom).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub dims: [usize; 3],
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
}

impl GridSpec {
    pub fn new(dims: [usize; 3], origin: [f64; 3], spacing: [f64; 3]) -> Result<Self, String> {
        for axis in 0..3 {
            if dims[axis] < 2 {
                return Err(format!("grid dims must be >= 2 per axis, got {dims:?}"));
            }
            if !(spacing[axis] > 0.0) || !spacing[axis].is_finite() {
                return Err(format!("grid spacing must be positive, got {spacing:?}"));
            }
            if !origin[axis].is_finite() {
                return Err(format!("grid origin must be finite, got {origin:?}"));
            }
        }
        Ok(GridSpec {
            dims,
            origin,
            spacing,
        })
    }

    /// Cubic grid spanning [-1, 1]^3 in world space.
    pub fn unit(dims: [usize; 3]) -> Self {
        GridSpec::new(
            dims,
            [-1.0, -1.0, -1.0],
            [
                2.0 / (dims[0] - 1) as f64,
                2.0 / (dims[1] - 1) as f64,
                2.0 / (dims[2] - 1) as f64,
            ],
        )
        .expect("unit grid dims must be >= 2")
    }

    pub fn voxel_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// World position of voxel center (i, j, k).
    pub fn world_point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + i as f64 * self.spacing[0],
            self.origin[1] + j as f64 * self.spacing[1],
            self.origin[2] + k as f64 * self.spacing[2],
        ]
    }

    /// Per-axis world extent from first to last voxel center.
    pub fn extent(&self) -> [f64; 3] {
        [
            (self.dims[0] - 1) as f64 * self.spacing[0],
            (self.dims[1] - 1) as f64 * self.spacing[1],
            (self.dims[2] - 1) as f64 * self.spacing[2],
        ]
    }

    /// Grid with the given dims over this grid's world bounds: corner voxel
    /// centers stay fixed, spacing rescales.
    pub fn with_dims(&self, dims: [usize; 3]) -> Result<GridSpec, String> {
        let extent = self.extent();
        let spacing = [
            extent[0] / (dims[0].max(2) - 1) as f64,
            extent[1] / (dims[1].max(2) - 1) as f64,
            extent[2] / (dims[2].max(2) - 1) as f64,
        ];
        GridSpec::new(dims, self.origin, spacing)
    }

    /// Grid with `factor`-times the voxel count per axis over identical
    /// world bounds: corner voxel centers coincide with the base grid's.
    pub fn refine(&self, factor: usize) -> GridSpec {
        assert!(factor >= 1, "refinement factor must be >= 1");
        let dims = [
            self.dims[0] * factor,
            self.dims[1] * factor,
            self.dims[2] * factor,
        ];
        let extent = self.extent();
        let spacing = [
            extent[0] / (dims[0] - 1) as f64,
            extent[1] / (dims[1] - 1) as f64,
            extent[2] / (dims[2] - 1) as f64,
        ];
        GridSpec {
            dims,
            origin: self.origin,
            spacing,
        }
    }
}

/// Dense d-channel scalar samples, channel-major then x-fastest:
/// `data[((c * nz + k) * ny + j) * nx + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeGrid {
    pub spec: GridSpec,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl VolumeGrid {
    pub fn new(spec: GridSpec, channels: usize, data: Vec<f64>) -> Result<Self, String> {
        if channels == 0 {
            return Err("volume needs at least one channel".into());
        }
        let expected = channels * spec.voxel_count();
        if data.len() != expected {
            return Err(format!(
                "data length {} does not match {} channels x {:?} voxels = {}",
                data.len(),
                channels,
                spec.dims,
                expected
            ));
        }
        Ok(VolumeGrid {
            spec,
            channels,
            data,
        })
    }

    pub fn zeros(spec: GridSpec, channels: usize) -> Self {
        let len = channels * spec.voxel_count();
        VolumeGrid {
            spec,
            channels,
            data: vec![0.0; len],
        }
    }

    #[inline]
    pub fn index(&self, channel: usize, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _nz] = self.spec.dims;
        ((channel * self.spec.dims[2] + k) * ny + j) * nx + i
    }

    pub fn channel_data(&self, channel: usize) -> &[f64] {
        let per = self.spec.voxel_count();
        &self.data[channel * per..(channel + 1) * per]
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// 64-bit FNV-1a over shape, transform and data bits. Used to give
    /// volumes an input-order-independent identity.
    pub fn content_digest(&self) -> u64 {
        let mut hash = Fnv1a::new();
        hash.write_u64(self.channels as u64);
        for axis in 0..3 {
            hash.write_u64(self.spec.dims[axis] as u64);
            hash.write_u64(self.spec.origin[axis].to_bits());
            hash.write_u64(self.spec.spacing[axis].to_bits());
        }
        for v in &self.data {
            hash.write_u64(v.to_bits());
        }
        hash.finish()
    }
}

pub(crate) struct Fnv1a(u64);

impl Fnv1a {
    pub fn new() -> Self {
        Fnv1a(0xcbf29ce484222325)
    }
    pub fn write_u64(&mut self, value: u64) {
        for byte in value.to_le_bytes() {
            self.0 ^= byte as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }
    pub fn finish(&self) -> u64 {
        self.0
    }
}

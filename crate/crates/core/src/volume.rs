//! Dense scalar volumes on a unit-spaced grid.
//!
//! Voxels are stored x-fastest: the linear index of `(i, j, k)` is
//! `i + nx * (j + ny * k)`. The same layout is used by the `.svol` format.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Voxel = [usize; 3];

/// 6-connected neighbour offsets, in axis order.
pub const NEIGHBORS_6: [[isize; 3]; 6] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
];

pub const NEIGHBORS_26: [[isize; 3]; 26] = {
    let mut out = [[0isize; 3]; 26];
    let mut i = 0;
    let mut k = 0;
    while k < 27 {
        if k != 13 {
            out[i] = [
                (k % 3) as isize - 1,
                ((k / 3) % 3) as isize - 1,
                (k / 9) as isize - 1,
            ];
            i += 1;
        }
        k += 1;
    }
    out
};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarVolume {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl ScalarVolume {
    pub fn new(dims: [usize; 3], fill: f64) -> Result<Self> {
        check_dims(dims)?;
        if !(fill >= 0.0) || !fill.is_finite() {
            return Err(Error::InvalidParam(format!(
                "fill must be finite and >= 0, got {fill}"
            )));
        }
        let len = voxel_count(dims)?;
        Ok(Self {
            dims,
            data: vec![fill; len],
        })
    }

    /// Wraps existing samples. Values are not range-checked so solver outputs
    /// holding `f64::INFINITY` for unvisited voxels can be carried around.
    pub fn from_vec(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        check_dims(dims)?;
        if data.len() != voxel_count(dims)? {
            return Err(Error::Format(format!(
                "expected {} samples for dims {:?}, got {}",
                voxel_count(dims)?,
                dims,
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, v: Voxel) -> usize {
        v[0] + self.dims[0] * (v[1] + self.dims[1] * v[2])
    }

    #[inline]
    pub fn voxel(&self, idx: usize) -> Voxel {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    #[inline]
    pub fn contains(&self, v: [isize; 3]) -> bool {
        (0..3).all(|a| v[a] >= 0 && (v[a] as usize) < self.dims[a])
    }

    #[inline]
    pub fn get(&self, v: Voxel) -> f64 {
        self.data[self.index(v)]
    }

    #[inline]
    pub fn set(&mut self, v: Voxel, value: f64) {
        let i = self.index(v);
        self.data[i] = value;
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            })
    }

    /// Neighbour of `v` displaced by `off`, if it lies inside the grid.
    #[inline]
    pub fn offset(&self, v: Voxel, off: [isize; 3]) -> Option<Voxel> {
        let p = [
            v[0] as isize + off[0],
            v[1] as isize + off[1],
            v[2] as isize + off[2],
        ];
        self.contains(p)
            .then(|| [p[0] as usize, p[1] as usize, p[2] as usize])
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            dims: self.dims,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

fn check_dims(dims: [usize; 3]) -> Result<()> {
    if dims.iter().any(|&d| d < 3) {
        return Err(Error::InvalidDims(dims));
    }
    Ok(())
}

fn voxel_count(dims: [usize; 3]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or(Error::InvalidDims(dims))
}

/// A seed voxel strictly inside a volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SeedPoint(pub Voxel);

impl SeedPoint {
    pub fn new(v: Voxel, dims: [usize; 3]) -> Result<Self> {
        if (0..3).all(|a| v[a] >= 1 && v[a] + 1 < dims[a]) {
            Ok(Self(v))
        } else {
            Err(Error::SeedOutside(v))
        }
    }

    pub fn voxel(&self) -> Voxel {
        self.0
    }

    pub fn position(&self) -> [f64; 3] {
        [self.0[0] as f64, self.0[1] as f64, self.0[2] as f64]
    }
}

/// Adds i.i.d. `N(0, sigma^2)` noise and clamps the result at zero.
pub fn add_gaussian_noise(v: &ScalarVolume, sigma: f64, rng_seed: u64) -> Result<ScalarVolume> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParam(format!(
            "sigma must be >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(v.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParam(e.to_string()))?;
    Ok(v.map(|x| (x + normal.sample(&mut rng)).max(0.0)))
}

/// Proposes seed voxels at low local minima of `phi`.
///
/// A candidate is an interior voxel whose value is `<=` every 26-neighbour and
/// strictly below at least one of them, and `<=` the given percentile of all
/// values. Candidates are visited by ascending value (ties by linear index) and
/// kept only if at least `suppression_radius` away from every kept seed.
pub fn propose_seeds(
    phi: &ScalarVolume,
    max_seeds: usize,
    percentile: f64,
    suppression_radius: f64,
) -> Result<Vec<SeedPoint>> {
    if !(percentile > 0.0 && percentile < 100.0) {
        return Err(Error::InvalidParam(format!(
            "percentile must be in (0, 100), got {percentile}"
        )));
    }
    let mut sorted = phi.data().to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((percentile / 100.0) * (sorted.len() - 1) as f64).floor() as usize;
    let threshold = sorted[rank];

    let dims = phi.dims();
    let mut candidates = Vec::new();
    for k in 1..dims[2] - 1 {
        for j in 1..dims[1] - 1 {
            for i in 1..dims[0] - 1 {
                let v = [i, j, k];
                let x = phi.get(v);
                if x > threshold {
                    continue;
                }
                let mut le_all = true;
                let mut lt_some = false;
                'scan: for dz in -1..=1isize {
                    for dy in -1..=1isize {
                        for dx in -1..=1isize {
                            if dx == 0 && dy == 0 && dz == 0 {
                                continue;
                            }
                            let n = phi.get([
                                (i as isize + dx) as usize,
                                (j as isize + dy) as usize,
                                (k as isize + dz) as usize,
                            ]);
                            if x > n {
                                le_all = false;
                                break 'scan;
                            }
                            if x < n {
                                lt_some = true;
                            }
                        }
                    }
                }
                if le_all && lt_some {
                    candidates.push((x, phi.index(v)));
                }
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let r2 = suppression_radius * suppression_radius;
    let mut seeds: Vec<SeedPoint> = Vec::new();
    for (_, idx) in candidates {
        if seeds.len() >= max_seeds {
            break;
        }
        let v = phi.voxel(idx);
        let far = seeds.iter().all(|s| dist2(s.0, v) >= r2);
        if far {
            seeds.push(SeedPoint(v));
        }
    }
    Ok(seeds)
}

fn dist2(a: Voxel, b: Voxel) -> f64 {
    (0..3).map(|i| (a[i] as f64 - b[i] as f64).powi(2)).sum()
}

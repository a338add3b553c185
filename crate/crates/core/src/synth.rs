//! Synthetic surfaces with boundary: the image is 0 within distance 1 of the
//! surface and 1 elsewhere.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cut::BoundaryCurve;
use crate::error::{Error, Result};
use crate::mesh::SurfaceMesh;
use crate::volume::{ScalarVolume, SeedPoint};

/// Required free space between the surface band and the volume faces.
pub const MARGIN: f64 = 5.0;
const PITCH: f64 = 1.0 / 12.0;
const CURVE_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceKind {
    TrimmedPlane,
    CutSphere,
    RandomHeightfield,
}

impl SurfaceKind {
    pub const ALL: [SurfaceKind; 3] =
        [Self::TrimmedPlane, Self::CutSphere, Self::RandomHeightfield];

    pub fn name(&self) -> &'static str {
        match self {
            Self::TrimmedPlane => "trimmed-plane",
            Self::CutSphere => "cut-sphere",
            Self::RandomHeightfield => "random-heightfield",
        }
    }
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SurfaceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == t)
            .ok_or_else(|| Error::InvalidParam(format!("unknown surface kind {s:?}")))
    }
}

/// Voxelised ground truth of one synthetic surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub kind: SurfaceKind,
    pub dims: [usize; 3],
    /// Voxels within 0.5 of the surface, sorted.
    pub surface: Vec<[usize; 3]>,
    /// Voxels within 0.5 of the boundary curve, sorted.
    pub boundary: Vec<[usize; 3]>,
    /// The boundary curve, closed, at sub-voxel spacing.
    pub boundary_polyline: Vec<[f64; 3]>,
    /// Points where the boundary has a crease (empty for smooth outlines).
    pub corners: Vec<[f64; 3]>,
    /// The surface as a unit-pitch height-field quad mesh.
    pub mesh: SurfaceMesh,
}

impl GroundTruth {
    /// The boundary curve rasterised onto the image lattice.
    pub fn boundary_curve(&self) -> Result<BoundaryCurve> {
        let step = (self.boundary_polyline.len() / 2000).max(1);
        let poly: Vec<[f64; 3]> = self
            .boundary_polyline
            .iter()
            .step_by(step)
            .copied()
            .collect();
        BoundaryCurve::from_polyline(poly, self.dims)
    }

    /// The surface voxel closest to the middle of the surface.
    pub fn interior_seed(&self) -> SeedPoint {
        let n = self.surface.len() as f64;
        let mut c = [0.0; 3];
        for v in &self.surface {
            for k in 0..3 {
                c[k] += v[k] as f64 / n;
            }
        }
        let d2 = |v: &[usize; 3]| (0..3).map(|k| (v[k] as f64 - c[k]).powi(2)).sum::<f64>();
        let best = self
            .surface
            .iter()
            .min_by(|a, b| d2(a).total_cmp(&d2(b)).then(a.cmp(b)))
            .expect("non-empty surface");
        SeedPoint(*best)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    /// Noise-free image.
    pub phi: ScalarVolume,
    pub gt: GroundTruth,
}

/// A height field `z = h(x, y)` over a star-shaped outline around `center`.
struct Patch {
    center: [f64; 2],
    outline: Box<dyn Fn(f64) -> f64>,
    height: Box<dyn Fn(f64, f64) -> f64>,
    corners: Vec<f64>,
}

impl Patch {
    fn inside(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        dx.hypot(dy) <= (self.outline)(dy.atan2(dx))
    }

    fn rim_point(&self, t: f64) -> [f64; 3] {
        let r = (self.outline)(t);
        let (x, y) = (self.center[0] + r * t.cos(), self.center[1] + r * t.sin());
        [x, y, (self.height)(x, y)]
    }

    fn rim(&self) -> Vec<[f64; 3]> {
        let rmax = (0..720)
            .map(|i| (self.outline)(i as f64 * PI / 360.0))
            .fold(0.0, f64::max);
        let n = ((2.0 * PI * rmax * 3.0) / CURVE_STEP).ceil() as usize;
        (0..n)
            .map(|i| self.rim_point(2.0 * PI * i as f64 / n as f64))
            .collect()
    }

    fn bounding_radius(&self) -> f64 {
        (0..720)
            .map(|i| (self.outline)(i as f64 * PI / 360.0))
            .fold(0.0, f64::max)
    }
}

fn perturbed_circle(rng: &mut ChaCha8Rng, r: f64) -> Box<dyn Fn(f64) -> f64> {
    let modes: Vec<(f64, f64, f64)> = (2..=4)
        .map(|k| {
            (
                k as f64,
                rng.random_range(0.0..0.06),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    Box::new(move |t| {
        r * (1.0
            + modes
                .iter()
                .map(|(k, a, p)| a * (k * t + p).cos())
                .sum::<f64>())
    })
}

fn patch(kind: SurfaceKind, dims: [usize; 3], rng: &mut ChaCha8Rng) -> Patch {
    let s = *dims.iter().min().expect("three dims") as f64;
    let center = [(dims[0] / 2) as f64, (dims[1] / 2) as f64];
    let zc = (dims[2] / 2) as f64;
    match kind {
        SurfaceKind::TrimmedPlane => Patch {
            center,
            outline: perturbed_circle(rng, 0.3 * s),
            height: Box::new(move |_, _| zc),
            corners: vec![],
        },
        SurfaceKind::CutSphere => {
            let (r, a) = (0.4 * s, 0.24 * s);
            let top = (r * r - 2.0 * a * a).sqrt();
            let cz = zc + 0.5 * (r + top);
            let [cx, cy] = center;
            Patch {
                center,
                outline: Box::new(move |t| a / t.cos().abs().max(t.sin().abs())),
                height: Box::new(move |x, y| {
                    cz - (r * r - (x - cx).powi(2) - (y - cy).powi(2))
                        .max(0.0)
                        .sqrt()
                }),
                corners: vec![PI / 4.0, 3.0 * PI / 4.0, 5.0 * PI / 4.0, 7.0 * PI / 4.0],
            }
        }
        SurfaceKind::RandomHeightfield => {
            let outline = perturbed_circle(rng, 0.3 * s);
            let waves: Vec<(f64, f64, f64, f64)> = (0..3)
                .map(|_| {
                    let th = rng.random_range(0.0..PI);
                    let len = rng.random_range(0.5..1.0) * s;
                    let k = 2.0 * PI / len;
                    (
                        k * th.cos(),
                        k * th.sin(),
                        rng.random_range(0.02..0.05) * s,
                        rng.random_range(0.0..2.0 * PI),
                    )
                })
                .collect();
            Patch {
                center,
                outline,
                height: Box::new(move |x, y| {
                    zc + waves
                        .iter()
                        .map(|(kx, ky, amp, ph)| amp * (kx * x + ky * y + ph).sin())
                        .sum::<f64>()
                }),
                corners: vec![],
            }
        }
    }
}

/// Minimum distance from each voxel to a point cloud, only where it is at
/// most `reach`.
fn near_voxels(points: &[[f64; 3]], dims: [usize; 3], reach: f64) -> HashMap<[usize; 3], f64> {
    let mut d: HashMap<[usize; 3], f64> = HashMap::new();
    let r = reach.ceil() as i64;
    for q in points {
        let base = q.map(|x| x.round() as i64);
        for dz in -r..=r {
            for dy in -r..=r {
                for dx in -r..=r {
                    let v = [base[0] + dx, base[1] + dy, base[2] + dz];
                    if (0..3).any(|k| v[k] < 0 || v[k] >= dims[k] as i64) {
                        continue;
                    }
                    let dist = (0..3)
                        .map(|k| (v[k] as f64 - q[k]).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    if dist <= reach {
                        let e = d.entry(v.map(|x| x as usize)).or_insert(f64::INFINITY);
                        *e = e.min(dist);
                    }
                }
            }
        }
    }
    d
}

fn within(d: &HashMap<[usize; 3], f64>, tol: f64) -> Vec<[usize; 3]> {
    let mut out: Vec<[usize; 3]> = d
        .iter()
        .filter(|(_, &x)| x <= tol)
        .map(|(v, _)| *v)
        .collect();
    out.sort_unstable();
    out
}

fn height_mesh(p: &Patch) -> SurfaceMesh {
    let r = p.bounding_radius().ceil() as i64 + 1;
    let (cx, cy) = (p.center[0].round() as i64, p.center[1].round() as i64);
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut m = SurfaceMesh::default();
    let mut vid = |x: i64, y: i64, m: &mut SurfaceMesh| {
        *index.entry((x, y)).or_insert_with(|| {
            m.vertices
                .push([x as f64, y as f64, (p.height)(x as f64, y as f64)]);
            m.vertices.len() - 1
        })
    };
    for y in cy - r..cy + r {
        for x in cx - r..cx + r {
            let c = [(x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)];
            if c.iter().all(|&(a, b)| p.inside(a as f64, b as f64)) {
                let q = c.map(|(a, b)| vid(a, b, &mut m));
                m.quads.push(q);
            }
        }
    }
    m
}

/// Generates a noise-free image of one surface with its ground truth.
pub fn generate_surface(kind: SurfaceKind, dims: [usize; 3], rng_seed: u64) -> Result<Synthetic> {
    if dims.contains(&0) {
        return Err(Error::InvalidDims(dims));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let p = patch(kind, dims, &mut rng);

    let rim = p.rim();
    let rb = p.bounding_radius();
    let steps = (rb / PITCH).ceil() as i64;
    let mut samples: Vec<[f64; 3]> = Vec::new();
    for j in -steps..=steps {
        for i in -steps..=steps {
            let (x, y) = (
                p.center[0] + i as f64 * PITCH,
                p.center[1] + j as f64 * PITCH,
            );
            if p.inside(x, y) {
                samples.push([x, y, (p.height)(x, y)]);
            }
        }
    }
    samples.extend_from_slice(&rim);

    for q in &samples {
        if (0..3).any(|k| q[k] - 1.0 < MARGIN || q[k] + 1.0 > (dims[k] - 1) as f64 - MARGIN) {
            return Err(Error::SurfaceExceedsMargin);
        }
    }

    let near = near_voxels(&samples, dims, 1.0);
    let mut phi = ScalarVolume::new(dims, 1.0)?;
    for (v, &d) in &near {
        if d <= 1.0 {
            phi.set(*v, 0.0);
        }
    }
    let surface = within(&near, 0.5);
    let boundary = within(&near_voxels(&rim, dims, 0.5), 0.5);
    let corners = p.corners.iter().map(|&t| p.rim_point(t)).collect();
    let mesh = height_mesh(&p);
    Ok(Synthetic {
        phi,
        gt: GroundTruth {
            kind,
            dims,
            surface,
            boundary,
            boundary_polyline: rim,
            corners,
            mesh,
        },
    })
}

/// One generated case in a dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub kind: SurfaceKind,
    pub rng_seed: u64,
    pub sigma: f64,
    pub phi: String,
    pub gt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dims: [usize; 3],
    pub cases: Vec<ManifestEntry>,
}

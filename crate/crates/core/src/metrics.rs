//! Precision, recall, F-measure and ground-truth covering between voxel sets.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::SurfaceMesh;
use crate::synth::GroundTruth;

pub const DEFAULT_EPSILON: f64 = 3.0;
const VOXELIZE_PITCH: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    pub gt_cov: f64,
}

/// Integer offsets with norm strictly below `eps`.
fn ball_offsets(eps: f64) -> Vec<[i64; 3]> {
    let r = eps.ceil() as i64;
    let mut out = Vec::new();
    for dz in -r..=r {
        for dy in -r..=r {
            for dx in -r..=r {
                if (((dx * dx + dy * dy + dz * dz) as f64).sqrt()) < eps {
                    out.push([dx, dy, dz]);
                }
            }
        }
    }
    out
}

/// Number of voxels of `a` at distance `< eps` from some voxel of `b`.
fn count_near(a: &[[usize; 3]], b: &HashSet<[usize; 3]>, offsets: &[[i64; 3]]) -> usize {
    a.iter()
        .filter(|v| {
            offsets.iter().any(|o| {
                let w = [v[0] as i64 + o[0], v[1] as i64 + o[1], v[2] as i64 + o[2]];
                w.iter().all(|&x| x >= 0) && b.contains(&w.map(|x| x as usize))
            })
        })
        .count()
}

fn dedup(s: &[[usize; 3]]) -> Vec<[usize; 3]> {
    s.iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Scores of a result set against a ground-truth set.
pub fn evaluate(result: &[[usize; 3]], gt: &[[usize; 3]], eps: f64) -> Result<Scores> {
    if result.is_empty() || gt.is_empty() {
        return Err(Error::Empty("voxel set".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let (r, g) = (dedup(result), dedup(gt));
    let offsets = ball_offsets(eps);
    let rs: HashSet<[usize; 3]> = r.iter().copied().collect();
    let gs: HashSet<[usize; 3]> = g.iter().copied().collect();
    let n_rg = count_near(&r, &gs, &offsets);
    let n_gr = count_near(&g, &rs, &offsets);
    let precision = n_rg as f64 / r.len() as f64;
    let recall = n_gr as f64 / g.len() as f64;
    let f = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    let gt_cov = (n_rg + n_gr) as f64 / (r.len() + g.len()) as f64;
    Ok(Scores {
        precision,
        recall,
        f,
        gt_cov,
    })
}

fn mark_ball(p: [f64; 3], reach: f64, out: &mut BTreeSet<[usize; 3]>) {
    let lo = p.map(|x| (x - reach).ceil().max(0.0) as usize);
    let hi = p.map(|x| (x + reach).floor());
    if hi.iter().any(|&h| h < 0.0) {
        return;
    }
    let hi = hi.map(|h| h as usize);
    for k in lo[2]..=hi[2] {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                let d2 = (i as f64 - p[0]).powi(2)
                    + (j as f64 - p[1]).powi(2)
                    + (k as f64 - p[2]).powi(2);
                if d2 <= reach * reach + 1e-12 {
                    out.insert([i, j, k]);
                }
            }
        }
    }
}

/// Voxels within 0.5 of a quad, found by supersampling every quad
/// bilinearly at `<= 0.25` voxel pitch.
pub fn voxelize_mesh(mesh: &SurfaceMesh) -> Vec<[usize; 3]> {
    let mut out = BTreeSet::new();
    for q in &mesh.quads {
        let [a, b, c, d] = q.map(|i| mesh.vertices[i]);
        let len =
            |p: [f64; 3], r: [f64; 3]| (0..3).map(|k| (p[k] - r[k]).powi(2)).sum::<f64>().sqrt();
        let nu = (len(a, b).max(len(d, c)) / VOXELIZE_PITCH).ceil().max(1.0) as usize;
        let nv = (len(a, d).max(len(b, c)) / VOXELIZE_PITCH).ceil().max(1.0) as usize;
        for j in 0..=nv {
            let t = j as f64 / nv as f64;
            for i in 0..=nu {
                let s = i as f64 / nu as f64;
                let p: [f64; 3] = std::array::from_fn(|k| {
                    (1.0 - s) * (1.0 - t) * a[k]
                        + s * (1.0 - t) * b[k]
                        + s * t * c[k]
                        + (1.0 - s) * t * d[k]
                });
                mark_ball(p, 0.5, &mut out);
            }
        }
    }
    out.into_iter().collect()
}

/// Voxels within 0.5 of a closed polyline, sampled at `<= 0.25` pitch.
pub fn voxelize_polyline(points: &[[f64; 3]]) -> Vec<[usize; 3]> {
    let mut out = BTreeSet::new();
    let n = points.len();
    for i in 0..n {
        let (a, b) = (points[i], points[(i + 1) % n]);
        let l = (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt();
        let steps = (l / VOXELIZE_PITCH).ceil().max(1.0) as usize;
        for s in 0..steps {
            let t = s as f64 / steps as f64;
            mark_ball(
                std::array::from_fn(|k| a[k] + t * (b[k] - a[k])),
                0.5,
                &mut out,
            );
        }
    }
    out.into_iter().collect()
}

/// Surface and boundary scores of one result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub epsilon: f64,
    pub surface: Scores,
    /// Absent when the result carries no boundary curve.
    pub boundary: Option<Scores>,
}

impl MetricReport {
    /// Scores a result mesh, and its boundary polyline when given, against
    /// a ground truth.
    pub fn score(
        mesh: &SurfaceMesh,
        boundary: Option<&[[f64; 3]]>,
        gt: &GroundTruth,
        epsilon: f64,
    ) -> Result<Self> {
        let surface = evaluate(&voxelize_mesh(mesh), &gt.surface, epsilon)?;
        let boundary = match boundary {
            Some(b) => Some(evaluate(&voxelize_polyline(b), &gt.boundary, epsilon)?),
            None => None,
        };
        Ok(MetricReport {
            epsilon,
            surface,
            boundary,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "epsilon {}", self.epsilon)?;
        writeln!(f, "{:<10}{:>8}{:>8}{:>8}{:>8}", "", "P", "R", "F", "GT-Cov")?;
        let rows = std::iter::once(("surface", &self.surface))
            .chain(self.boundary.as_ref().map(|b| ("boundary", b)));
        for (name, s) in rows {
            writeln!(
                f,
                "{name:<10}{:>8.4}{:>8.4}{:>8.4}{:>8.4}",
                s.precision, s.recall, s.f, s.gt_cov
            )?;
        }
        Ok(())
    }
}

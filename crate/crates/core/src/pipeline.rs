//! Seed point to boundary curve and surface, for one seed or many.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cut::{extract_boundary, BoundaryCurve, BoundaryParams, StopReason};
use crate::error::{Error, Result};
use crate::fmm::{fast_march_with, FmmOptions, FmmResult};
use crate::mesh::{complex_to_mesh, SurfaceMesh};
use crate::metrics::{evaluate, voxelize_mesh};
use crate::valley::{valley_extract, verify_minimal_path_cover};
use crate::volume::{propose_seeds, ScalarVolume, SeedPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfCutParams {
    /// Spacing of the fronts in units of `U`.
    pub delta_d: f64,
    /// Cut stopping threshold on the mean cut edge cost.
    pub t: f64,
    /// Multiplier applied to the image before solving.
    pub gain: f64,
    /// Additive regularizer.
    pub rho: f64,
    pub max_fronts: usize,
    /// Distance in voxels within which a minimal path counts as covered.
    pub cover_tol: f64,
    /// Mesh vertices sampled for the cover check (0 disables it).
    pub cover_samples: usize,
    pub rng_seed: u64,
}

impl Default for SurfCutParams {
    fn default() -> Self {
        Self {
            delta_d: 20.0,
            t: 5.0,
            gain: 8.0,
            rho: 0.25,
            max_fronts: 64,
            cover_tol: 2.0,
            cover_samples: 0,
            rng_seed: 0,
        }
    }
}

impl SurfCutParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParam(what.to_string()));
        if !(self.delta_d > 0.0 && self.delta_d.is_finite()) {
            return bad("delta_d must be > 0");
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return bad("t must be > 0");
        }
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return bad("gain must be > 0");
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return bad("rho must be >= 0");
        }
        if self.max_fronts < 2 {
            return bad("max_fronts must be >= 2");
        }
        if !(self.cover_tol >= 0.0) {
            return bad("cover_tol must be >= 0");
        }
        Ok(())
    }

    fn boundary_params(&self) -> BoundaryParams {
        BoundaryParams {
            delta_d: self.delta_d,
            t: self.t,
            max_fronts: self.max_fronts,
        }
    }
}

/// Weighted distances from `p` on the scaled image.
pub fn solve(phi: &ScalarVolume, p: SeedPoint, params: &SurfCutParams) -> Result<FmmResult> {
    params.validate()?;
    let scaled = phi.map(|x| params.gain * x);
    fast_march_with(
        &scaled,
        p,
        &FmmOptions {
            rho: params.rho,
            stop_distance: None,
        },
    )
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    pub fmm: Duration,
    pub boundary: Duration,
    pub surface: Duration,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfCutResult {
    pub seed: SeedPoint,
    pub boundary: BoundaryCurve,
    pub mesh: SurfaceMesh,
    pub stop: StopReason,
    pub curves: usize,
    pub cut_cost: f64,
    pub cut_size: usize,
    /// Minimal-path cover fraction, when sampled.
    pub coverage: Option<f64>,
    pub timings: Timings,
}

impl SurfCutResult {
    /// True when a guard rather than the cut criterion ended the fronts.
    pub fn is_degraded(&self) -> bool {
        self.stop.is_degraded()
    }
}

fn surface_mesh(res: &FmmResult, boundary: &BoundaryCurve) -> Result<SurfaceMesh> {
    let x = valley_extract(&res.u, boundary)?;
    let mut mesh = complex_to_mesh(&x)?;
    mesh.set_boundary(&boundary.lattice);
    Ok(mesh)
}

/// The surface spanning a known boundary curve.
pub fn surface_from_boundary(
    phi: &ScalarVolume,
    p: SeedPoint,
    boundary: &BoundaryCurve,
    params: &SurfCutParams,
) -> Result<SurfaceMesh> {
    let res = solve(phi, p, params)?;
    surface_mesh(&res, boundary)
}

pub fn surfcut(phi: &ScalarVolume, p: SeedPoint, params: &SurfCutParams) -> Result<SurfCutResult> {
    let t0 = Instant::now();
    let res = solve(phi, p, params)?;
    let t1 = Instant::now();
    let ex = extract_boundary(&res, &params.boundary_params())?;
    let t2 = Instant::now();
    let mesh = surface_mesh(&res, &ex.boundary)?;
    let t3 = Instant::now();
    let coverage = if params.cover_samples > 0 {
        Some(verify_minimal_path_cover(
            &mesh,
            &res,
            params.cover_samples,
            params.cover_tol,
            params.rng_seed,
        )?)
    } else {
        None
    };
    Ok(SurfCutResult {
        seed: res.seed,
        boundary: ex.boundary,
        mesh,
        stop: ex.stop,
        curves: ex.curves.len(),
        cut_cost: ex.cut_cost,
        cut_size: ex.cut_size,
        coverage,
        timings: Timings {
            fmm: t1 - t0,
            boundary: t2 - t1,
            surface: t3 - t2,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutoParams {
    pub max_seeds: usize,
    /// Only voxels at or below this percentile of the image are candidates.
    pub percentile: f64,
    pub suppression_radius: f64,
    /// Worker threads (0 lets the pool decide).
    pub threads: usize,
    /// Results whose surfaces reach this GT-Cov against a kept one are dropped.
    pub dedup_cov: f64,
}

impl Default for AutoParams {
    fn default() -> Self {
        Self {
            max_seeds: 8,
            percentile: 10.0,
            suppression_radius: 10.0,
            threads: 0,
            dedup_cov: 0.8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AutoReport {
    pub surfaces: Vec<SurfCutResult>,
    /// Seeds whose result duplicated an earlier surface.
    pub duplicates: Vec<SeedPoint>,
    /// Seeds whose run failed, with the error text.
    pub failures: Vec<(SeedPoint, String)>,
}

/// Runs [`surfcut`] from every proposed seed and drops duplicate surfaces,
/// keeping the earliest seed of each.
pub fn surfcut_auto(
    phi: &ScalarVolume,
    params: &SurfCutParams,
    auto: &AutoParams,
) -> Result<AutoReport> {
    params.validate()?;
    let seeds = propose_seeds(
        phi,
        auto.max_seeds,
        auto.percentile,
        auto.suppression_radius,
    )?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(auto.threads)
        .build()
        .map_err(|e| Error::InvalidParam(e.to_string()))?;
    let runs: Vec<Result<SurfCutResult>> =
        pool.install(|| seeds.par_iter().map(|s| surfcut(phi, *s, params)).collect());

    let mut report = AutoReport {
        surfaces: Vec::new(),
        duplicates: Vec::new(),
        failures: Vec::new(),
    };
    let mut kept_voxels: Vec<Vec<[usize; 3]>> = Vec::new();
    for (seed, run) in seeds.iter().zip(runs) {
        match run {
            Ok(r) => {
                let vox = voxelize_mesh(&r.mesh);
                let dup = !vox.is_empty()
                    && kept_voxels
                        .iter()
                        .any(|k| evaluate(&vox, k, 3.0).is_ok_and(|s| s.gt_cov >= auto.dedup_cov));
                if dup {
                    report.duplicates.push(*seed);
                } else {
                    kept_voxels.push(vox);
                    report.surfaces.push(r);
                }
            }
            Err(e) => report.failures.push((*seed, e.to_string())),
        }
    }
    Ok(report)
}

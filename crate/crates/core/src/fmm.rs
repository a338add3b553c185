//! Fast Marching for `|grad U| = phi` on the 6-connected grid, tracking the
//! Euclidean length `U_E` of the minimal paths alongside the weighted distance.
//!
//! `U_E` is advanced with the same upwind stencil as `U`: when the Godunov
//! update at `x` uses upwind neighbours `x_i` whose quadratic solution gives
//! weights `w_i` proportional to `U(x) - U(x_i)`, then
//! `U_E(x) = sum w_i U_E(x_i) + |sum w_i (x - x_i)|`.
//! With a single upwind neighbour this reduces to `U_E(x_i) + 1`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::volume::{ScalarVolume, SeedPoint, Voxel, NEIGHBORS_6};

/// Lower bound applied to the speed cost before solving.
pub const PHI_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmmOptions {
    /// Additive regularizer on `phi`; smooths minimal paths.
    pub rho: f64,
    /// Halt once the next accepted value would exceed this.
    pub stop_distance: Option<f64>,
}

impl Default for FmmOptions {
    fn default() -> Self {
        Self {
            rho: 0.0,
            stop_distance: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FmmResult {
    pub u: ScalarVolume,
    pub ue: ScalarVolume,
    pub accept_order: Vec<usize>,
    pub visited: Vec<bool>,
    pub seed: SeedPoint,
    /// The floored, regularized cost actually marched on.
    pub cost: ScalarVolume,
}

impl FmmResult {
    pub fn dims(&self) -> [usize; 3] {
        self.u.dims()
    }

    pub fn is_visited(&self, v: Voxel) -> bool {
        self.visited[self.u.index(v)]
    }

    /// Largest accepted `U`.
    pub fn max_accepted(&self) -> f64 {
        self.accept_order
            .last()
            .map(|&i| self.u.data()[i])
            .unwrap_or(0.0)
    }

    /// Recomputes the Godunov update of an accepted voxel from the final field,
    /// using only neighbours accepted strictly earlier.
    pub fn recompute(&self, v: Voxel) -> Option<(f64, f64)> {
        let mut rank = vec![usize::MAX; self.u.len()];
        for (r, &i) in self.accept_order.iter().enumerate() {
            rank[i] = r;
        }
        let me = rank[self.u.index(v)];
        let natural = upwind_solve(&self.u, &self.ue, v, self.cost.get(v), |i| rank[i] < me)?;
        match SeedBall::new(&self.cost, self.seed.voxel()).get(v) {
            Some(b) if b.0 < natural.0 => Some(b),
            _ => Some(natural),
        }
    }
}

/// Solves the first-order upwind quadratic at `v` from neighbours selected by
/// `known`. Returns `(U, U_E)`.
fn upwind_solve(
    u: &ScalarVolume,
    ue: &ScalarVolume,
    v: Voxel,
    phi: f64,
    known: impl Fn(usize) -> bool,
) -> Option<(f64, f64)> {
    // per axis: smallest known neighbour
    let mut cand: [(f64, f64); 3] = [(f64::INFINITY, 0.0); 3];
    let mut n = 0;
    for axis in 0..3 {
        for off in [&NEIGHBORS_6[2 * axis], &NEIGHBORS_6[2 * axis + 1]] {
            if let Some(w) = u.offset(v, *off) {
                let i = u.index(w);
                if known(i) {
                    let val = u.data()[i];
                    if val < cand[axis].0 {
                        cand[axis] = (val, ue.data()[i]);
                    }
                }
            }
        }
    }
    let mut nb: [(f64, f64); 3] = [(0.0, 0.0); 3];
    for c in cand {
        if c.0.is_finite() {
            nb[n] = c;
            n += 1;
        }
    }
    if n == 0 {
        return None;
    }
    let nb = &mut nb[..n];
    nb.sort_by(|a, b| a.0.total_cmp(&b.0));
    Some(godunov(nb, phi))
}

/// Radius (voxels) of the ball around the seed initialised with straight-line
/// values when the cost is flat there. The trial value inside the ball is the
/// smaller of this and the upwind update.
pub const SEED_BALL_RADIUS: f64 = 4.0;
/// Relative cost spread below which the ball counts as flat.
pub const SEED_BALL_FLATNESS: f64 = 1e-3;

struct SeedBall {
    dims: [usize; 3],
    origin: [usize; 3],
    span: usize,
    values: Vec<Option<(f64, f64)>>,
}

impl SeedBall {
    fn new(cost: &ScalarVolume, seed: Voxel) -> Self {
        let dims = cost.dims();
        let reach = SEED_BALL_RADIUS as usize;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for z in seed[2].saturating_sub(reach)..=(seed[2] + reach).min(dims[2] - 1) {
            for y in seed[1].saturating_sub(reach)..=(seed[1] + reach).min(dims[1] - 1) {
                for x in seed[0].saturating_sub(reach)..=(seed[0] + reach).min(dims[0] - 1) {
                    let c = cost.get([x, y, z]);
                    lo = lo.min(c);
                    hi = hi.max(c);
                }
            }
        }
        let flat = hi <= lo * (1.0 + SEED_BALL_FLATNESS);
        let radius = if flat { SEED_BALL_RADIUS } else { 3f64.sqrt() };
        let r = radius.floor() as usize;
        let origin = [
            seed[0].saturating_sub(r),
            seed[1].saturating_sub(r),
            seed[2].saturating_sub(r),
        ];
        let span = 2 * r + 1;
        let mut values = vec![None; span * span * span];
        for dz in 0..span {
            for dy in 0..span {
                for dx in 0..span {
                    let v = [origin[0] + dx, origin[1] + dy, origin[2] + dz];
                    if (0..3).any(|a| v[a] >= dims[a]) || v == seed {
                        continue;
                    }
                    let len = (0..3)
                        .map(|a| (v[a] as f64 - seed[a] as f64).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    if len > radius {
                        continue;
                    }
                    let val = if flat {
                        line_integral(cost, seed, v)
                    } else {
                        len * 0.5 * (cost.get(seed) + cost.get(v))
                    };
                    values[dx + span * (dy + span * dz)] = Some((val, len));
                }
            }
        }
        Self {
            dims,
            origin,
            span,
            values,
        }
    }

    fn get(&self, v: Voxel) -> Option<(f64, f64)> {
        let _ = self.dims;
        let d: [usize; 3] = std::array::from_fn(|a| v[a].wrapping_sub(self.origin[a]));
        if d.iter().any(|&x| x >= self.span) {
            return None;
        }
        self.values[d[0] + self.span * (d[1] + self.span * d[2])]
    }
}

/// Midpoint-rule integral of the trilinearly interpolated cost along `a -> b`.
fn line_integral(cost: &ScalarVolume, a: Voxel, b: Voxel) -> f64 {
    let pa = a.map(|x| x as f64);
    let pb = b.map(|x| x as f64);
    let len = (0..3).map(|i| (pb[i] - pa[i]).powi(2)).sum::<f64>().sqrt();
    let n = (len * 16.0).ceil() as usize;
    let mut acc = 0.0;
    for s in 0..n {
        let t = (s as f64 + 0.5) / n as f64;
        let p: [f64; 3] = std::array::from_fn(|i| pa[i] + t * (pb[i] - pa[i]));
        acc += trilinear_sample(cost, p);
    }
    acc * len / n as f64
}

fn trilinear_sample(v: &ScalarVolume, p: [f64; 3]) -> f64 {
    let d = v.dims();
    let base: [usize; 3] = std::array::from_fn(|a| (p[a].floor().max(0.0) as usize).min(d[a] - 2));
    let t: [f64; 3] = std::array::from_fn(|a| (p[a] - base[a] as f64).clamp(0.0, 1.0));
    let mut acc = 0.0;
    for corner in 0..8 {
        let o = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
        let w: f64 = (0..3)
            .map(|a| if o[a] == 1 { t[a] } else { 1.0 - t[a] })
            .product();
        if w > 0.0 {
            acc += w * v.get([base[0] + o[0], base[1] + o[1], base[2] + o[2]]);
        }
    }
    acc
}

/// `nb` sorted ascending by value; each entry is `(U, U_E)` of the upwind
/// neighbour along a distinct axis.
fn godunov(nb: &[(f64, f64)], phi: f64) -> (f64, f64) {
    let mut used = 1;
    let mut value = nb[0].0 + phi;
    for m in 2..=nb.len() {
        if value <= nb[m - 1].0 {
            break;
        }
        let s: f64 = nb[..m].iter().map(|x| x.0).sum();
        let s2: f64 = nb[..m].iter().map(|x| x.0 * x.0).sum();
        let mf = m as f64;
        let disc = s * s - mf * (s2 - phi * phi);
        if disc < 0.0 {
            break;
        }
        value = (s + disc.sqrt()) / mf;
        used = m;
    }
    let used_nb = &nb[..used];
    if used == 1 {
        return (value, used_nb[0].1 + 1.0);
    }
    let deltas: Vec<f64> = used_nb.iter().map(|x| (value - x.0).max(0.0)).collect();
    let total: f64 = deltas.iter().sum();
    if total <= 0.0 {
        let e = used_nb.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        return (value, e + 1.0);
    }
    let mut e = 0.0;
    let mut norm2 = 0.0;
    for (d, x) in deltas.iter().zip(used_nb) {
        let w = d / total;
        e += w * x.1;
        norm2 += w * w;
    }
    (value, e + norm2.sqrt())
}

pub fn fast_march(
    phi: &ScalarVolume,
    p: SeedPoint,
    stop_distance: Option<f64>,
) -> Result<FmmResult> {
    fast_march_with(
        phi,
        p,
        &FmmOptions {
            rho: 0.0,
            stop_distance,
        },
    )
}

pub fn fast_march_with(phi: &ScalarVolume, p: SeedPoint, opts: &FmmOptions) -> Result<FmmResult> {
    let dims = phi.dims();
    let seed = SeedPoint::new(p.voxel(), dims)?;
    if !(opts.rho >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "rho must be >= 0, got {}",
            opts.rho
        )));
    }
    let cost = phi.map(|x| (x + opts.rho).max(PHI_FLOOR));
    if let Some(bad) = cost.data().iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "speed cost must be finite and positive, got {bad}"
        )));
    }

    let n = phi.len();
    let mut u = ScalarVolume::from_vec(dims, vec![f64::INFINITY; n])?;
    let mut ue = ScalarVolume::from_vec(dims, vec![f64::INFINITY; n])?;
    let mut accepted = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut heap: BinaryHeap<Reverse<(OrderedFloat<f64>, usize)>> = BinaryHeap::new();

    let ball = SeedBall::new(&cost, seed.voxel());
    let s = u.index(seed.voxel());
    u.data_mut()[s] = 0.0;
    ue.data_mut()[s] = 0.0;
    heap.push(Reverse((OrderedFloat(0.0), s)));

    while let Some(Reverse((OrderedFloat(val), i))) = heap.pop() {
        if accepted[i] || val > u.data()[i] {
            continue;
        }
        if let Some(stop) = opts.stop_distance {
            if val > stop {
                break;
            }
        }
        accepted[i] = true;
        order.push(i);
        let v = u.voxel(i);
        for off in &NEIGHBORS_6 {
            let Some(w) = u.offset(v, *off) else { continue };
            let wi = u.index(w);
            if accepted[wi] {
                continue;
            }
            let (mut nu, mut nue) = upwind_solve(&u, &ue, w, cost.data()[wi], |k| accepted[k])
                .expect("an accepted neighbour exists");
            if let Some((bu, bue)) = ball.get(w) {
                if bu < nu {
                    nu = bu;
                    nue = bue;
                }
            }
            if nu < u.data()[wi] {
                u.data_mut()[wi] = nu;
                ue.data_mut()[wi] = nue;
                heap.push(Reverse((OrderedFloat(nu), wi)));
            }
        }
    }

    // trial values that were never accepted go back to the sentinel
    for i in 0..n {
        if !accepted[i] {
            u.data_mut()[i] = f64::INFINITY;
            ue.data_mut()[i] = f64::INFINITY;
        }
    }
    Ok(FmmResult {
        u,
        ue,
        accept_order: order,
        visited: accepted,
        seed,
        cost,
    })
}

/// Polyline from `x` back to the seed with its length.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalPath {
    pub points: Vec<[f64; 3]>,
    pub length: f64,
}

const BACKTRACK_STEP: f64 = 0.5;

/// Follows `-grad U` from `x` to the seed in half-voxel steps, falling back to
/// the lowest accepted 26-neighbour where the gradient stalls.
pub fn backtrack_minimal_path(res: &FmmResult, x: Voxel) -> Result<MinimalPath> {
    if !res
        .u
        .contains([x[0] as isize, x[1] as isize, x[2] as isize])
        || !res.is_visited(x)
    {
        return Err(Error::InvalidParam(format!("voxel {x:?} was not visited")));
    }
    let seed = res.seed.position();
    let mut p = [x[0] as f64, x[1] as f64, x[2] as f64];
    let mut points = vec![p];
    let max_steps = 8 * res.u.len().max(64);
    let mut current = interp_u(res, p);
    for _ in 0..max_steps {
        if dist(p, seed) <= 1.0 {
            break;
        }
        let g = gradient(res, p);
        let gn = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        let mut next = None;
        if gn > 1e-12 {
            let q = [
                p[0] - BACKTRACK_STEP * g[0] / gn,
                p[1] - BACKTRACK_STEP * g[1] / gn,
                p[2] - BACKTRACK_STEP * g[2] / gn,
            ];
            if inside(res, q) {
                let uq = interp_u(res, q);
                if uq < current {
                    next = Some((q, uq));
                }
            }
        }
        let (q, uq) = match next {
            Some(n) => n,
            None => steepest_neighbor(res, p)
                .ok_or_else(|| Error::InvalidParam(format!("minimal path stalled at {p:?}")))?,
        };
        p = q;
        current = uq;
        points.push(p);
    }
    if dist(p, seed) > 1.0 {
        return Err(Error::InvalidParam(
            "minimal path did not reach the seed".into(),
        ));
    }
    if p != seed {
        points.push(seed);
    }
    let length = points.windows(2).map(|w| dist(w[0], w[1])).sum();
    Ok(MinimalPath { points, length })
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn inside(res: &FmmResult, p: [f64; 3]) -> bool {
    let d = res.dims();
    (0..3).all(|a| p[a] >= 0.0 && p[a] <= (d[a] - 1) as f64)
}

fn nearest(res: &FmmResult, p: [f64; 3]) -> Voxel {
    let d = res.dims();
    let r = |a: usize| (p[a].round().max(0.0) as usize).min(d[a] - 1);
    [r(0), r(1), r(2)]
}

/// Trilinear interpolation over visited corners; unvisited corners are skipped.
fn interp_u(res: &FmmResult, p: [f64; 3]) -> f64 {
    trilinear(res, p, |v| {
        let x = res.u.get(v);
        x.is_finite().then_some(x)
    })
    .map(|g| g[0])
    .unwrap_or(f64::INFINITY)
}

fn gradient(res: &FmmResult, p: [f64; 3]) -> [f64; 3] {
    trilinear3(res, p, |v| lattice_gradient(res, v)).unwrap_or([0.0; 3])
}

fn lattice_gradient(res: &FmmResult, v: Voxel) -> Option<[f64; 3]> {
    let c = res.u.get(v);
    if !c.is_finite() {
        return None;
    }
    let mut g = [0.0; 3];
    for axis in 0..3 {
        let lo = res
            .u
            .offset(v, NEIGHBORS_6[2 * axis])
            .map(|w| res.u.get(w))
            .filter(|x| x.is_finite());
        let hi = res
            .u
            .offset(v, NEIGHBORS_6[2 * axis + 1])
            .map(|w| res.u.get(w))
            .filter(|x| x.is_finite());
        g[axis] = match (lo, hi) {
            (Some(l), Some(h)) => (h - l) / 2.0,
            (Some(l), None) => c - l,
            (None, Some(h)) => h - c,
            (None, None) => 0.0,
        };
    }
    Some(g)
}

fn trilinear(res: &FmmResult, p: [f64; 3], f: impl Fn(Voxel) -> Option<f64>) -> Option<[f64; 3]> {
    trilinear3(res, p, |v| f(v).map(|x| [x, 0.0, 0.0]))
}

fn trilinear3(
    res: &FmmResult,
    p: [f64; 3],
    f: impl Fn(Voxel) -> Option<[f64; 3]>,
) -> Option<[f64; 3]> {
    let d = res.dims();
    let base: [usize; 3] = std::array::from_fn(|a| (p[a].floor().max(0.0) as usize).min(d[a] - 2));
    let t: [f64; 3] = std::array::from_fn(|a| (p[a] - base[a] as f64).clamp(0.0, 1.0));
    let mut acc = [0.0; 3];
    let mut wsum = 0.0;
    for corner in 0..8 {
        let o = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
        let w: f64 = (0..3)
            .map(|a| if o[a] == 1 { t[a] } else { 1.0 - t[a] })
            .product();
        if w == 0.0 {
            continue;
        }
        if let Some(val) = f([base[0] + o[0], base[1] + o[1], base[2] + o[2]]) {
            for a in 0..3 {
                acc[a] += w * val[a];
            }
            wsum += w;
        }
    }
    (wsum > 0.0).then(|| acc.map(|x| x / wsum))
}

fn steepest_neighbor(res: &FmmResult, p: [f64; 3]) -> Option<([f64; 3], f64)> {
    let v = nearest(res, p);
    let here = res.u.get(v).min(interp_u(res, p));
    let mut best: Option<(Voxel, f64)> = None;
    for dz in -1..=1isize {
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                if (dx, dy, dz) == (0, 0, 0) {
                    continue;
                }
                if let Some(w) = res.u.offset(v, [dx, dy, dz]) {
                    let x = res.u.get(w);
                    if x < here && best.is_none_or(|b| x < b.1) {
                        best = Some((w, x));
                    }
                }
            }
        }
    }
    best.map(|(w, x)| ([w[0] as f64, w[1] as f64, w[2] as f64], x))
}

/// Cells (3-faces) whose eight corner samples all satisfy `U < D`.
#[derive(Debug, Clone)]
pub struct CellMask {
    pub extent: [usize; 3],
    pub inside: Vec<bool>,
}

impl CellMask {
    #[inline]
    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.extent[0] * (c[1] + self.extent[1] * c[2])
    }

    #[inline]
    pub fn get(&self, c: [usize; 3]) -> bool {
        self.inside[self.index(c)]
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }
}

pub fn front_indicator(res: &FmmResult, d: f64) -> Result<CellMask> {
    if !(d > 0.0) {
        return Err(Error::InvalidParam(format!(
            "front distance must be > 0, got {d}"
        )));
    }
    let dims = res.dims();
    let extent = [dims[0] - 1, dims[1] - 1, dims[2] - 1];
    let mut inside = vec![false; extent[0] * extent[1] * extent[2]];
    let u = &res.u;
    for k in 0..extent[2] {
        for j in 0..extent[1] {
            for i in 0..extent[0] {
                let all = (0..8)
                    .all(|c| u.get([i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1)]) < d);
                inside[i + extent[0] * (j + extent[1] * k)] = all;
            }
        }
    }
    Ok(CellMask { extent, inside })
}

//! Ridge curves over growing fronts, the curve graph, its minimum cut and the
//! surface boundary assembled from the cut.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::cubical::{CubicalComplex, Face};
use crate::error::{Error, Result};
use crate::fmm::FmmResult;
use crate::front::build_front_complex;
use crate::ridge::{highest_ridge, RidgeCurve};
use crate::volume::SeedPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    Intra,
    Inter,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    pub cost: f64,
    pub kind: EdgeKind,
}

/// Vertices are the 0-faces of every curve, tagged with their curve index.
/// The source (the seed) is joined to every vertex of the first curve with
/// infinite capacity; every vertex of the last curve belongs to the sink.
#[derive(Debug, Clone, Serialize)]
pub struct CurveGraph {
    pub seed: [f64; 3],
    pub faces: Vec<Face>,
    pub curve_of: Vec<usize>,
    pub edges: Vec<GraphEdge>,
    pub ncurves: usize,
}

impl CurveGraph {
    pub fn position(&self, v: usize) -> [f64; 3] {
        self.faces[v].center()
    }

    pub fn source_links(&self) -> Vec<usize> {
        (0..self.faces.len())
            .filter(|&v| self.curve_of[v] == 0)
            .collect()
    }

    pub fn sink_vertices(&self) -> Vec<usize> {
        (0..self.faces.len())
            .filter(|&v| self.curve_of[v] + 1 == self.ncurves)
            .collect()
    }

    /// Vertex count including the source.
    pub fn vertex_count(&self) -> usize {
        self.faces.len() + 1
    }

    pub fn count(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Smallest distance between segments `[p1, q1]` and `[p2, q2]`.
pub fn segment_distance(p1: [f64; 3], q1: [f64; 3], p2: [f64; 3], q2: [f64; 3]) -> f64 {
    let d1 = sub(q1, p1);
    let d2 = sub(q2, p2);
    let r = sub(p1, p2);
    let a = dot(d1, d1);
    let e = dot(d2, d2);
    let f = dot(d2, r);
    let eps = 1e-12;
    let (s, t) = if a <= eps && e <= eps {
        (0.0, 0.0)
    } else if a <= eps {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = dot(d1, r);
        if e <= eps {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = dot(d1, d2);
            let denom = a * e - b * b;
            let mut s = if denom > eps {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    let c1 = [p1[0] + d1[0] * s, p1[1] + d1[1] * s, p1[2] + d1[2] * s];
    let c2 = [p2[0] + d2[0] * t, p2[1] + d2[1] * t, p2[2] + d2[2] * t];
    dist(c1, c2)
}

/// Builds the graph over curves `c_1 .. c_l` (in order of growing front).
pub fn build_curve_graph(curves: &[RidgeCurve], p: SeedPoint) -> Result<CurveGraph> {
    if curves.len() < 2 {
        return Err(Error::TooFewCurves(curves.len()));
    }
    let mut faces = Vec::new();
    let mut curve_of = Vec::new();
    let mut index: Vec<HashMap<Face, usize>> = Vec::with_capacity(curves.len());
    for (i, c) in curves.iter().enumerate() {
        let mut map = HashMap::new();
        for v in c.vertices() {
            map.insert(v, faces.len());
            faces.push(v);
            curve_of.push(i);
        }
        index.push(map);
    }

    let segs = |c: &RidgeCurve| -> Vec<([f64; 3], [f64; 3])> {
        c.edges
            .iter()
            .map(|e| {
                let k = e.corners();
                (k[0].center(), k[1].center())
            })
            .collect()
    };

    let mut edges = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        let next_segs = curves.get(i + 1).map(segs);
        for e in &c.edges {
            let k = e.corners();
            let cost = match &next_segs {
                Some(ns) => {
                    let (a, b) = (k[0].center(), k[1].center());
                    ns.iter()
                        .map(|&(p2, q2)| segment_distance(a, b, p2, q2))
                        .fold(f64::INFINITY, f64::min)
                }
                None => 0.0,
            };
            edges.push(GraphEdge {
                a: index[i][&k[0]],
                b: index[i][&k[1]],
                cost,
                kind: EdgeKind::Intra,
            });
        }
        if let Some(next) = curves.get(i + 1) {
            let targets = next.vertices();
            for v in c.vertices() {
                let pv = v.center();
                let (best, d) = targets.iter().map(|w| (*w, dist(pv, w.center()))).fold(
                    (targets[0], f64::INFINITY),
                    |acc, x| if x.1 < acc.1 { x } else { acc },
                );
                edges.push(GraphEdge {
                    a: index[i][&v],
                    b: index[i + 1][&best],
                    cost: d,
                    kind: EdgeKind::Inter,
                });
            }
        }
    }
    Ok(CurveGraph {
        seed: p.position(),
        faces,
        curve_of,
        edges,
        ncurves: curves.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinCut {
    /// Indices of the cut edges.
    pub edges: Vec<usize>,
    pub cost: f64,
    /// Vertices on the source side.
    pub source_side: Vec<bool>,
    /// No path joins source and sink: empty cut of cost 0.
    pub disconnected: bool,
}

/// Minimum cut between the vertex sets `sources` and `sinks` of an
/// undirected graph with non-negative capacities, by shortest augmenting
/// paths. The source side is the set reachable in the final residual graph.
pub fn min_cut_undirected(
    n: usize,
    edges: &[(usize, usize, f64)],
    sources: &[usize],
    sinks: &[usize],
) -> MinCut {
    const EPS: f64 = 1e-12;
    let s = n;
    let t = n + 1;
    let mut head: Vec<usize> = Vec::new();
    let mut cap: Vec<f64> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + 2];
    let mut add = |u: usize, v: usize, c: f64, head: &mut Vec<usize>, cap: &mut Vec<f64>| {
        adj[u].push(head.len());
        head.push(v);
        cap.push(c);
        adj[v].push(head.len());
        head.push(u);
        cap.push(c);
    };
    for &(a, b, c) in edges {
        if a != b {
            add(a, b, c, &mut head, &mut cap);
        }
    }
    for &v in sources {
        add(s, v, f64::INFINITY, &mut head, &mut cap);
    }
    for &v in sinks {
        add(v, t, f64::INFINITY, &mut head, &mut cap);
    }

    let bfs = |cap: &[f64], eps: f64| -> Vec<Option<usize>> {
        let mut via: Vec<Option<usize>> = vec![None; n + 2];
        let mut seen = vec![false; n + 2];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &arc in &adj[u] {
                let v = head[arc];
                if !seen[v] && cap[arc] > eps {
                    seen[v] = true;
                    via[v] = Some(arc);
                    q.push_back(v);
                }
            }
        }
        via[s] = Some(usize::MAX);
        via
    };

    let connected = bfs(&cap, -1.0)[t].is_some();
    loop {
        let via = bfs(&cap, EPS);
        if via[t].is_none() {
            break;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = t;
        while v != s {
            let arc = via[v].expect("path");
            bottleneck = bottleneck.min(cap[arc]);
            v = head[arc ^ 1];
        }
        if !bottleneck.is_finite() {
            // source and sink share a vertex; nothing finite separates them
            break;
        }
        let mut v = t;
        while v != s {
            let arc = via[v].expect("path");
            cap[arc] -= bottleneck;
            cap[arc ^ 1] += bottleneck;
            v = head[arc ^ 1];
        }
    }

    let via = bfs(&cap, EPS);
    let source_side: Vec<bool> = (0..n).map(|v| via[v].is_some()).collect();
    if !connected {
        return MinCut {
            edges: Vec::new(),
            cost: 0.0,
            source_side,
            disconnected: true,
        };
    }
    let mut cut = Vec::new();
    let mut cost = 0.0;
    for (i, &(a, b, c)) in edges.iter().enumerate() {
        if a != b && source_side[a] != source_side[b] {
            cut.push(i);
            cost += c;
        }
    }
    MinCut {
        edges: cut,
        cost,
        source_side,
        disconnected: false,
    }
}

pub fn min_cut(g: &CurveGraph) -> MinCut {
    let edges: Vec<(usize, usize, f64)> = g.edges.iter().map(|e| (e.a, e.b, e.cost)).collect();
    min_cut_undirected(g.faces.len(), &edges, &g.source_links(), &g.sink_vertices())
}

/// True when the mean cost per cut edge is below `t`.
pub fn stopping_check(cut_cost: f64, cut_size: usize, t: f64) -> Result<bool> {
    if cut_size == 0 {
        return Err(Error::InvalidParam("cut size must be at least 1".into()));
    }
    Ok(cut_cost / (cut_size as f64) < t)
}

/// A closed polyline and its rasterisation as a simple loop of lattice
/// points joined by grid 1-faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub polyline: Vec<[f64; 3]>,
    pub lattice: Vec<[usize; 3]>,
}

impl BoundaryCurve {
    /// The grid 1-faces between consecutive lattice points (closing edge
    /// included).
    pub fn edges(&self) -> Vec<Face> {
        let n = self.lattice.len();
        (0..n)
            .map(|i| {
                let a = Face::vertex(self.lattice[i]).0;
                let b = Face::vertex(self.lattice[(i + 1) % n]).0;
                Face([(a[0] + b[0]) / 2, (a[1] + b[1]) / 2, (a[2] + b[2]) / 2])
            })
            .collect()
    }

    /// Rasterises a closed polyline onto the lattice of `dims` points.
    pub fn from_polyline(polyline: Vec<[f64; 3]>, dims: [usize; 3]) -> Result<Self> {
        let lattice = rasterize_loop(&polyline, dims)?;
        Ok(Self { polyline, lattice })
    }

    pub fn complex(&self, extent: [usize; 3]) -> Result<CubicalComplex> {
        CubicalComplex::from_faces(extent, self.edges())
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        self.lattice.iter().map(|v| v.map(|x| x as f64)).collect()
    }

    /// Every lattice point distinct and consecutive points 6-adjacent.
    pub fn is_simple_loop(&self) -> bool {
        let n = self.lattice.len();
        if n < 4 {
            return false;
        }
        let mut seen = std::collections::HashSet::new();
        self.lattice.iter().all(|v| seen.insert(*v))
            && (0..n).all(|i| {
                let (a, b) = (self.lattice[i], self.lattice[(i + 1) % n]);
                (0..3).map(|k| a[k].abs_diff(b[k])).sum::<usize>() == 1
            })
    }
}

/// Chains the midpoints of the cut edges into a closed loop and rasterises
/// it onto the lattice of `dims` points.
pub fn assemble_boundary(g: &CurveGraph, cut: &MinCut, dims: [usize; 3]) -> Result<BoundaryCurve> {
    let mut mids: Vec<[f64; 3]> = Vec::with_capacity(cut.edges.len());
    for &i in &cut.edges {
        let e = &g.edges[i];
        let (a, b) = (g.position(e.a), g.position(e.b));
        let m = [
            (a[0] + b[0]) / 2.0,
            (a[1] + b[1]) / 2.0,
            (a[2] + b[2]) / 2.0,
        ];
        if !mids.iter().any(|q| dist(*q, m) < 1e-9) {
            mids.push(m);
        }
    }
    if mids.len() < 3 {
        return Err(Error::DegenerateCut(format!(
            "{} distinct cut midpoints",
            mids.len()
        )));
    }
    let polyline = chain_loop(mids)?;
    let lattice = rasterize_loop(&polyline, dims)?;
    Ok(BoundaryCurve { polyline, lattice })
}

/// Nearest-neighbour chaining from the first point, closed, then untangled
/// by 2-opt moves. Fails when the loop falls apart into separate clusters.
fn chain_loop(pts: Vec<[f64; 3]>) -> Result<Vec<[f64; 3]>> {
    let n = pts.len();
    let mut order = Vec::with_capacity(n);
    let mut used = vec![false; n];
    let mut cur = 0;
    used[0] = true;
    order.push(0);
    for _ in 1..n {
        let mut best = usize::MAX;
        let mut bd = f64::INFINITY;
        for j in 0..n {
            if !used[j] {
                let d = dist(pts[cur], pts[j]);
                if d < bd {
                    bd = d;
                    best = j;
                }
            }
        }
        used[best] = true;
        order.push(best);
        cur = best;
    }
    let mut path: Vec<[f64; 3]> = order.iter().map(|&i| pts[i]).collect();

    // 2-opt and segment relocation on the closed tour
    let mut rounds = 0;
    while rounds < 100 && (two_opt(&mut path) | or_opt(&mut path)) {
        rounds += 1;
    }

    // a tour over separate clusters jumps between them at least twice
    let steps: Vec<f64> = (0..n).map(|i| dist(path[i], path[(i + 1) % n])).collect();
    let mut sorted = steps.clone();
    sorted.sort_by(f64::total_cmp);
    let jump = (10.0 * sorted[n / 2].max(0.5)).max(8.0);
    let long: Vec<f64> = steps.iter().copied().filter(|&d| d > jump).collect();
    if long.len() >= 2 {
        return Err(Error::Chaining(format!(
            "{} gaps longer than {jump:.2} voxels split the cut into several loops",
            long.len()
        )));
    }
    Ok(path)
}

fn two_opt(path: &mut [[f64; 3]]) -> bool {
    let n = path.len();
    let mut improved = false;
    for i in 0..n - 1 {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b) = (path[i], path[i + 1]);
            let (c, d) = (path[j], path[(j + 1) % n]);
            if dist(a, c) + dist(b, d) < dist(a, b) + dist(c, d) - 1e-9 {
                path[i + 1..=j].reverse();
                improved = true;
            }
        }
    }
    improved
}

/// Moves runs of up to three points to the cheapest other gap, either way round.
fn or_opt(path: &mut Vec<[f64; 3]>) -> bool {
    let mut improved = false;
    for len in 1..=3 {
        let mut i = 0;
        while i < path.len() {
            let n = path.len();
            if n < len + 3 {
                return improved;
            }
            // rotate so the run starts at index 1
            path.rotate_left((i + n - 1) % n);
            let run: Vec<[f64; 3]> = path[1..=len].to_vec();
            let (prev, next) = (path[0], path[len + 1]);
            let gain = dist(prev, run[0]) + dist(run[len - 1], next) - dist(prev, next);
            let rest: Vec<[f64; 3]> = std::iter::once(path[0])
                .chain(path[len + 1..].iter().copied())
                .collect();
            let m = rest.len();
            let mut best: Option<(f64, usize, bool)> = None;
            for k in 0..m {
                let (a, b) = (rest[k], rest[(k + 1) % m]);
                let base = dist(a, b);
                for rev in [false, true] {
                    let (h, t) = if rev {
                        (run[len - 1], run[0])
                    } else {
                        (run[0], run[len - 1])
                    };
                    let add = dist(a, h) + dist(t, b) - base;
                    if add < gain - 1e-9 && best.is_none_or(|x| add < x.0) {
                        best = Some((add, k, rev));
                    }
                }
            }
            path.rotate_right((i + n - 1) % n);
            if let Some((_, k, rev)) = best {
                let mut seg = run;
                if rev {
                    seg.reverse();
                }
                let mut out = rest;
                out.splice(k + 1..k + 1, seg);
                *path = out;
                improved = true;
            }
            i += 1;
        }
    }
    improved
}

/// Lattice loop through the rounded polyline, made 6-connected and then
/// loop-erased so no point repeats.
fn rasterize_loop(poly: &[[f64; 3]], dims: [usize; 3]) -> Result<Vec<[usize; 3]>> {
    let snap = |p: [f64; 3]| -> [usize; 3] {
        std::array::from_fn(|k| p[k].round().clamp(0.0, (dims[k] - 1) as f64) as usize)
    };
    let mut seq: Vec<[usize; 3]> = Vec::new();
    let n = poly.len();
    let push = |q: [usize; 3], seq: &mut Vec<[usize; 3]>| {
        let Some(&last) = seq.last() else {
            seq.push(q);
            return;
        };
        let mut cur = last;
        for k in 0..3 {
            while cur[k] != q[k] {
                if cur[k] < q[k] {
                    cur[k] += 1;
                } else {
                    cur[k] -= 1;
                }
                seq.push(cur);
            }
        }
    };
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let steps = (dist(a, b) / 0.25).ceil().max(1.0) as usize;
        for s in 0..steps {
            let t = s as f64 / steps as f64;
            push(
                snap([
                    a[0] + t * (b[0] - a[0]),
                    a[1] + t * (b[1] - a[1]),
                    a[2] + t * (b[2] - a[2]),
                ]),
                &mut seq,
            );
        }
    }
    let first = seq[0];
    push(first, &mut seq);
    seq.pop();

    // chronological loop erasure; a start point the loop touches again would
    // erase everything, so several starts are tried and the longest loop kept
    let m = seq.len();
    let mut best: Option<Vec<[usize; 3]>> = None;
    for r in 0..8 {
        let out = loop_erase(seq[r * m / 8..].iter().chain(&seq[..r * m / 8]).copied());
        let b = BoundaryCurve {
            polyline: Vec::new(),
            lattice: out,
        };
        if b.is_simple_loop() && best.as_ref().is_none_or(|x| b.lattice.len() > x.len()) {
            best = Some(b.lattice);
        }
    }
    let Some(lattice) = best else {
        return Err(Error::Chaining(
            "rasterised boundary does not form a simple loop".into(),
        ));
    };
    Ok(lattice)
}

fn loop_erase(seq: impl Iterator<Item = [usize; 3]>) -> Vec<[usize; 3]> {
    let mut out: Vec<[usize; 3]> = Vec::new();
    let mut pos: HashMap<[usize; 3], usize> = HashMap::new();
    for q in seq {
        if let Some(&i) = pos.get(&q) {
            for r in out.drain(i + 1..) {
                pos.remove(&r);
            }
        } else {
            pos.insert(q, out.len());
            out.push(q);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The cut criterion fired.
    Criterion,
    /// The front reached the border of the volume.
    DomainExit,
    /// The next front would exceed the largest accepted distance.
    MaxAccepted,
    MaxFronts,
}

impl StopReason {
    pub fn is_degraded(&self) -> bool {
        *self != StopReason::Criterion
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParams {
    pub delta_d: f64,
    pub t: f64,
    pub max_fronts: usize,
}

impl Default for BoundaryParams {
    fn default() -> Self {
        Self {
            delta_d: 20.0,
            t: 5.0,
            max_fronts: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryExtraction {
    pub curves: Vec<RidgeCurve>,
    pub distances: Vec<f64>,
    pub cut_cost: f64,
    pub cut_size: usize,
    pub stop: StopReason,
    pub boundary: BoundaryCurve,
}

/// Ridge curves on the fronts at `ΔD, 2ΔD, …`, a minimum cut after each new
/// curve, stopping once the cut's mean edge cost drops below `T`.
pub fn extract_boundary(res: &FmmResult, params: &BoundaryParams) -> Result<BoundaryExtraction> {
    if !(params.delta_d > 0.0) || !(params.t > 0.0) || params.max_fronts < 2 {
        return Err(Error::InvalidParam(format!(
            "bad boundary parameters {params:?}"
        )));
    }
    let dims = res.dims();
    let max_u = res.max_accepted();
    let mut curves: Vec<RidgeCurve> = Vec::new();
    let mut distances = Vec::new();
    let mut last: Option<(CurveGraph, MinCut)> = None;
    let mut stop = StopReason::MaxFronts;

    for k in 1..=params.max_fronts {
        let d = params.delta_d * k as f64;
        if d > max_u {
            stop = StopReason::MaxAccepted;
            break;
        }
        let front = match build_front_complex(res, d) {
            Ok(f) => f,
            Err(Error::EmptyFront(_)) => continue,
            Err(e) => return Err(e),
        };
        let e = front.extent();
        let touches = (0..e[2]).any(|z| {
            (0..e[1]).any(|y| {
                (0..e[0]).any(|x| {
                    let border = x == 0
                        || y == 0
                        || z == 0
                        || x + 1 == e[0]
                        || y + 1 == e[1]
                        || z + 1 == e[2];
                    border && front.is_inside([x, y, z])
                })
            })
        });
        if touches {
            stop = StopReason::DomainExit;
            break;
        }
        let ridge = match highest_ridge(&front) {
            Ok(r) => r,
            Err(Error::Empty(_)) | Err(Error::Chaining(_)) => continue,
            Err(e) => return Err(e),
        };
        curves.push(ridge);
        distances.push(d);
        if curves.len() >= 2 {
            let g = build_curve_graph(&curves, res.seed)?;
            let cut = min_cut(&g);
            let fired = !cut.disconnected && stopping_check(cut.cost, cut.edges.len(), params.t)?;
            last = Some((g, cut));
            if fired {
                stop = StopReason::Criterion;
                break;
            }
        }
    }
    let (g, cut) = last.ok_or(Error::TooFewCurves(curves.len()))?;
    if cut.disconnected || cut.edges.is_empty() {
        return Err(Error::DegenerateCut("the last cut is empty".into()));
    }
    let boundary = assemble_boundary(&g, &cut, dims)?;
    Ok(BoundaryExtraction {
        curves,
        distances,
        cut_cost: cut.cost,
        cut_size: cut.edges.len(),
        stop,
        boundary,
    })
}

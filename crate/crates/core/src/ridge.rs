//! Ridges of `U_E` on the front: the Morse complex by ordered free-face
//! removal, and its iteration down to the single highest ridge loop.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use ordered_float::OrderedFloat;
use serde::Serialize;

use crate::cubical::{CubicalComplex, Face};
use crate::error::{Error, Result};
use crate::front::FrontComplex;

pub const NO_LABEL: u32 = u32::MAX;

/// An abstract 2-complex: cells, edges with their two (or more) cofaces and
/// their vertices. The edge index is the tie-breaker for equal costs.
#[derive(Debug, Clone, Default)]
pub(crate) struct Complex2 {
    pub ncells: usize,
    pub nverts: usize,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone)]
pub(crate) struct Edge {
    pub cofaces: Vec<usize>,
    pub verts: Vec<usize>,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct MorseOutput {
    pub labels: Vec<u32>,
    pub kept: Vec<bool>,
    pub holes: u32,
}

/// Ordered removal on an abstract complex. Edges are popped by ascending
/// cost; an edge with two live cofaces punches a hole, one live coface is a
/// free pair and the label flows across, no live coface with a dangling
/// vertex is removed with that vertex, anything else stays as an isthmus.
/// Dangling trees left behind are pruned at the end.
pub(crate) fn morse(cx: &Complex2) -> MorseOutput {
    let mut cell_edges = vec![Vec::new(); cx.ncells];
    let mut vdeg = vec![0usize; cx.nverts];
    for (e, edge) in cx.edges.iter().enumerate() {
        for &c in &edge.cofaces {
            cell_edges[c].push(e);
        }
        for &v in &edge.verts {
            vdeg[v] += 1;
        }
    }
    let mut live_cell = vec![true; cx.ncells];
    let mut live_edge = vec![true; cx.edges.len()];
    let mut live_vert = vec![true; cx.nverts];
    let mut labels = vec![NO_LABEL; cx.ncells];
    let mut next = 0u32;

    let mut heap: BinaryHeap<Reverse<(OrderedFloat<f64>, usize)>> = cx
        .edges
        .iter()
        .enumerate()
        .map(|(e, g)| Reverse((OrderedFloat(g.cost), e)))
        .collect();

    loop {
        while let Some(Reverse((_, g))) = heap.pop() {
            if !live_edge[g] {
                continue;
            }
            let edge = &cx.edges[g];
            let live: Vec<usize> = edge
                .cofaces
                .iter()
                .copied()
                .filter(|&c| live_cell[c])
                .collect();
            match live.len() {
                2 => {
                    for &c in &live {
                        live_cell[c] = false;
                        labels[c] = next;
                    }
                    next += 1;
                    kill_edge(g, cx, &mut live_edge, &mut vdeg);
                }
                1 => {
                    let f = live[0];
                    let adj = edge
                        .cofaces
                        .iter()
                        .copied()
                        .find(|&c| !live_cell[c] && labels[c] != NO_LABEL);
                    labels[f] = match adj {
                        Some(a) => labels[a],
                        None => {
                            next += 1;
                            next - 1
                        }
                    };
                    live_cell[f] = false;
                    kill_edge(g, cx, &mut live_edge, &mut vdeg);
                }
                0 => {
                    if let Some(&v) = edge.verts.iter().find(|&&v| live_vert[v] && vdeg[v] == 1) {
                        kill_edge(g, cx, &mut live_edge, &mut vdeg);
                        live_vert[v] = false;
                    }
                }
                _ => {}
            }
        }
        // safety sweep
        let survivors: Vec<usize> = (0..cx.ncells).filter(|&c| live_cell[c]).collect();
        if survivors.is_empty() {
            break;
        }
        let mut pushed = false;
        for &c in &survivors {
            for &e in &cell_edges[c] {
                if live_edge[e] {
                    heap.push(Reverse((OrderedFloat(cx.edges[e].cost), e)));
                    pushed = true;
                }
            }
        }
        if !pushed {
            for c in survivors {
                live_cell[c] = false;
                labels[c] = next;
                next += 1;
            }
            break;
        }
    }

    prune_dangling(cx, &mut live_edge, &mut vdeg);
    MorseOutput {
        labels,
        kept: live_edge,
        holes: next,
    }
}

fn kill_edge(g: usize, cx: &Complex2, live_edge: &mut [bool], vdeg: &mut [usize]) {
    live_edge[g] = false;
    for &v in &cx.edges[g].verts {
        vdeg[v] -= 1;
    }
}

/// Repeatedly removes edges that end at a degree-one vertex.
fn prune_dangling(cx: &Complex2, live_edge: &mut [bool], vdeg: &mut [usize]) {
    let mut vert_edges = vec![Vec::new(); cx.nverts];
    for (e, edge) in cx.edges.iter().enumerate() {
        for &v in &edge.verts {
            vert_edges[v].push(e);
        }
    }
    let mut stack: Vec<usize> = (0..cx.nverts).filter(|&v| vdeg[v] == 1).collect();
    while let Some(v) = stack.pop() {
        if vdeg[v] != 1 {
            continue;
        }
        let Some(&e) = vert_edges[v].iter().find(|&&e| live_edge[e]) else {
            continue;
        };
        kill_edge(e, cx, live_edge, vdeg);
        for &w in &cx.edges[e].verts {
            if vdeg[w] == 1 {
                stack.push(w);
            }
        }
    }
}

/// A set of grid 1-faces with the unordered label pair of the two regions
/// each one separates, and its mean-corner cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RidgeCurve {
    pub extent: [usize; 3],
    pub edges: Vec<Face>,
    pub labels: Vec<(u32, u32)>,
    pub costs: Vec<f64>,
}

impl RidgeCurve {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Number of ridge edges at each 0-face.
    pub fn degrees(&self) -> BTreeMap<Face, usize> {
        let mut deg = BTreeMap::new();
        for e in &self.edges {
            for v in e.corners() {
                *deg.entry(v).or_insert(0) += 1;
            }
        }
        deg
    }

    pub fn vertices(&self) -> Vec<Face> {
        self.degrees().into_keys().collect()
    }

    /// 0-faces where three or more ridge edges meet.
    pub fn junctions(&self) -> Vec<Face> {
        self.degrees()
            .into_iter()
            .filter(|&(_, d)| d >= 3)
            .map(|(v, _)| v)
            .collect()
    }

    pub fn complex(&self) -> CubicalComplex {
        CubicalComplex::from_faces(self.extent, self.edges.iter().copied())
            .expect("ridge edges inside extent")
    }

    pub fn components(&self) -> usize {
        if self.edges.is_empty() {
            0
        } else {
            self.complex().connected_components()
        }
    }

    /// Connected, non-empty, every 0-face of degree two.
    pub fn is_simple_loop(&self) -> bool {
        !self.edges.is_empty() && self.degrees().values().all(|&d| d == 2) && self.components() == 1
    }

    /// The 0-faces of a simple loop in walking order, starting at the
    /// smallest one.
    pub fn ordered_loop(&self) -> Result<Vec<Face>> {
        if !self.is_simple_loop() {
            return Err(Error::Chaining("ridge is not a simple loop".into()));
        }
        let mut adj: HashMap<Face, Vec<Face>> = HashMap::new();
        for e in &self.edges {
            let c = e.corners();
            adj.entry(c[0]).or_default().push(c[1]);
            adj.entry(c[1]).or_default().push(c[0]);
        }
        let start = *adj.keys().min().expect("non-empty");
        let mut out = vec![start];
        let mut prev = start;
        let mut cur = adj[&start].iter().copied().min().expect("degree two");
        while cur != start {
            out.push(cur);
            let nb = &adj[&cur];
            let nxt = if nb[0] == prev { nb[1] } else { nb[0] };
            prev = cur;
            cur = nxt;
        }
        Ok(out)
    }

    /// 0-face positions in voxel units.
    pub fn points(&self) -> Vec<[f64; 3]> {
        self.vertices().iter().map(|v| v.center()).collect()
    }

    /// Indexed polyline: vertex positions and edges as index pairs.
    pub fn to_polyline(&self) -> Polyline {
        let verts = self.vertices();
        let index: HashMap<Face, usize> = verts.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let c = e.corners();
                [index[&c[0]], index[&c[1]]]
            })
            .collect();
        Polyline {
            vertices: verts.iter().map(|v| v.center()).collect(),
            edges,
        }
    }

    pub fn total_cost(&self) -> f64 {
        self.costs.iter().sum()
    }

    fn subset(&self, keep: impl Fn(usize) -> bool) -> RidgeCurve {
        let idx: Vec<usize> = (0..self.edges.len()).filter(|&i| keep(i)).collect();
        RidgeCurve {
            extent: self.extent,
            edges: idx.iter().map(|&i| self.edges[i]).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            costs: idx.iter().map(|&i| self.costs[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Polyline {
    pub vertices: Vec<[f64; 3]>,
    pub edges: Vec<[usize; 2]>,
}

/// Result of one ordered-removal pass on the front.
#[derive(Debug, Clone)]
pub struct MorseComplex {
    pub ridge: RidgeCurve,
    /// The front 2-faces, sorted, and their region label.
    pub faces: Vec<Face>,
    pub labels: Vec<u32>,
    /// Number of hole-punch events (one fresh label each).
    pub holes: u32,
}

impl MorseComplex {
    pub fn label_of(&self, f: Face) -> Option<u32> {
        self.faces.binary_search(&f).ok().map(|i| self.labels[i])
    }
}

fn pair(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

/// Ordered free-face removal on the front 2-complex.
pub fn morse_complex(front: &FrontComplex) -> Result<MorseComplex> {
    let c = front.complex();
    let faces = front.faces(2);
    let edges = front.faces(1);
    let verts = front.faces(0);
    let face_idx: HashMap<Face, usize> = faces.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let vert_idx: HashMap<Face, usize> = verts.iter().enumerate().map(|(i, f)| (*f, i)).collect();

    let mut cx = Complex2 {
        ncells: faces.len(),
        nverts: verts.len(),
        edges: Vec::with_capacity(edges.len()),
    };
    for &g in &edges {
        let cof = c.cofaces_of_dim(g, 2);
        if cof.len() % 2 == 1 {
            return Err(Error::NotClosed(format!(
                "1-face {g:?} has {} 2-face cofaces",
                cof.len()
            )));
        }
        let mut cofaces: Vec<usize> = cof.iter().map(|f| face_idx[f]).collect();
        cofaces.sort_unstable();
        cx.edges.push(Edge {
            cofaces,
            verts: g.corners().iter().map(|v| vert_idx[v]).collect(),
            cost: front.cost(g),
        });
    }
    let out = morse(&cx);

    let kept: Vec<usize> = (0..edges.len()).filter(|&e| out.kept[e]).collect();
    let ridge = RidgeCurve {
        extent: front.extent(),
        edges: kept.iter().map(|&e| edges[e]).collect(),
        labels: kept
            .iter()
            .map(|&e| {
                let cf = &cx.edges[e].cofaces;
                match cf.len() {
                    0 => (NO_LABEL, NO_LABEL),
                    1 => (out.labels[cf[0]], out.labels[cf[0]]),
                    _ => pair(out.labels[cf[0]], out.labels[cf[1]]),
                }
            })
            .collect(),
        costs: kept.iter().map(|&e| cx.edges[e].cost).collect(),
    };
    Ok(MorseComplex {
        ridge,
        faces,
        labels: out.labels,
        holes: out.holes,
    })
}

/// Reduces the first ridge to one loop without junctions. Regions of the
/// region-adjacency complex (one cell per label, one edge per separating
/// label pair costed by the mean along its grid edges) are merged across
/// their least persistent boundary until two remain; the loop between them
/// is returned.
pub fn highest_ridge(front: &FrontComplex) -> Result<RidgeCurve> {
    Ok(highest_ridge_traced(front)?.0)
}

/// As [`highest_ridge`], also returning the number of merge passes (0 when
/// the first ridge is already a simple loop).
pub fn highest_ridge_traced(front: &FrontComplex) -> Result<(RidgeCurve, usize)> {
    let mc = morse_complex(front)?;
    let ridge = drop_same_label(&mc.ridge);
    if ridge.is_simple_loop() {
        return Ok((ridge, 0));
    }
    if ridge.is_empty() {
        return Err(Error::Empty("no ridge separates two regions".into()));
    }
    let mut basin_min: HashMap<u32, f64> = HashMap::new();
    for (f, &l) in mc.faces.iter().zip(&mc.labels) {
        let m = basin_min.entry(l).or_insert(f64::INFINITY);
        *m = m.min(front.cost(*f));
    }
    let region = RegionComplex::new(&ridge);
    let mins: Vec<f64> = region.cell_label.iter().map(|l| basin_min[l]).collect();
    let two = drop_same_label(&region.relabel(&ridge, &region.merge_to_two(&mins)));
    Ok((resolve_loop(front, &two)?, 1))
}

/// Removes edges with the same label on both sides, then dangling trees.
fn drop_same_label(r: &RidgeCurve) -> RidgeCurve {
    let mut cur = r.subset(|i| r.labels[i].0 != r.labels[i].1);
    loop {
        let deg = cur.degrees();
        let keep: Vec<bool> = cur
            .edges
            .iter()
            .map(|e| e.corners().iter().all(|v| deg[v] >= 2))
            .collect();
        if keep.iter().all(|&k| k) {
            return cur;
        }
        cur = cur.subset(|i| keep[i]);
    }
}

struct RegionComplex {
    cx: Complex2,
    /// Region label for each cell index.
    cell_label: Vec<u32>,
    /// Grid edge count of each region edge.
    edge_len: Vec<usize>,
}

impl RegionComplex {
    fn new(ridge: &RidgeCurve) -> Self {
        let mut cell_label: Vec<u32> = ridge
            .labels
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        cell_label.sort_unstable();
        let cell_of: HashMap<u32, usize> = cell_label
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, i))
            .collect();

        let junctions = ridge.junctions();
        let junction_idx: HashMap<Face, usize> =
            junctions.iter().enumerate().map(|(i, v)| (*v, i)).collect();

        let mut acc: BTreeMap<(u32, u32), (f64, usize, BTreeSet<usize>)> = BTreeMap::new();
        for (i, e) in ridge.edges.iter().enumerate() {
            let entry = acc
                .entry(ridge.labels[i])
                .or_insert((0.0, 0, BTreeSet::new()));
            entry.0 += ridge.costs[i];
            entry.1 += 1;
            for v in e.corners() {
                if let Some(&j) = junction_idx.get(&v) {
                    entry.2.insert(j);
                }
            }
        }
        let mut edges = Vec::with_capacity(acc.len());
        let mut edge_len = Vec::with_capacity(acc.len());
        for (p, (sum, n, verts)) in acc {
            edge_len.push(n);
            edges.push(Edge {
                cofaces: vec![cell_of[&p.0], cell_of[&p.1]],
                verts: verts.into_iter().collect(),
                cost: sum / n as f64,
            });
        }
        RegionComplex {
            cx: Complex2 {
                ncells: cell_label.len(),
                nverts: junctions.len(),
                edges,
            },
            cell_label,
            edge_len,
        }
    }

    /// Merges regions until two labels remain, always across the boundary
    /// of least persistence: its mean cost minus the higher of the two
    /// basin minima. Costs of merged boundaries are pooled.
    fn merge_to_two(&self, basin_min: &[f64]) -> Vec<u32> {
        let n = self.cx.ncells;
        let mut group: Vec<usize> = (0..n).collect();
        let mut low = basin_min.to_vec();
        // (sum, count) of boundary cost per unordered group pair
        let mut bnd: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
        for (e, &len) in self.cx.edges.iter().zip(&self.edge_len) {
            let (a, b) = (
                e.cofaces[0].min(e.cofaces[1]),
                e.cofaces[0].max(e.cofaces[1]),
            );
            let w = len as f64;
            let s = bnd.entry((a, b)).or_insert((0.0, 0.0));
            s.0 += e.cost * w;
            s.1 += w;
        }
        let mut groups = n;
        while groups > 2 {
            let best = bnd
                .iter()
                .map(|(&(a, b), &(s, c))| ((a, b), s / c - low[a].max(low[b])))
                .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
            let Some(((a, b), _)) = best else { break };
            low[a] = low[a].min(low[b]);
            for g in group.iter_mut() {
                if *g == b {
                    *g = a;
                }
            }
            let old = std::mem::take(&mut bnd);
            for ((x, y), (s, c)) in old {
                let (x, y) = (if x == b { a } else { x }, if y == b { a } else { y });
                if x != y {
                    let t = bnd.entry((x.min(y), x.max(y))).or_insert((0.0, 0.0));
                    t.0 += s;
                    t.1 += c;
                }
            }
            groups -= 1;
        }
        group.into_iter().map(|g| g as u32).collect()
    }

    /// Maps grid ridge labels through the region-level labels.
    fn relabel(&self, ridge: &RidgeCurve, region_labels: &[u32]) -> RidgeCurve {
        let cell_of: HashMap<u32, usize> = self
            .cell_label
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, i))
            .collect();
        let mut out = ridge.clone();
        for p in out.labels.iter_mut() {
            *p = pair(region_labels[cell_of[&p.0]], region_labels[cell_of[&p.1]]);
        }
        out
    }
}

/// Splits a ridge whose 0-faces all have even degree at its pinch points
/// and keeps the cycle with the largest total cost. Ridge pieces at vertices
/// of odd degree are first pruned away.
fn resolve_loop(front: &FrontComplex, ridge: &RidgeCurve) -> Result<RidgeCurve> {
    let ridge = drop_same_label(ridge);
    if ridge.is_simple_loop() {
        return Ok(ridge);
    }
    let c = front.complex();
    let edge_set: HashMap<Face, usize> = ridge
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| (*e, i))
        .collect();
    // at each vertex, pair up ridge edges that are consecutive in the cyclic
    // order of the vertex star
    let mut partner: HashMap<(Face, usize), usize> = HashMap::new();
    for (v, d) in ridge.degrees() {
        let star = vertex_star(c, v);
        let on: Vec<usize> = star
            .iter()
            .filter_map(|e| edge_set.get(e).copied())
            .collect();
        if d % 2 == 1 || on.len() != d {
            return Err(Error::Chaining(format!(
                "ridge vertex {v:?} has degree {d}"
            )));
        }
        for k in 0..d / 2 {
            let (a, b) = (on[2 * k], on[2 * k + 1]);
            partner.insert((v, a), b);
            partner.insert((v, b), a);
        }
    }
    let mut used = vec![false; ridge.edges.len()];
    let mut best: Option<(f64, Vec<usize>)> = None;
    for s in 0..ridge.edges.len() {
        if used[s] {
            continue;
        }
        let mut cyc = vec![s];
        used[s] = true;
        let mut v = ridge.edges[s].corners()[1];
        let mut e = s;
        loop {
            let nxt = partner[&(v, e)];
            if nxt == s {
                break;
            }
            used[nxt] = true;
            cyc.push(nxt);
            let cs = ridge.edges[nxt].corners();
            v = if cs[0] == v { cs[1] } else { cs[0] };
            e = nxt;
        }
        let total: f64 = cyc.iter().map(|&i| ridge.costs[i]).sum();
        if best.as_ref().is_none_or(|(t, _)| total > *t) {
            best = Some((total, cyc));
        }
    }
    let (_, cyc) = best.ok_or_else(|| Error::Empty("no ridge cycle".into()))?;
    let keep: BTreeSet<usize> = cyc.into_iter().collect();
    let out = ridge.subset(|i| keep.contains(&i));
    if !out.is_simple_loop() {
        return Err(Error::Chaining("selected ridge cycle is not simple".into()));
    }
    Ok(out)
}

/// The 1-faces at vertex `v` in cyclic order around `v` on a 2-manifold
/// complex, walking across the 2-faces of its star.
fn vertex_star(c: &CubicalComplex, v: Face) -> Vec<Face> {
    let edges = c.cofaces_of_dim(v, 1);
    let Some(&first) = edges.iter().min() else {
        return Vec::new();
    };
    let mut out = vec![first];
    let mut prev_face: Option<Face> = None;
    let mut cur = first;
    loop {
        let faces = c.cofaces_of_dim(cur, 2);
        let Some(&f) = faces.iter().filter(|&&f| Some(f) != prev_face).min() else {
            break;
        };
        let Some(nxt) = f
            .facets()
            .into_iter()
            .find(|&g| g != cur && v.is_proper_face_of(&g))
        else {
            break;
        };
        if nxt == first {
            break;
        }
        out.push(nxt);
        prev_face = Some(f);
        cur = nxt;
        if out.len() > edges.len() {
            break;
        }
    }
    out
}

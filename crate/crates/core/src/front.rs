//! The fast-marching front `{U = D}` as a closed cubical 2-complex.

use std::collections::VecDeque;

use crate::cubical::{cell_set_boundary, CubicalComplex, Face};
use crate::error::{Error, Result};
use crate::fmm::{front_indicator, FmmResult};
use crate::volume::{NEIGHBORS_26, NEIGHBORS_6};

/// Boundary 2-faces of a set of inside cells, with a cost on every lattice
/// point. The cost of any face is the mean over its corners.
#[derive(Debug, Clone)]
pub struct FrontComplex {
    extent: [usize; 3],
    inside: Vec<bool>,
    complex: CubicalComplex,
    vertex_cost: Vec<f64>,
}

impl FrontComplex {
    /// Builds the boundary of `inside` (one flag per cell, x fastest).
    /// `vertex_cost` has one entry per lattice point of the `extent + 1` grid.
    pub fn from_cells(
        extent: [usize; 3],
        inside: Vec<bool>,
        vertex_cost: Vec<f64>,
    ) -> Result<Self> {
        let ncells = extent.iter().product::<usize>();
        let nverts = extent.iter().map(|e| e + 1).product::<usize>();
        if inside.len() != ncells || vertex_cost.len() != nverts {
            return Err(Error::InvalidParam(format!(
                "expected {ncells} cells and {nverts} vertex costs, got {} and {}",
                inside.len(),
                vertex_cost.len()
            )));
        }
        let complex = cell_set_boundary(extent, |c| inside[cell_index(extent, c)]);
        if complex.count(2) == 0 {
            return Err(Error::Empty("front has no 2-faces".into()));
        }
        Ok(Self {
            extent,
            inside,
            complex,
            vertex_cost,
        })
    }

    pub fn extent(&self) -> [usize; 3] {
        self.extent
    }

    pub fn complex(&self) -> &CubicalComplex {
        &self.complex
    }

    pub fn is_inside(&self, cell: [usize; 3]) -> bool {
        self.inside[cell_index(self.extent, cell)]
    }

    pub fn inside_cells(&self) -> &[bool] {
        &self.inside
    }

    pub fn vertex_cost(&self, lattice: [usize; 3]) -> f64 {
        self.vertex_cost[self.vertex_index(lattice)]
    }

    /// Replaces every lattice cost by `f(lattice point)`.
    pub fn set_vertex_costs(&mut self, f: impl Fn([usize; 3]) -> f64) {
        let d = [self.extent[0] + 1, self.extent[1] + 1, self.extent[2] + 1];
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let idx = self.vertex_index([i, j, k]);
                    self.vertex_cost[idx] = f([i, j, k]);
                }
            }
        }
    }

    /// Mean corner cost of a face of any dimension.
    pub fn cost(&self, f: Face) -> f64 {
        let corners = f.corners();
        let sum: f64 = corners
            .iter()
            .map(|c| self.vertex_cost(c.lattice().expect("corner")))
            .sum();
        sum / corners.len() as f64
    }

    /// Faces of dimension `dim`, sorted.
    pub fn faces(&self, dim: usize) -> Vec<Face> {
        let mut v: Vec<Face> = self.complex.faces_of_dim(dim).collect();
        v.sort_unstable();
        v
    }

    fn vertex_index(&self, v: [usize; 3]) -> usize {
        v[0] + (self.extent[0] + 1) * (v[1] + (self.extent[1] + 1) * v[2])
    }
}

#[inline]
fn cell_index(extent: [usize; 3], c: [usize; 3]) -> usize {
    c[0] + extent[0] * (c[1] + extent[1] * c[2])
}

fn cell_of(extent: [usize; 3], i: usize) -> [usize; 3] {
    [
        i % extent[0],
        (i / extent[0]) % extent[1],
        i / (extent[0] * extent[1]),
    ]
}

fn cell_neighbors(extent: [usize; 3], c: [usize; 3], mut visit: impl FnMut(usize)) {
    for axis in 0..3 {
        if c[axis] > 0 {
            let mut n = c;
            n[axis] -= 1;
            visit(cell_index(extent, n));
        }
        if c[axis] + 1 < extent[axis] {
            let mut n = c;
            n[axis] += 1;
            visit(cell_index(extent, n));
        }
    }
}

/// Builds the front at distance `d`: cells with all corners `U < d`, reduced
/// to the face-connected component at the seed, with cavities filled and
/// critical configurations removed so the boundary is a closed 2-manifold.
///
/// The cost of a front vertex is `U_E` interpolated linearly to the points
/// where `U = d` on the lattice edges towards its outside neighbours
/// (averaged over them; diagonal neighbours when no face neighbour is
/// outside), so a front that is staircased on the grid still
/// sees a smooth `U_E`.
pub fn build_front_complex(res: &FmmResult, d: f64) -> Result<FrontComplex> {
    let mask = front_indicator(res, d)?;
    let extent = mask.extent;
    let mut inside = mask.inside;

    let s = res.seed.voxel();
    let start = (0..8)
        .filter_map(|c| {
            let cell: Option<Vec<usize>> = (0..3)
                .map(|a| {
                    let x = s[a] + ((c >> a) & 1);
                    (x >= 1 && x - 1 < extent[a]).then(|| x - 1)
                })
                .collect();
            cell.map(|v| cell_index(extent, [v[0], v[1], v[2]]))
        })
        .find(|&i| inside[i])
        .ok_or(Error::EmptyFront(d))?;

    let u = &res.u;
    let key: Vec<f64> = (0..inside.len())
        .map(|i| {
            let c = cell_of(extent, i);
            (0..8)
                .map(|k| u.get([c[0] + (k & 1), c[1] + ((k >> 1) & 1), c[2] + ((k >> 2) & 1)]))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();

    keep_component(extent, &mut inside, start);
    fill_cavities(extent, &mut inside);
    while make_well_composed(extent, &mut inside, &key) {
        fill_cavities(extent, &mut inside);
    }

    let mut vertex_cost = res.ue.data().to_vec();
    let complex = cell_set_boundary(extent, |c| inside[cell_index(extent, c)]);
    let crossing = |p: [usize; 3], offs: &mut dyn Iterator<Item = [isize; 3]>| -> Option<f64> {
        let (uv, ev) = (u.get(p), res.ue.get(p));
        let (mut sum, mut n) = (0.0, 0);
        for off in offs {
            let Some(w) = u.offset(p, off) else { continue };
            let (uw, ew) = (u.get(w), res.ue.get(w));
            if uw >= d && uw.is_finite() && ew.is_finite() {
                sum += ev + (d - uv) / (uw - uv) * (ew - ev);
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    };
    for v in complex.faces_of_dim(0) {
        let p = v.lattice().expect("vertex");
        if !(u.get(p) < d) {
            continue;
        }
        let c = crossing(p, &mut NEIGHBORS_6.iter().copied())
            .or_else(|| crossing(p, &mut NEIGHBORS_26.iter().copied()));
        if let Some(c) = c {
            vertex_cost[u.index(p)] = c;
        }
    }
    let finite_max = complex
        .faces_of_dim(0)
        .map(|v| vertex_cost[u.index(v.lattice().expect("vertex"))])
        .filter(|x| x.is_finite())
        .fold(0.0f64, f64::max);
    for x in vertex_cost.iter_mut() {
        if !x.is_finite() {
            *x = finite_max;
        }
    }
    FrontComplex::from_cells(extent, inside, vertex_cost)
}

fn keep_component(extent: [usize; 3], inside: &mut [bool], start: usize) {
    let mut keep = vec![false; inside.len()];
    let mut queue = VecDeque::from([start]);
    keep[start] = true;
    while let Some(i) = queue.pop_front() {
        cell_neighbors(extent, cell_of(extent, i), |n| {
            if inside[n] && !keep[n] {
                keep[n] = true;
                queue.push_back(n);
            }
        });
    }
    inside.copy_from_slice(&keep);
}

/// Marks as inside every outside cell not face-connected to the box border.
fn fill_cavities(extent: [usize; 3], inside: &mut [bool]) {
    let mut exterior = vec![false; inside.len()];
    let mut queue = VecDeque::new();
    for (i, &flag) in inside.iter().enumerate() {
        let c = cell_of(extent, i);
        let border = (0..3).any(|a| c[a] == 0 || c[a] + 1 == extent[a]);
        if border && !flag {
            exterior[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        cell_neighbors(extent, cell_of(extent, i), |n| {
            if !inside[n] && !exterior[n] {
                exterior[n] = true;
                queue.push_back(n);
            }
        });
    }
    for (flag, ext) in inside.iter_mut().zip(exterior) {
        *flag = !ext;
    }
}

/// One sweep over all 2x2x2 cell blocks adding inside cells wherever the
/// block holds a critical configuration: a 2x2 square with only a diagonal
/// pair inside (or outside), or a block whose only inside (or only outside)
/// cells are an antipodal pair. Returns whether anything changed.
fn make_well_composed(extent: [usize; 3], inside: &mut [bool], key: &[f64]) -> bool {
    let better = |a: usize, b: usize| -> usize {
        if (key[a], a) <= (key[b], b) {
            a
        } else {
            b
        }
    };
    let mut changed = false;
    for k in 0..extent[2] - 1 {
        for j in 0..extent[1] - 1 {
            for i in 0..extent[0] - 1 {
                loop {
                    let ids: [usize; 8] = std::array::from_fn(|c| {
                        cell_index(
                            extent,
                            [i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1)],
                        )
                    });
                    let bits: [bool; 8] = std::array::from_fn(|c| inside[ids[c]]);
                    let Some(add) = critical_fix(&bits, &ids, better) else {
                        break;
                    };
                    inside[add] = true;
                    changed = true;
                }
            }
        }
    }
    changed
}

fn critical_fix(
    bits: &[bool; 8],
    ids: &[usize; 8],
    better: impl Fn(usize, usize) -> usize,
) -> Option<usize> {
    let n_in = bits.iter().filter(|&&b| b).count();
    for c in 0..4 {
        let o = 7 - c;
        if n_in == 2 && bits[c] && bits[o] {
            let mut pick: Option<usize> = None;
            for q in 0..8 {
                if !bits[q] {
                    pick = Some(pick.map_or(ids[q], |p| better(p, ids[q])));
                }
            }
            return pick;
        }
        if n_in == 6 && !bits[c] && !bits[o] {
            return Some(better(ids[c], ids[o]));
        }
    }
    // the six 2x2 faces of the block
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for layer in 0..2 {
            let at = |a: usize, b: usize| (layer << axis) | (a << u) | (b << v);
            let (p00, p11, p01, p10) = (at(0, 0), at(1, 1), at(0, 1), at(1, 0));
            if bits[p00] == bits[p11] && bits[p01] == bits[p10] && bits[p00] != bits[p01] {
                let (x, y) = if bits[p00] { (p01, p10) } else { (p00, p11) };
                return Some(better(ids[x], ids[y]));
            }
        }
    }
    None
}

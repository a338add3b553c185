//! Retraction of the image 3-complex, pinned at the surface boundary, down to
//! the valley 2-complex of `U`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cubical::{CubicalComplex, Face};
use crate::cut::BoundaryCurve;
use crate::error::{Error, Result};
use crate::fmm::{backtrack_minimal_path, FmmResult};
use crate::mesh::SurfaceMesh;
use crate::volume::ScalarVolume;

/// Counts of the two removal kinds performed by [`valley_extract`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValleyStats {
    /// 2-face removed with its only 3-face coface.
    pub volume_removals: usize,
    /// 2-face removed with a 1-face whose only coface it was.
    pub sheet_removals: usize,
}

/// Mean of `U` over the corners of a face.
pub fn face_cost(u: &ScalarVolume, f: Face) -> f64 {
    let c = f.corners();
    c.iter()
        .map(|v| u.get(v.lattice().expect("corner")))
        .sum::<f64>()
        / c.len() as f64
}

/// Full closed 3-complex of the cells whose eight corners have finite `U`.
pub fn visited_complex(u: &ScalarVolume) -> CubicalComplex {
    let d = u.dims();
    let extent = [d[0] - 1, d[1] - 1, d[2] - 1];
    if u.data().iter().all(|x| x.is_finite()) {
        return CubicalComplex::full(extent);
    }
    let mut x = CubicalComplex::new(extent);
    for k in 0..extent[2] {
        for j in 0..extent[1] {
            for i in 0..extent[0] {
                let ok = (0..8).all(|c| {
                    u.get([i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1)])
                        .is_finite()
                });
                if ok {
                    x.insert_closed(Face::cell([i, j, k]))
                        .expect("cell inside extent");
                }
            }
        }
    }
    x
}

#[inline]
fn step(f: Face, axis: usize, d: i32) -> Option<Face> {
    let c = f.0[axis] as i64 + d as i64;
    (c >= 0).then(|| {
        let mut g = f.0;
        g[axis] = c as u32;
        Face(g)
    })
}

/// The normal axis and the two in-plane axes of a 2-face.
#[inline]
fn axes(g: Face) -> (usize, [usize; 2]) {
    let n = (0..3)
        .find(|&a| g.0[a] & 1 == 0)
        .expect("2-face has an even axis");
    (n, [(n + 1) % 3, (n + 2) % 3])
}

fn quad_cost(u: &ScalarVolume, g: Face) -> f64 {
    let (_, [a, b]) = axes(g);
    let mut s = 0.0;
    for (da, db) in [(-1i64, -1i64), (1, -1), (1, 1), (-1, 1)] {
        let mut v = [
            (g.0[0] / 2) as usize,
            (g.0[1] / 2) as usize,
            (g.0[2] / 2) as usize,
        ];
        v[a] = ((g.0[a] as i64 + da) / 2) as usize;
        v[b] = ((g.0[b] as i64 + db) / 2) as usize;
        s += u.get(v);
    }
    s / 4.0
}

fn in_plane_facets(g: Face) -> [Face; 4] {
    let (_, [a, b]) = axes(g);
    let f = |axis: usize, d: i32| step(g, axis, d).expect("odd coordinate is positive");
    [f(a, -1), f(a, 1), f(b, -1), f(b, 1)]
}

type Heap = BinaryHeap<(OrderedFloat<f64>, Reverse<Face>)>;

/// Ordered removal of 2-faces by decreasing mean `U`: a 2-face free in a
/// 3-face goes with it; a 2-face that is the only coface of one of its
/// 1-faces goes with that 1-face, provided the 1-face is not on `boundary`.
///
/// The heap holds each removable 2-face at most once. A face is queued when a
/// neighbouring removal makes it removable and dropped if it is no longer
/// removable when popped.
pub fn valley_extract(u: &ScalarVolume, boundary: &BoundaryCurve) -> Result<CubicalComplex> {
    Ok(valley_extract_with_stats(u, boundary)?.0)
}

pub fn valley_extract_with_stats(
    u: &ScalarVolume,
    boundary: &BoundaryCurve,
) -> Result<(CubicalComplex, ValleyStats)> {
    let mut x = visited_complex(u);
    let mut pinned = boundary.edges();
    for e in &pinned {
        if !x.in_bounds(*e) || !x.contains(*e) {
            return Err(Error::BoundaryOutsideRegion(*e));
        }
    }
    pinned.sort_unstable();
    let is_pinned = |e: Face| pinned.binary_search(&e).is_ok();

    let ext = x.extent();
    let size = [2 * ext[0] + 1, 2 * ext[1] + 1, 2 * ext[2] + 1];
    let slot = |f: Face| f.0[0] as usize + size[0] * (f.0[1] as usize + size[1] * f.0[2] as usize);
    let mut queued = vec![false; size[0] * size[1] * size[2]];

    let cells = |x: &CubicalComplex, g: Face| -> ([Face; 2], usize) {
        let (n, _) = axes(g);
        let mut out = [g; 2];
        let mut k = 0;
        for d in [-1, 1] {
            if let Some(f) = step(g, n, d) {
                if x.contains(f) {
                    out[k] = f;
                    k += 1;
                }
            }
        }
        (out, k)
    };
    let free_edge = |x: &CubicalComplex, g: Face| -> Option<Face> {
        in_plane_facets(g)
            .into_iter()
            .find(|&e| !is_pinned(e) && x.coface_count(e) == 1)
    };
    let removable = |x: &CubicalComplex, g: Face| -> bool {
        match cells(x, g).1 {
            1 => true,
            0 => free_edge(x, g).is_some(),
            _ => false,
        }
    };
    let offer = |x: &CubicalComplex, heap: &mut Heap, queued: &mut Vec<bool>, g: Face| {
        let i = slot(g);
        if !queued[i] && x.contains(g) && removable(x, g) {
            queued[i] = true;
            heap.push((OrderedFloat(quad_cost(u, g)), Reverse(g)));
        }
    };
    // the 2-cofaces of an edge that has just become free
    let offer_edge = |x: &CubicalComplex, heap: &mut Heap, queued: &mut Vec<bool>, e: Face| {
        if !x.contains(e) || x.coface_count(e) != 1 {
            return;
        }
        let (m, _) = axes_of_edge(e);
        for axis in m {
            for d in [-1, 1] {
                if let Some(h) = step(e, axis, d) {
                    if x.in_bounds(h) {
                        offer(x, heap, queued, h);
                    }
                }
            }
        }
    };

    let mut heap: Heap = Heap::new();
    let initial: Vec<Face> = x.faces_of_dim(2).collect();
    for g in initial {
        offer(&x, &mut heap, &mut queued, g);
    }
    let mut stats = ValleyStats::default();

    while let Some((_, Reverse(g))) = heap.pop() {
        queued[slot(g)] = false;
        let (cs, k) = cells(&x, g);
        match k {
            1 => {
                let f = cs[0];
                x.remove_free_pair(g, f);
                stats.volume_removals += 1;
                for h in f.facets() {
                    offer(&x, &mut heap, &mut queued, h);
                }
                for e in f.sub_faces().into_iter().filter(|e| e.dim() == 1) {
                    offer_edge(&x, &mut heap, &mut queued, e);
                }
            }
            0 => {
                if let Some(e) = free_edge(&x, g) {
                    x.remove_free_pair(e, g);
                    stats.sheet_removals += 1;
                    for e2 in in_plane_facets(g) {
                        offer_edge(&x, &mut heap, &mut queued, e2);
                    }
                }
            }
            _ => {}
        }
    }
    Ok((x, stats))
}

/// The two even axes of a 1-face, along which its 2-cofaces lie.
fn axes_of_edge(e: Face) -> ([usize; 2], usize) {
    let o = (0..3)
        .find(|&a| e.0[a] & 1 == 1)
        .expect("1-face has an odd axis");
    ([(o + 1) % 3, (o + 2) % 3], o)
}

/// The 2-faces of `x` with their closure.
pub fn two_skeleton_part(x: &CubicalComplex) -> CubicalComplex {
    CubicalComplex::from_faces(x.extent(), x.faces_of_dim(2)).expect("faces inside extent")
}

/// Backtracks minimal paths from `sample_count` mesh vertices (chosen with
/// `rng_seed`) and returns the fraction of path points within `tol` voxels of
/// the mesh.
pub fn verify_minimal_path_cover(
    mesh: &SurfaceMesh,
    res: &FmmResult,
    sample_count: usize,
    tol: f64,
    rng_seed: u64,
) -> Result<f64> {
    if mesh.vertices.is_empty() {
        return Err(Error::Empty("mesh has no vertices".into()));
    }
    if !tol.is_finite() {
        return Ok(1.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = mesh.vertices.len();
    let picks = sample(&mut rng, n, sample_count.min(n)).into_vec();
    let locator = mesh.locator();
    let (mut inside, mut total) = (0usize, 0usize);
    for i in picks {
        let p = mesh.vertices[i];
        let v = [
            p[0].round() as usize,
            p[1].round() as usize,
            p[2].round() as usize,
        ];
        if !res.is_visited(v) {
            continue;
        }
        let path = backtrack_minimal_path(res, v)?;
        for q in &path.points {
            total += 1;
            if locator.distance_within(*q, tol).is_some() {
                inside += 1;
            }
        }
    }
    Ok(if total == 0 {
        1.0
    } else {
        inside as f64 / total as f64
    })
}

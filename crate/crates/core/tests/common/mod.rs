#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;
use surfcut::volume::ScalarVolume;

/// Grid Dijkstra from `seed` over 6- or 26-neighbourhoods.
///
/// `weight(len, phi_from, phi_to)` gives the cost of one step.
pub fn dijkstra(
    phi: &ScalarVolume,
    seed: [usize; 3],
    connectivity26: bool,
    weight: impl Fn(f64, f64, f64) -> f64,
) -> Vec<f64> {
    let mut offs = Vec::new();
    for dz in -1..=1isize {
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                let n = dx.abs() + dy.abs() + dz.abs();
                if n == 0 || (!connectivity26 && n > 1) {
                    continue;
                }
                offs.push([dx, dy, dz]);
            }
        }
    }
    let mut dist = vec![f64::INFINITY; phi.len()];
    let mut heap = BinaryHeap::new();
    let s = phi.index(seed);
    dist[s] = 0.0;
    heap.push(Reverse((OrderedFloat(0.0), s)));
    while let Some(Reverse((OrderedFloat(d), i))) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        let v = phi.voxel(i);
        for o in &offs {
            if let Some(w) = phi.offset(v, *o) {
                let len = ((o[0] * o[0] + o[1] * o[1] + o[2] * o[2]) as f64).sqrt();
                let wi = phi.index(w);
                let nd = d + weight(len, phi.data()[i], phi.data()[wi]);
                if nd < dist[wi] {
                    dist[wi] = nd;
                    heap.push(Reverse((OrderedFloat(nd), wi)));
                }
            }
        }
    }
    dist
}

/// A simple 6-connected lattice loop through the rounded points of a circle
/// of radius `r` around `c` in the plane `z = c[2]`.
pub fn lattice_circle(c: [f64; 3], r: f64) -> Vec<[usize; 3]> {
    let steps = (2.0 * std::f64::consts::PI * r * 8.0).ceil() as usize;
    let mut seq: Vec<[usize; 3]> = Vec::new();
    for s in 0..=steps {
        let t = 2.0 * std::f64::consts::PI * s as f64 / steps as f64;
        let q = [
            (c[0] + r * t.cos()).round() as usize,
            (c[1] + r * t.sin()).round() as usize,
            c[2] as usize,
        ];
        if let Some(&last) = seq.last() {
            let mut cur: [usize; 3] = last;
            for k in 0..3 {
                while cur[k] != q[k] {
                    if cur[k] < q[k] {
                        cur[k] += 1
                    } else {
                        cur[k] -= 1
                    }
                    seq.push(cur);
                }
            }
        } else {
            seq.push(q);
        }
    }
    seq.pop();
    let mut out: Vec<[usize; 3]> = Vec::new();
    for q in seq {
        if let Some(i) = out.iter().position(|&p| p == q) {
            out.truncate(i + 1);
        } else {
            out.push(q);
        }
    }
    out
}

/// The ridge curve made of the grid 1-faces of a closed lattice loop.
pub fn loop_curve(extent: [usize; 3], pts: &[[usize; 3]]) -> surfcut::ridge::RidgeCurve {
    use surfcut::cubical::Face;
    let n = pts.len();
    let mut edges: Vec<Face> = (0..n)
        .map(|i| {
            let a = Face::vertex(pts[i]).0;
            let b = Face::vertex(pts[(i + 1) % n]).0;
            Face([(a[0] + b[0]) / 2, (a[1] + b[1]) / 2, (a[2] + b[2]) / 2])
        })
        .collect();
    edges.sort();
    surfcut::ridge::RidgeCurve {
        extent,
        labels: vec![(0, 1); n],
        costs: vec![0.0; n],
        edges,
    }
}

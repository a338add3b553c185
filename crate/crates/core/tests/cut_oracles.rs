mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfcut::cut::{
    assemble_boundary, build_curve_graph, min_cut, min_cut_undirected, segment_distance,
    stopping_check, EdgeKind,
};
use surfcut::volume::SeedPoint;

const EXTENT: [usize; 3] = [40, 40, 40];

fn square(z: usize, lo: usize, hi: usize) -> Vec<[usize; 3]> {
    let mut v = Vec::new();
    for x in lo..hi {
        v.push([x, lo, z]);
    }
    for y in lo..hi {
        v.push([hi, y, z]);
    }
    for x in (lo + 1..=hi).rev() {
        v.push([x, hi, z]);
    }
    for y in (lo + 1..=hi).rev() {
        v.push([lo, y, z]);
    }
    v
}

/// Exhaustive minimum over all bipartitions with `s` on one side and `t` on
/// the other.
fn brute_cut(n: usize, edges: &[(usize, usize, f64)], s: usize, t: usize) -> f64 {
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask & (1 << s) == 0 || mask & (1 << t) != 0 {
            continue;
        }
        let c: f64 = edges
            .iter()
            .filter(|(a, b, _)| (mask >> a & 1) != (mask >> b & 1))
            .map(|e| e.2)
            .sum();
        best = best.min(c);
    }
    best
}

#[test]
fn stacked_squares_have_hand_counted_graph() {
    let a = square(10, 10, 16);
    let m = a.len();
    assert_eq!(m, 24);
    let b = square(13, 10, 16);
    let g = build_curve_graph(
        &[
            common::loop_curve(EXTENT, &a),
            common::loop_curve(EXTENT, &b),
        ],
        SeedPoint([13, 13, 5]),
    )
    .unwrap();
    assert_eq!(g.count(EdgeKind::Inter), m);
    assert_eq!(g.count(EdgeKind::Intra), 2 * m);
    assert_eq!(g.vertex_count(), 2 * m + 1);
    for e in g.edges.iter().filter(|e| e.kind == EdgeKind::Inter) {
        assert!((e.cost - 3.0).abs() < 1e-12);
    }
    for e in g
        .edges
        .iter()
        .filter(|e| e.kind == EdgeKind::Intra && g.curve_of[e.a] == 0)
    {
        assert!((e.cost - 3.0).abs() < 1e-12);
    }
}

#[test]
fn inter_edges_go_to_the_true_nearest_vertex() {
    let a = common::lattice_circle([20.0, 20.0, 20.0], 7.0);
    let b: Vec<[usize; 3]> = common::lattice_circle([21.0, 19.0, 22.0], 10.0);
    let (ca, cb) = (
        common::loop_curve(EXTENT, &a),
        common::loop_curve(EXTENT, &b),
    );
    let g = build_curve_graph(&[ca, cb.clone()], SeedPoint([20, 20, 20])).unwrap();
    for e in g.edges.iter().filter(|e| e.kind == EdgeKind::Inter) {
        let p = g.position(e.a);
        let best = cb
            .vertices()
            .iter()
            .map(|w| {
                let q = w.center();
                ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((e.cost - best).abs() < 1e-12);
    }
}

#[test]
fn duplicated_curve_costs_nothing_and_cuts_at_the_first_curve() {
    let a = common::lattice_circle([20.0, 20.0, 20.0], 8.0);
    let c = common::loop_curve(EXTENT, &a);
    let g = build_curve_graph(&[c.clone(), c.clone()], SeedPoint([20, 20, 20])).unwrap();
    assert!(g
        .edges
        .iter()
        .filter(|e| e.kind == EdgeKind::Inter)
        .all(|e| e.cost == 0.0));
    let cut = min_cut(&g);
    assert_eq!(cut.cost, 0.0);
    let b = assemble_boundary(&g, &cut, [41, 41, 41]).unwrap();
    assert!(b.is_simple_loop());
    let on: std::collections::HashSet<_> = a.iter().collect();
    let hits = b.lattice.iter().filter(|p| on.contains(p)).count();
    assert!(hits as f64 >= 0.9 * b.lattice.len() as f64);
}

#[test]
fn concentric_circles_cut_halfway() {
    let c = [20.0, 20.0, 20.0];
    let inner = common::lattice_circle(c, 8.0);
    let outer = common::lattice_circle(c, 14.0);
    let g = build_curve_graph(
        &[
            common::loop_curve(EXTENT, &inner),
            common::loop_curve(EXTENT, &outer),
        ],
        SeedPoint([20, 20, 20]),
    )
    .unwrap();
    let cut = min_cut(&g);
    assert!(cut
        .edges
        .iter()
        .all(|&i| g.edges[i].kind == EdgeKind::Inter));
    assert_eq!(cut.edges.len(), inner.len());
    let b = assemble_boundary(&g, &cut, [41, 41, 41]).unwrap();
    assert!(b.is_simple_loop());
    let cx = b.complex(EXTENT).unwrap();
    assert_eq!(cx.connected_components(), 1);
    assert!(cx.faces_of_dim(0).all(|v| cx.coface_count(v) == 2));
    // Hausdorff distance to the analytic circle of radius 11 in z = 20
    let mut worst: f64 = 0.0;
    for p in b.points() {
        let rho = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
        worst = worst.max(((rho - 11.0).powi(2) + (p[2] - c[2]).powi(2)).sqrt());
    }
    let pts = b.points();
    for k in 0..360 {
        let t = (k as f64).to_radians();
        let q = [c[0] + 11.0 * t.cos(), c[1] + 11.0 * t.sin(), c[2]];
        let d = pts
            .iter()
            .map(|p| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
    }
    assert!(worst <= 2.0, "Hausdorff {worst}");
}

#[test]
fn single_edge_cut() {
    let cut = min_cut_undirected(2, &[(0, 1, 3.0)], &[0], &[1]);
    assert_eq!(cut.edges, vec![0]);
    assert_eq!(cut.cost, 3.0);
}

#[test]
fn two_disjoint_paths_sum_their_bottlenecks() {
    // s=0, t=5; 0-1-2-5 with bottleneck 1, 0-3-4-5 with bottleneck 2
    let e = [
        (0, 1, 4.0),
        (1, 2, 1.0),
        (2, 5, 7.0),
        (0, 3, 5.0),
        (3, 4, 2.0),
        (4, 5, 9.0),
    ];
    let cut = min_cut_undirected(6, &e, &[0], &[5]);
    assert_eq!(cut.cost, 3.0);
    assert_eq!(cut.edges, vec![1, 4]);
}

#[test]
fn disconnected_terminals_give_an_empty_cut() {
    let cut = min_cut_undirected(4, &[(0, 1, 1.0), (2, 3, 1.0)], &[0], &[3]);
    assert!(cut.disconnected);
    assert!(cut.edges.is_empty());
    assert_eq!(cut.cost, 0.0);
}

#[test]
fn random_graphs_match_exhaustive_bipartitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.random_range(4..=14);
        let mut e = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(0.35) {
                    e.push((a, b, rng.random_range(0..10) as f64));
                }
            }
        }
        let cut = min_cut_undirected(n, &e, &[0], &[n - 1]);
        assert_eq!(cut.cost, brute_cut(n, &e, 0, n - 1));
        let recount: f64 = cut.edges.iter().map(|&i| e[i].2).sum();
        assert_eq!(recount, cut.cost);
    }
}

#[test]
fn stopping_examples() {
    assert!(stopping_check(12.0, 4, 5.0).unwrap());
    assert!(!stopping_check(30.0, 4, 5.0).unwrap());
    assert!(stopping_check(1.0, 0, 5.0).is_err());
}

#[test]
fn segment_distance_cases() {
    assert_eq!(
        segment_distance([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]),
        1.0
    );
    assert_eq!(
        segment_distance([0.0; 3], [2.0, 0.0, 0.0], [1.0, -1.0, 1.0], [1.0, 1.0, 1.0]),
        1.0
    );
    assert_eq!(
        segment_distance([0.0; 3], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0], [4.0, 0.0, 0.0]),
        2.0
    );
}

proptest! {
    #[test]
    fn stopping_is_monotone_in_t(cost in 0.0f64..100.0, size in 1usize..50, t1 in 0.1f64..20.0, dt in 0.0f64..20.0) {
        if stopping_check(cost, size, t1).unwrap() {
            prop_assert!(stopping_check(cost, size, t1 + dt).unwrap());
        }
    }

    #[test]
    fn min_cut_is_no_worse_than_any_partition(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 9;
        let mut e = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(0.5) {
                    e.push((a, b, rng.random_range(0.0..5.0)));
                }
            }
        }
        let cut = min_cut_undirected(n, &e, &[0], &[n - 1]);
        let mask: u32 = rng.random_range(0..(1 << n)) | 1;
        let mask = mask & !(1 << (n - 1));
        let other: f64 = e.iter().filter(|(a, b, _)| (mask >> a & 1) != (mask >> b & 1)).map(|x| x.2).sum();
        prop_assert!(cut.cost <= other + 1e-9);
    }
}

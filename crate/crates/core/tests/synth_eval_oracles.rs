use std::collections::HashSet;

use proptest::prelude::*;
use surfcut::cubical::{CubicalComplex, Face};
use surfcut::mesh::{complex_to_mesh, SurfaceMesh};
use surfcut::metrics::{evaluate, voxelize_mesh, Scores};
use surfcut::synth::{generate_surface, SurfaceKind};
use surfcut::Error;

fn shoelace(pts: &[[f64; 3]]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| pts[i][0] * pts[(i + 1) % n][1] - pts[(i + 1) % n][0] * pts[i][1])
        .sum::<f64>()
        .abs()
        / 2.0
}

#[test]
fn trimmed_plane_band_is_three_voxels_thick() {
    let s = generate_surface(SurfaceKind::TrimmedPlane, [60, 60, 60], 7).unwrap();
    let zc = 30usize;
    let mut zeros = 0usize;
    for k in 0..60 {
        for j in 0..60 {
            for i in 0..60 {
                let x = s.phi.get([i, j, k]);
                assert!(x == 0.0 || x == 1.0);
                if x == 0.0 {
                    zeros += 1;
                    assert!(
                        k.abs_diff(zc) <= 1,
                        "zero voxel off the band at {:?}",
                        [i, j, k]
                    );
                }
            }
        }
    }
    let surf: HashSet<[usize; 3]> = s.gt.surface.iter().copied().collect();
    for v in &s.gt.surface {
        assert_eq!(v[2], zc);
        let interior = [[1, 0], [0, 1], [2, 1], [1, 2]]
            .iter()
            .all(|o| surf.contains(&[v[0] + o[0] - 1, v[1] + o[1] - 1, zc]));
        if interior {
            for k in zc - 1..=zc + 1 {
                assert_eq!(s.phi.get([v[0], v[1], k]), 0.0);
            }
        }
    }
    let band = 3.0 * shoelace(&s.gt.boundary_polyline);
    let rel = (zeros as f64 - band).abs() / band;
    assert!(rel <= 0.05, "{zeros} zero voxels vs band volume {band:.0}");
}

#[test]
fn cut_sphere_boundary_is_four_arcs() {
    let s = generate_surface(SurfaceKind::CutSphere, [100, 100, 100], 0).unwrap();
    assert_eq!(s.gt.corners.len(), 4);
    let (c, a) = (50.0, 24.0);
    for p in &s.gt.boundary_polyline {
        let wall = ((p[0] - c).abs() - a)
            .abs()
            .min(((p[1] - c).abs() - a).abs());
        assert!(wall < 1e-9, "boundary point {p:?} off the square walls");
    }
    for q in &s.gt.corners {
        assert!(((q[0] - c).abs() - a).abs() < 1e-9 && ((q[1] - c).abs() - a).abs() < 1e-9);
        let d =
            s.gt.boundary_polyline
                .iter()
                .map(|p| (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min);
        assert!(d < 0.1);
    }
    // the four arcs are the walls x = ±a, y = ±a; each wall is visited once
    let wall_of = |p: &[f64; 3]| {
        if ((p[0] - c).abs() - a).abs() < 1e-9 {
            if p[0] > c {
                0
            } else {
                2
            }
        } else if p[1] > c {
            1
        } else {
            3
        }
    };
    let seq: Vec<u8> = s.gt.boundary_polyline.iter().map(wall_of).collect();
    let changes = (0..seq.len())
        .filter(|&i| seq[i] != seq[(i + 1) % seq.len()])
        .count();
    assert_eq!(changes, 4);
}

#[test]
fn generation_is_deterministic() {
    for kind in SurfaceKind::ALL {
        let a = generate_surface(kind, [50, 50, 50], 5).unwrap();
        let b = generate_surface(kind, [50, 50, 50], 5).unwrap();
        assert_eq!(a.phi, b.phi);
        assert_eq!(a.gt, b.gt);
    }
    let a = generate_surface(SurfaceKind::RandomHeightfield, [50, 50, 50], 5).unwrap();
    let b = generate_surface(SurfaceKind::RandomHeightfield, [50, 50, 50], 6).unwrap();
    assert_ne!(a.phi, b.phi);
}

#[test]
fn ground_truth_boundary_hugs_the_surface() {
    for kind in SurfaceKind::ALL {
        let s = generate_surface(kind, [50, 50, 50], 1).unwrap();
        assert!(!s.gt.surface.is_empty() && !s.gt.boundary.is_empty());
        let surf: HashSet<[usize; 3]> = s.gt.surface.iter().copied().collect();
        for v in &s.gt.boundary {
            let near = (0..27).any(|c| {
                let w = [v[0] + c % 3, v[1] + (c / 3) % 3, v[2] + c / 9];
                w.iter().all(|&x| x >= 1) && surf.contains(&[w[0] - 1, w[1] - 1, w[2] - 1])
            });
            assert!(near, "{kind}: boundary voxel {v:?} not next to the surface");
        }
        let b = s.gt.boundary_curve().unwrap();
        assert!(b.is_simple_loop());
        for p in &b.lattice {
            assert_eq!(
                s.phi.get(*p),
                0.0,
                "{kind}: rasterised boundary leaves the band at {p:?}"
            );
        }
    }
}

#[test]
fn surface_outside_margin_is_rejected() {
    assert!(matches!(
        generate_surface(SurfaceKind::TrimmedPlane, [12, 12, 12], 0),
        Err(Error::SurfaceExceedsMargin)
    ));
}

fn plane(z: usize) -> Vec<[usize; 3]> {
    (0..100).map(|i| [10 + i % 10, 10 + i / 10, z]).collect()
}

fn brute(r: &[[usize; 3]], g: &[[usize; 3]], eps: f64) -> Scores {
    let near = |a: &[[usize; 3]], b: &[[usize; 3]]| {
        a.iter()
            .filter(|v| {
                b.iter().any(|w| {
                    ((0..3)
                        .map(|k| (v[k] as f64 - w[k] as f64).powi(2))
                        .sum::<f64>())
                    .sqrt()
                        < eps
                })
            })
            .count()
    };
    let (nr, ng) = (near(r, g), near(g, r));
    let p = nr as f64 / r.len() as f64;
    let rc = ng as f64 / g.len() as f64;
    let f = if p + rc > 0.0 {
        2.0 * p * rc / (p + rc)
    } else {
        0.0
    };
    Scores {
        precision: p,
        recall: rc,
        f,
        gt_cov: (nr + ng) as f64 / (r.len() + g.len()) as f64,
    }
}

#[test]
fn metric_examples() {
    let one = Scores {
        precision: 1.0,
        recall: 1.0,
        f: 1.0,
        gt_cov: 1.0,
    };
    let zero = Scores {
        precision: 0.0,
        recall: 0.0,
        f: 0.0,
        gt_cov: 0.0,
    };
    assert_eq!(evaluate(&plane(20), &plane(20), 3.0).unwrap(), one);
    assert_eq!(evaluate(&plane(20), &plane(22), 3.0).unwrap(), one);
    assert_eq!(evaluate(&plane(20), &plane(24), 3.0).unwrap(), zero);
    assert_eq!(evaluate(&plane(20), &plane(23), 3.0).unwrap(), zero);
    assert!(evaluate(&[], &plane(20), 3.0).is_err());
    assert!(evaluate(&plane(20), &[], 3.0).is_err());
}

#[test]
fn unit_quad_voxelizes_to_its_corners() {
    let m = SurfaceMesh {
        vertices: vec![
            [4.0, 4.0, 6.0],
            [5.0, 4.0, 6.0],
            [5.0, 5.0, 6.0],
            [4.0, 5.0, 6.0],
        ],
        quads: vec![[0, 1, 2, 3]],
        boundary: None,
    };
    let v = voxelize_mesh(&m);
    // exact oracle: lattice points within 0.5 of the unit square
    let mut exact = Vec::new();
    for k in 4..9 {
        for j in 2..8 {
            for i in 2..8 {
                let p = [i as f64, j as f64, k as f64];
                let d = ((p[0] - p[0].clamp(4.0, 5.0)).powi(2)
                    + (p[1] - p[1].clamp(4.0, 5.0)).powi(2)
                    + (p[2] - 6.0).powi(2))
                .sqrt();
                if d <= 0.5 {
                    exact.push([i, j, k]);
                }
            }
        }
    }
    exact.sort();
    assert_eq!(v, exact);
    assert_eq!(v.len(), 4);
}

#[test]
fn adjacent_quads_share_voxels_once() {
    let x =
        CubicalComplex::from_faces([6, 6, 6], [Face::new(3, 3, 4), Face::new(5, 3, 4)]).unwrap();
    let v = voxelize_mesh(&complex_to_mesh(&x).unwrap());
    assert_eq!(v.len(), 6);
}

#[test]
fn mesh_voxels_cover_the_complex_vertices() {
    let faces = [
        Face::new(3, 3, 4),
        Face::new(4, 3, 5),
        Face::new(5, 4, 5),
        Face::new(3, 5, 6),
    ];
    let x = CubicalComplex::from_faces([6, 6, 6], faces).unwrap();
    let v: HashSet<[usize; 3]> = voxelize_mesh(&complex_to_mesh(&x).unwrap())
        .into_iter()
        .collect();
    for p in x.faces_of_dim(0) {
        assert!(v.contains(&p.lattice().unwrap()));
    }
}

fn voxel_set(max: usize) -> impl Strategy<Value = Vec<[usize; 3]>> {
    prop::collection::vec([0..max, 0..max, 0..max], 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evaluate_matches_brute_force(r in voxel_set(12), g in voxel_set(12), eps in 0.5f64..5.0) {
        let mut r = r; r.sort(); r.dedup();
        let mut g = g; g.sort(); g.dedup();
        let s = evaluate(&r, &g, eps).unwrap();
        let b = brute(&r, &g, eps);
        prop_assert!((s.precision - b.precision).abs() < 1e-12);
        prop_assert!((s.recall - b.recall).abs() < 1e-12);
        prop_assert!((s.f - b.f).abs() < 1e-12);
        prop_assert!((s.gt_cov - b.gt_cov).abs() < 1e-12);
        for x in [s.precision, s.recall, s.f, s.gt_cov] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn evaluate_is_symmetric_and_translation_invariant(r in voxel_set(12), g in voxel_set(12), t in [0usize..6, 0..6, 0..6]) {
        let ab = evaluate(&r, &g, 3.0).unwrap();
        let ba = evaluate(&g, &r, 3.0).unwrap();
        prop_assert!((ab.gt_cov - ba.gt_cov).abs() < 1e-12);
        prop_assert!((ab.precision - ba.recall).abs() < 1e-12);
        let sh = |s: &[[usize; 3]]| s.iter().map(|v| [v[0] + t[0], v[1] + t[1], v[2] + t[2]]).collect::<Vec<_>>();
        let moved = evaluate(&sh(&r), &sh(&g), 3.0).unwrap();
        prop_assert_eq!(moved, ab);
    }
}

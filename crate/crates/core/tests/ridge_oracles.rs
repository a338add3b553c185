use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfcut::fmm::fast_march;
use surfcut::front::{build_front_complex, FrontComplex};
use surfcut::ridge::{highest_ridge, highest_ridge_traced, morse_complex, RidgeCurve};
use surfcut::volume::{ScalarVolume, SeedPoint};

fn sphere_front(n: usize, d: f64) -> FrontComplex {
    let phi = ScalarVolume::new([n, n, n], 1.0).unwrap();
    let c = n / 2;
    let res = fast_march(&phi, SeedPoint([c, c, c]), None).unwrap();
    build_front_complex(&res, d).unwrap()
}

fn is_two_manifold(front: &FrontComplex) -> bool {
    let c = front.complex();
    c.faces_of_dim(1).all(|g| c.cofaces_of_dim(g, 2).len() == 2)
}

/// Lower pole and upper pole are the only minima; a tiny radial term breaks
/// the ties on the flat polar caps.
fn volcano(front: &mut FrontComplex, c: usize) {
    let c = c as f64;
    front.set_vertex_costs(|v| {
        let (x, y, z) = (v[0] as f64 - c, v[1] as f64 - c, v[2] as f64 - c);
        -z.abs() + 1e-4 * (x * x + y * y)
    });
}

fn front_radius(front: &FrontComplex, c: usize) -> f64 {
    let mut r: Vec<f64> = front
        .faces(0)
        .iter()
        .map(|v| {
            let p = v.center();
            ((p[0] - c as f64).powi(2) + (p[1] - c as f64).powi(2) + (p[2] - c as f64).powi(2))
                .sqrt()
        })
        .collect();
    r.sort_by(f64::total_cmp);
    r[r.len() / 2]
}

fn near_equator(ridge: &RidgeCurve, c: usize, radius: f64, tol: f64) -> f64 {
    let pts = ridge.points();
    let ok = pts
        .iter()
        .filter(|p| {
            let rho = ((p[0] - c as f64).powi(2) + (p[1] - c as f64).powi(2)).sqrt();
            ((rho - radius).powi(2) + (p[2] - c as f64).powi(2)).sqrt() <= tol
        })
        .count();
    ok as f64 / pts.len() as f64
}

#[test]
fn sphere_front_is_a_closed_sphere() {
    let f = sphere_front(21, 5.5);
    assert_eq!(f.complex().euler_characteristic(), 2);
    assert_eq!(f.complex().connected_components(), 1);
    assert!(is_two_manifold(&f));
    f.complex().check_closed().unwrap();
}

#[test]
fn front_costs_sit_on_the_level_set() {
    // with unit cost U_E equals U, so U_E read at the U = D crossing is D
    let phi = ScalarVolume::new([21, 21, 21], 1.0).unwrap();
    let res = fast_march(&phi, SeedPoint([10, 10, 10]), None).unwrap();
    let d = 6.5;
    let f = build_front_complex(&res, d).unwrap();
    for v in f.faces(0) {
        let c = f.vertex_cost(v.lattice().unwrap());
        assert!((c - d).abs() < 1e-9, "vertex {v:?} cost {c}");
    }
    for g in f.faces(2) {
        let mean: f64 = g
            .corners()
            .iter()
            .map(|v| f.vertex_cost(v.lattice().unwrap()))
            .sum::<f64>()
            / 4.0;
        assert!((f.cost(g) - mean).abs() < 1e-12);
    }
}

#[test]
fn empty_front_is_an_error() {
    let phi = ScalarVolume::new([9, 9, 9], 1.0).unwrap();
    let res = fast_march(&phi, SeedPoint([4, 4, 4]), None).unwrap();
    assert!(build_front_complex(&res, 0.5).is_err());
}

#[test]
fn volcano_gives_two_regions_and_the_equator() {
    let (n, c) = (41, 20);
    let mut f = sphere_front(n, 12.0);
    volcano(&mut f, c);
    let mc = morse_complex(&f).unwrap();
    assert_eq!(mc.holes, 2);
    assert_eq!(mc.labels.iter().collect::<BTreeSet<_>>().len(), 2);
    assert!(mc.ridge.is_simple_loop());
    let r = front_radius(&f, c);
    assert!(near_equator(&mc.ridge, c, r, 2.0) >= 0.9);

    let (hr, passes) = highest_ridge_traced(&f).unwrap();
    assert_eq!(passes, 0);
    assert_eq!(hr, mc.ridge);
    assert!(hr.junctions().is_empty());
}

#[test]
fn noisy_volcano_reduces_to_one_loop() {
    let (n, c) = (41, 20);
    let mut f = sphere_front(n, 12.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise: Vec<f64> = (0..n * n * n).map(|_| rng.random_range(0.0..1.5)).collect();
    let cf = c as f64;
    f.set_vertex_costs(|v| {
        let (x, y, z) = (v[0] as f64 - cf, v[1] as f64 - cf, v[2] as f64 - cf);
        -z.abs() + 1e-4 * (x * x + y * y) + noise[v[0] + n * (v[1] + n * v[2])]
    });
    let mc = morse_complex(&f).unwrap();
    assert!(mc.holes >= 3, "only {} basins", mc.holes);
    assert!(!mc.ridge.junctions().is_empty());
    let hr = highest_ridge(&f).unwrap();
    assert!(hr.is_simple_loop());
    assert!(hr.degrees().values().all(|&d| d == 2));
    let first: BTreeSet<_> = mc.ridge.edges.iter().collect();
    assert!(hr.edges.iter().all(|e| first.contains(e)));
}

#[test]
fn constant_cost_still_yields_one_loop() {
    let mut f = sphere_front(21, 6.0);
    f.set_vertex_costs(|_| 1.0);
    let mc = morse_complex(&f).unwrap();
    assert_eq!(
        mc.ridge.complex().euler_characteristic(),
        2 - mc.holes as i64
    );
    let hr = highest_ridge(&f).unwrap();
    assert!(hr.is_simple_loop());
}

#[test]
fn band_plane_ridge_lies_on_the_plane() {
    let n = 41;
    let c = 20usize;
    let mut phi = ScalarVolume::new([n, n, n], 1.0).unwrap();
    for k in c - 1..=c + 1 {
        for j in 0..n {
            for i in 0..n {
                phi.set([i, j, k], 0.1);
            }
        }
    }
    let res = fast_march(&phi, SeedPoint([c, c, c]), None).unwrap();
    let f = build_front_complex(&res, 2.0).unwrap();
    let hr = highest_ridge(&f).unwrap();
    assert!(hr.is_simple_loop());
    let pts = hr.points();
    let near = pts
        .iter()
        .filter(|p| (p[2] - c as f64).abs() <= 2.0)
        .count();
    assert!(
        near as f64 >= 0.9 * pts.len() as f64,
        "{near}/{}",
        pts.len()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn residual_is_a_wedge_of_circles(seed in 0u64..1000) {
        let mut f = sphere_front(15, 4.5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let costs: Vec<f64> = (0..15 * 15 * 15).map(|_| rng.random_range(0.0..1.0)).collect();
        f.set_vertex_costs(|v| costs[v[0] + 15 * (v[1] + 15 * v[2])]);
        let mc = morse_complex(&f).unwrap();
        let labels: BTreeSet<_> = mc.labels.iter().collect();
        prop_assert_eq!(labels.len() as u32, mc.holes);
        prop_assert_eq!(mc.ridge.complex().euler_characteristic(), 2 - mc.holes as i64);
        if mc.holes >= 2 {
            prop_assert_eq!(mc.ridge.components(), 1);
        }
        for (a, b) in &mc.ridge.labels {
            prop_assert!(a != b);
        }
        let hr = highest_ridge(&f).unwrap();
        prop_assert!(hr.is_simple_loop());
    }
}

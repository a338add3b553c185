mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfcut::fmm::{
    backtrack_minimal_path, fast_march, fast_march_with, front_indicator, FmmOptions,
};
use surfcut::volume::{ScalarVolume, SeedPoint};

fn random_phi(n: usize, seed: u64) -> ScalarVolume {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * n * n).map(|_| rng.random_range(0.5..2.0)).collect();
    ScalarVolume::from_vec([n, n, n], data).unwrap()
}

fn norm(v: [usize; 3], p: [usize; 3]) -> f64 {
    (0..3)
        .map(|a| (v[a] as f64 - p[a] as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn cone_solution_on_uniform_cost() {
    let phi = ScalarVolume::new([41, 41, 41], 1.0).unwrap();
    let t = Instant::now();
    let r = fast_march(&phi, SeedPoint([20, 20, 20]), None).unwrap();
    assert!(t.elapsed().as_secs_f64() < 1.0);
    let mut worst: f64 = 0.0;
    for i in 0..phi.len() {
        let v = phi.voxel(i);
        let d = norm(v, [20, 20, 20]);
        if d <= 18.0 {
            worst = worst.max((r.u.data()[i] - d).abs());
        }
    }
    assert!(worst <= 1.0, "max error {worst}");
}

#[test]
fn homogeneity_in_constant_cost() {
    let one = fast_march(
        &ScalarVolume::new([15, 15, 15], 1.0).unwrap(),
        SeedPoint([7, 7, 7]),
        None,
    )
    .unwrap();
    let c = 3.5;
    let sc = fast_march(
        &ScalarVolume::new([15, 15, 15], c).unwrap(),
        SeedPoint([7, 7, 7]),
        None,
    )
    .unwrap();
    for i in 0..one.u.len() {
        let (a, b) = (one.u.data()[i] * c, sc.u.data()[i]);
        assert!((a - b).abs() <= 1e-4 * a.max(1e-12), "U {a} vs {b}");
        let (ea, eb) = (one.ue.data()[i], sc.ue.data()[i]);
        assert!((ea - eb).abs() <= 1e-4 * ea.max(1e-12), "U_E {ea} vs {eb}");
    }
}

#[test]
fn dijkstra_sandwich() {
    for s in 0..20 {
        let phi = random_phi(11, s);
        let r = fast_march(&phi, SeedPoint([5, 5, 5]), None).unwrap();
        // upper: 6-neighbour steps paying the cost of the voxel entered
        let d6 = common::dijkstra(&phi, [5, 5, 5], false, |_, _, to| to);
        // lower: 26-neighbour steps paying length times the cheaper endpoint
        let d26 = common::dijkstra(&phi, [5, 5, 5], true, |len, a, b| len * a.min(b));
        for i in 0..phi.len() {
            let u = r.u.data()[i];
            assert!(
                d26[i] <= u + 1e-9 && u <= d6[i] + 1e-9,
                "voxel {i}: {} <= {u} <= {}",
                d26[i],
                d6[i]
            );
        }
    }
}

#[test]
fn monotone_acceptance_and_upwind_consistency() {
    let phi = random_phi(9, 77);
    let r = fast_march(&phi, SeedPoint([4, 4, 4]), None).unwrap();
    assert_eq!(r.accept_order.len(), phi.len());
    assert!(r
        .accept_order
        .windows(2)
        .all(|w| r.u.data()[w[0]] <= r.u.data()[w[1]]));
    for &i in r.accept_order.iter().skip(1) {
        let v = phi.voxel(i);
        let (u, e) = r.recompute(v).unwrap();
        assert!((u - r.u.data()[i]).abs() < 1e-6);
        assert!((e - r.ue.data()[i]).abs() < 1e-6);
    }
}

#[test]
fn euclidean_length_dominates_chord() {
    for s in 0..5 {
        let phi = random_phi(13, 100 + s);
        let r = fast_march(&phi, SeedPoint([6, 6, 6]), None).unwrap();
        for i in 0..phi.len() {
            let v = phi.voxel(i);
            assert!(r.ue.data()[i] >= norm(v, [6, 6, 6]) - 1.0);
        }
    }
}

#[test]
fn regularizer_shifts_cost() {
    let phi = ScalarVolume::new([9, 9, 9], 0.0).unwrap();
    let r = fast_march_with(
        &phi,
        SeedPoint([4, 4, 4]),
        &FmmOptions {
            rho: 1.0,
            stop_distance: None,
        },
    )
    .unwrap();
    assert!((r.u.get([6, 4, 4]) - 2.0).abs() < 1e-12);
}

#[test]
fn backtracked_paths_are_straight_on_uniform_cost() {
    let phi = ScalarVolume::new([31, 31, 31], 1.0).unwrap();
    let p = [15, 15, 15];
    let r = fast_march(&phi, SeedPoint(p), None).unwrap();
    for x in [
        [27, 15, 15],
        [25, 22, 15],
        [5, 8, 24],
        [26, 26, 26],
        [15, 3, 20],
    ] {
        let path = backtrack_minimal_path(&r, x).unwrap();
        let a = [x[0] as f64, x[1] as f64, x[2] as f64];
        let b = [p[0] as f64, p[1] as f64, p[2] as f64];
        for q in &path.points {
            let d = point_segment_distance(*q, a, b);
            assert!(d <= 0.5, "{x:?}: point {q:?} is {d} off the chord");
        }
        let ue = r.ue.get(x);
        assert!(
            (path.length - ue).abs() <= 0.1 * ue,
            "{x:?}: length {} vs U_E {ue}",
            path.length
        );
    }
}

/// Random cost in [0.5, 2] varying on a 4-voxel scale: coarse noise upsampled
/// trilinearly.
fn smooth_random_phi(n: usize, cell: usize, seed: u64) -> ScalarVolume {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = n / cell + 2;
    let coarse: Vec<f64> = (0..m * m * m).map(|_| rng.random_range(0.5..2.0)).collect();
    let mut v = ScalarVolume::new([n, n, n], 1.0).unwrap();
    for i in 0..v.len() {
        let q = v.voxel(i).map(|x| x as f64 / cell as f64);
        let b = q.map(|x| x.floor() as usize);
        let mut acc = 0.0;
        for c in 0..8 {
            let o = [c & 1, (c >> 1) & 1, (c >> 2) & 1];
            let w: f64 = (0..3)
                .map(|a| {
                    let t = q[a] - b[a] as f64;
                    if o[a] == 1 {
                        t
                    } else {
                        1.0 - t
                    }
                })
                .product();
            acc += w * coarse[(b[0] + o[0]) + m * ((b[1] + o[1]) + m * (b[2] + o[2]))];
        }
        v.data_mut()[i] = acc;
    }
    v
}

#[test]
fn backtracked_length_tracks_euclidean_length_on_random_cost() {
    let phi = smooth_random_phi(31, 4, 5);
    let r = fast_march(&phi, SeedPoint([15, 15, 15]), None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut ok, mut total) = (0, 0);
    while total < 40 {
        let x = [
            rng.random_range(2..29),
            rng.random_range(2..29),
            rng.random_range(2..29),
        ];
        if norm(x, [15, 15, 15]) < 4.0 {
            continue;
        }
        total += 1;
        let path = backtrack_minimal_path(&r, x).unwrap();
        let ue = r.ue.get(x);
        if (path.length - ue).abs() <= 0.1 * ue {
            ok += 1;
        }
    }
    assert!(ok as f64 >= 0.9 * total as f64, "{ok}/{total} within 10%");
}

fn point_segment_distance(q: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let aq = [q[0] - a[0], q[1] - a[1], q[2] - a[2]];
    let l2 = ab.iter().map(|x| x * x).sum::<f64>();
    let t = ((0..3).map(|i| ab[i] * aq[i]).sum::<f64>() / l2).clamp(0.0, 1.0);
    (0..3)
        .map(|i| (a[i] + t * ab[i] - q[i]).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn inside_count_grows_with_distance() {
    let phi = random_phi(11, 3);
    let r = fast_march(&phi, SeedPoint([5, 5, 5]), None).unwrap();
    let mut levels: Vec<f64> = r.u.data().to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut prev = 0;
    for d in levels.iter().step_by(7).skip(1) {
        let n = front_indicator(&r, *d).unwrap().count();
        assert!(n >= prev);
        prev = n;
    }
    let all = front_indicator(&r, r.max_accepted() + 1.0).unwrap();
    assert_eq!(all.count(), 10 * 10 * 10);
}

#[test]
fn marching_scales_n_log_n() {
    let time = |n: usize| {
        let phi = random_phi(n, 1);
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let t = Instant::now();
            let r = fast_march(&phi, SeedPoint([n / 2, n / 2, n / 2]), None).unwrap();
            best = best.min(t.elapsed().as_secs_f64());
            assert_eq!(r.accept_order.len(), n * n * n);
        }
        best
    };
    let ratio = time(100) / time(50);
    assert!((6.0..=20.0).contains(&ratio), "ratio {ratio}");
}

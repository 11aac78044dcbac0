use std::collections::HashSet;

use deppoe::simulate::{gen_dataset, gen_precision, gen_prior_graph, gen_structural_truth, SimulationConfig};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn config(p: usize, n: usize, pi0: f64, false_edges: usize, seed: u64) -> SimulationConfig {
    SimulationConfig {
        p,
        n,
        pi0: Some(pi0),
        group_split: n / 2,
        false_edge_count: false_edges,
        seed,
        ..SimulationConfig::default()
    }
}

#[test]
fn no_slab_mass_gives_the_identity() {
    let b = gen_structural_truth(&config(8, 4, 1.0, 0, 1), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    for i in 0..8 {
        for k in 0..8 {
            assert_eq!(b[(i, k)], if i == k { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn slab_magnitudes_have_mean_two() {
    let p = 30;
    let b = gen_structural_truth(&config(p, 4, 0.0, 0, 2), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let mags: Vec<f64> = (0..p)
        .flat_map(|i| (0..p).map(move |k| (i, k)))
        .filter(|(i, k)| i != k)
        .map(|(i, k)| b[(i, k)].abs())
        .collect();
    assert!(mags.iter().all(|&m| m > 0.0));
    let mean = mags.iter().sum::<f64>() / mags.len() as f64;
    // Gamma(2, 1) has sd sqrt(2)
    let se = (2.0 / mags.len() as f64).sqrt();
    assert!((mean - 2.0).abs() < 4.0 * se, "mean magnitude {mean}");
}

#[test]
fn precision_is_unit_diagonal_and_positive_definite() {
    let cfg = SimulationConfig {
        p: 50,
        ..SimulationConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let b = gen_structural_truth(&cfg, &mut rng).unwrap();
        let omega = gen_precision(&b).unwrap();
        for i in 0..50 {
            assert_eq!(omega[(i, i)], 1.0);
            for k in 0..50 {
                assert!((omega[(i, k)] - omega[(k, i)]).abs() < 1e-12);
            }
        }
        assert!(DMatrix::from_row_slice(50, 50, omega.as_slice()).cholesky().is_some());
    }
}

#[test]
fn independent_scores_give_the_normal_class_frequencies() {
    let cfg = SimulationConfig {
        b_mean: [0.0, 0.0],
        sigma_b2: 0.0,
        ..config(50, 400, 1.0, 0, 4)
    };
    let (_, truth) = gen_dataset(&cfg).unwrap();
    let cells = truth.e_true.len() as f64;
    let std = Normal::new(0.0, 1.0).unwrap();
    for (class, expected) in [(-1i8, std.cdf(-1.0)), (1, 1.0 - std.cdf(3.0))] {
        let freq = truth.e_true.iter().filter(|&&c| c == class).count() as f64 / cells;
        let se = (expected * (1.0 - expected) / cells).sqrt();
        assert!(
            (freq - expected).abs() < 4.0 * se,
            "class {class}: {freq} vs {expected}"
        );
    }
}

#[test]
fn a_seed_fixes_the_whole_simulation() {
    let cfg = config(10, 12, 0.9, 5, 5);
    let (d1, t1) = gen_dataset(&cfg).unwrap();
    let (d2, t2) = gen_dataset(&cfg).unwrap();
    assert_eq!(d1, d2);
    assert_eq!(t1, t2);
    let (d3, _) = gen_dataset(&SimulationConfig { seed: 6, ..cfg }).unwrap();
    assert_ne!(d1.y(), d3.y());
}

#[test]
fn false_edges_are_disjoint_from_true_edges() {
    let (_, truth) = gen_dataset(&config(12, 6, 0.9, 20, 7)).unwrap();
    let real: HashSet<_> = truth.e_star.iter().collect();
    assert_eq!(truth.e_tilde.len(), 20);
    assert!(truth.e_tilde.iter().all(|e| !real.contains(e)));
    let (g0, false_flags) = gen_prior_graph(&truth).unwrap();
    assert_eq!(g0.edge_count(), truth.e_star.len() + 20);
    assert_eq!(false_flags.iter().filter(|&&f| f).count(), 20);
}

#[test]
fn without_false_edges_the_prior_graph_is_the_truth() {
    let (_, truth) = gen_dataset(&config(10, 6, 0.85, 0, 8)).unwrap();
    let (g0, _) = gen_prior_graph(&truth).unwrap();
    let prior: HashSet<_> = g0.edges().copied().collect();
    let real: HashSet<_> = truth.e_star.iter().copied().collect();
    assert_eq!(prior, real);
}

#[test]
fn too_many_false_edges_are_rejected() {
    // with no spike mass every ordered pair is a true edge
    assert!(gen_dataset(&config(4, 6, 0.0, 1, 9)).is_err());
}

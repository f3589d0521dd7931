mod common;

use common::{dense_solve, frobenius, frobenius_diff, random_connected_edges, rng, uniform_points};
use lipreg_core::laplace::{SolverOptions, WeightedLaplacian};
use lipreg_core::{Error, Points};
use rand::Rng;

#[test]
fn matches_dense_lu_on_random_connected_graphs() {
    let mut worst = 0.0f64;
    for seed in 0..50 {
        let mut r = rng(seed);
        let n = r.random_range(2..=30);
        let b = r.random_range(1..=3);
        let extra = r.random_range(0..=n);
        let edges = random_connected_edges(&mut r, n, extra);
        let ew: Vec<f64> = edges.iter().map(|_| r.random_range(0.1..10.0)).collect();
        let mut vw: Vec<f64> = (0..n)
            .map(|_| {
                if r.random_bool(0.5) {
                    r.random_range(0.1..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        vw[r.random_range(0..n)] = r.random_range(0.1..1.0);
        let rhs = uniform_points(&mut r, n, b, -5.0, 5.0);

        let lap = WeightedLaplacian::new(n, &edges, &ew, &vw).unwrap();
        let got = lap
            .solve(&rhs, None, &SolverOptions::default())
            .unwrap()
            .solution;
        let want = dense_solve(n, &edges, &ew, &vw, &rhs);
        let rel = frobenius_diff(&got, &want) / frobenius(&want);
        worst = worst.max(rel);
        assert!(
            rel <= 1e-8,
            "seed {seed}: n={n} b={b} relative error {rel:e}"
        );
    }
    assert!(worst.is_finite());
}

#[test]
fn warm_start_reaches_the_same_solution() {
    let mut r = rng(99);
    let n = 20;
    let edges = random_connected_edges(&mut r, n, 15);
    let ew: Vec<f64> = edges.iter().map(|_| r.random_range(0.5..2.0)).collect();
    let vw = vec![0.3; n];
    let rhs = uniform_points(&mut r, n, 2, -1.0, 1.0);
    let guess = uniform_points(&mut r, n, 2, -1.0, 1.0);
    let lap = WeightedLaplacian::new(n, &edges, &ew, &vw).unwrap();
    let cold = lap
        .solve(&rhs, None, &SolverOptions::default())
        .unwrap()
        .solution;
    let warm = lap
        .solve(&rhs, Some(&guess), &SolverOptions::default())
        .unwrap()
        .solution;
    assert!(frobenius_diff(&cold, &warm) <= 1e-8 * frobenius(&cold));
}

#[test]
fn component_without_vertex_weight_is_singular() {
    let edges = [(0, 1), (2, 3)];
    let lap = WeightedLaplacian::new(4, &edges, &[1.0, 1.0], &[1.0, 0.0, 0.0, 0.0]).unwrap();
    let rhs = Points::new(1, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    match lap.solve(&rhs, None, &SolverOptions::default()) {
        Err(Error::SingularSystem { vertex }) => assert!(vertex == 2 || vertex == 3),
        other => panic!("expected a singular system, got {other:?}"),
    }
}

#[test]
fn three_vertex_hand_solution() {
    let edges = [(0, 1), (1, 2)];
    let lap = WeightedLaplacian::new(3, &edges, &[1.0, 1.0], &[1.0, 0.0, 1.0]).unwrap();
    let rhs = Points::new(1, vec![0.0, 0.0, 3.0]).unwrap();
    let out = lap.solve(&rhs, None, &SolverOptions::default()).unwrap();
    // tridiagonal (2, -1) system, solved by hand
    for (got, want) in out.solution.as_slice().iter().zip([0.75, 1.5, 2.25]) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
    assert!(out.residual <= 1e-10);
    assert!(out.residual_sq >= 0.0);
}

//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use lipreg_core::{LabeledDataset, Points};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_points(rng: &mut ChaCha8Rng, n: usize, dim: usize, lo: f64, hi: f64) -> Points {
    let data = (0..n * dim).map(|_| rng.random_range(lo..hi)).collect();
    Points::new(dim, data).unwrap()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Random spanning tree plus `extra` distinct random edges.
pub fn random_connected_edges(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    let max = n * (n - 1) / 2;
    let mut tries = 0;
    while edges.len() < (n - 1 + extra).min(max) && tries < 100 * (extra + 1) {
        tries += 1;
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let e = (i.min(j), i.max(j));
        if i != j && !edges.contains(&e) {
            edges.push(e);
        }
    }
    edges
}

/// `m` distinct random edges on `n` vertices, no connectivity requirement.
pub fn random_edges(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m.min(n * (n - 1) / 2) {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let e = (i.min(j), i.max(j));
        if i != j && !edges.contains(&e) {
            edges.push(e);
        }
    }
    edges
}

/// Dense `(L + Λ) X = B` by LU factorization.
pub fn dense_solve(
    n: usize,
    edges: &[(usize, usize)],
    ew: &[f64],
    vw: &[f64],
    rhs: &Points,
) -> Points {
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (&(i, j), &w) in edges.iter().zip(ew) {
        a[(i, i)] += w;
        a[(j, j)] += w;
        a[(i, j)] -= w;
        a[(j, i)] -= w;
    }
    for (v, &w) in vw.iter().enumerate() {
        a[(v, v)] += w;
    }
    let b = DMatrix::from_fn(n, rhs.dim(), |r, c| rhs.row(r)[c]);
    let x = a.lu().solve(&b).expect("nonsingular");
    let mut out = Points::zeros(n, rhs.dim());
    for r in 0..n {
        for c in 0..rhs.dim() {
            out.row_mut(r)[c] = x[(r, c)];
        }
    }
    out
}

pub fn frobenius(p: &Points) -> f64 {
    p.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn frobenius_diff(a: &Points, b: &Points) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// All-pairs shortest path lengths over weighted undirected edges.
pub fn floyd_warshall(n: usize, edges: &[(usize, usize)], lengths: &[f64]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0.0;
    }
    for (&(i, j), &l) in edges.iter().zip(lengths) {
        d[i][j] = d[i][j].min(l);
        d[j][i] = d[j][i].min(l);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Euclidean projection of `labels` onto `{‖ỹ_i − ỹ_j‖ ≤ r_ij}` by Dykstra's
/// alternating projections. Returns the projection and its squared distance.
pub fn dykstra(
    labels: &Points,
    edges: &[(usize, usize)],
    radii: &[f64],
    max_sweeps: usize,
) -> (Points, f64) {
    let b = labels.dim();
    let mut y = labels.clone();
    let mut inc = vec![0.0; edges.len() * 2 * b];
    for _ in 0..max_sweeps {
        let mut moved = 0.0f64;
        for (k, (&(i, j), &r)) in edges.iter().zip(radii).enumerate() {
            let p = &mut inc[k * 2 * b..(k + 1) * 2 * b];
            let u: Vec<f64> = (0..b).map(|c| y.row(i)[c] + p[c]).collect();
            let v: Vec<f64> = (0..b).map(|c| y.row(j)[c] + p[b + c]).collect();
            let d = dist(&u, &v);
            let (pu, pv) = if d > r {
                let s = (d - r) / (2.0 * d);
                let pu: Vec<f64> = (0..b).map(|c| u[c] - s * (u[c] - v[c])).collect();
                let pv: Vec<f64> = (0..b).map(|c| v[c] + s * (u[c] - v[c])).collect();
                (pu, pv)
            } else {
                (u.clone(), v.clone())
            };
            for c in 0..b {
                p[c] = u[c] - pu[c];
                p[b + c] = v[c] - pv[c];
                moved = moved
                    .max((y.row(i)[c] - pu[c]).abs())
                    .max((y.row(j)[c] - pv[c]).abs());
                y.row_mut(i)[c] = pu[c];
                y.row_mut(j)[c] = pv[c];
            }
        }
        if moved < 1e-14 {
            break;
        }
    }
    let phi = y.squared_distance_to(labels);
    (y, phi)
}

/// `‖y − y_i‖ / (L‖x − x_i‖)` for every training point.
pub fn slacks(data: &LabeledDataset, lipschitz: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    (0..data.len())
        .map(|i| dist(y, data.label(i)) / (lipschitz * dist(x, data.input(i))))
        .collect()
}

pub fn max_slack(data: &LabeledDataset, lipschitz: f64, x: &[f64], y: &[f64]) -> f64 {
    slacks(data, lipschitz, x, y)
        .into_iter()
        .fold(0.0, f64::max)
}

/// Smallest achievable max slack over a grid of spacing `step` covering the
/// tightest ball `B(y_i, L‖x − x_i‖)` (label dimension 1 or 2).
pub fn grid_min_max_slack(
    data: &LabeledDataset,
    lipschitz: f64,
    x: &[f64],
    step: f64,
) -> (f64, Vec<f64>) {
    let (c, r) = (0..data.len())
        .map(|i| (i, lipschitz * dist(x, data.input(i))))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, r)| (data.label(i).to_vec(), r))
        .unwrap();
    let k = (r / step).ceil() as i64 + 1;
    let mut best = (f64::INFINITY, c.clone());
    let mut eval = |y: Vec<f64>| {
        let s = max_slack(data, lipschitz, x, &y);
        if s < best.0 {
            best = (s, y);
        }
    };
    match c.len() {
        1 => {
            for a in -k..=k {
                eval(vec![c[0] + a as f64 * step]);
            }
        }
        2 => {
            for a in -k..=k {
                for b in -k..=k {
                    eval(vec![c[0] + a as f64 * step, c[1] + b as f64 * step]);
                }
            }
        }
        d => panic!("grid oracle supports label dimension 1 or 2, got {d}"),
    }
    best
}

/// Random instance whose labels are consistent with `L` on the complete graph
/// and whose tightest ball is small enough for a 1e-3 grid.
pub fn feasible_instance(seed: u64) -> (LabeledDataset, f64, Vec<f64>) {
    let mut r = rng(seed);
    loop {
        let n = r.random_range(2..=5);
        let a = r.random_range(1..=2);
        let b = r.random_range(1..=2);
        let x = uniform_points(&mut r, n, a, 0.0, 1.0);
        let y = uniform_points(&mut r, n, b, 0.0, 1.0);
        let data = LabeledDataset::new(x, y).unwrap();
        let g = lipreg_core::ConstraintGraph::complete(data.inputs(), 1.0).unwrap();
        let ratio = lipreg_core::smoothing::feasibility_check(data.labels(), &g);
        let lipschitz = ratio * r.random_range(1.0..1.5);
        let query: Vec<f64> = (0..a).map(|_| r.random_range(0.0..1.0)).collect();
        let tightest = (0..n)
            .map(|i| lipschitz * dist(&query, data.input(i)))
            .fold(f64::INFINITY, f64::min);
        if tightest > 1e-3 && tightest <= 1.0 {
            return (data, lipschitz, query);
        }
    }
}

/// Random 2-D to 2-D instance on the complete graph with `L` well below the
/// label ratio, so smoothing has work to do.
pub fn random_instance(seed: u64, n: usize) -> (LabeledDataset, lipreg_core::ConstraintGraph) {
    let mut r = rng(seed);
    let x = uniform_points(&mut r, n, 2, 0.0, 1.0);
    let y = uniform_points(&mut r, n, 2, 0.0, 1.0);
    let data = LabeledDataset::new(x, y).unwrap();
    let g1 = lipreg_core::ConstraintGraph::complete(data.inputs(), 1.0).unwrap();
    let ratio = lipreg_core::smoothing::feasibility_check(data.labels(), &g1);
    let l = ratio * r.random_range(0.2..0.6);
    let g = lipreg_core::ConstraintGraph::complete(data.inputs(), l).unwrap();
    (data, g)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

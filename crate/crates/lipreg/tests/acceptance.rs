//! One PASS/FAIL line per acceptance criterion; the test fails if any does.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::process::Command;
use std::time::Instant;

use common::{
    dense_solve, dist, dykstra, feasible_instance, floyd_warshall, frobenius, frobenius_diff,
    grid_min_max_slack, log_log_slope, max_slack, random_connected_edges, random_edges,
    random_instance, rng, uniform_points,
};
use lipreg::pipeline::{run_experiment, ExperimentConfig};
use lipreg_core::extension::extend_one_point_observed;
use lipreg_core::laplace::{SolverOptions, WeightedLaplacian};
use lipreg_core::selection::srm_select;
use lipreg_core::smoothing::{smooth_auto_observed, smooth_observed, SmoothingIterate};
use lipreg_core::{
    extend_one_point, smooth, smooth_auto, ConstraintGraph, ExtensionConfig, GraphPolicy,
    LabeledDataset, Points, SmoothingConfig,
};
use rand::Rng;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn line_data(xs: &[f64], ys: &[f64]) -> LabeledDataset {
    LabeledDataset::new(
        Points::new(1, xs.to_vec()).unwrap(),
        Points::new(1, ys.to_vec()).unwrap(),
    )
    .unwrap()
}

fn forced_extension() -> Verdict {
    let data = line_data(&[0.0, 2.0], &[0.0, 2.0]);
    let start = Instant::now();
    let r = extend_one_point(&data, 1.0, &[1.0], &ExtensionConfig::new(0.05));
    let secs = start.elapsed().as_secs_f64();
    match r {
        Ok(r) => verdict(
            (0.95..=1.05).contains(&r.y_star[0]) && secs < 1.0,
            format!("y* = {:.6}, {:.3} s", r.y_star[0], secs),
        ),
        Err(e) => verdict(false, e.to_string()),
    }
}

fn grid_equivalence() -> Verdict {
    let eps = 0.1;
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for seed in 0..20 {
        let (data, l, q) = feasible_instance(seed);
        let (grid_best, _) = grid_min_max_slack(&data, l, &q, 1e-3);
        let resolution = 1e-3 * (data.label_dim() as f64).sqrt()
            / (0..data.len())
                .map(|i| l * dist(&q, data.input(i)))
                .fold(f64::INFINITY, f64::min);
        let ok_grid = grid_best <= 1.0 + resolution;
        let slack = match extend_one_point(&data, l, &q, &ExtensionConfig::new(eps)) {
            Ok(r) => max_slack(&data, l, &q, &r.y_star),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(slack);
        if !ok_grid || slack > 1.0 + eps {
            failures.push(seed);
        }
    }
    verdict(
        failures.is_empty(),
        format!("20 instances, worst slack {worst:.4} (limit 1.1), failing seeds {failures:?}"),
    )
}

fn three_point() -> Verdict {
    let data = line_data(&[0.0, 1.0, 2.0], &[0.0, 10.0, 0.0]);
    let g = ConstraintGraph::complete(data.inputs(), 1.0).unwrap();
    let (_, opt) = dykstra(data.labels(), g.edges(), g.radii(), 100_000);
    let eps = 0.02;
    match smooth_auto(&data, &g, &SmoothingConfig::new(eps)) {
        Ok(r) => {
            let y = r.smoothed_labels.as_slice();
            let close = y
                .iter()
                .zip([3.0, 4.0, 3.0])
                .all(|(a, b)| (a - b).abs() <= 0.1);
            let within = r.distortion <= (1.0 + eps) * (1.0 + eps) * 54.0 + 1e-6;
            verdict(
                close && within && (opt - 54.0).abs() < 1e-6,
                format!(
                    "oracle optimum {opt:.6}, distortion {:.4}, labels ({:.3}, {:.3}, {:.3})",
                    r.distortion, y[0], y[1], y[2]
                ),
            )
        }
        Err(e) => verdict(false, e.to_string()),
    }
}

struct CertStats {
    runs: usize,
    rounds: usize,
    min_oracle: f64,
    worst_width_ratio: f64,
}

impl CertStats {
    fn observe(&mut self, m: usize, eps: f64, it: &SmoothingIterate<'_>) {
        self.rounds += 1;
        self.min_oracle = self.min_oracle.min(it.oracle.oracle_value);
        let width = 2.0 * ((m as f64 + 1.0) / eps).sqrt();
        let worst_h = it
            .oracle
            .h_edges
            .iter()
            .copied()
            .fold(it.oracle.h_phi, f64::min);
        self.worst_width_ratio = self.worst_width_ratio.max(-worst_h / width);
    }
}

fn certificates() -> Verdict {
    let mut s = CertStats {
        runs: 0,
        rounds: 0,
        min_oracle: f64::INFINITY,
        worst_width_ratio: 0.0,
    };
    let mut ok = true;
    let three = line_data(&[0.0, 1.0, 2.0], &[0.0, 10.0, 0.0]);
    let g3 = ConstraintGraph::complete(three.inputs(), 1.0).unwrap();
    let m3 = g3.edge_count();
    ok &= smooth_auto_observed(&three, &g3, &SmoothingConfig::new(0.02), |_, it| {
        s.observe(m3, 0.02, it)
    })
    .is_ok();
    s.runs += 1;
    for seed in 0..6 {
        let eps = [0.05, 0.1, 0.2][seed as usize % 3];
        let (data, g) = random_instance(300 + seed, 10);
        let (_, opt) = dykstra(data.labels(), g.edges(), g.radii(), 200_000);
        let m = g.edge_count();
        ok &= smooth_observed(&data, &g, 1.1 * opt, &SmoothingConfig::new(eps), |it| {
            s.observe(m, eps, it)
        })
        .is_ok();
        let sparse = GraphPolicy::Knn { k: 3 }
            .build(data.inputs(), g.lipschitz())
            .unwrap();
        let ms = sparse.edge_count();
        ok &= smooth_auto_observed(&data, &sparse, &SmoothingConfig::new(eps), |_, it| {
            s.observe(ms, eps, it)
        })
        .is_ok();
        s.runs += 2;
    }
    ok &= s.min_oracle >= -0.02 && s.worst_width_ratio <= 1.0 + 1e-9;
    verdict(
        ok,
        format!(
            "{} runs, {} rounds, min oracle value {:.3e}, worst -h / width bound {:.4}",
            s.runs, s.rounds, s.min_oracle, s.worst_width_ratio
        ),
    )
}

fn laplace_vs_dense() -> Verdict {
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
        let got = WeightedLaplacian::new(n, &edges, &ew, &vw)
            .and_then(|l| l.solve(&rhs, None, &SolverOptions::default()));
        let want = dense_solve(n, &edges, &ew, &vw, &rhs);
        worst = worst.max(match got {
            Ok(o) => frobenius_diff(&o.solution, &want) / frobenius(&want),
            Err(_) => f64::INFINITY,
        });
    }
    verdict(
        worst <= 1e-8,
        format!("50 graphs, worst relative Frobenius error {worst:.3e}"),
    )
}

fn width_invariant() -> Verdict {
    let (mut lo, mut hi, mut rounds) = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
    let mut observe = |h: &[f64]| {
        rounds += 1;
        for &v in h {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    };
    let forced = line_data(&[0.0, 2.0], &[0.0, 2.0]);
    let _ = extend_one_point_observed(&forced, 1.0, &[1.0], &ExtensionConfig::new(0.05), |it| {
        observe(it.h)
    });
    for seed in 0..20 {
        let (data, l, q) = feasible_instance(seed);
        let _ =
            extend_one_point_observed(&data, l, &q, &ExtensionConfig::new(0.1), |it| observe(it.h));
    }
    let pass = lo >= -2.0 - 1e-9 && hi <= 1.0 + 1e-9;
    verdict(pass, format!("{rounds} rounds, h in [{lo:.6}, {hi:.6}]"))
}

fn experiment() -> Verdict {
    let cfg = ExperimentConfig {
        train_sizes: vec![100, 1000],
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    match run_experiment(&cfg, |_| {}) {
        Ok(out) => {
            let secs = start.elapsed().as_secs_f64();
            let rows: Vec<String> = out
                .rows
                .iter()
                .map(|r| format!("n={} mwu={:.4} nw={:.4}", r.n_train, r.mwu_loss, r.nw_loss))
                .collect();
            let a = &out.acceptance;
            verdict(
                a.passed && secs < 600.0,
                format!(
                    "{}; ratio {:.3} (need <= {}), monotone {}, {:.0} s",
                    rows.join(", "),
                    a.gap_ratio,
                    a.gap_threshold,
                    a.monotone_ok,
                    secs
                ),
            )
        }
        Err(e) => verdict(false, e.to_string()),
    }
}

fn spanner() -> Verdict {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        for eps in [0.1, 0.5] {
            let mut r = rng(1000 + seed);
            let n = r.random_range(2..=50);
            let pts = uniform_points(&mut r, n, 2, 0.0, 1.0);
            let g = ConstraintGraph::greedy_spanner(&pts, 1.0, 1.0 + eps).unwrap();
            let lengths: Vec<f64> = g
                .edges()
                .iter()
                .map(|&(i, j)| dist(pts.row(i), pts.row(j)))
                .collect();
            let d = floyd_warshall(n, g.edges(), &lengths);
            for (i, row) in d.iter().enumerate() {
                for (j, path) in row.iter().enumerate().skip(i + 1) {
                    worst = worst.max(path / ((1.0 + eps) * dist(pts.row(i), pts.row(j))));
                }
            }
        }
    }
    verdict(
        worst <= 1.0 + 1e-12,
        format!("40 point sets, worst path / ((1+eps)·direct) = {worst:.6}"),
    )
}

fn srm_sanity() -> Verdict {
    let l0 = 2.0;
    let xs: Vec<f64> = (0..200).map(|i| i as f64 / 199.0).collect();
    let ys: Vec<f64> = xs.iter().map(|x| l0 * x).collect();
    let data = line_data(&xs, &ys);
    match srm_select(
        &data,
        &[l0 / 4.0, l0, 4.0 * l0],
        &SmoothingConfig::new(0.1),
        1.0,
        GraphPolicy::Knn { k: 8 },
    ) {
        Ok(p) => {
            let objs: Vec<String> = p
                .entries
                .iter()
                .map(|e| format!("{}:{:.4}", e.lipschitz, e.objective.unwrap_or(f64::NAN)))
                .collect();
            verdict(
                p.chosen_lipschitz == l0,
                format!(
                    "chose {} from objectives [{}]",
                    p.chosen_lipschitz,
                    objs.join(", ")
                ),
            )
        }
        Err(e) => verdict(false, e.to_string()),
    }
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let bin = env!("CARGO_BIN_EXE_lipreg");
    let run = |out: &str| {
        Command::new(bin)
            .args([
                "experiment",
                "--train-sizes",
                "40,80",
                "--test-size",
                "15",
                "--cv-subsample",
                "40",
                "--candidates",
                "3",
                "--seed",
                "7",
            ])
            .args(["--out", out])
            .current_dir(p)
            .output()
            .unwrap()
    };
    let a = run("a");
    let b = run("b");
    let same = |x: &str, y: &str| {
        fs::read(p.join(x))
            .ok()
            .is_some_and(|bytes| Some(bytes) == fs::read(p.join(y)).ok())
    };
    let mut ok = a.status.code() == b.status.code()
        && same("a/results.csv", "b/results.csv")
        && same("a/results.json", "b/results.json");
    let saved = fs::read(p.join("a/results.json")).unwrap_or_default();
    let _ = fs::remove_file(p.join("a/results.json"));
    let replay = Command::new(bin)
        .args(["replay", "a/manifest.json"])
        .current_dir(p)
        .output()
        .unwrap();
    ok &= replay.status.code() == a.status.code()
        && fs::read(p.join("a/results.json")).ok() == Some(saved);
    verdict(
        ok,
        "two runs and a manifest replay give byte-identical results.csv and results.json",
    )
}

fn iteration_scaling() -> Verdict {
    let eps = 0.1;
    let n = 20;
    let ms = [10usize, 40, 160];
    let mut means = Vec::new();
    for &m in &ms {
        let mut total = 0.0;
        for seed in 0..5u64 {
            let mut r = rng(seed * 1000 + m as u64);
            let x = uniform_points(&mut r, n, 2, 0.0, 1.0);
            let y = uniform_points(&mut r, n, 2, 0.0, 1.0);
            let data = LabeledDataset::new(x.clone(), y.clone()).unwrap();
            let g = ConstraintGraph::from_edges(&x, 0.5, random_edges(&mut r, n, m)).unwrap();
            let (_, opt) = dykstra(&y, g.edges(), g.radii(), 200_000);
            match smooth(&data, &g, 1.1 * opt, &SmoothingConfig::new(eps)) {
                Ok(res) => total += res.iterations as f64,
                Err(e) => return verdict(false, format!("m={m} seed {seed}: {e}")),
            }
        }
        means.push(total / 5.0);
    }
    let xs: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
    let slope = log_log_slope(&xs, &means);
    verdict(
        (0.3..=0.8).contains(&slope),
        format!(
            "n=20, mean iterations {:?} at m = {ms:?}, log-log slope {slope:.3} (need [0.3, 0.8])",
            means
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("forced-extension exactness", forced_extension),
        ("extension vs dense grid oracle", grid_equivalence),
        ("smoothing optimality, three points", three_point),
        ("oracle certificates", certificates),
        ("Laplace solver vs dense solve", laplace_vs_dense),
        ("extension width invariant", width_invariant),
        ("pose-transfer experiment", experiment),
        ("spanner stretch", spanner),
        ("SRM sanity", srm_sanity),
        ("determinism", determinism),
        ("iteration-count scaling", iteration_scaling),
    ];
    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        println!(
            "{} criterion {:>2} ({name}): {}",
            if v.pass { "PASS" } else { "FAIL" },
            k + 1,
            v.detail
        );
        if !v.pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

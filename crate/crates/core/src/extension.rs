//! Approximate Lipschitz (Kirszbraun) extension.
//!
//! Given labels `y_i = f(x_i)` of an `L`-Lipschitz map and a query `x*`, find
//! `y*` with `‖y* − y_i‖ ≤ (1 + ε)·L·‖x* − x_i‖` for every `i`. A solution
//! with `ε = 0` exists by Kirszbraun's theorem; the approximate one is found by
//! multiplicative weights over the constraints
//! `h_i(y) = 1 − ‖y − y_i‖ / (L‖x* − x_i‖) ≥ 0`, restricted to the ball
//! `𝒫 = B(y°, L‖x° − x*‖)` around the label of the nearest neighbor `x°`.
//! On `𝒫` every `h_i` lies in `[−2, 1]`.
//!
//! The inner oracle minimizes `Σ p_i ‖z − y_i‖²` over `𝒫` with
//! `p_i ∝ w_i / ‖x* − x_i‖²`: the weighted centroid, radially projected onto
//! the ball when it falls outside.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::ConstraintGraph;
use crate::laplace::{SolverOptions, WeightedLaplacian};
use crate::math;
use crate::{Error, LabeledDataset, Points, Result};

/// Inputs closer than this to the query are treated as the query itself.
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// Multiplicative weight update rule for single-point extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WeightUpdate {
    /// `w_i ← (1 + (ε/8)·(slack_i − 1))·w_i`, the loss-based update the
    /// convergence argument relies on.
    #[default]
    Framework,
    /// `w_i ← (1 + ε‖z − y_i‖ / (8 d_i))·w_i` with `d_i = ‖x_i − x*‖ / L`.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtensionConfig {
    /// Relative slack, in `(0, 1/2)`.
    pub epsilon: f64,
    pub update: WeightUpdate,
    /// Return as soon as the running average is `(1 + ε)`-feasible; the
    /// iteration count is then only a cap.
    pub early_stop: bool,
}

/// Rounds between feasibility checks of the running average.
const CHECK_EVERY: usize = 8;

impl ExtensionConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            update: WeightUpdate::Framework,
            early_stop: false,
        }
    }

    fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 0.5 {
        Ok(())
    } else {
        Err(Error::param(
            "epsilon",
            alloc::format!("must lie in (0, 1/2), got {epsilon}"),
        ))
    }
}

/// Extremes observed over all iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionDiagnostics {
    /// Smallest `h_i(z⁽ᵗ⁾)` over all `i` and `t`.
    pub min_h: f64,
    /// Largest `h_i(z⁽ᵗ⁾)` over all `i` and `t`.
    pub max_h: f64,
    /// Smallest oracle value `Σ_i w_i h_i(z⁽ᵗ⁾)`.
    pub min_oracle_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionResult {
    pub y_star: Vec<f64>,
    /// `‖y* − y_i‖ / (L‖x* − x_i‖)`; zero for a coincident training point.
    pub slacks: Vec<f64>,
    pub max_slack: f64,
    /// The requested `ε`; feasibility means `max_slack ≤ 1 + epsilon`.
    pub epsilon: f64,
    pub iterations: usize,
    /// Index of the nearest training input `x°`.
    pub anchor_index: usize,
    /// `L‖x° − x*‖`, the radius of the search ball around `y°`.
    pub anchor_radius: f64,
    /// True when the query coincided with a training input.
    pub coincident: bool,
    pub diagnostics: ExtensionDiagnostics,
}

/// State handed to an observer once per iteration, before the weight update.
#[derive(Debug)]
pub struct OnePointIterate<'a> {
    pub t: usize,
    pub weights: &'a [f64],
    pub iterate: &'a [f64],
    pub h: &'a [f64],
    pub oracle_value: f64,
}

/// Number of multiplicative-weight rounds, `⌈16 ln n / ε²⌉` (at least one).
pub fn one_point_iterations(n: usize, epsilon: f64) -> usize {
    (math::ceil(16.0 * math::ln(n as f64) / (epsilon * epsilon)) as usize).max(1)
}

/// Nearest training input by exact linear scan; ties go to the lower index.
pub fn nearest_neighbor(inputs: &Points, query: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, x) in inputs.rows().enumerate() {
        let d = math::dist_sq(x, query);
        if d < best.1 {
            best = (i, d);
        }
    }
    (best.0, math::sqrt(best.1))
}

/// Predicts `f(x*)` from an `L`-Lipschitz labeled sample.
///
/// Fails with [`Error::ExtensionInfeasible`] when the averaged iterate still
/// has a slack above `1 + ε`, which happens when the labels are not
/// `L`-Lipschitz. The error carries the best-effort result.
pub fn extend_one_point(
    dataset: &LabeledDataset,
    lipschitz: f64,
    query: &[f64],
    config: &ExtensionConfig,
) -> Result<ExtensionResult> {
    extend_one_point_observed(dataset, lipschitz, query, config, |_| {})
}

pub fn extend_one_point_observed<F>(
    dataset: &LabeledDataset,
    lipschitz: f64,
    query: &[f64],
    config: &ExtensionConfig,
    mut observer: F,
) -> Result<ExtensionResult>
where
    F: FnMut(&OnePointIterate<'_>),
{
    config.validate()?;
    if !(lipschitz > 0.0) || !lipschitz.is_finite() {
        return Err(Error::param(
            "lipschitz",
            alloc::format!("must be positive and finite, got {lipschitz}"),
        ));
    }
    if query.len() != dataset.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.input_dim(),
            found: query.len(),
        });
    }
    if query.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: 0 });
    }

    let n = dataset.len();
    let b = dataset.label_dim();
    let eps = config.epsilon;
    let (anchor, anchor_dist) = nearest_neighbor(dataset.inputs(), query);
    let y_anchor = dataset.label(anchor);

    if anchor_dist < COINCIDENCE_TOL {
        let y_star = y_anchor.to_vec();
        let slacks: Vec<f64> = (0..n)
            .map(|i| {
                let dx = math::dist(dataset.input(i), query);
                if dx < COINCIDENCE_TOL {
                    0.0
                } else {
                    math::dist(&y_star, dataset.label(i)) / (lipschitz * dx)
                }
            })
            .collect();
        let max_slack = slacks.iter().copied().fold(0.0, f64::max);
        return Ok(ExtensionResult {
            y_star,
            slacks,
            max_slack,
            epsilon: eps,
            iterations: 0,
            anchor_index: anchor,
            anchor_radius: 0.0,
            coincident: true,
            diagnostics: ExtensionDiagnostics {
                min_h: 1.0,
                max_h: 1.0,
                min_oracle_value: 1.0,
            },
        });
    }

    // radius_i = L‖x_i − x*‖ is the allowed label distance; d_i = ‖x_i − x*‖ / L
    // only enters the literal update rule.
    let input_dist: Vec<f64> = dataset
        .inputs()
        .rows()
        .map(|x| math::dist(x, query))
        .collect();
    let radius: Vec<f64> = input_dist.iter().map(|d| lipschitz * d).collect();
    let inv_radius_sq: Vec<f64> = radius.iter().map(|r| 1.0 / (r * r)).collect();
    let anchor_radius = radius[anchor];

    let rounds = one_point_iterations(n, eps);
    let mut weights = vec![1.0 / n as f64; n];
    let mut z = vec![0.0; b];
    let mut sum = vec![0.0; b];
    let mut h = vec![0.0; n];
    let mut label_dist = vec![0.0; n];
    let mut done = 0;
    let mut diag = ExtensionDiagnostics {
        min_h: f64::INFINITY,
        max_h: f64::NEG_INFINITY,
        min_oracle_value: f64::INFINITY,
    };

    for t in 0..rounds {
        // weighted centroid z₀ = Σ p_i y_i, p_i ∝ w_i / radius_i²
        let total: f64 = weights.iter().zip(&inv_radius_sq).map(|(w, s)| w * s).sum();
        z.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let p = weights[i] * inv_radius_sq[i] / total;
            for (zc, yc) in z.iter_mut().zip(dataset.label(i)) {
                *zc += p * yc;
            }
        }
        // project onto 𝒫
        let delta = math::dist(&z, y_anchor);
        if delta > anchor_radius {
            let s = anchor_radius / delta;
            for (zc, ac) in z.iter_mut().zip(y_anchor) {
                *zc = s * *zc + (1.0 - s) * ac;
            }
        }

        let mut oracle_value = 0.0;
        for i in 0..n {
            label_dist[i] = math::dist(&z, dataset.label(i));
            h[i] = 1.0 - label_dist[i] / radius[i];
            oracle_value += weights[i] * h[i];
            diag.min_h = diag.min_h.min(h[i]);
            diag.max_h = diag.max_h.max(h[i]);
        }
        diag.min_oracle_value = diag.min_oracle_value.min(oracle_value);
        observer(&OnePointIterate {
            t,
            weights: &weights,
            iterate: &z,
            h: &h,
            oracle_value,
        });

        match config.update {
            WeightUpdate::Framework => {
                for i in 0..n {
                    weights[i] *= 1.0 + eps / 8.0 * (-h[i]);
                }
            }
            WeightUpdate::Literal => {
                for i in 0..n {
                    let d = input_dist[i] / lipschitz;
                    weights[i] *= 1.0 + eps * label_dist[i] / (8.0 * d);
                }
            }
        }
        let w_total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= w_total);

        for (s, zc) in sum.iter_mut().zip(&z) {
            *s += zc;
        }
        done = t + 1;
        if config.early_stop && done % CHECK_EVERY == 0 && done < rounds {
            let k = done as f64;
            let feasible = (0..n).all(|i| {
                let d_sq = dataset
                    .label(i)
                    .iter()
                    .zip(&sum)
                    .map(|(y, s)| (s / k - y) * (s / k - y))
                    .sum::<f64>();
                d_sq <= (1.0 + eps) * (1.0 + eps) * radius[i] * radius[i]
            });
            if feasible {
                break;
            }
        }
    }

    let y_star: Vec<f64> = sum.iter().map(|s| s / done as f64).collect();
    let slacks: Vec<f64> = (0..n)
        .map(|i| math::dist(&y_star, dataset.label(i)) / radius[i])
        .collect();
    let max_slack = slacks.iter().copied().fold(0.0, f64::max);
    let result = ExtensionResult {
        y_star,
        slacks,
        max_slack,
        epsilon: eps,
        iterations: done,
        anchor_index: anchor,
        anchor_radius,
        coincident: false,
        diagnostics: diag,
    };
    if max_slack > 1.0 + eps {
        return Err(Error::ExtensionInfeasible {
            worst_slack: max_slack,
            result: Box::new(result),
        });
    }
    Ok(result)
}

/// Predicts every row of `queries`; infeasible queries still yield the
/// best-effort point. Returns the predictions and the number of queries whose
/// slack exceeded `1 + ε`.
pub fn extend_batch(
    dataset: &LabeledDataset,
    lipschitz: f64,
    queries: &Points,
    config: &ExtensionConfig,
) -> Result<(Points, usize)> {
    let mut out = Points::zeros(queries.len(), dataset.label_dim());
    let mut infeasible = 0;
    for (q, x) in queries.rows().enumerate() {
        let r = best_effort(extend_one_point(dataset, lipschitz, x, config))?;
        if r.max_slack > 1.0 + config.epsilon {
            infeasible += 1;
        }
        out.row_mut(q).copy_from_slice(&r.y_star);
    }
    Ok((out, infeasible))
}

/// Unwraps an [`Error::ExtensionInfeasible`] into its carried result.
pub fn best_effort(r: Result<ExtensionResult>) -> Result<ExtensionResult> {
    match r {
        Err(Error::ExtensionInfeasible { result, .. }) => Ok(*result),
        other => other,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiExtensionConfig {
    /// Relative slack, in `(0, 1/2)`.
    pub epsilon: f64,
    /// Iteration multiplier: `T = c1·⌈√m ln N / ε²⌉`.
    pub c1: f64,
    /// Learning rate multiplier in the weight update.
    pub c2: f64,
    pub solver_tol: f64,
}

impl MultiExtensionConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            c1: 8.0,
            c2: 0.125,
            solver_tol: crate::laplace::DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiExtensionResult {
    /// One label per new point, in order.
    pub labels: Points,
    /// Per-edge `‖ỹ_i − ỹ_j‖ / r_ij` at the averaged solution.
    pub edge_ratios: Vec<f64>,
    pub max_violation: f64,
    pub iterations: usize,
}

/// Jointly extends labels to `new_points`, enforcing the constraints of `graph`.
///
/// `graph` lives on `n + n'` vertices: the `n` training inputs followed by the
/// new points. It must have no edge between two training vertices and every
/// new vertex must reach some training vertex.
pub fn extend_multi(
    dataset: &LabeledDataset,
    lipschitz: f64,
    new_points: &Points,
    graph: &ConstraintGraph,
    config: &MultiExtensionConfig,
) -> Result<MultiExtensionResult> {
    check_epsilon(config.epsilon)?;
    let n = dataset.len();
    let fresh = new_points.len();
    if new_points.dim() != dataset.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.input_dim(),
            found: new_points.dim(),
        });
    }
    if fresh == 0 {
        return Err(Error::param(
            "new_points",
            "at least one new point is required",
        ));
    }
    if graph.vertex_count() != n + fresh {
        return Err(Error::LengthMismatch {
            left: n + fresh,
            right: graph.vertex_count(),
        });
    }
    if (graph.lipschitz() - lipschitz).abs() > 1e-12 * lipschitz {
        return Err(Error::param(
            "graph",
            "graph radii were built for a different Lipschitz constant",
        ));
    }
    for &(i, j) in graph.edges() {
        if j < n {
            return Err(Error::InvalidEdge {
                i,
                j,
                reason: "edge between two labeled vertices",
            });
        }
    }
    let adjacency = graph.adjacency();
    let mut reached = vec![false; n + fresh];
    let mut stack: Vec<usize> = (0..n).collect();
    reached[..n].iter_mut().for_each(|r| *r = true);
    while let Some(u) = stack.pop() {
        for &(v, _) in &adjacency[u] {
            if !reached[v] {
                reached[v] = true;
                stack.push(v);
            }
        }
    }
    if let Some(v) = reached.iter().position(|r| !r) {
        return Err(Error::DisconnectedVertex { vertex: v });
    }

    let m = graph.edge_count();
    let eps = config.epsilon;
    let b = dataset.label_dim();
    let radii = graph.radii();
    let interior: Vec<usize> = (0..m).filter(|&e| graph.edges()[e].0 >= n).collect();
    let interior_edges: Vec<(usize, usize)> = interior
        .iter()
        .map(|&e| (graph.edges()[e].0 - n, graph.edges()[e].1 - n))
        .collect();
    let boundary: Vec<usize> = (0..m).filter(|&e| graph.edges()[e].0 < n).collect();

    let rounds = (config.c1
        * math::ceil(math::sqrt(m as f64) * math::ln((n + fresh) as f64) / (eps * eps)))
    .max(1.0) as usize;
    let mut weights = vec![1.0 / m as f64; m];
    let mut lambda = vec![0.0; m];
    let mut interior_w = vec![0.0; interior.len()];
    let mut anchor_w = vec![0.0; fresh];
    let mut rhs = Points::zeros(fresh, b);
    let mut lap = WeightedLaplacian::new(
        fresh,
        &interior_edges,
        &vec![0.0; interior.len()],
        &vec![1.0; fresh],
    )?;
    let opts = SolverOptions {
        tol: config.solver_tol,
        ..SolverOptions::default()
    };
    let mut current: Option<Points> = None;
    let mut sum = Points::zeros(fresh, b);
    let mut ratios = vec![0.0; m];

    for _ in 0..rounds {
        for e in 0..m {
            lambda[e] = (weights[e] + eps / m as f64) / (radii[e] * radii[e]);
        }
        for (k, &e) in interior.iter().enumerate() {
            interior_w[k] = lambda[e];
        }
        anchor_w.iter_mut().for_each(|w| *w = 0.0);
        rhs.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
        for &e in &boundary {
            let (known, u) = (graph.edges()[e].0, graph.edges()[e].1 - n);
            anchor_w[u] += lambda[e];
            for (r, y) in rhs.row_mut(u).iter_mut().zip(dataset.label(known)) {
                *r += lambda[e] * y;
            }
        }
        lap.set_weights(&interior_w, &anchor_w)?;
        let solved = lap.solve(&rhs, current.as_ref(), &opts)?.solution;

        for e in 0..m {
            let (i, j) = graph.edges()[e];
            let yi = if i < n {
                dataset.label(i)
            } else {
                solved.row(i - n)
            };
            ratios[e] = math::dist(yi, solved.row(j - n)) / radii[e];
        }
        for e in 0..m {
            weights[e] *= 1.0 + config.c2 * eps * (ratios[e] - 1.0);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);

        for (s, v) in sum.as_mut_slice().iter_mut().zip(solved.as_slice()) {
            *s += v;
        }
        current = Some(solved);
    }

    sum.as_mut_slice()
        .iter_mut()
        .for_each(|v| *v /= rounds as f64);
    for e in 0..m {
        let (i, j) = graph.edges()[e];
        let yi = if i < n {
            dataset.label(i)
        } else {
            sum.row(i - n)
        };
        ratios[e] = math::dist(yi, sum.row(j - n)) / radii[e];
    }
    let max_violation = ratios.iter().copied().fold(0.0, f64::max);
    if max_violation > 1.0 + eps {
        return Err(Error::MultiExtensionInfeasible {
            max_violation,
            iterations: rounds,
        });
    }
    Ok(MultiExtensionResult {
        labels: sum,
        edge_ratios: ratios,
        max_violation,
        iterations: rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forced_1d() -> LabeledDataset {
        LabeledDataset::from_rows(&[[0.0], [2.0]], &[[0.0], [2.0]]).unwrap()
    }

    #[test]
    fn coincident_query_short_circuits() {
        let ds = LabeledDataset::from_rows(
            &[[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]],
            &[[1.0], [1.5], [0.0]],
        )
        .unwrap();
        let r = extend_one_point(&ds, 1.0, &[1.0, 0.0], &ExtensionConfig::new(0.1)).unwrap();
        assert_eq!(r.y_star, [1.5]);
        assert!(r.coincident);
        assert_eq!(r.anchor_index, 1);
        assert_eq!(r.slacks[1], 0.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn forced_midpoint() {
        let r = extend_one_point(&forced_1d(), 1.0, &[1.0], &ExtensionConfig::new(0.05)).unwrap();
        assert!((r.y_star[0] - 1.0).abs() < 1e-12);
        assert_eq!(r.iterations, one_point_iterations(2, 0.05));
        let quick = ExtensionConfig {
            early_stop: true,
            ..ExtensionConfig::new(0.05)
        };
        let r = extend_one_point(&forced_1d(), 1.0, &[1.0], &quick).unwrap();
        assert!((r.y_star[0] - 1.0).abs() < 1e-12);
        assert_eq!(r.iterations, 8);
    }

    #[test]
    fn literal_update_also_finds_forced_point() {
        let cfg = ExtensionConfig {
            update: WeightUpdate::Literal,
            ..ExtensionConfig::new(0.05)
        };
        let r = extend_one_point(&forced_1d(), 1.0, &[1.0], &cfg).unwrap();
        assert!((r.y_star[0] - 1.0).abs() < 0.05);
    }

    #[test]
    fn iteration_count_formula() {
        assert_eq!(one_point_iterations(1, 0.1), 1);
        // 16·ln 10 / 0.01 = 3684.1…
        assert_eq!(one_point_iterations(10, 0.1), 3685);
    }

    #[test]
    fn rejects_bad_parameters() {
        let ds = forced_1d();
        for eps in [0.0, 0.5, -0.1, f64::NAN] {
            assert!(matches!(
                extend_one_point(&ds, 1.0, &[1.0], &ExtensionConfig::new(eps)),
                Err(Error::InvalidParameter { .. })
            ));
        }
        assert!(matches!(
            extend_one_point(&ds, 0.0, &[1.0], &ExtensionConfig::new(0.1)),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            extend_one_point(&ds, 1.0, &[1.0, 2.0], &ExtensionConfig::new(0.1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn non_lipschitz_labels_are_diagnosed() {
        // |y1 − y0| = 10 across unit distance; no value at 0.5 is within 0.5·(1+ε) of both.
        let ds = LabeledDataset::from_rows(&[[0.0], [1.0]], &[[0.0], [10.0]]).unwrap();
        match extend_one_point(&ds, 1.0, &[0.5], &ExtensionConfig::new(0.1)) {
            Err(Error::ExtensionInfeasible {
                worst_slack,
                result,
            }) => {
                assert!(worst_slack > 1.1);
                assert_eq!(result.max_slack, worst_slack);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn multi_chain_is_forced() {
        let ds = LabeledDataset::from_rows(&[[0.0], [3.0]], &[[0.0], [3.0]]).unwrap();
        let fresh = Points::new(1, alloc::vec![1.0, 2.0]).unwrap();
        let all = Points::new(1, alloc::vec![0.0, 3.0, 1.0, 2.0]).unwrap();
        let g = ConstraintGraph::from_edges(&all, 1.0, [(0, 2), (2, 3), (1, 3)]).unwrap();
        let eps = 0.1;
        let r = extend_multi(&ds, 1.0, &fresh, &g, &MultiExtensionConfig::new(eps)).unwrap();
        assert!((r.labels.row(0)[0] - 1.0).abs() <= eps);
        assert!((r.labels.row(1)[0] - 2.0).abs() <= eps);
        assert!(r.max_violation <= 1.0 + eps);
    }

    #[test]
    fn multi_rejects_bad_graphs() {
        let ds = LabeledDataset::from_rows(&[[0.0], [3.0]], &[[0.0], [3.0]]).unwrap();
        let fresh = Points::new(1, alloc::vec![1.0, 2.0]).unwrap();
        let all = Points::new(1, alloc::vec![0.0, 3.0, 1.0, 2.0]).unwrap();
        let cfg = MultiExtensionConfig::new(0.1);

        let g = ConstraintGraph::from_edges(&all, 1.0, [(0, 1), (0, 2), (2, 3)]).unwrap();
        assert!(matches!(
            extend_multi(&ds, 1.0, &fresh, &g, &cfg),
            Err(Error::InvalidEdge { i: 0, j: 1, .. })
        ));

        let g = ConstraintGraph::from_edges(&all, 1.0, [(0, 2)]).unwrap();
        assert_eq!(
            extend_multi(&ds, 1.0, &fresh, &g, &cfg).unwrap_err(),
            Error::DisconnectedVertex { vertex: 3 }
        );

        let g = ConstraintGraph::from_edges(&all, 2.0, [(0, 2), (2, 3)]).unwrap();
        assert!(matches!(
            extend_multi(&ds, 1.0, &fresh, &g, &cfg),
            Err(Error::InvalidParameter { .. })
        ));

        // a new point duplicating a training input cannot carry a constraint edge
        let dup = Points::new(1, alloc::vec![0.0, 3.0, 0.0]).unwrap();
        assert!(matches!(
            ConstraintGraph::from_edges(&dup, 1.0, [(0, 2)]),
            Err(Error::InvalidEdge { .. })
        ));
    }
}

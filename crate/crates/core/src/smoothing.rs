//! Lipschitz smoothing: the least-squares projection of the labels onto the
//! labelings that are `L`-Lipschitz on a constraint graph,
//!
//! ```text
//! minimize   Φ(Y, Ỹ) = Σ_i ‖y_i − ỹ_i‖²
//! subject to ‖ỹ_i − ỹ_j‖ ≤ r_ij = L‖x_i − x_j‖,   (i, j) ∈ E.
//! ```
//!
//! For a distortion budget `Φ₀ ≥ Φ*` the constraints
//! `h_Φ = 1 − √(Φ/Φ₀) ≥ 0` and `h_ij = 1 − ‖ỹ_i − ỹ_j‖ / r_ij ≥ 0` are
//! solved approximately by multiplicative weights. Each round's oracle is a
//! Laplace problem with `μ_ij = (w_ij + ε/(m+1)) / r_ij²` and
//! `λ = (w_Φ + ε/(m+1)) / Φ₀`, whose minimum `Ψ` is at most `1 + ε` whenever
//! the budget is feasible. The same solve also yields a Lagrangian lower bound
//! on `Φ*`, so both `Ψ > 1 + ε` and a lower bound above `Φ₀` certify that the
//! budget is too small. [`smooth_auto`] searches for the budget.

use alloc::vec;
use alloc::vec::Vec;

use crate::extension::check_epsilon;
use crate::graph::ConstraintGraph;
use crate::laplace::{SolverOptions, WeightedLaplacian};
use crate::math;
use crate::{Error, LabeledDataset, Points, Result};

/// Relative margin applied to certificates computed from inexact solves.
const CERTIFICATE_MARGIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothingConfig {
    /// Relative slack, in `(0, 1/2)`.
    pub epsilon: f64,
    /// Iteration cap multiplier: `T = c1·⌈√m ln n / ε²⌉`.
    pub c1: f64,
    /// Learning rate multiplier in the weight update.
    pub c2: f64,
    pub solver_tol: f64,
    /// Stop once the running average is `(1 + ε)`-feasible with distortion at
    /// most `(1 + ε)·Φ₀`.
    pub early_stop: bool,
    /// Laplace solves spent on the dual ascent that seeds [`smooth_auto`].
    pub dual_solves: usize,
}

impl SmoothingConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            c1: 8.0,
            c2: 0.125,
            solver_tol: crate::laplace::DEFAULT_TOLERANCE,
            early_stop: true,
            dual_solves: 300,
        }
    }

    /// Round cap for a graph with `m` edges on `n` vertices.
    pub fn max_rounds(&self, n: usize, m: usize) -> usize {
        let eps = self.epsilon;
        (self.c1 * math::ceil(math::sqrt(m as f64) * math::ln(n as f64) / (eps * eps))).max(1.0)
            as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothingResult {
    pub smoothed_labels: Points,
    /// `Φ(Y, Ỹ)`.
    pub distortion: f64,
    /// Budget of the accepted run; zero when the labels were already feasible.
    pub phi0_used: f64,
    /// `max_E ‖ỹ_i − ỹ_j‖ / r_ij`.
    pub max_edge_violation: f64,
    pub iterations: usize,
    /// Best certified lower bound on the optimal distortion seen in the run.
    pub lower_bound: f64,
    /// False when the run only met the relaxed `1 + 2ε` acceptance.
    pub within_target: bool,
}

/// Output of one oracle call.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleOutput {
    pub candidate: Points,
    pub distortion: f64,
    pub h_phi: f64,
    pub h_edges: Vec<f64>,
    /// `w_Φ h_Φ + Σ w_ij h_ij`.
    pub oracle_value: f64,
    /// `λ Φ(Y, Ỹ) + Σ μ_ij ‖ỹ_i − ỹ_j‖²` at the returned candidate.
    pub objective: f64,
    /// Lagrangian lower bound on the optimal distortion.
    pub dual_bound: f64,
    /// `Ψ > 1 + ε`: no labeling meets the budget.
    pub certified_infeasible: bool,
}

/// Per-round record passed to observers.
#[derive(Debug)]
pub struct SmoothingIterate<'a> {
    pub t: usize,
    pub w_phi: f64,
    pub edge_weights: &'a [f64],
    pub oracle: &'a OracleOutput,
}

/// `max_E ‖y_i − y_j‖ / r_ij`; zero for an empty edge set.
pub fn feasibility_check(labels: &Points, graph: &ConstraintGraph) -> f64 {
    graph
        .edges()
        .iter()
        .zip(graph.radii())
        .map(|(&(i, j), r)| math::dist(labels.row(i), labels.row(j)) / r)
        .fold(0.0, f64::max)
}

/// Solves the oracle problem for the given weights (`w_phi + Σ edge_weights = 1`).
pub fn oracle_step(
    graph: &ConstraintGraph,
    labels: &Points,
    w_phi: f64,
    edge_weights: &[f64],
    phi0: f64,
    epsilon: f64,
) -> Result<OracleOutput> {
    let mut solver = OracleSolver::new(graph, labels, epsilon, crate::laplace::DEFAULT_TOLERANCE)?;
    solver.step(w_phi, edge_weights, phi0, None)
}

struct OracleSolver<'a> {
    graph: &'a ConstraintGraph,
    labels: &'a Points,
    epsilon: f64,
    lap: WeightedLaplacian,
    opts: SolverOptions,
    mu: Vec<f64>,
    lambdas: Vec<f64>,
}

impl<'a> OracleSolver<'a> {
    fn new(graph: &'a ConstraintGraph, labels: &'a Points, epsilon: f64, tol: f64) -> Result<Self> {
        let n = graph.vertex_count();
        if labels.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: labels.len(),
            });
        }
        let m = graph.edge_count();
        let lap = WeightedLaplacian::for_graph(graph, &vec![0.0; m], &vec![1.0; n])?;
        Ok(Self {
            graph,
            labels,
            epsilon,
            lap,
            opts: SolverOptions {
                tol,
                ..SolverOptions::default()
            },
            mu: vec![0.0; m],
            lambdas: vec![0.0; n],
        })
    }

    fn step(
        &mut self,
        w_phi: f64,
        edge_weights: &[f64],
        phi0: f64,
        warm: Option<&Points>,
    ) -> Result<OracleOutput> {
        let m = self.graph.edge_count();
        if edge_weights.len() != m {
            return Err(Error::LengthMismatch {
                left: m,
                right: edge_weights.len(),
            });
        }
        if !(phi0 > 0.0) || !phi0.is_finite() {
            return Err(Error::param(
                "phi0",
                alloc::format!("must be positive and finite, got {phi0}"),
            ));
        }
        let eps = self.epsilon;
        let floor = eps / (m + 1) as f64;
        let radii = self.graph.radii();
        for e in 0..m {
            self.mu[e] = (edge_weights[e] + floor) / (radii[e] * radii[e]);
        }
        let lambda = (w_phi + floor) / phi0;
        self.lambdas.iter_mut().for_each(|l| *l = lambda);
        self.lap.set_weights(&self.mu, &self.lambdas)?;

        // (L + λI) Ỹᵀ = λ Yᵀ, i.e. (λ⁻¹L + I) Ỹᵀ = Yᵀ
        let mut rhs = self.labels.clone();
        rhs.as_mut_slice().iter_mut().for_each(|v| *v *= lambda);
        let solved = self
            .lap
            .solve(&rhs, Some(warm.unwrap_or(self.labels)), &self.opts)?;
        // The smallest eigenvalue of L + λI is at least λ.
        let excess = solved.residual_sq / lambda;
        let candidate = solved.solution;

        let distortion = self.labels.squared_distance_to(&candidate);
        let h_phi = 1.0 - math::sqrt(distortion / phi0);
        let mut h_edges = Vec::with_capacity(m);
        let mut smoothness = 0.0;
        let mut dual_excess = 0.0;
        for (e, &(i, j)) in self.graph.edges().iter().enumerate() {
            let d_sq = math::dist_sq(candidate.row(i), candidate.row(j));
            h_edges.push(1.0 - math::sqrt(d_sq) / radii[e]);
            smoothness += self.mu[e] * d_sq;
            dual_excess += self.mu[e] * (d_sq - radii[e] * radii[e]);
        }
        let oracle_value = w_phi * h_phi
            + edge_weights
                .iter()
                .zip(&h_edges)
                .map(|(w, h)| w * h)
                .sum::<f64>();
        let objective = lambda * distortion + smoothness;
        // g(ν) = min_Ỹ Φ + Σ ν_ij (‖ỹ_i − ỹ_j‖² − r_ij²) with ν = μ/λ
        let dual_bound = distortion + (dual_excess - excess) / lambda;
        Ok(OracleOutput {
            candidate,
            distortion,
            h_phi,
            h_edges,
            oracle_value,
            objective,
            dual_bound,
            certified_infeasible: objective - excess > (1.0 + eps) * (1.0 + CERTIFICATE_MARGIN),
        })
    }
}

/// Lagrangian lower bound on the optimal distortion and the multipliers that
/// attain it.
#[derive(Clone, Debug, PartialEq)]
pub struct DualBound {
    pub bound: f64,
    pub multipliers: Vec<f64>,
    pub solves: usize,
}

/// Projected gradient ascent on the concave dual
/// `g(ν) = min_Ỹ Φ(Y, Ỹ) + Σ ν_ij (‖ỹ_i − ỹ_j‖² − r_ij²)`, `ν ≥ 0`.
/// Every evaluated `g(ν)` is a lower bound on `Φ*`.
pub fn dual_lower_bound(
    graph: &ConstraintGraph,
    labels: &Points,
    max_solves: usize,
    tol: f64,
) -> Result<DualBound> {
    let n = graph.vertex_count();
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: labels.len(),
        });
    }
    let m = graph.edge_count();
    let radii = graph.radii();
    let edges = graph.edges();
    let gradient = |y: &Points| -> Vec<f64> {
        edges
            .iter()
            .zip(radii)
            .map(|(&(i, j), r)| math::dist_sq(y.row(i), y.row(j)) - r * r)
            .collect()
    };
    let mut nu = vec![0.0; m];
    let mut g = 0.0;
    let mut grad = gradient(labels);
    let mut warm = labels.clone();
    let scale = grad.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m == 0 || scale == 0.0 {
        return Ok(DualBound {
            bound: 0.0,
            multipliers: nu,
            solves: 0,
        });
    }
    let mut eta = 1.0 / scale;
    let mut lap = WeightedLaplacian::for_graph(graph, &nu, &vec![1.0; n])?;
    let opts = SolverOptions {
        tol,
        ..SolverOptions::default()
    };
    let mut trial = vec![0.0; m];
    let mut solves = 0;
    while solves < max_solves {
        let mut moved = 0.0f64;
        for e in 0..m {
            trial[e] = (nu[e] + eta * grad[e]).max(0.0);
            moved = moved.max((trial[e] - nu[e]).abs());
        }
        if moved <= 1e-15 * nu.iter().fold(1.0f64, |a, v| a.max(*v)) {
            break;
        }
        lap.set_weights(&trial, &vec![1.0; n])?;
        let solved = lap.solve(labels, Some(&warm), &opts)?;
        solves += 1;
        let y = solved.solution;
        let trial_grad = gradient(&y);
        // the system matrix is L_ν + I, so its smallest eigenvalue is at least 1
        let value = labels.squared_distance_to(&y)
            + trial
                .iter()
                .zip(&trial_grad)
                .map(|(v, d)| v * d)
                .sum::<f64>()
            - solved.residual_sq;
        if value > g {
            g = value;
            nu.copy_from_slice(&trial);
            grad = trial_grad;
            warm = y;
            eta *= 1.5;
        } else {
            eta *= 0.3;
        }
    }
    Ok(DualBound {
        bound: g * (1.0 - CERTIFICATE_MARGIN),
        multipliers: nu,
        solves,
    })
}

/// Smooths the labels for a fixed distortion budget `phi0 ≥ Φ*`.
pub fn smooth(
    dataset: &LabeledDataset,
    graph: &ConstraintGraph,
    phi0: f64,
    config: &SmoothingConfig,
) -> Result<SmoothingResult> {
    smooth_observed(dataset, graph, phi0, config, |_| {})
}

pub fn smooth_observed<F>(
    dataset: &LabeledDataset,
    graph: &ConstraintGraph,
    phi0: f64,
    config: &SmoothingConfig,
    mut observer: F,
) -> Result<SmoothingResult>
where
    F: FnMut(&SmoothingIterate<'_>),
{
    check_epsilon(config.epsilon)?;
    let labels = dataset.labels();
    if graph.vertex_count() != dataset.len() {
        return Err(Error::LengthMismatch {
            left: dataset.len(),
            right: graph.vertex_count(),
        });
    }
    if feasibility_check(labels, graph) <= 1.0 {
        return Ok(already_feasible(labels));
    }
    if !(phi0 > 0.0) || !phi0.is_finite() {
        return Err(Error::param(
            "phi0",
            alloc::format!("must be positive and finite, got {phi0}"),
        ));
    }

    let n = dataset.len();
    let m = graph.edge_count();
    let eps = config.epsilon;
    let rounds = config.max_rounds(n, m);
    let mut oracle = OracleSolver::new(graph, labels, eps, config.solver_tol)?;
    let mut w_phi = 1.0 / (m + 1) as f64;
    let mut w_edges = vec![1.0 / (m + 1) as f64; m];
    let mut sum = Points::zeros(n, labels.dim());
    let mut average = Points::zeros(n, labels.dim());
    let mut warm: Option<Points> = None;
    let mut lower_bound = 0.0f64;
    let phi_target = (1.0 + eps) * (1.0 + eps) * phi0;

    for t in 0..rounds {
        let out = oracle.step(w_phi, &w_edges, phi0, warm.as_ref())?;
        observer(&SmoothingIterate {
            t,
            w_phi,
            edge_weights: &w_edges,
            oracle: &out,
        });
        lower_bound = lower_bound.max(out.dual_bound * (1.0 - CERTIFICATE_MARGIN));
        if out.certified_infeasible || lower_bound > phi0 {
            return Err(Error::Phi0TooSmall { phi0, lower_bound });
        }

        w_phi *= 1.0 + config.c2 * eps * (-out.h_phi);
        for (w, h) in w_edges.iter_mut().zip(&out.h_edges) {
            *w *= 1.0 + config.c2 * eps * (-h);
        }
        let total = w_phi + w_edges.iter().sum::<f64>();
        w_phi /= total;
        w_edges.iter_mut().for_each(|w| *w /= total);

        for (s, v) in sum.as_mut_slice().iter_mut().zip(out.candidate.as_slice()) {
            *s += v;
        }
        if config.early_stop || t + 1 == rounds {
            let k = (t + 1) as f64;
            for (a, s) in average.as_mut_slice().iter_mut().zip(sum.as_slice()) {
                *a = s / k;
            }
            let violation = feasibility_check(&average, graph);
            let distortion = labels.squared_distance_to(&average);
            let target = if t + 1 == rounds {
                phi_target
            } else {
                (1.0 + eps) * phi0
            };
            if violation <= 1.0 + eps && distortion <= target {
                return Ok(SmoothingResult {
                    smoothed_labels: average,
                    distortion,
                    phi0_used: phi0,
                    max_edge_violation: violation,
                    iterations: t + 1,
                    lower_bound,
                    within_target: true,
                });
            }
        }
        warm = Some(out.candidate);
    }

    let violation = feasibility_check(&average, graph);
    let distortion = labels.squared_distance_to(&average);
    let relaxed = 1.0 + 2.0 * eps;
    if violation <= relaxed && distortion <= relaxed * relaxed * phi0 {
        return Ok(SmoothingResult {
            smoothed_labels: average,
            distortion,
            phi0_used: phi0,
            max_edge_violation: violation,
            iterations: rounds,
            lower_bound,
            within_target: false,
        });
    }
    Err(Error::SmoothingInfeasible {
        max_violation: violation,
        distortion,
        iterations: rounds,
    })
}

fn already_feasible(labels: &Points) -> SmoothingResult {
    SmoothingResult {
        smoothed_labels: labels.clone(),
        distortion: 0.0,
        phi0_used: 0.0,
        max_edge_violation: 0.0,
        iterations: 0,
        lower_bound: 0.0,
        within_target: true,
    }
}

/// Lower bound on the optimal distortion from single edges: an edge with
/// `‖y_i − y_j‖ = r_ij + g` forces `‖δ_i‖² + ‖δ_j‖² ≥ g²/2`.
pub fn edge_gap_bound(labels: &Points, graph: &ConstraintGraph) -> f64 {
    graph
        .edges()
        .iter()
        .zip(graph.radii())
        .map(|(&(i, j), r)| {
            let gap = (math::dist(labels.row(i), labels.row(j)) - r).max(0.0);
            gap * gap / 2.0
        })
        .fold(0.0, f64::max)
}

/// Smooths with a distortion budget found by search.
///
/// The bracket starts at the edge-gap lower bound and at the distortion of
/// collapsing every label to the centroid (feasible for any `L`). Budgets are
/// doubled from below until a run succeeds, then bisected geometrically until
/// the bracket's relative width is at most `ε`. Lagrangian lower bounds from
/// every run tighten the lower end.
pub fn smooth_auto(
    dataset: &LabeledDataset,
    graph: &ConstraintGraph,
    config: &SmoothingConfig,
) -> Result<SmoothingResult> {
    smooth_auto_observed(dataset, graph, config, |_, _| {})
}

/// As [`smooth_auto`]; the observer receives each probed budget and round.
pub fn smooth_auto_observed<F>(
    dataset: &LabeledDataset,
    graph: &ConstraintGraph,
    config: &SmoothingConfig,
    mut observer: F,
) -> Result<SmoothingResult>
where
    F: FnMut(f64, &SmoothingIterate<'_>),
{
    check_epsilon(config.epsilon)?;
    let labels = dataset.labels();
    if graph.vertex_count() != dataset.len() {
        return Err(Error::LengthMismatch {
            left: dataset.len(),
            right: graph.vertex_count(),
        });
    }
    if feasibility_check(labels, graph) <= 1.0 {
        return Ok(already_feasible(labels));
    }
    let eps = config.epsilon;

    let centroid = labels.centroid();
    let mut collapsed = labels.clone();
    for v in 0..collapsed.len() {
        collapsed.row_mut(v).copy_from_slice(&centroid);
    }
    let ceiling = labels.squared_distance_to(&collapsed);
    let dual = dual_lower_bound(graph, labels, config.dual_solves, config.solver_tol)?;
    let mut lo = edge_gap_bound(labels, graph).max(dual.bound).max(1e-12);
    let mut hi = f64::INFINITY;
    let mut best: Option<SmoothingResult> = None;

    let mut probe = |phi0: f64, lo: &mut f64| -> Result<Option<SmoothingResult>> {
        match smooth_observed(dataset, graph, phi0, config, |it| observer(phi0, it)) {
            Ok(r) => {
                *lo = lo.max(r.lower_bound);
                Ok(Some(r))
            }
            Err(Error::Phi0TooSmall { lower_bound, .. }) => {
                *lo = lo.max(phi0).max(lower_bound);
                Ok(None)
            }
            Err(Error::SmoothingInfeasible { .. }) => {
                *lo = lo.max(phi0);
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };

    // expansion
    let mut phi0 = lo;
    while phi0 < ceiling {
        if let Some(r) = probe(phi0, &mut lo)? {
            hi = phi0;
            best = Some(r);
            break;
        }
        phi0 = (2.0 * phi0).max(lo);
    }
    if best.is_none() {
        match probe(ceiling, &mut lo)? {
            Some(r) => best = Some(r),
            None => {
                // The centroid labeling is exactly feasible at this budget.
                return Ok(SmoothingResult {
                    smoothed_labels: collapsed,
                    distortion: ceiling,
                    phi0_used: ceiling,
                    max_edge_violation: 0.0,
                    iterations: 0,
                    lower_bound: lo,
                    within_target: true,
                });
            }
        }
        hi = ceiling;
    }

    // bisection
    while hi > (1.0 + eps) * lo {
        let mid = math::sqrt(lo * hi);
        if let Some(r) = probe(mid, &mut lo)? {
            hi = mid;
            best = Some(r);
        }
    }
    let mut result = best.expect("a successful probe exists");
    result.lower_bound = result.lower_bound.max(lo.min(hi));
    Ok(result)
}

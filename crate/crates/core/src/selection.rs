//! Choosing the Lipschitz budget: structural risk minimization against a
//! covering-number bound, or k-fold cross-validation.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::extension::{best_effort, extend_one_point, ExtensionConfig};
use crate::graph::GraphPolicy;
use crate::math;
use crate::risk::empirical_risk;
use crate::smoothing::{feasibility_check, smooth_auto, SmoothingConfig};
use crate::{Error, LabeledDataset, Points, Result};

/// Relative tolerance under which two objective values count as a tie.
const TIE_TOL: f64 = 1e-9;

/// `Q_n = C·L·n^(−1/(a+b+1))`.
pub fn generalization_bound(
    input_dim: usize,
    label_dim: usize,
    lipschitz: f64,
    n: usize,
    constant: f64,
) -> f64 {
    let d = (input_dim + label_dim) as f64;
    constant * lipschitz * math::pow(n as f64, -1.0 / (d + 1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SrmEntry {
    pub lipschitz: f64,
    /// Mean unsquared distance between smoothed and original labels;
    /// `None` if smoothing failed for this candidate.
    pub empirical_risk: Option<f64>,
    pub bound: f64,
    /// `empirical_risk + bound`.
    pub objective: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SrmProfile {
    /// Sorted by increasing `lipschitz`.
    pub entries: Vec<SrmEntry>,
    pub chosen_lipschitz: f64,
}

fn sorted_candidates(candidates: &[f64]) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::param(
            "candidates",
            "at least one candidate is required",
        ));
    }
    if candidates.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err(Error::param(
            "candidates",
            "candidates must be positive and finite",
        ));
    }
    let mut c = candidates.to_vec();
    c.sort_by(f64::total_cmp);
    c.dedup();
    Ok(c)
}

/// Index of the smallest value, preferring earlier entries within [`TIE_TOL`].
fn argmin_prefer_first(values: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    let values: Vec<(usize, f64)> = values.collect();
    let min = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    values
        .iter()
        .find(|v| v.1 <= min + TIE_TOL * min.abs() + 1e-300)
        .map(|v| v.0)
}

/// Smooths at every candidate and picks the minimizer of risk plus bound.
/// Ties go to the smaller budget.
pub fn srm_select(
    dataset: &LabeledDataset,
    candidates: &[f64],
    config: &SmoothingConfig,
    bound_constant: f64,
    policy: GraphPolicy,
) -> Result<SrmProfile> {
    if !(bound_constant > 0.0) {
        return Err(Error::param("bound_constant", "must be positive"));
    }
    let candidates = sorted_candidates(candidates)?;
    let entries: Vec<SrmEntry> = candidates
        .iter()
        .map(|&l| srm_entry(dataset, l, config, bound_constant, policy))
        .collect();
    let chosen = argmin_prefer_first(
        entries
            .iter()
            .enumerate()
            .filter_map(|(k, e)| e.objective.map(|o| (k, o))),
    )
    .ok_or(Error::NoViableCandidate)?;
    Ok(SrmProfile {
        chosen_lipschitz: entries[chosen].lipschitz,
        entries,
    })
}

/// One SRM profile row; smoothing failures leave the risk empty.
pub fn srm_entry(
    dataset: &LabeledDataset,
    lipschitz: f64,
    config: &SmoothingConfig,
    bound_constant: f64,
    policy: GraphPolicy,
) -> SrmEntry {
    let bound = generalization_bound(
        dataset.input_dim(),
        dataset.label_dim(),
        lipschitz,
        dataset.len(),
        bound_constant,
    );
    let risk = policy
        .build(dataset.inputs(), lipschitz)
        .and_then(|g| smooth_auto(dataset, &g, config))
        .and_then(|r| empirical_risk(&r.smoothed_labels, dataset.labels()))
        .map(|r| r.empirical_risk)
        .ok();
    SrmEntry {
        lipschitz,
        empirical_risk: risk,
        bound,
        objective: risk.map(|r| r + bound),
    }
}

/// Deterministic fold labels: indices are shuffled with the seed and dealt
/// round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds.max(1);
    }
    fold
}

pub(crate) fn check_folds(n: usize, folds: usize) -> Result<()> {
    if folds < 2 || folds > n {
        return Err(Error::param(
            "folds",
            alloc::format!("need 2 <= folds <= n, got folds = {folds}, n = {n}"),
        ));
    }
    Ok(())
}

/// `(train, held-out)` index lists for one fold.
pub(crate) fn split(assignment: &[usize], fold: usize) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, &f) in assignment.iter().enumerate() {
        if f == fold {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    (train, test)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvEntry {
    pub lipschitz: f64,
    /// Mean squared held-out loss per fold; empty if the candidate failed.
    pub fold_losses: Vec<f64>,
    /// Squared loss averaged over all held-out points.
    pub mean_loss: Option<f64>,
    /// Held-out predictions whose slack exceeded `1 + ε`.
    pub infeasible_predictions: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvProfile {
    pub entries: Vec<CvEntry>,
    pub chosen_lipschitz: f64,
}

/// K-fold cross-validation of the smooth-then-extend predictor.
pub fn cross_validate(
    dataset: &LabeledDataset,
    candidates: &[f64],
    folds: usize,
    config: &SmoothingConfig,
    policy: GraphPolicy,
    seed: u64,
) -> Result<CvProfile> {
    check_folds(dataset.len(), folds)?;
    let assignment = fold_assignment(dataset.len(), folds, seed);
    cross_validate_with_folds(dataset, candidates, &assignment, config, policy)
}

/// As [`cross_validate`] with an explicit fold label per row.
pub fn cross_validate_with_folds(
    dataset: &LabeledDataset,
    candidates: &[f64],
    assignment: &[usize],
    config: &SmoothingConfig,
    policy: GraphPolicy,
) -> Result<CvProfile> {
    if assignment.len() != dataset.len() {
        return Err(Error::LengthMismatch {
            left: dataset.len(),
            right: assignment.len(),
        });
    }
    let candidates = sorted_candidates(candidates)?;
    let folds = assignment.iter().copied().max().unwrap_or(0) + 1;
    for f in 0..folds {
        let (train, test) = split(assignment, f);
        if train.is_empty() {
            return Err(Error::param(
                "folds",
                alloc::format!("fold {f} leaves an empty training split"),
            ));
        }
        if test.is_empty() {
            return Err(Error::param("folds", alloc::format!("fold {f} is empty")));
        }
    }
    let entries: Vec<CvEntry> = candidates
        .iter()
        .map(|&l| cv_entry(dataset, l, assignment, folds, config, policy))
        .collect();
    let chosen = argmin_prefer_first(
        entries
            .iter()
            .enumerate()
            .filter_map(|(k, e)| e.mean_loss.map(|o| (k, o))),
    )
    .ok_or(Error::NoViableCandidate)?;
    Ok(CvProfile {
        chosen_lipschitz: entries[chosen].lipschitz,
        entries,
    })
}

fn cv_entry(
    dataset: &LabeledDataset,
    lipschitz: f64,
    assignment: &[usize],
    folds: usize,
    config: &SmoothingConfig,
    policy: GraphPolicy,
) -> CvEntry {
    let ext = ExtensionConfig::new(config.epsilon);
    let mut fold_losses = Vec::with_capacity(folds);
    let mut total = 0.0;
    let mut count = 0usize;
    let mut infeasible = 0;
    let failed = CvEntry {
        lipschitz,
        fold_losses: Vec::new(),
        mean_loss: None,
        infeasible_predictions: 0,
    };
    for f in 0..folds {
        let (train_idx, test_idx) = split(assignment, f);
        let train = dataset.select(&train_idx);
        let smoothed = match policy
            .build(train.inputs(), lipschitz)
            .and_then(|g| smooth_auto(&train, &g, config))
            .and_then(|r| train.with_labels(r.smoothed_labels))
        {
            Ok(s) => s,
            Err(_) => return failed,
        };
        let mut fold_total = 0.0;
        for &i in &test_idx {
            let r = match best_effort(extend_one_point(
                &smoothed,
                lipschitz,
                dataset.input(i),
                &ext,
            )) {
                Ok(r) => r,
                Err(_) => return failed,
            };
            if r.max_slack > 1.0 + ext.epsilon {
                infeasible += 1;
            }
            fold_total += math::dist_sq(&r.y_star, dataset.label(i));
        }
        total += fold_total;
        count += test_idx.len();
        fold_losses.push(fold_total / test_idx.len() as f64);
    }
    CvEntry {
        lipschitz,
        fold_losses,
        mean_loss: Some(total / count as f64),
        infeasible_predictions: infeasible,
    }
}

/// Ten geometrically spaced budgets over `[ρ/10, 10ρ]`, where `ρ` is the
/// largest label-to-input distance ratio over the policy's edges.
pub fn default_candidate_grid(dataset: &LabeledDataset, policy: GraphPolicy) -> Result<Vec<f64>> {
    let graph = policy.build(dataset.inputs(), 1.0)?;
    let ratio = feasibility_check(dataset.labels(), &graph);
    let ratio = if ratio > 0.0 { ratio } else { 1.0 };
    Ok(geometric_grid(ratio / 10.0, ratio * 10.0, 10))
}

/// `count` points from `lo` to `hi` inclusive, evenly spaced in log scale.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = math::ln(hi / lo) / (count - 1) as f64;
            (0..count)
                .map(|k| lo * math::exp(step * k as f64))
                .collect()
        }
    }
}

/// Labels of `points` predicted by extension from a smoothed training set;
/// infeasible queries use the best-effort point.
pub fn predict_points(
    smoothed: &LabeledDataset,
    lipschitz: f64,
    points: &Points,
    epsilon: f64,
) -> Result<Points> {
    Ok(
        crate::extension::extend_batch(
            smoothed,
            lipschitz,
            points,
            &ExtensionConfig::new(epsilon),
        )?
        .0,
    )
}

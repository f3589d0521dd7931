//! Parallel batch helpers and the end-to-end pose-transfer experiment.

use lipreg_core::baseline::{default_bandwidth_grid, nw_tune_bandwidth, NwModel};
use lipreg_core::extension::best_effort;
use lipreg_core::robokin::{assemble, generate_sample, GenerationReport, GeneratorConfig};
use lipreg_core::selection::{cross_validate, geometric_grid};
use lipreg_core::smoothing::feasibility_check;
use lipreg_core::{
    extend_one_point, smooth_auto, squared_loss, Error, ExtensionConfig, ExtensionResult,
    GraphPolicy, LabeledDataset, Points, Result, SmoothingConfig,
};
use rayon::prelude::*;
use serde::Serialize;

/// Stream index of the first test sample; training uses `0..n`.
pub const TEST_INDEX_OFFSET: u64 = 1 << 40;

/// Mean loss reported for the reference method at the same training sizes.
pub const REFERENCE_TABLE: [(usize, f64, f64); 3] = [
    (100, 0.0250, 0.1625),
    (1000, 0.0013, 0.1373),
    (10000, 0.0009, 0.1372),
];

/// Samples `offset..offset + n` of the seeded stream, in index order.
pub fn generate_range(
    offset: u64,
    n: usize,
    seed: u64,
    cfg: &GeneratorConfig,
) -> Result<GenerationReport> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let results: Vec<_> = (0..n as u64)
        .into_par_iter()
        .map(|i| generate_sample(offset + i, seed, cfg))
        .collect();
    Ok(assemble(results.into_iter().collect::<Result<Vec<_>>>()?))
}

/// One extension per query row; infeasible queries keep their best-effort
/// point.
pub fn extend_all(
    model: &LabeledDataset,
    lipschitz: f64,
    queries: &Points,
    config: &ExtensionConfig,
) -> Result<Vec<ExtensionResult>> {
    let rows: Vec<&[f64]> = queries.rows().collect();
    rows.par_iter()
        .map(|x| best_effort(extend_one_point(model, lipschitz, x, config)))
        .collect()
}

pub fn nw_predict_all(model: &NwModel<'_>, queries: &Points) -> Result<Points> {
    let rows: Vec<&[f64]> = queries.rows().collect();
    let preds: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|x| model.predict(x))
        .collect::<Result<_>>()?;
    Points::from_rows_with_dim(model_label_dim(&preds, queries), &preds)
}

fn model_label_dim(preds: &[Vec<f64>], queries: &Points) -> usize {
    preds.first().map_or(queries.dim(), Vec::len)
}

pub fn stack(results: &[ExtensionResult], label_dim: usize) -> Result<Points> {
    Points::from_rows_with_dim(
        label_dim,
        &results
            .iter()
            .map(|r| r.y_star.as_slice())
            .collect::<Vec<_>>(),
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub train_sizes: Vec<usize>,
    pub test_size: usize,
    pub seed: u64,
    pub epsilon: f64,
    #[serde(serialize_with = "crate::cli::display")]
    pub graph: GraphPolicy,
    /// Folds for choosing `L`.
    pub folds: usize,
    /// `L` is chosen on the first `cv_subsample` training samples.
    pub cv_subsample: usize,
    /// Candidates on `[ρ/32, ρ]`, `ρ` the edge ratio of the raw labels.
    pub candidates: usize,
    pub nw_folds: usize,
    pub nw_grid: usize,
    pub expert_lengths: Vec<f64>,
    pub learner_lengths: Vec<f64>,
    pub angle_range: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let g = GeneratorConfig::default();
        Self {
            train_sizes: vec![100, 1000, 10000],
            test_size: 100,
            seed: 0,
            epsilon: 0.1,
            graph: GraphPolicy::Knn { k: 16 },
            folds: 3,
            cv_subsample: 300,
            candidates: 6,
            nw_folds: 5,
            nw_grid: 12,
            expert_lengths: g.expert_lengths,
            learner_lengths: g.learner_lengths,
            angle_range: g.angle_range,
        }
    }
}

impl ExperimentConfig {
    pub fn generator(&self) -> GeneratorConfig {
        GeneratorConfig {
            expert_lengths: self.expert_lengths.clone(),
            learner_lengths: self.learner_lengths.clone(),
            angle_range: self.angle_range,
            ..GeneratorConfig::default()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentRow {
    pub n_train: usize,
    pub lipschitz: f64,
    pub raw_ratio: f64,
    pub cv_loss: f64,
    pub distortion: f64,
    pub phi0_used: f64,
    pub smoothing_iterations: usize,
    pub infeasible_predictions: usize,
    pub nw_bandwidth: f64,
    pub mwu_loss: f64,
    pub nw_loss: f64,
    /// `mwu_loss / nw_loss`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Acceptance {
    /// Training size at which the gap is checked: 1000 if run, else the
    /// largest size.
    pub gap_size: usize,
    pub gap_ratio: f64,
    pub gap_threshold: f64,
    pub gap_ok: bool,
    /// MWU loss never increases with the training size.
    pub monotone_ok: bool,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReferenceRow {
    pub n_train: usize,
    pub mwu_loss: f64,
    pub nw_loss: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub rows: Vec<ExperimentRow>,
    pub acceptance: Acceptance,
    pub reference: Vec<ReferenceRow>,
}

pub const GAP_THRESHOLD: f64 = 0.2;

fn check_config(cfg: &ExperimentConfig) -> Result<()> {
    let bad = |name, reason: &str| {
        Err(Error::InvalidParameter {
            name,
            reason: reason.to_owned(),
        })
    };
    if cfg.train_sizes.is_empty() || cfg.train_sizes.contains(&0) {
        return bad("train_sizes", "need at least one positive size");
    }
    if cfg.test_size == 0 {
        return bad("test_size", "must be positive");
    }
    if cfg.folds < 2 || cfg.nw_folds < 2 {
        return bad("folds", "need at least 2 folds");
    }
    if cfg.candidates == 0 || cfg.nw_grid == 0 {
        return bad("candidates", "grids must be non-empty");
    }
    if *cfg.train_sizes.iter().min().unwrap_or(&0) < cfg.folds.max(cfg.nw_folds) {
        return bad("train_sizes", "every size must be at least the fold count");
    }
    Ok(())
}

/// Runs both pipelines at every training size. `progress` receives one line
/// per finished stage.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    mut progress: impl FnMut(&str),
) -> Result<ExperimentOutcome> {
    check_config(cfg)?;
    let gen = cfg.generator();
    let mut sizes = cfg.train_sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let n_max = *sizes.last().unwrap_or(&0);

    let test = generate_range(TEST_INDEX_OFFSET, cfg.test_size, cfg.seed, &gen)?.to_dataset()?;
    let all_train = generate_range(0, n_max, cfg.seed, &gen)?;
    progress(&format!(
        "generated {n_max} training and {} test samples",
        cfg.test_size
    ));

    let smoothing = SmoothingConfig::new(cfg.epsilon);
    let extension = ExtensionConfig::new(cfg.epsilon);
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in &sizes {
        let train = assemble_prefix(&all_train, n)?;

        let grid = default_bandwidth_grid(&train, cfg.nw_grid);
        let tuning = nw_tune_bandwidth(&train, cfg.nw_folds.min(n), &grid, cfg.seed)?;
        let nw = NwModel::new(&train, tuning.bandwidth)?;
        let nw_loss =
            squared_loss(&nw_predict_all(&nw, test.inputs())?, test.labels())?.empirical_risk;

        let raw = feasibility_check(train.labels(), &cfg.graph.build(train.inputs(), 1.0)?);
        let raw_ratio = if raw > 0.0 { raw } else { 1.0 };
        let candidates = geometric_grid(raw_ratio / 32.0, raw_ratio, cfg.candidates);
        let sub_n = n.min(cfg.cv_subsample).max(cfg.folds);
        let sub = assemble_prefix(&all_train, sub_n)?;
        let profile = cross_validate(
            &sub,
            &candidates,
            cfg.folds,
            &smoothing,
            cfg.graph,
            cfg.seed,
        )?;
        let lipschitz = profile.chosen_lipschitz;
        let cv_loss = profile
            .entries
            .iter()
            .find(|e| e.lipschitz == lipschitz)
            .and_then(|e| e.mean_loss)
            .unwrap_or(f64::NAN);

        let graph = cfg.graph.build(train.inputs(), lipschitz)?;
        let smoothed = smooth_auto(&train, &graph, &smoothing)?;
        let model = train.with_labels(smoothed.smoothed_labels.clone())?;
        let preds = extend_all(&model, lipschitz, test.inputs(), &extension)?;
        let infeasible = preds
            .iter()
            .filter(|r| r.max_slack > 1.0 + cfg.epsilon)
            .count();
        let mwu_loss =
            squared_loss(&stack(&preds, test.label_dim())?, test.labels())?.empirical_risk;

        progress(&format!(
            "n={n}: L={lipschitz:.4} mwu={mwu_loss:.5} nw={nw_loss:.5}"
        ));
        rows.push(ExperimentRow {
            n_train: n,
            lipschitz,
            raw_ratio,
            cv_loss,
            distortion: smoothed.distortion,
            phi0_used: smoothed.phi0_used,
            smoothing_iterations: smoothed.iterations,
            infeasible_predictions: infeasible,
            nw_bandwidth: tuning.bandwidth,
            mwu_loss,
            nw_loss,
            ratio: mwu_loss / nw_loss,
        });
    }
    let acceptance = accept(&rows);
    let reference = REFERENCE_TABLE
        .iter()
        .map(|&(n, m, w)| ReferenceRow {
            n_train: n,
            mwu_loss: m,
            nw_loss: w,
        })
        .collect();
    Ok(ExperimentOutcome {
        config: cfg.clone(),
        rows,
        acceptance,
        reference,
    })
}

fn assemble_prefix(all: &GenerationReport, n: usize) -> Result<LabeledDataset> {
    GenerationReport {
        samples: all.samples[..n].to_vec(),
        attempts: 0,
    }
    .to_dataset()
}

pub fn accept(rows: &[ExperimentRow]) -> Acceptance {
    let gap_row = rows.iter().find(|r| r.n_train == 1000).or(rows.last());
    let (gap_size, gap_ratio) = gap_row.map_or((0, f64::NAN), |r| (r.n_train, r.ratio));
    let gap_ok = gap_ratio <= GAP_THRESHOLD;
    let monotone_ok = rows.windows(2).all(|w| w[1].mwu_loss <= w[0].mwu_loss);
    Acceptance {
        gap_size,
        gap_ratio,
        gap_threshold: GAP_THRESHOLD,
        gap_ok,
        monotone_ok,
        passed: gap_ok && monotone_ok,
    }
}

impl ExperimentOutcome {
    /// Loss-versus-size table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n_train,lipschitz,mwu_loss,nw_loss,ratio,nw_bandwidth,infeasible_predictions\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.n_train,
                r.lipschitz,
                r.mwu_loss,
                r.nw_loss,
                r.ratio,
                r.nw_bandwidth,
                r.infeasible_predictions
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_independent_of_chunking() {
        let cfg = GeneratorConfig::default();
        let a = generate_range(0, 12, 5, &cfg).unwrap();
        let b = generate_range(4, 8, 5, &cfg).unwrap();
        assert_eq!(a.samples[4..], b.samples[..]);
    }

    #[test]
    fn acceptance_rules() {
        let row = |n, m, w| ExperimentRow {
            n_train: n,
            lipschitz: 1.0,
            raw_ratio: 1.0,
            cv_loss: 0.0,
            distortion: 0.0,
            phi0_used: 0.0,
            smoothing_iterations: 0,
            infeasible_predictions: 0,
            nw_bandwidth: 1.0,
            mwu_loss: m,
            nw_loss: w,
            ratio: m / w,
        };
        let a = accept(&[
            row(100, 0.5, 1.0),
            row(1000, 0.1, 1.0),
            row(10000, 0.3, 1.0),
        ]);
        assert_eq!(a.gap_size, 1000);
        assert!(a.gap_ok && !a.monotone_ok && !a.passed);
        let b = accept(&[row(100, 0.5, 1.0), row(400, 0.3, 1.0)]);
        assert_eq!(b.gap_size, 400);
        assert!(!b.gap_ok && b.monotone_ok);
    }
}

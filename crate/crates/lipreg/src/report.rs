//! Machine-readable reports written by the subcommands.

use lipreg_core::robokin::GenerationReport;
use lipreg_core::selection::{CvProfile, SrmProfile};
use lipreg_core::{ConstraintGraph, ExtensionResult, SmoothingResult};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct SmoothReport {
    pub lipschitz: f64,
    pub epsilon: f64,
    pub graph: String,
    pub vertices: usize,
    pub edges: usize,
    pub distortion: f64,
    pub phi0_used: f64,
    pub lower_bound: f64,
    pub max_edge_violation: f64,
    pub iterations: usize,
    pub within_target: bool,
}

impl SmoothReport {
    pub fn new(r: &SmoothingResult, graph: &ConstraintGraph, policy: &str, epsilon: f64) -> Self {
        Self {
            lipschitz: graph.lipschitz(),
            epsilon,
            graph: policy.to_owned(),
            vertices: graph.vertex_count(),
            edges: graph.edge_count(),
            distortion: r.distortion,
            phi0_used: r.phi0_used,
            lower_bound: r.lower_bound,
            max_edge_violation: r.max_edge_violation,
            iterations: r.iterations,
            within_target: r.within_target,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphDump {
    pub lipschitz: f64,
    pub edges: Vec<(usize, usize)>,
    pub radii: Vec<f64>,
}

impl From<&ConstraintGraph> for GraphDump {
    fn from(g: &ConstraintGraph) -> Self {
        Self {
            lipschitz: g.lipschitz(),
            edges: g.edges().to_vec(),
            radii: g.radii().to_vec(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QueryReport {
    pub max_slack: f64,
    pub feasible: bool,
    pub iterations: usize,
    pub anchor_index: usize,
    pub coincident: bool,
}

impl QueryReport {
    pub fn new(r: &ExtensionResult) -> Self {
        Self {
            max_slack: r.max_slack,
            feasible: r.max_slack <= 1.0 + r.epsilon,
            iterations: r.iterations,
            anchor_index: r.anchor_index,
            coincident: r.coincident,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PredictReport {
    pub lipschitz: f64,
    pub epsilon: f64,
    pub queries: usize,
    pub infeasible: usize,
    pub per_query: Vec<QueryReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SrmRow {
    pub lipschitz: f64,
    pub empirical_risk: Option<f64>,
    pub bound: f64,
    pub objective: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CvRow {
    pub lipschitz: f64,
    pub mean_loss: Option<f64>,
    pub fold_losses: Vec<f64>,
    pub infeasible_predictions: usize,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum TuneReport {
    Srm {
        constant: f64,
        graph: String,
        entries: Vec<SrmRow>,
        chosen_lipschitz: f64,
    },
    Cv {
        folds: usize,
        graph: String,
        entries: Vec<CvRow>,
        chosen_lipschitz: f64,
    },
}

impl TuneReport {
    pub fn srm(p: &SrmProfile, constant: f64, graph: &str) -> Self {
        let entries = p
            .entries
            .iter()
            .map(|e| SrmRow {
                lipschitz: e.lipschitz,
                empirical_risk: e.empirical_risk,
                bound: e.bound,
                objective: e.objective,
            })
            .collect();
        TuneReport::Srm {
            constant,
            graph: graph.to_owned(),
            entries,
            chosen_lipschitz: p.chosen_lipschitz,
        }
    }

    pub fn cv(p: &CvProfile, folds: usize, graph: &str) -> Self {
        let entries = p
            .entries
            .iter()
            .map(|e| CvRow {
                lipschitz: e.lipschitz,
                mean_loss: e.mean_loss,
                fold_losses: e.fold_losses.clone(),
                infeasible_predictions: e.infeasible_predictions,
            })
            .collect();
        TuneReport::Cv {
            folds,
            graph: graph.to_owned(),
            entries,
            chosen_lipschitz: p.chosen_lipschitz,
        }
    }

    pub fn chosen(&self) -> f64 {
        match self {
            TuneReport::Srm {
                chosen_lipschitz, ..
            }
            | TuneReport::Cv {
                chosen_lipschitz, ..
            } => *chosen_lipschitz,
        }
    }

    /// `lipschitz,score` rows for plotting; the score is the SRM objective or
    /// the mean CV loss, empty when the candidate failed.
    pub fn to_csv(&self) -> String {
        let (header, rows): (&str, Vec<(f64, Option<f64>)>) = match self {
            TuneReport::Srm { entries, .. } => (
                "lipschitz,empirical_risk,bound,objective",
                entries.iter().map(|e| (e.lipschitz, e.objective)).collect(),
            ),
            TuneReport::Cv { entries, .. } => (
                "lipschitz,mean_loss",
                entries.iter().map(|e| (e.lipschitz, e.mean_loss)).collect(),
            ),
        };
        let mut out = String::from(header);
        out.push('\n');
        match self {
            TuneReport::Srm { entries, .. } => {
                for e in entries {
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        e.lipschitz,
                        opt(e.empirical_risk),
                        e.bound,
                        opt(e.objective)
                    ));
                }
            }
            TuneReport::Cv { .. } => {
                for (l, s) in rows {
                    out.push_str(&format!("{l},{}\n", opt(s)));
                }
            }
        }
        out
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Clone, Debug, Serialize)]
pub struct NwReport {
    pub bandwidth: f64,
    pub tuned: bool,
    pub grid: Vec<f64>,
    pub mean_losses: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvaluateReport {
    pub loss: &'static str,
    pub n: usize,
    pub mean: f64,
    pub per_point: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GenerationMeta {
    pub train_n: usize,
    pub test_n: usize,
    pub seed: u64,
    /// Test samples use stream indices starting here.
    pub test_index_offset: u64,
    pub expert_lengths: Vec<f64>,
    pub learner_lengths: Vec<f64>,
    pub angle_convention: &'static str,
    pub angle_range: f64,
    pub arc_samples: usize,
    pub optimizer_starts: usize,
    pub ee_tol: f64,
    pub attempts: usize,
    pub failure_rate: f64,
    pub max_fit_residual: f64,
    pub max_end_effector_error: f64,
}

impl GenerationMeta {
    pub fn max_fit(reports: &[&GenerationReport]) -> f64 {
        reports
            .iter()
            .flat_map(|r| r.samples.iter().map(|s| s.fit_residual))
            .fold(0.0, f64::max)
    }
}

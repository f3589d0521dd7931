//! Vector-valued Nadaraya-Watson kernel regression:
//! `f̂(x) = Σ k(‖x − x_i‖/h) y_i / Σ k(‖x − x_i‖/h)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::extension::nearest_neighbor;
use crate::math;
use crate::selection::{check_folds, fold_assignment, geometric_grid, split};
use crate::{Error, LabeledDataset, Points, Result};

/// Total kernel mass below which a query falls back to its nearest neighbor.
pub const UNDERFLOW_MASS: f64 = 1e-300;

pub trait Kernel {
    /// Weight at scaled distance `u = ‖x − x_i‖ / h ≥ 0`.
    fn weight(&self, u: f64) -> f64;
}

/// `k(u) = exp(−u²/2)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GaussianKernel;

impl Kernel for GaussianKernel {
    #[inline]
    fn weight(&self, u: f64) -> f64 {
        math::exp(-0.5 * u * u)
    }
}

#[derive(Clone, Debug)]
pub struct NwModel<'a, K = GaussianKernel> {
    data: &'a LabeledDataset,
    bandwidth: f64,
    kernel: K,
}

impl<'a> NwModel<'a, GaussianKernel> {
    pub fn new(data: &'a LabeledDataset, bandwidth: f64) -> Result<Self> {
        Self::with_kernel(data, bandwidth, GaussianKernel)
    }
}

impl<'a, K: Kernel> NwModel<'a, K> {
    pub fn with_kernel(data: &'a LabeledDataset, bandwidth: f64, kernel: K) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::param(
                "bandwidth",
                alloc::format!("must be positive and finite, got {bandwidth}"),
            ));
        }
        Ok(Self {
            data,
            bandwidth,
            kernel,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn predict(&self, query: &[f64]) -> Result<Vec<f64>> {
        if query.len() != self.data.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.data.input_dim(),
                found: query.len(),
            });
        }
        let mut out = vec![0.0; self.data.label_dim()];
        let mut mass = 0.0;
        for i in 0..self.data.len() {
            let w = self
                .kernel
                .weight(math::dist(self.data.input(i), query) / self.bandwidth);
            if w > 0.0 {
                mass += w;
                for (o, y) in out.iter_mut().zip(self.data.label(i)) {
                    *o += w * y;
                }
            }
        }
        if !(mass > UNDERFLOW_MASS) {
            let (nn, _) = nearest_neighbor(self.data.inputs(), query);
            return Ok(self.data.label(nn).to_vec());
        }
        out.iter_mut().for_each(|o| *o /= mass);
        Ok(out)
    }

    pub fn predict_many(&self, queries: &Points) -> Result<Points> {
        let mut out = Points::zeros(queries.len(), self.data.label_dim());
        for (q, x) in queries.rows().enumerate() {
            let y = self.predict(x)?;
            out.row_mut(q).copy_from_slice(&y);
        }
        Ok(out)
    }
}

/// Shorthand for a single Gaussian-kernel prediction.
pub fn nw_predict(data: &LabeledDataset, bandwidth: f64, query: &[f64]) -> Result<Vec<f64>> {
    NwModel::new(data, bandwidth)?.predict(query)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandwidthTuning {
    pub bandwidth: f64,
    /// Sorted grid that was searched.
    pub grid: Vec<f64>,
    /// Mean squared held-out loss per grid entry.
    pub mean_losses: Vec<f64>,
}

/// K-fold CV over a bandwidth grid; ties go to the smallest bandwidth.
pub fn nw_tune_bandwidth(
    dataset: &LabeledDataset,
    folds: usize,
    grid: &[f64],
    seed: u64,
) -> Result<BandwidthTuning> {
    check_folds(dataset.len(), folds)?;
    if grid.is_empty() || grid.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
        return Err(Error::param(
            "grid",
            "bandwidth grid must be non-empty, positive and finite",
        ));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.len() == 1 {
        return Ok(BandwidthTuning {
            bandwidth: grid[0],
            mean_losses: vec![f64::NAN],
            grid,
        });
    }

    let assignment = fold_assignment(dataset.len(), folds, seed);
    let splits: Vec<(LabeledDataset, Vec<usize>)> = (0..folds)
        .map(|f| {
            let (train, test) = split(&assignment, f);
            (dataset.select(&train), test)
        })
        .collect();
    let mut mean_losses = Vec::with_capacity(grid.len());
    for &h in &grid {
        let mut total = 0.0;
        for (train, test) in &splits {
            let model = NwModel::new(train, h)?;
            for &i in test {
                total += math::dist_sq(&model.predict(dataset.input(i))?, dataset.label(i));
            }
        }
        mean_losses.push(total / dataset.len() as f64);
    }
    let min = mean_losses.iter().copied().fold(f64::INFINITY, f64::min);
    // losses within rounding of the label scale count as ties
    let scale = dataset
        .labels()
        .as_slice()
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        / dataset.len() as f64;
    let tol = 1e-9 * min + 1e-15 * scale + 1e-300;
    let pick = mean_losses
        .iter()
        .position(|&l| l <= min + tol)
        .unwrap_or(0);
    Ok(BandwidthTuning {
        bandwidth: grid[pick],
        grid,
        mean_losses,
    })
}

/// `count` bandwidths, geometric from a tenth of the median nearest-neighbor
/// distance to twice the largest distance from the input centroid.
pub fn default_bandwidth_grid(dataset: &LabeledDataset, count: usize) -> Vec<f64> {
    let inputs = dataset.inputs();
    let n = inputs.len();
    let centroid = inputs.centroid();
    let spread = inputs
        .rows()
        .map(|x| math::dist(x, &centroid))
        .fold(0.0, f64::max);
    let mut nn: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| math::dist(inputs.row(i), inputs.row(j)))
                .fold(f64::INFINITY, f64::min)
        })
        .filter(|d| d.is_finite())
        .collect();
    nn.sort_by(f64::total_cmp);
    let median = nn.get(nn.len() / 2).copied().unwrap_or(1.0);
    let lo = (0.1 * median).max(1e-12);
    let hi = (2.0 * spread).max(lo * 10.0);
    geometric_grid(lo, hi, count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LabeledDataset {
        LabeledDataset::from_rows(
            &[[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 1.0]],
            &[[1.0, -1.0], [2.0, 0.5], [-3.0, 4.0], [0.0, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn tiny_bandwidth_recovers_label() {
        let ds = sample();
        let h = 1e-6 * 1.0;
        let y = nw_predict(&ds, h, &[1.0, 0.0]).unwrap();
        assert!((y[0] - 2.0).abs() < 1e-9 && (y[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn far_query_falls_back_to_nearest() {
        let ds = sample();
        let y = nw_predict(&ds, 1e-3, &[50.0, 50.0]).unwrap();
        assert_eq!(y, ds.label(3));
    }

    #[test]
    fn huge_bandwidth_gives_centroid() {
        let ds = sample();
        let y = nw_predict(&ds, 1e9 * 4.0, &[0.3, 0.7]).unwrap();
        let c = ds.labels().centroid();
        assert!((y[0] - c[0]).abs() < 1e-6 && (y[1] - c[1]).abs() < 1e-6);
    }

    #[test]
    fn symmetric_query_gives_midpoint() {
        let ds = LabeledDataset::from_rows(&[[-1.0], [1.0]], &[[0.0, 2.0], [4.0, 0.0]]).unwrap();
        let y = nw_predict(&ds, 0.7, &[0.0]).unwrap();
        assert!((y[0] - 2.0).abs() < 1e-12 && (y[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tuning_edge_cases() {
        let ds = sample();
        let t = nw_tune_bandwidth(&ds, 2, &[0.5], 1).unwrap();
        assert_eq!(t.bandwidth, 0.5);
        assert!(nw_tune_bandwidth(&ds, 2, &[], 1).is_err());
        assert!(nw_tune_bandwidth(&ds, 2, &[0.0, 1.0], 1).is_err());
        assert!(nw_tune_bandwidth(&ds, 5, &[1.0, 2.0], 1).is_err());

        let constant =
            LabeledDataset::from_rows(&[[0.0], [1.0], [2.0], [3.0]], &[[2.5], [2.5], [2.5], [2.5]])
                .unwrap();
        let t = nw_tune_bandwidth(&constant, 2, &[3.0, 0.1, 1.0], 1).unwrap();
        assert_eq!(t.bandwidth, 0.1);
    }

    #[test]
    fn rejects_bad_bandwidth() {
        let ds = sample();
        assert!(NwModel::new(&ds, 0.0).is_err());
        assert!(NwModel::new(&ds, f64::INFINITY).is_err());
    }
}

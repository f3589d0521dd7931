//! Labeled samples `(x_i, y_i)` with `x_i ∈ ℝᵃ`, `y_i ∈ ℝᵇ`.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::math;
use crate::{Error, Points, Result};

/// Labels whose Euclidean distance is at most this are treated as equal when
/// duplicate inputs are merged.
pub const DUPLICATE_LABEL_TOL: f64 = 1e-12;

/// A labeled sample with pairwise distinct inputs.
///
/// Rows with identical inputs are merged on construction when their labels
/// agree to [`DUPLICATE_LABEL_TOL`]; otherwise construction fails, since no
/// finite Lipschitz constant could fit them.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    inputs: Points,
    labels: Points,
}

impl LabeledDataset {
    pub fn new(inputs: Points, labels: Points) -> Result<Self> {
        if inputs.is_empty() || labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if inputs.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: inputs.len(),
                right: labels.len(),
            });
        }
        for i in 0..inputs.len() {
            if !inputs
                .row(i)
                .iter()
                .chain(labels.row(i))
                .all(|v| v.is_finite())
            {
                return Err(Error::NonFinite { row: i });
            }
        }

        // Sort row indices lexicographically by input so equal inputs are adjacent.
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        order.sort_by(|&i, &j| lex_cmp(inputs.row(i), inputs.row(j)).then(i.cmp(&j)));

        let mut drop = alloc::vec![false; inputs.len()];
        let mut group_head = order[0];
        for w in order.windows(2) {
            let (prev, cur) = (w[0], w[1]);
            if inputs.row(prev) == inputs.row(cur) {
                if math::dist(labels.row(group_head), labels.row(cur)) > DUPLICATE_LABEL_TOL {
                    let (first, second) = (group_head.min(cur), group_head.max(cur));
                    return Err(Error::DuplicateConflict { first, second });
                }
                drop[cur] = true;
            } else {
                group_head = cur;
            }
        }

        if !drop.iter().any(|&d| d) {
            return Ok(Self { inputs, labels });
        }
        let keep: Vec<usize> = (0..inputs.len()).filter(|&i| !drop[i]).collect();
        Ok(Self {
            inputs: inputs.select(&keep),
            labels: labels.select(&keep),
        })
    }

    pub fn from_rows<A: AsRef<[f64]>, B: AsRef<[f64]>>(inputs: &[A], labels: &[B]) -> Result<Self> {
        Self::new(Points::from_rows(inputs)?, Points::from_rows(labels)?)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Input dimension `a`.
    #[inline]
    pub fn input_dim(&self) -> usize {
        self.inputs.dim()
    }

    /// Output dimension `b`.
    #[inline]
    pub fn label_dim(&self) -> usize {
        self.labels.dim()
    }

    #[inline]
    pub fn inputs(&self) -> &Points {
        &self.inputs
    }

    #[inline]
    pub fn labels(&self) -> &Points {
        &self.labels
    }

    #[inline]
    pub fn input(&self, i: usize) -> &[f64] {
        self.inputs.row(i)
    }

    #[inline]
    pub fn label(&self, i: usize) -> &[f64] {
        self.labels.row(i)
    }

    /// Same inputs, new labels. Inputs are already distinct, so no merging occurs.
    pub fn with_labels(&self, labels: Points) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: labels.len(),
            });
        }
        if !labels.is_finite() {
            return Err(Error::NonFinite {
                row: labels
                    .rows()
                    .position(|r| r.iter().any(|v| !v.is_finite()))
                    .unwrap_or(0),
            });
        }
        Ok(Self {
            inputs: self.inputs.clone(),
            labels,
        })
    }

    /// Subset of rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            inputs: self.inputs.select(indices),
            labels: self.labels.select(indices),
        }
    }

    pub fn into_parts(self) -> (Points, Points) {
        (self.inputs, self.labels)
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

//! Weighted graph Laplacian systems.
//!
//! Solves `(L + Λ) X = B` where `L` is the Laplacian of a graph with edge
//! weights `μ_ij ≥ 0` and `Λ = diag(λ_i)`, `λ_i ≥ 0`. With `B = Λ Y` the
//! solution minimizes
//!
//! ```text
//! Ψ(Ỹ) = Σ_i λ_i ‖y_i − ỹ_i‖² + Σ_(i,j)∈E μ_ij ‖ỹ_i − ỹ_j‖²
//! ```
//!
//! The system is symmetric, diagonally dominant, and positive definite iff
//! every connected component (through positive `μ`) contains a vertex with
//! `λ_i > 0`. Each output coordinate is an independent system, solved with
//! Jacobi-preconditioned conjugate gradients.

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{ConstraintGraph, DisjointSets};
use crate::math;
use crate::{Error, Points, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Target relative residual `‖B − A X‖ / ‖B‖`, per column.
    pub tol: f64,
    /// Iteration cap per column; `None` means `10·n·b`.
    pub max_iterations: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOLERANCE,
            max_iterations: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOutcome {
    pub solution: Points,
    /// Total CG iterations over all columns.
    pub iterations: usize,
    /// Largest relative residual over the columns.
    pub residual: f64,
    /// `Σ_c ‖b_c − A x_c‖²` over the columns. A quadratic `xᵀAx − 2bᵀx`
    /// evaluated at the solution exceeds its minimum by at most this over the
    /// smallest eigenvalue of `A`.
    pub residual_sq: f64,
}

/// `L + Λ` in compressed adjacency form.
#[derive(Clone, Debug)]
pub struct WeightedLaplacian {
    n: usize,
    edges: Vec<(usize, usize)>,
    edge_weights: Vec<f64>,
    vertex_weights: Vec<f64>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    entry_edge: Vec<usize>,
    diagonal: Vec<f64>,
}

impl WeightedLaplacian {
    pub fn new(
        n: usize,
        edges: &[(usize, usize)],
        edge_weights: &[f64],
        vertex_weights: &[f64],
    ) -> Result<Self> {
        if edge_weights.len() != edges.len() {
            return Err(Error::LengthMismatch {
                left: edges.len(),
                right: edge_weights.len(),
            });
        }
        if vertex_weights.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: vertex_weights.len(),
            });
        }
        let mut degree = vec![0usize; n];
        for &(i, j) in edges {
            if i == j || i >= n || j >= n {
                return Err(Error::InvalidEdge {
                    i,
                    j,
                    reason: "self-loop or endpoint out of range",
                });
            }
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0usize; offsets[n]];
        let mut entry_edge = vec![0usize; offsets[n]];
        for (e, &(i, j)) in edges.iter().enumerate() {
            neighbors[fill[i]] = j;
            entry_edge[fill[i]] = e;
            fill[i] += 1;
            neighbors[fill[j]] = i;
            entry_edge[fill[j]] = e;
            fill[j] += 1;
        }
        let mut lap = Self {
            n,
            edges: edges.to_vec(),
            edge_weights: Vec::new(),
            vertex_weights: Vec::new(),
            offsets,
            neighbors,
            entry_edge,
            diagonal: vec![0.0; n],
        };
        lap.set_weights(edge_weights, vertex_weights)?;
        Ok(lap)
    }

    pub fn for_graph(
        graph: &ConstraintGraph,
        edge_weights: &[f64],
        vertex_weights: &[f64],
    ) -> Result<Self> {
        Self::new(
            graph.vertex_count(),
            graph.edges(),
            edge_weights,
            vertex_weights,
        )
    }

    /// Replaces all weights, keeping the sparsity pattern.
    pub fn set_weights(&mut self, edge_weights: &[f64], vertex_weights: &[f64]) -> Result<()> {
        if edge_weights.len() != self.edges.len() {
            return Err(Error::LengthMismatch {
                left: self.edges.len(),
                right: edge_weights.len(),
            });
        }
        if vertex_weights.len() != self.n {
            return Err(Error::LengthMismatch {
                left: self.n,
                right: vertex_weights.len(),
            });
        }
        if edge_weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::param(
                "edge_weights",
                "weights must be finite and non-negative",
            ));
        }
        if vertex_weights
            .iter()
            .any(|w| !(*w >= 0.0) || !w.is_finite())
        {
            return Err(Error::param(
                "vertex_weights",
                "weights must be finite and non-negative",
            ));
        }
        self.edge_weights.clear();
        self.edge_weights.extend_from_slice(edge_weights);
        self.vertex_weights.clear();
        self.vertex_weights.extend_from_slice(vertex_weights);
        self.diagonal.copy_from_slice(vertex_weights);
        for (&(i, j), &w) in self.edges.iter().zip(edge_weights) {
            self.diagonal[i] += w;
            self.diagonal[j] += w;
        }
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// `out = (L + Λ) x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for v in 0..self.n {
            let mut acc = self.diagonal[v] * x[v];
            for k in self.offsets[v]..self.offsets[v + 1] {
                acc -= self.edge_weights[self.entry_edge[k]] * x[self.neighbors[k]];
            }
            out[v] = acc;
        }
    }

    /// Fails with [`Error::SingularSystem`] if some component has no positive
    /// vertex weight.
    pub fn check_definite(&self) -> Result<()> {
        let mut dsu = DisjointSets::new(self.n);
        for (&(i, j), &w) in self.edges.iter().zip(&self.edge_weights) {
            if w > 0.0 {
                dsu.union(i, j);
            }
        }
        let mut anchored = vec![false; self.n];
        for v in 0..self.n {
            if self.vertex_weights[v] > 0.0 {
                let root = dsu.find(v);
                anchored[root] = true;
            }
        }
        for v in 0..self.n {
            let root = dsu.find(v);
            if !anchored[root] {
                // roots are the smallest vertex of their component
                return Err(Error::SingularSystem { vertex: root });
            }
        }
        Ok(())
    }

    /// Solves `(L + Λ) X = rhs` column by column, optionally warm-started.
    pub fn solve(
        &self,
        rhs: &Points,
        initial: Option<&Points>,
        opts: &SolverOptions,
    ) -> Result<SolveOutcome> {
        if rhs.len() != self.n {
            return Err(Error::LengthMismatch {
                left: self.n,
                right: rhs.len(),
            });
        }
        if let Some(x0) = initial {
            if x0.len() != self.n || x0.dim() != rhs.dim() {
                return Err(Error::DimensionMismatch {
                    expected: rhs.dim(),
                    found: x0.dim(),
                });
            }
        }
        if !(opts.tol > 0.0) {
            return Err(Error::param("tol", "tolerance must be positive"));
        }
        self.check_definite()?;

        let b = rhs.dim();
        let cap = opts.max_iterations.unwrap_or(10 * self.n.max(1) * b);
        let mut solution = Points::zeros(self.n, b);
        let mut workspace = CgWorkspace::new(self.n);
        let mut iterations = 0;
        let mut residual: f64 = 0.0;
        let mut residual_sq = 0.0;
        for c in 0..b {
            let column = rhs.column(c);
            let mut x = match initial {
                Some(x0) => x0.column(c),
                None => vec![0.0; self.n],
            };
            let (its, res, abs) = self.pcg(&column, &mut x, opts.tol, cap, &mut workspace)?;
            iterations += its;
            residual = residual.max(res);
            residual_sq += abs * abs;
            solution.set_column(c, &x);
        }
        Ok(SolveOutcome {
            solution,
            iterations,
            residual,
            residual_sq,
        })
    }

    /// Upper bound on `‖A‖₂`: the largest absolute row sum.
    fn norm_bound(&self) -> f64 {
        (0..self.n)
            .map(|v| {
                let off: f64 = (self.offsets[v]..self.offsets[v + 1])
                    .map(|k| self.edge_weights[self.entry_edge[k]])
                    .sum();
                self.diagonal[v] + off
            })
            .fold(0.0, f64::max)
    }

    /// Returns iterations, relative residual and absolute residual norm.
    ///
    /// If the relative target is out of reach within `cap` iterations, the
    /// solve still succeeds when the normwise backward error
    /// `‖r‖ / (‖A‖‖x‖ + ‖b‖)` is below `tol`; that is the accuracy floating
    /// point allows for badly conditioned systems.
    fn pcg(
        &self,
        b: &[f64],
        x: &mut [f64],
        tol: f64,
        cap: usize,
        ws: &mut CgWorkspace,
    ) -> Result<(usize, f64, f64)> {
        let n = self.n;
        let b_norm = norm(b);
        if b_norm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok((0, 0.0, 0.0));
        }
        let give_up = |x: &[f64], r_norm: f64, iterations: usize| -> Result<(usize, f64, f64)> {
            if r_norm <= tol * (self.norm_bound() * norm(x) + b_norm) {
                Ok((iterations, r_norm / b_norm, r_norm))
            } else {
                Err(Error::NotConverged {
                    iterations,
                    residual: r_norm / b_norm,
                })
            }
        };
        let target = tol * b_norm;
        // Restarting periodically recomputes the true residual and discards
        // accumulated loss of conjugacy.
        let restart_every = n.max(50);
        let CgWorkspace { r, z, p, ap } = ws;

        let mut iterations = 0;
        loop {
            self.apply(x, ap);
            for v in 0..n {
                r[v] = b[v] - ap[v];
            }
            let mut r_norm = norm(r);
            if r_norm <= target {
                return Ok((iterations, r_norm / b_norm, r_norm));
            }
            if iterations >= cap {
                return give_up(x, r_norm, iterations);
            }
            for v in 0..n {
                z[v] = r[v] / self.diagonal[v];
            }
            p.copy_from_slice(z);
            let mut rz = dot(r, z);
            let mut inner = 0;
            while inner < restart_every && iterations < cap {
                self.apply(p, ap);
                let pap = dot(p, ap);
                if !(pap > 0.0) {
                    break;
                }
                let alpha = rz / pap;
                for v in 0..n {
                    x[v] += alpha * p[v];
                    r[v] -= alpha * ap[v];
                }
                iterations += 1;
                inner += 1;
                r_norm = norm(r);
                if r_norm <= target {
                    break;
                }
                for v in 0..n {
                    z[v] = r[v] / self.diagonal[v];
                }
                let rz_next = dot(r, z);
                let beta = rz_next / rz;
                rz = rz_next;
                for v in 0..n {
                    p[v] = z[v] + beta * p[v];
                }
            }
            if inner == 0 && iterations < cap {
                // breakdown on a fresh restart: nothing more to gain
                return give_up(x, r_norm, iterations);
            }
        }
    }
}

struct CgWorkspace {
    r: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    ap: Vec<f64>,
}

impl CgWorkspace {
    fn new(n: usize) -> Self {
        Self {
            r: vec![0.0; n],
            z: vec![0.0; n],
            p: vec![0.0; n],
            ap: vec![0.0; n],
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

/// Minimizer of `Ψ` for labels `labels` on `graph`.
///
/// Vertices with no positively weighted edge decouple and keep their label
/// exactly.
pub fn solve_laplace(
    graph: &ConstraintGraph,
    labels: &Points,
    vertex_weights: &[f64],
    edge_weights: &[f64],
    tol: f64,
) -> Result<Points> {
    if labels.len() != graph.vertex_count() {
        return Err(Error::LengthMismatch {
            left: graph.vertex_count(),
            right: labels.len(),
        });
    }
    let lap = WeightedLaplacian::for_graph(graph, edge_weights, vertex_weights)?;
    let mut rhs = labels.clone();
    for (v, &lambda) in vertex_weights.iter().enumerate() {
        rhs.row_mut(v).iter_mut().for_each(|y| *y *= lambda);
    }
    let opts = SolverOptions {
        tol,
        ..SolverOptions::default()
    };
    let mut out = lap.solve(&rhs, Some(labels), &opts)?.solution;

    let mut coupled = vec![false; graph.vertex_count()];
    for (&(i, j), &w) in graph.edges().iter().zip(edge_weights) {
        if w > 0.0 {
            coupled[i] = true;
            coupled[j] = true;
        }
    }
    for (v, _) in coupled.iter().enumerate().filter(|(_, c)| !**c) {
        out.row_mut(v).copy_from_slice(labels.row(v));
    }
    Ok(out)
}

/// `Ψ(Y, Ỹ, λ, μ)`.
pub fn laplace_objective(
    graph: &ConstraintGraph,
    labels: &Points,
    smoothed: &Points,
    vertex_weights: &[f64],
    edge_weights: &[f64],
) -> f64 {
    let fidelity: f64 = (0..labels.len())
        .map(|v| vertex_weights[v] * math::dist_sq(labels.row(v), smoothed.row(v)))
        .sum();
    let smoothness: f64 = graph
        .edges()
        .iter()
        .zip(edge_weights)
        .map(|(&(i, j), &w)| w * math::dist_sq(smoothed.row(i), smoothed.row(j)))
        .sum();
    fidelity + smoothness
}

//! Constraint graphs: the edge sets over which Lipschitz constraints are enforced.

use alloc::collections::BinaryHeap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::math;
use crate::{Error, Points, Result};

/// Edge list over `0..n` with per-edge radius `r_ij = L·‖x_i − x_j‖`.
///
/// Edges are stored with `i < j`, sorted, without duplicates, and every radius
/// is strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintGraph {
    n: usize,
    lipschitz: f64,
    edges: Vec<(usize, usize)>,
    radii: Vec<f64>,
}

impl ConstraintGraph {
    /// Every pair `i < j`; this is the exact smoothing problem.
    pub fn complete(points: &Points, lipschitz: f64) -> Result<Self> {
        check_lipschitz(lipschitz)?;
        let n = points.len();
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        Self::from_edges(points, lipschitz, edges)
    }

    /// Symmetrized `k`-nearest-neighbor graph, augmented with a Euclidean
    /// minimum spanning tree so that the result is always connected.
    pub fn knn(points: &Points, lipschitz: f64, k: usize) -> Result<Self> {
        check_lipschitz(lipschitz)?;
        let n = points.len();
        if k == 0 || k >= n {
            return Err(Error::param(
                "k",
                alloc::format!("need 1 <= k < n, got k = {k}, n = {n}"),
            ));
        }
        let mut edges = Vec::with_capacity(n * k + n);
        let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(n);
        for i in 0..n {
            scratch.clear();
            scratch.extend(
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (math::dist_sq(points.row(i), points.row(j)), j)),
            );
            scratch.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(_, j) in &scratch[..k] {
                edges.push((i.min(j), i.max(j)));
            }
        }
        edges.extend(minimum_spanning_tree(points));
        Self::from_edges(points, lipschitz, edges)
    }

    /// Greedy geometric spanner: pairs are scanned by increasing distance and
    /// an edge is added iff the current graph distance exceeds
    /// `stretch · ‖x_i − x_j‖`.
    pub fn greedy_spanner(points: &Points, lipschitz: f64, stretch: f64) -> Result<Self> {
        check_lipschitz(lipschitz)?;
        if !(stretch > 1.0) || !stretch.is_finite() {
            return Err(Error::param(
                "stretch",
                alloc::format!("stretch must be > 1, got {stretch}"),
            ));
        }
        let n = points.len();
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((math::dist(points.row(i), points.row(j)), i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut edges = Vec::new();
        let mut dijkstra = BoundedDijkstra::new(n);
        for (d, i, j) in pairs {
            if dijkstra.distance(&adjacency, i, j, stretch * d) > stretch * d {
                adjacency[i].push((j, d));
                adjacency[j].push((i, d));
                edges.push((i, j));
            }
        }
        Self::from_edges(points, lipschitz, edges)
    }

    /// Explicit edge set. Pairs may be given in either orientation; duplicates
    /// are merged. Self-loops and coincident endpoints are rejected.
    pub fn from_edges<I>(points: &Points, lipschitz: f64, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        check_lipschitz(lipschitz)?;
        let n = points.len();
        let mut list: Vec<(usize, usize)> = Vec::new();
        for (a, b) in edges {
            let (i, j) = (a.min(b), a.max(b));
            if i == j {
                return Err(Error::InvalidEdge {
                    i,
                    j,
                    reason: "self-loop",
                });
            }
            if j >= n {
                return Err(Error::InvalidEdge {
                    i,
                    j,
                    reason: "endpoint out of range",
                });
            }
            list.push((i, j));
        }
        list.sort_unstable();
        list.dedup();
        let mut radii = Vec::with_capacity(list.len());
        for &(i, j) in &list {
            let r = lipschitz * math::dist(points.row(i), points.row(j));
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::InvalidEdge {
                    i,
                    j,
                    reason: "radius must be positive and finite",
                });
            }
            radii.push(r);
        }
        Ok(Self {
            n,
            lipschitz,
            edges: list,
            radii,
        })
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    #[inline]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Input-space edge lengths `‖x_i − x_j‖ = r_ij / L`.
    pub fn lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.radii.iter().map(move |r| r / self.lipschitz)
    }

    /// Same edge set with radii rescaled to a new budget.
    pub fn with_lipschitz(&self, lipschitz: f64) -> Result<Self> {
        check_lipschitz(lipschitz)?;
        let scale = lipschitz / self.lipschitz;
        Ok(Self {
            n: self.n,
            lipschitz,
            edges: self.edges.clone(),
            radii: self.radii.iter().map(|r| r * scale).collect(),
        })
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut dsu = DisjointSets::new(self.n);
        let mut components = self.n;
        for &(i, j) in &self.edges {
            if dsu.union(i, j) {
                components -= 1;
            }
        }
        components == 1
    }

    /// Neighbor lists `(neighbor, edge index)` for every vertex.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            adj[i].push((j, e));
            adj[j].push((i, e));
        }
        adj
    }
}

fn check_lipschitz(lipschitz: f64) -> Result<()> {
    if lipschitz > 0.0 && lipschitz.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            "lipschitz",
            alloc::format!("must be positive and finite, got {lipschitz}"),
        ))
    }
}

/// How to build a [`ConstraintGraph`] from a point set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GraphPolicy {
    Complete,
    /// Symmetrized k-NN plus MST; `k` is clamped to `n − 1` on small inputs.
    Knn {
        k: usize,
    },
    /// Greedy spanner with stretch factor `stretch > 1`.
    Spanner {
        stretch: f64,
    },
}

impl GraphPolicy {
    pub fn build(&self, points: &Points, lipschitz: f64) -> Result<ConstraintGraph> {
        match *self {
            GraphPolicy::Complete => ConstraintGraph::complete(points, lipschitz),
            GraphPolicy::Knn { k } => {
                let n = points.len();
                if n <= 1 || k >= n - 1 {
                    ConstraintGraph::complete(points, lipschitz)
                } else {
                    ConstraintGraph::knn(points, lipschitz, k)
                }
            }
            GraphPolicy::Spanner { stretch } => {
                ConstraintGraph::greedy_spanner(points, lipschitz, stretch)
            }
        }
    }
}

impl fmt::Display for GraphPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphPolicy::Complete => f.write_str("complete"),
            GraphPolicy::Knn { k } => write!(f, "knn:{k}"),
            GraphPolicy::Spanner { stretch } => write!(f, "spanner:{}", stretch - 1.0),
        }
    }
}

/// Parses `complete`, `knn:<k>` or `spanner:<eps>` (stretch `1 + eps`).
impl FromStr for GraphPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::param(
                "graph",
                alloc::format!("expected complete | knn:<k> | spanner:<eps>, got `{s}`"),
            )
        };
        match s.split_once(':') {
            None if s == "complete" => Ok(GraphPolicy::Complete),
            Some(("knn", k)) => {
                let k: usize = k.parse().map_err(|_| bad())?;
                if k == 0 {
                    return Err(bad());
                }
                Ok(GraphPolicy::Knn { k })
            }
            Some(("spanner", eps)) => {
                let eps: f64 = eps.parse().map_err(|_| bad())?;
                if !(eps > 0.0) || !eps.is_finite() {
                    return Err(Error::param(
                        "graph",
                        "spanner eps must be positive".to_string(),
                    ));
                }
                Ok(GraphPolicy::Spanner { stretch: 1.0 + eps })
            }
            _ => Err(bad()),
        }
    }
}

/// Prim's algorithm on the complete Euclidean graph, `O(n²)`.
fn minimum_spanning_tree(points: &Points) -> Vec<(usize, usize)> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    in_tree[0] = true;
    for (j, b) in best.iter_mut().enumerate().skip(1) {
        *b = math::dist_sq(points.row(0), points.row(j));
    }
    for _ in 1..n {
        let mut next = usize::MAX;
        for j in 0..n {
            if !in_tree[j] && (next == usize::MAX || best[j] < best[next]) {
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((parent[next].min(next), parent[next].max(next)));
        for j in 0..n {
            if !in_tree[j] {
                let d = math::dist_sq(points.row(next), points.row(j));
                if d < best[j] {
                    best[j] = d;
                    parent[j] = next;
                }
            }
        }
    }
    edges
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // min-heap on distance
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Dijkstra that stops once the frontier passes `limit`.
struct BoundedDijkstra {
    dist: Vec<f64>,
    touched: Vec<usize>,
    heap: BinaryHeap<HeapEntry>,
}

impl BoundedDijkstra {
    fn new(n: usize) -> Self {
        Self {
            dist: vec![f64::INFINITY; n],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn distance(
        &mut self,
        adjacency: &[Vec<(usize, f64)>],
        source: usize,
        target: usize,
        limit: f64,
    ) -> f64 {
        for &v in &self.touched {
            self.dist[v] = f64::INFINITY;
        }
        self.touched.clear();
        self.heap.clear();
        self.dist[source] = 0.0;
        self.touched.push(source);
        self.heap.push(HeapEntry(0.0, source));
        while let Some(HeapEntry(d, u)) = self.heap.pop() {
            if d > self.dist[u] {
                continue;
            }
            if u == target || d > limit {
                break;
            }
            for &(v, w) in &adjacency[u] {
                let nd = d + w;
                if nd < self.dist[v] {
                    if self.dist[v].is_infinite() {
                        self.touched.push(v);
                    }
                    self.dist[v] = nd;
                    self.heap.push(HeapEntry(nd, v));
                }
            }
        }
        self.dist[target]
    }
}

pub(crate) struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true if the sets were distinct.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

//! Undirected communication graphs, Laplacian spectra and the oriented
//! incidence / spanning-tree factorization used by the edge dynamics.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Residual allowed when solving `E_tau T = E_c`.
pub const TREE_SOLVE_TOL: f64 = 1e-8;

/// An undirected simple graph on vertices `1..=n_vertices`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
    connected: bool,
}

impl Topology {
    /// Validates and builds a topology. Edges are 1-indexed vertex pairs;
    /// the listed order of each pair is kept (it matters only for
    /// [`Orientation::AsListed`]).
    pub fn new(n_vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::InvalidTopology("graph needs at least one vertex".into()));
        }
        if edges.is_empty() {
            return Err(Error::InvalidTopology("edge list is empty".into()));
        }
        let mut problems = Vec::new();
        let mut seen = BTreeSet::new();
        for (k, &(a, b)) in edges.iter().enumerate() {
            if a == b {
                problems.push(format!("edge {} ({a},{b}) is a self-loop", k + 1));
            }
            for v in [a, b] {
                if v == 0 || v > n_vertices {
                    problems.push(format!(
                        "edge {} ({a},{b}) has vertex {v} outside 1..={n_vertices}",
                        k + 1
                    ));
                }
            }
            if !seen.insert((a.min(b), a.max(b))) {
                problems.push(format!("edge {} ({a},{b}) is a duplicate", k + 1));
            }
        }
        if !problems.is_empty() {
            return Err(Error::InvalidTopology(problems.join("; ")));
        }
        let mut topo = Self {
            n_vertices,
            edges: edges.to_vec(),
            connected: false,
        };
        topo.connected = topo.bfs_tree().len() + 1 == n_vertices;
        Ok(topo)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..=n)
            .flat_map(|i| ((i + 1)..=n).map(move |j| (i, j)))
            .collect();
        Self::new(n, &edges)
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i, i + 1)).collect();
        Self::new(n, &edges)
    }

    pub fn star(leaves: usize) -> Result<Self> {
        let edges: Vec<_> = (2..=leaves + 1).map(|j| (1, j)).collect();
        Self::new(leaves + 1, &edges)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Degree minus adjacency, with unit edge weights.
    pub fn laplacian(&self) -> Matrix {
        let n = self.n_vertices;
        let mut l = Matrix::zeros(n, n);
        for &(a, b) in &self.edges {
            let (i, j) = (a - 1, b - 1);
            l[(i, i)] += 1.0;
            l[(j, j)] += 1.0;
            l[(i, j)] -= 1.0;
            l[(j, i)] -= 1.0;
        }
        l
    }

    /// Breadth-first spanning forest from vertex 1; neighbours are scanned
    /// in edge input order. Returns the 0-based indices of the tree edges
    /// in the order they were discovered.
    fn bfs_tree(&self) -> Vec<usize> {
        let mut visited = vec![false; self.n_vertices + 1];
        let mut tree = Vec::new();
        let mut queue = VecDeque::from([1usize]);
        visited[1] = true;
        while let Some(v) = queue.pop_front() {
            for (k, &(a, b)) in self.edges.iter().enumerate() {
                let w = if a == v {
                    b
                } else if b == v {
                    a
                } else {
                    continue;
                };
                if !visited[w] {
                    visited[w] = true;
                    tree.push(k);
                    queue.push_back(w);
                }
            }
        }
        tree
    }

    pub fn spectrum(&self) -> Result<SpectrumSummary> {
        laplacian_spectrum(self)
    }

    pub fn edge_decomposition(
        &self,
        orientation: &Orientation,
        tree: &TreeRule,
    ) -> Result<EdgeDecomposition> {
        edge_decomposition(self, orientation, tree)
    }
}

/// Validated constructor; see [`Topology::new`].
pub fn build_topology(n_vertices: usize, edges: &[(usize, usize)]) -> Result<Topology> {
    Topology::new(n_vertices, edges)
}

/// Laplacian eigenvalues with the quantities the criteria consume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub eigenvalues: Vec<f64>,
    pub lambda2: f64,
    pub lambda_n: f64,
    pub c: f64,
}

impl SpectrumSummary {
    /// Builds a summary from a full list of Laplacian eigenvalues (one of
    /// which is the zero eigenvalue).
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.len() < 2 {
            return Err(Error::Precondition("need at least two eigenvalues".into()));
        }
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        let tol = 1e-9 * eigenvalues.len() as f64;
        if eigenvalues[0].abs() > tol || eigenvalues.iter().any(|&x| x < -tol) {
            return Err(Error::Precondition(
                "Laplacian spectrum must start at zero and be nonnegative".into(),
            ));
        }
        eigenvalues[0] = 0.0;
        let lambda2 = eigenvalues[1];
        if lambda2 <= tol {
            return Err(Error::NotConnected);
        }
        let lambda_n = *eigenvalues.last().unwrap();
        Ok(Self {
            c: eigen_ratio_c(lambda2, lambda_n),
            eigenvalues,
            lambda2,
            lambda_n,
        })
    }

    /// Summary carrying only the extreme nonzero eigenvalues; enough for
    /// every criterion that depends on the graph through (λ2, λN). Interior
    /// eigenvalues, if any, are irrelevant to those criteria.
    pub fn from_extremes(lambda2: f64, lambda_n: f64) -> Result<Self> {
        if !(lambda2 > 0.0 && lambda_n >= lambda2 && lambda_n.is_finite()) {
            return Err(Error::Precondition(format!(
                "need 0 < lambda2 <= lambdaN, got ({lambda2}, {lambda_n})"
            )));
        }
        let eigenvalues = if lambda2 == lambda_n {
            vec![0.0, lambda2]
        } else {
            vec![0.0, lambda2, lambda_n]
        };
        Self::from_eigenvalues(eigenvalues)
    }

    /// Nonzero eigenvalues λ2..λN.
    pub fn nonzero(&self) -> &[f64] {
        &self.eigenvalues[1..]
    }

    /// ((λN − λ2)/(λN + λ2))², i.e. 1 − c.
    pub fn theta(&self) -> f64 {
        let r = (self.lambda_n - self.lambda2) / (self.lambda_n + self.lambda2);
        r * r
    }
}

pub fn eigen_ratio_c(lambda2: f64, lambda_n: f64) -> f64 {
    let r = (lambda_n - lambda2) / (lambda_n + lambda2);
    1.0 - r * r
}

pub fn laplacian_spectrum(t: &Topology) -> Result<SpectrumSummary> {
    if !t.is_connected() {
        return Err(Error::NotConnected);
    }
    if t.n_vertices() < 2 {
        return Err(Error::Precondition("need at least two agents".into()));
    }
    SpectrumSummary::from_eigenvalues(linalg::sym_eigenvalues(&t.laplacian()))
}

/// How each undirected edge is given a direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// Initial node is the smaller vertex index.
    #[default]
    LowerIndexFirst,
    /// Initial node is the first vertex of each listed pair, which lets a
    /// caller flip individual edges.
    AsListed,
}

/// Which edges form the spanning tree block `E_tau`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TreeRule {
    /// Breadth-first from vertex 1, neighbours in edge input order.
    #[default]
    Bfs,
    /// Explicit 0-based edge indices (must form a spanning tree).
    Edges(Vec<usize>),
}

/// Oriented incidence matrix split into tree and cycle blocks.
///
/// Columns of every edge-indexed matrix follow `edge_order`: tree edges
/// first, then cycle edges, each group in input order. `edge_order[k]` is
/// the input index of decomposition column `k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeDecomposition {
    #[serde(with = "linalg::serde_rows")]
    pub e: Matrix,
    #[serde(with = "linalg::serde_rows")]
    pub e_tau: Matrix,
    #[serde(with = "linalg::serde_rows")]
    pub e_c: Matrix,
    #[serde(with = "linalg::serde_rows")]
    pub t: Matrix,
    #[serde(with = "linalg::serde_rows")]
    pub m: Matrix,
    #[serde(with = "linalg::serde_rows")]
    pub r: Matrix,
    #[serde(with = "linalg::serde_rows")]
    pub l_e: Matrix,
    pub edge_order: Vec<usize>,
    /// (initial, terminal) vertex pairs, 1-indexed, in decomposition order.
    pub oriented_edges: Vec<(usize, usize)>,
}

impl EdgeDecomposition {
    pub fn n_vertices(&self) -> usize {
        self.e.nrows()
    }

    pub fn n_edges(&self) -> usize {
        self.e.ncols()
    }

    pub fn n_tree_edges(&self) -> usize {
        self.e_tau.ncols()
    }

    /// Reorders a per-edge vector given in input order into decomposition order.
    pub fn to_decomposition_order<T: Copy>(&self, by_input: &[T]) -> Vec<T> {
        self.edge_order.iter().map(|&k| by_input[k]).collect()
    }

    /// `M diag(zeta) R'` for a per-edge loss vector in decomposition order.
    pub fn weighted_tree_coupling(&self, zeta: &[f64]) -> Matrix {
        let mut scaled = self.m.clone();
        for (j, &z) in zeta.iter().enumerate() {
            scaled.column_mut(j).scale_mut(z);
        }
        scaled * self.r.transpose()
    }
}

pub fn edge_decomposition(
    t: &Topology,
    orientation: &Orientation,
    tree: &TreeRule,
) -> Result<EdgeDecomposition> {
    if !t.is_connected() {
        return Err(Error::NotConnected);
    }
    let n = t.n_vertices();
    let l = t.n_edges();
    let tree_edges = match tree {
        TreeRule::Bfs => {
            let mut tr = t.bfs_tree();
            tr.sort_unstable();
            tr
        }
        TreeRule::Edges(given) => {
            let mut tr = given.clone();
            tr.sort_unstable();
            tr.dedup();
            if tr.len() != n - 1 || tr.iter().any(|&k| k >= l) {
                return Err(Error::InvalidTopology(format!(
                    "tree must list {} distinct edge indices below {l}",
                    n - 1
                )));
            }
            tr
        }
    };
    let in_tree: BTreeSet<usize> = tree_edges.iter().copied().collect();
    let edge_order: Vec<usize> = tree_edges
        .iter()
        .copied()
        .chain((0..l).filter(|k| !in_tree.contains(k)))
        .collect();

    let oriented_edges: Vec<(usize, usize)> = edge_order
        .iter()
        .map(|&k| {
            let (a, b) = t.edges()[k];
            match orientation {
                Orientation::LowerIndexFirst => (a.min(b), a.max(b)),
                Orientation::AsListed => (a, b),
            }
        })
        .collect();

    let mut e = Matrix::zeros(n, l);
    for (k, &(init, term)) in oriented_edges.iter().enumerate() {
        e[(init - 1, k)] = 1.0;
        e[(term - 1, k)] = -1.0;
    }
    let e_tau = e.columns(0, n - 1).into_owned();
    let e_c = e.columns(n - 1, l - (n - 1)).into_owned();
    if linalg::rank(&e_tau, 1e-10) != n - 1 {
        return Err(Error::InvalidTopology("tree edges do not span the graph".into()));
    }
    let tm = if e_c.ncols() == 0 {
        Matrix::zeros(n - 1, 0)
    } else {
        let sol = linalg::lstsq(&e_tau, &e_c)?;
        let resid = (&e_tau * &sol - &e_c).norm();
        if resid > TREE_SOLVE_TOL {
            return Err(Error::Numerical(format!(
                "E_tau T = E_c residual {resid:e} above {TREE_SOLVE_TOL:e}"
            )));
        }
        sol
    };
    let m = e_tau.transpose() * &e;
    let mut r = Matrix::zeros(n - 1, l);
    r.columns_mut(0, n - 1).copy_from(&Matrix::identity(n - 1, n - 1));
    r.columns_mut(n - 1, l - (n - 1)).copy_from(&tm);
    let l_e = e.transpose() * &e;
    Ok(EdgeDecomposition {
        e,
        e_tau,
        e_c,
        t: tm,
        m,
        r,
        l_e,
        edge_order,
        oriented_edges,
    })
}

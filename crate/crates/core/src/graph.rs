//! Weighted undirected graphs, their Laplacian spectrum and the graph
//! Fourier transform (GFT).
//!
//! A graph signal assigns one scalar to each vertex. The GFT projects it onto
//! the Laplacian eigenvectors, `x̂ = Vᵀ·x`, and the inverse maps back with
//! `x = V·x̂`. Eigenvalues play the role of graph frequencies and are kept in
//! ascending order, so component 0 is the constant (DC) mode of a connected
//! graph.

use std::collections::VecDeque;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};

const MAX_GENERATION_ATTEMPTS: usize = 1000;
const SYMMETRY_TOL: f64 = 1e-12;

/// Random graph families used to build benchmark topologies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologyModel {
    /// Each edge present independently with probability `p`.
    ErdosRenyi { p: f64 },
    /// Cycle through the vertices in index order, unit weights.
    Ring,
    /// Vertices uniform on the unit square, joined when closer than `radius`.
    RandomGeometric { radius: f64 },
}

impl Default for TopologyModel {
    fn default() -> Self {
        TopologyModel::ErdosRenyi { p: 0.5 }
    }
}

/// Weighted undirected graph stored as a dense symmetric adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTopology {
    weights: DMatrix<f64>,
    seed: Option<u64>,
}

impl GraphTopology {
    /// Validates symmetry, a zero diagonal and nonnegative weights.
    /// Connectivity is checked later by [`GraphTopology::laplacian`].
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        check_shape(n >= 1 && weights.is_square(), || {
            format!("adjacency must be square, got {}x{}", n, weights.ncols())
        })?;
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::Input(format!("nonzero self-loop at vertex {i}")));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Input(format!(
                        "invalid weight {w} on edge ({i}, {j})"
                    )));
                }
                if w != weights[(j, i)] {
                    return Err(Error::Input(format!(
                        "asymmetric weight on edge ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            weights,
            seed: None,
        })
    }

    /// Builds a graph from `(i, j, w)` triples; each undirected edge is listed once.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut weights = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::Input(format!(
                    "edge ({i}, {j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(Error::Input(format!("self-loop at vertex {i}")));
            }
            weights[(i, j)] = w;
            weights[(j, i)] = w;
        }
        Self::from_weights(weights)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Seed the topology was generated from, if it was generated.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Undirected edges `(i, j, w)` with `i < j` and `w > 0`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.weights[(i, j)];
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// Breadth-first reachability over nonzero weights.
    pub fn is_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if !seen[v] && self.weights[(u, v)] > 0.0 {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    /// `L = D − A` with `D` the weighted degree matrix.
    pub fn laplacian(&self) -> Result<DMatrix<f64>> {
        if !self.is_connected() {
            return Err(Error::Connectivity);
        }
        let n = self.n();
        let mut l = -self.weights.clone();
        for i in 0..n {
            l[(i, i)] = self.weights.row(i).sum();
        }
        Ok(l)
    }

    /// Text edge list: a `n <count>` header, then one `i j w` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.n());
        for (i, j, w) in self.edges() {
            // 17 significant digits round-trips every f64 exactly.
            let _ = writeln!(out, "{i} {j} {w:.16e}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let n = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["n", count] => count
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad vertex count {count:?}: {e}")))?,
            _ => {
                return Err(Error::Parse(format!(
                    "expected `n <count>` header, got {header:?}"
                )))
            }
        };
        let mut edges = Vec::new();
        for line in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [i, j, w] = fields.as_slice() else {
                return Err(Error::Parse(format!("expected `i j w`, got {line:?}")));
            };
            let parse_idx = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad vertex index {s:?}: {e}")))
            };
            let w = w
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad weight {w:?}: {e}")))?;
            edges.push((parse_idx(i)?, parse_idx(j)?, w));
        }
        Self::from_edges(n, &edges)
    }
}

/// Generates a connected topology. Random models redraw until connected,
/// up to a fixed number of attempts.
pub fn generate_topology(n: usize, model: TopologyModel, seed: u64) -> Result<GraphTopology> {
    if n < 2 {
        return Err(Error::Generation(format!(
            "need at least 2 vertices, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = match model {
        TopologyModel::Ring => {
            let mut w = DMatrix::zeros(n, n);
            for i in 0..n {
                let j = (i + 1) % n;
                w[(i, j)] = 1.0;
                w[(j, i)] = 1.0;
            }
            w
        }
        TopologyModel::ErdosRenyi { p } => {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Generation(format!(
                    "edge probability {p} outside (0, 1]"
                )));
            }
            retry_until_connected(n, &mut rng, |rng, w| {
                for i in 0..n {
                    for j in (i + 1)..n {
                        if rng.random::<f64>() < p {
                            let wij = rng.random_range(0.5..1.5);
                            w[(i, j)] = wij;
                            w[(j, i)] = wij;
                        }
                    }
                }
            })?
        }
        TopologyModel::RandomGeometric { radius } => {
            if !(radius > 0.0) {
                return Err(Error::Generation(format!(
                    "radius {radius} must be positive"
                )));
            }
            retry_until_connected(n, &mut rng, |rng, w| {
                let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
                for i in 0..n {
                    for j in (i + 1)..n {
                        let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
                        if dx.hypot(dy) <= radius {
                            let wij = rng.random_range(0.5..1.5);
                            w[(i, j)] = wij;
                            w[(j, i)] = wij;
                        }
                    }
                }
            })?
        }
    };
    let mut topo = GraphTopology::from_weights(weights)?;
    topo.seed = Some(seed);
    Ok(topo)
}

fn retry_until_connected(
    n: usize,
    rng: &mut ChaCha8Rng,
    mut draw: impl FnMut(&mut ChaCha8Rng, &mut DMatrix<f64>),
) -> Result<DMatrix<f64>> {
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let mut w = DMatrix::zeros(n, n);
        draw(rng, &mut w);
        let candidate = GraphTopology {
            weights: w,
            seed: None,
        };
        if candidate.is_connected() {
            return Ok(candidate.weights);
        }
    }
    Err(Error::Generation(format!(
        "no connected graph after {MAX_GENERATION_ATTEMPTS} attempts"
    )))
}

/// Orthonormal Laplacian eigenbasis `L = V·diag(Δ)·Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GftBasis {
    v: DMatrix<f64>,
    delta: DVector<f64>,
}

impl GftBasis {
    /// Identity basis: the GFT becomes a no-op. Used by the non-graph filters.
    pub fn identity(n: usize) -> Self {
        Self {
            v: DMatrix::identity(n, n),
            delta: DVector::zeros(n),
        }
    }

    pub fn from_topology(topology: &GraphTopology) -> Result<Self> {
        eigendecompose(&topology.laplacian()?)
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    /// Eigenvectors, one per column.
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// Eigenvalues (graph frequencies), ascending.
    pub fn delta(&self) -> &DVector<f64> {
        &self.delta
    }

    /// `Vᵀ·x`.
    pub fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        self.v.tr_mul(x)
    }

    /// `V·x̂`.
    pub fn inverse(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.v * x
    }
}

/// Symmetric eigendecomposition with ascending eigenvalues and each
/// eigenvector's first nonzero component made positive.
pub fn eigendecompose(laplacian: &DMatrix<f64>) -> Result<GftBasis> {
    check_shape(laplacian.is_square(), || {
        format!(
            "expected square matrix, got {}x{}",
            laplacian.nrows(),
            laplacian.ncols()
        )
    })?;
    let scale = laplacian.amax().max(1.0);
    if (laplacian - laplacian.transpose()).amax() > SYMMETRY_TOL * scale {
        return Err(Error::Shape("matrix is not symmetric".into()));
    }
    let n = laplacian.nrows();
    let eig = SymmetricEigen::new(laplacian.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut v = DMatrix::zeros(n, n);
    let mut delta = DVector::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let pivot = col.iter().copied().find(|c| c.abs() > 1e-12).unwrap_or(1.0);
        if pivot < 0.0 {
            col.neg_mut();
        }
        v.set_column(dst, &col);
        delta[dst] = eig.eigenvalues[src];
    }
    Ok(GftBasis { v, delta })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalDomain {
    Vertex,
    Spectral,
}

impl SignalDomain {
    fn name(self) -> &'static str {
        match self {
            SignalDomain::Vertex => "vertex",
            SignalDomain::Spectral => "spectral",
        }
    }
}

/// One scalar per vertex, tagged with the domain it currently lives in.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSignal {
    pub values: DVector<f64>,
    pub domain: SignalDomain,
}

impl GraphSignal {
    pub fn vertex(values: DVector<f64>) -> Self {
        Self {
            values,
            domain: SignalDomain::Vertex,
        }
    }

    pub fn spectral(values: DVector<f64>) -> Self {
        Self {
            values,
            domain: SignalDomain::Spectral,
        }
    }
}

fn expect_domain(signal: &GraphSignal, expected: SignalDomain, basis: &GftBasis) -> Result<()> {
    if signal.domain != expected {
        return Err(Error::Domain {
            expected: expected.name(),
            found: signal.domain.name(),
        });
    }
    check_shape(signal.values.len() == basis.n(), || {
        format!(
            "signal length {} vs {} vertices",
            signal.values.len(),
            basis.n()
        )
    })
}

pub fn gft(signal: &GraphSignal, basis: &GftBasis) -> Result<GraphSignal> {
    expect_domain(signal, SignalDomain::Vertex, basis)?;
    Ok(GraphSignal::spectral(basis.forward(&signal.values)))
}

pub fn igft(signal: &GraphSignal, basis: &GftBasis) -> Result<GraphSignal> {
    expect_domain(signal, SignalDomain::Spectral, basis)?;
    Ok(GraphSignal::vertex(basis.inverse(&signal.values)))
}

/// `Vᵀ·M·V`.
pub fn gft_matrix(m: &DMatrix<f64>, basis: &GftBasis) -> Result<DMatrix<f64>> {
    let n = basis.n();
    check_shape(m.nrows() == n && m.ncols() == n, || {
        format!("expected {n}x{n} matrix, got {}x{}", m.nrows(), m.ncols())
    })?;
    Ok(basis.v.tr_mul(m) * &basis.v)
}

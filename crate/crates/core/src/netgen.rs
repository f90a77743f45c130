//! Network sampling: stochastic block model and latent-space graphs, plus
//! the graph queries the rest of the library is built on.
//!
//! Graphs are immutable once constructed and store sparse neighbor lists;
//! at the target scales (n up to a few thousand, mean degree in the single
//! digits) a dense adjacency matrix would dominate both memory and the
//! optimizer inner loops.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::scalar::Scalar;

/// Per-node binary treatment assignment; `z[i]` is node `i`'s treatment.
pub type TreatmentVector = Vec<bool>;

/// Number of treated nodes in a treatment vector.
pub fn treated_count(z: &[bool]) -> usize {
    z.iter().filter(|&&b| b).count()
}

/// One round's sampled network: undirected simple graph plus group labels.
///
/// Group labels are 0-based indices into the direct-effect table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
    groups: Vec<usize>,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Edges may appear in
    /// either orientation; self-loops and duplicates are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], groups: Vec<usize>) -> Result<Graph> {
        if groups.len() != n {
            return Err(Error::Contract(format!(
                "group labels have length {}, expected {n}",
                groups.len()
            )));
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Contract(format!("edge ({i}, {j}) out of range")));
            }
            if i == j {
                return Err(Error::Contract(format!("self-loop at node {i}")));
            }
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for (i, adj) in neighbors.iter_mut().enumerate() {
            adj.sort_unstable();
            if adj.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Contract(format!("duplicate edge at node {i}")));
            }
        }
        Ok(Graph { neighbors, groups })
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn group_of(&self, i: usize) -> usize {
        self.groups[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// All edges with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, adj)| adj.iter().filter(move |&&j| i < j).map(move |&j| (i, j)))
    }

    /// Returns the same graph with replacement group labels. Reward
    /// heterogeneity on latent-space graphs is driven through this hook.
    pub fn with_groups(mut self, groups: Vec<usize>) -> Result<Graph> {
        if groups.len() != self.n() {
            return Err(Error::Contract(format!(
                "group labels have length {}, expected {}",
                groups.len(),
                self.n()
            )));
        }
        self.groups = groups;
        Ok(self)
    }

    /// FNV-1a hash of the edge set and labels; used by the harness to
    /// verify that each round really drew a fresh network.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |v: u64| {
            h ^= v;
            h = h.wrapping_mul(0x100000001b3);
        };
        eat(self.n() as u64);
        for (i, adj) in self.neighbors.iter().enumerate() {
            for &j in adj {
                if i < j {
                    eat((i as u64) << 32 | j as u64);
                }
            }
        }
        for &g in &self.groups {
            eat(g as u64 | 1 << 63);
        }
        h
    }
}

/// Stochastic block model: group membership probabilities `p` and the
/// symmetric between-group edge probability matrix `w`.
#[derive(Debug, Clone)]
pub struct SbmParams<S> {
    membership: Vec<S>,
    edge_prob: Vec<Vec<S>>,
}

impl<S: Scalar> SbmParams<S> {
    pub fn new(membership: Vec<S>, edge_prob: Vec<Vec<S>>) -> Result<Self> {
        let k = membership.len();
        if k == 0 {
            return Err(Error::Config("SBM needs at least one group".into()));
        }
        let total: S = membership.iter().copied().sum();
        if membership.iter().any(|&p| p < S::zero() || !p.is_finite()) {
            return Err(Error::Config("membership probabilities must be >= 0".into()));
        }
        if (total - S::one()).abs() > S::from_f64_lossy(1e-9) {
            return Err(Error::Config(format!(
                "membership probabilities sum to {total}, expected 1"
            )));
        }
        if edge_prob.len() != k || edge_prob.iter().any(|r| r.len() != k) {
            return Err(Error::Config("edge probability matrix must be k x k".into()));
        }
        for (i, row) in edge_prob.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if w < S::zero() || w > S::one() || !w.is_finite() {
                    return Err(Error::Config(format!(
                        "edge probability [{i}][{j}] = {w} outside [0, 1]"
                    )));
                }
                if (w - edge_prob[j][i]).abs() > S::from_f64_lossy(1e-12) {
                    return Err(Error::Config("edge probability matrix must be symmetric".into()));
                }
            }
        }
        Ok(Self {
            membership,
            edge_prob,
        })
    }

    /// Uniform membership over `k` groups with one within-group and one
    /// across-group edge probability. This is the simulation protocol's
    /// standard parameterization.
    pub fn two_level(k: usize, within: S, across: S) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("SBM needs at least one group".into()));
        }
        let p = vec![S::one() / S::from_usize_lossy(k); k];
        let w = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| if i == j { within } else { across })
                    .collect()
            })
            .collect();
        Self::new(p, w)
    }

    pub fn k(&self) -> usize {
        self.membership.len()
    }

    pub fn membership(&self) -> &[S] {
        &self.membership
    }

    pub fn edge_prob(&self, a: usize, b: usize) -> S {
        self.edge_prob[a][b]
    }

    /// Expected degree of a node: `(n - 1) * p^T W p`.
    pub fn expected_degree(&self, n: usize) -> S {
        let k = self.k();
        let mut acc = S::zero();
        for a in 0..k {
            for b in 0..k {
                acc += self.membership[a] * self.membership[b] * self.edge_prob[a][b];
            }
        }
        S::from_usize_lossy(n.saturating_sub(1)) * acc
    }
}

/// Latent-space network model with log-odds
/// `alpha + u_i . u_j + (a_i + b_i + a_j + b_j) / 2`.
///
/// The paper-style sender/receiver effects are directed; averaging the two
/// orientations keeps the additive structure while making the probability
/// symmetric in `i` and `j`.
#[derive(Debug, Clone)]
pub struct LatentSpaceParams<S> {
    pub alpha: S,
    pub latent_dim: usize,
    pub u_scale: S,
    pub a_scale: S,
    pub b_scale: S,
}

impl<S: Scalar> LatentSpaceParams<S> {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 {
            return Err(Error::Config("latent_dim must be >= 1".into()));
        }
        for (name, v) in [
            ("u_scale", self.u_scale),
            ("a_scale", self.a_scale),
            ("b_scale", self.b_scale),
        ] {
            if v < S::zero() || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !self.alpha.is_finite() {
            return Err(Error::Config("alpha must be finite".into()));
        }
        Ok(())
    }

    /// Edge probability given the two endpoints' latent draws.
    pub fn edge_probability(&self, u_i: &[S], u_j: &[S], ab_i: S, ab_j: S) -> S {
        let half = S::from_f64_lossy(0.5);
        sigmoid(self.alpha + dot(u_i, u_j) + (ab_i + ab_j) * half)
    }
}

pub fn sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

/// Samples an SBM graph: labels i.i.d. from `p`, then each unordered pair
/// `{i, j}` is an edge independently with probability `W[g_i][g_j]`.
///
/// Draw order (labels first, then pairs in lexicographic order) is part of
/// the determinism contract: the same seed yields a bit-identical graph.
pub fn sample_sbm<S: Scalar, R: Rng + ?Sized>(
    params: &SbmParams<S>,
    n: usize,
    rng: &mut R,
) -> Result<Graph> {
    if n == 0 {
        return Err(Error::Config("graph size must be >= 1".into()));
    }
    let groups: Vec<usize> = (0..n).map(|_| sample_categorical(params.membership(), rng)).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let w = params.edge_prob(groups[i], groups[j]);
            if S::uniform01(rng) < w {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges, groups)
}

/// Samples a latent-space graph. All nodes get group label 0; callers that
/// want reward heterogeneity supply labels via [`Graph::with_groups`].
pub fn sample_latent_space<S: Scalar, R: Rng + ?Sized>(
    params: &LatentSpaceParams<S>,
    n: usize,
    rng: &mut R,
) -> Result<Graph> {
    params.validate()?;
    if n == 0 {
        return Err(Error::Config("graph size must be >= 1".into()));
    }
    let mut positions = Vec::with_capacity(n);
    let mut additive = Vec::with_capacity(n);
    for _ in 0..n {
        let u: Vec<S> = (0..params.latent_dim)
            .map(|_| S::standard_normal(rng) * params.u_scale)
            .collect();
        let a = S::standard_normal(rng) * params.a_scale;
        let b = S::standard_normal(rng) * params.b_scale;
        positions.push(u);
        additive.push(a + b);
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = params.edge_probability(&positions[i], &positions[j], additive[i], additive[j]);
            if S::uniform01(rng) < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges, vec![0; n])
}

fn sample_categorical<S: Scalar, R: Rng + ?Sized>(p: &[S], rng: &mut R) -> usize {
    let u = S::uniform01(rng);
    let mut acc = S::zero();
    for (idx, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return idx;
        }
    }
    p.len() - 1
}

/// Number of treated neighbors of each node: entry `i` is
/// `sum_j A[i][j] * z[j]`. A node's own treatment is excluded.
pub fn treated_neighbor_counts(g: &Graph, z: &[bool]) -> Result<Vec<usize>> {
    if z.len() != g.n() {
        return Err(Error::Contract(format!(
            "treatment vector has length {}, expected {}",
            z.len(),
            g.n()
        )));
    }
    Ok((0..g.n())
        .map(|i| g.neighbors(i).iter().filter(|&&j| z[j]).count())
        .collect())
}

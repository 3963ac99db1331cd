//! First-order reaction networks.
//!
//! A network is a directed weighted graph on the species `S_1..S_N`: the rate
//! `k_ij` (stored at row `i`, column `j`) is the rate constant of the reaction
//! `S_j -> S_i`, so a positive entry is an edge `j -> i`. The first `n_light`
//! species move with Maxwellian velocities of variance `theta_i`; the rest are
//! nonmoving.
//!
//! Species indices are 0-based in the API and 1-based in every human-facing
//! message and file.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative threshold below which a singular value of the reaction matrix
/// counts as zero.
const RANK_TOLERANCE: f64 = 1e-10;

/// Largest network for which every minimal path is enumerated.
pub const EXHAUSTIVE_PATH_LIMIT: usize = 8;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("a network needs at least two species, got {0}")]
    TooFewSpecies(usize),
    #[error("rate matrix row {row} has {len} entries, expected {expected}")]
    RaggedRates { row: usize, len: usize, expected: usize },
    #[error("rate matrix has {rows} rows, expected {expected}")]
    RateRows { rows: usize, expected: usize },
    #[error("theta has {len} entries, expected {expected}")]
    ThetaLength { len: usize, expected: usize },
    #[error("n_light = {n_light} exceeds n_species = {n_species}")]
    TooManyLight { n_light: usize, n_species: usize },
    #[error("negative rate k[{i}][{j}] = {value}")]
    NegativeRate { i: usize, j: usize, value: f64 },
    #[error("non-finite rate k[{i}][{j}]")]
    NonFiniteRate { i: usize, j: usize },
    #[error("light species S{0} has no theta value")]
    MissingTheta(usize),
    #[error("network is not admissible: {0}")]
    Invalid(ValidationVerdict),
    #[error("reaction matrix has a nullspace of dimension > 1 (smallest singular values {smallest:e}, {second:e})")]
    Degenerate { smallest: f64, second: f64 },
    #[error("equilibrium vector has a non-positive entry at S{0}")]
    NonPositiveEquilibrium(usize),
    #[error("exhaustive path search supports at most {EXHAUSTIVE_PATH_LIMIT} species, got {0}")]
    TooLargeForExhaustive(usize),
    #[error("cannot read network file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed network file: {0}")]
    Parse(#[from] serde_json::Error),
}

/// A single reason why a network fails the admissibility conditions.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoLightSpecies,
    /// The undirected reaction graph has more than one component.
    NotConnected,
    /// Connected, but some reaction cannot be reversed along a path.
    NotWeaklyReversible,
    NoOutgoing(usize),
    NoIncoming(usize),
    ThetaBelowOne {
        species: usize,
        theta: f64,
    },
    ReferenceThetaNotOne {
        theta: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoLightSpecies => write!(f, "no light (moving) species"),
            Violation::NotConnected => write!(f, "not connected"),
            Violation::NotWeaklyReversible => write!(f, "not weakly reversible"),
            Violation::NoOutgoing(i) => write!(f, "S{} has no outgoing reaction", i + 1),
            Violation::NoIncoming(i) => write!(f, "S{} has no incoming reaction", i + 1),
            Violation::ThetaBelowOne { species, theta } => {
                write!(f, "theta of light species S{} is {theta} < 1", species + 1)
            }
            Violation::ReferenceThetaNotOne { theta } => {
                write!(f, "theta of the heaviest light species is {theta}, expected 1")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationVerdict {
    pub violations: Vec<Violation>,
}

impl ValidationVerdict {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (n, v) in self.violations.iter().enumerate() {
            if n > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// On-disk form of a network.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub n_species: usize,
    pub n_light: usize,
    /// Row-major, `rates[i][j] = k_ij`.
    pub rates: Vec<Vec<f64>>,
    /// One entry per species; heavy entries may be null.
    pub theta: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReactionNetwork {
    n_light: usize,
    rates: DMatrix<f64>,
    theta: Vec<f64>,
}

impl ReactionNetwork {
    /// Builds a network from a row-major rate matrix and the thetas of the
    /// light species. Self-rates are dropped.
    pub fn new(n_light: usize, rates: Vec<Vec<f64>>, theta_light: Vec<f64>) -> Result<Self, NetworkError> {
        let n = rates.len();
        if n < 2 {
            return Err(NetworkError::TooFewSpecies(n));
        }
        if n_light > n {
            return Err(NetworkError::TooManyLight { n_light, n_species: n });
        }
        if theta_light.len() != n_light {
            return Err(NetworkError::ThetaLength { len: theta_light.len(), expected: n_light });
        }
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in rates.iter().enumerate() {
            if row.len() != n {
                return Err(NetworkError::RaggedRates { row: i, len: row.len(), expected: n });
            }
            for (j, &k) in row.iter().enumerate() {
                if !k.is_finite() {
                    return Err(NetworkError::NonFiniteRate { i, j });
                }
                if k < 0.0 {
                    return Err(NetworkError::NegativeRate { i, j, value: k });
                }
                if i != j {
                    m[(i, j)] = k;
                }
            }
        }
        Ok(Self { n_light, rates: m, theta: theta_light })
    }

    pub fn from_file_repr(file: NetworkFile) -> Result<Self, NetworkError> {
        if file.rates.len() != file.n_species {
            return Err(NetworkError::RateRows { rows: file.rates.len(), expected: file.n_species });
        }
        if file.theta.len() != file.n_species {
            return Err(NetworkError::ThetaLength { len: file.theta.len(), expected: file.n_species });
        }
        if file.n_light > file.n_species {
            return Err(NetworkError::TooManyLight { n_light: file.n_light, n_species: file.n_species });
        }
        let theta = file.theta[..file.n_light]
            .iter()
            .enumerate()
            .map(|(i, t)| t.ok_or(NetworkError::MissingTheta(i + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(file.n_light, file.rates, theta)
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        Self::from_file_repr(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetworkError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_file_repr(&self) -> NetworkFile {
        let n = self.n_species();
        NetworkFile {
            n_species: n,
            n_light: self.n_light,
            rates: (0..n).map(|i| (0..n).map(|j| self.rates[(i, j)]).collect()).collect(),
            theta: (0..n).map(|i| self.theta.get(i).copied()).collect(),
        }
    }

    pub fn n_species(&self) -> usize {
        self.rates.nrows()
    }

    pub fn n_light(&self) -> usize {
        self.n_light
    }

    pub fn n_heavy(&self) -> usize {
        self.n_species() - self.n_light
    }

    pub fn is_light(&self, i: usize) -> bool {
        i < self.n_light
    }

    /// `k_ij`, the rate of `S_j -> S_i`.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[(i, j)]
    }

    pub fn rates(&self) -> &DMatrix<f64> {
        &self.rates
    }

    /// Velocity variances of the light species.
    pub fn thetas(&self) -> &[f64] {
        &self.theta
    }

    /// Total outflow rate `K_i = sum_j k_ji`.
    pub fn outflow(&self, i: usize) -> f64 {
        self.rates.column(i).sum()
    }

    /// Same network with every rate multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { rates: &self.rates * c, ..self.clone() }
    }

    /// Relabels species: new species `s` is old species `perm[s]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n_species();
        let rates = DMatrix::from_fn(n, n, |i, j| self.rates[(perm[i], perm[j])]);
        let theta = (0..self.n_light).map(|s| self.theta[perm[s]]).collect();
        Self { n_light: self.n_light, rates, theta }
    }

    /// `A_ij = k_ij` off the diagonal and `A_ii = -K_i`, so that `rho' = A rho`
    /// is the spatially homogeneous reaction dynamics.
    pub fn reaction_matrix(&self) -> DMatrix<f64> {
        let n = self.n_species();
        let mut a = self.rates.clone();
        for i in 0..n {
            a[(i, i)] = -self.outflow(i);
        }
        a
    }

    /// Successors of `j` (species reachable by one reaction), in increasing order.
    pub fn successors(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_species()).filter(move |&i| self.rates[(i, j)] > 0.0)
    }

    /// Breadth-first search from `source`; returns hop distances and the
    /// first-discovered predecessor of each reached node.
    fn bfs(&self, source: usize) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
        let n = self.n_species();
        let mut dist = vec![None; n];
        let mut parent = vec![None; n];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for w in self.successors(u) {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    parent[w] = Some(u);
                    queue.push_back(w);
                }
            }
        }
        (dist, parent)
    }

    fn undirected_connected(&self) -> bool {
        let n = self.n_species();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for (w, s) in seen.iter_mut().enumerate() {
                if !*s && (self.rates[(w, u)] > 0.0 || self.rates[(u, w)] > 0.0) {
                    *s = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn strongly_connected(&self) -> bool {
        let n = self.n_species();
        (0..n).all(|j| self.bfs(j).0.iter().all(Option::is_some))
    }

    pub fn validate(&self) -> ValidationVerdict {
        let n = self.n_species();
        let mut violations = Vec::new();
        if self.n_light == 0 {
            violations.push(Violation::NoLightSpecies);
        }
        if !self.undirected_connected() {
            violations.push(Violation::NotConnected);
        } else if !self.strongly_connected() {
            violations.push(Violation::NotWeaklyReversible);
        }
        for i in 0..n {
            if self.successors(i).next().is_none() {
                violations.push(Violation::NoOutgoing(i));
            }
            if (0..n).all(|j| self.rates[(i, j)] <= 0.0) {
                violations.push(Violation::NoIncoming(i));
            }
        }
        for (i, &t) in self.theta.iter().enumerate() {
            if t < 1.0 {
                violations.push(Violation::ThetaBelowOne { species: i, theta: t });
            }
        }
        if let Some(&t) = self.theta.last() {
            if t != 1.0 {
                violations.push(Violation::ReferenceThetaNotOne { theta: t });
            }
        }
        ValidationVerdict { violations }
    }

    pub fn ensure_valid(&self) -> Result<(), NetworkError> {
        let verdict = self.validate();
        if verdict.is_ok() {
            Ok(())
        } else {
            Err(NetworkError::Invalid(verdict))
        }
    }
}

pub fn validate_network(net: &ReactionNetwork) -> ValidationVerdict {
    net.validate()
}

/// Complex-balanced equilibrium `eta` and outflow rates `K`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumProfile {
    pub eta: Vec<f64>,
    #[serde(rename = "K")]
    pub outflow: Vec<f64>,
}

impl EquilibriumProfile {
    /// `max_i |sum_j (k_ij eta_j - k_ji eta_i)|`.
    pub fn residual(&self, net: &ReactionNetwork) -> f64 {
        let eta = DVector::from_column_slice(&self.eta);
        (net.reaction_matrix() * eta).amax()
    }
}

/// The normalized positive nullspace vector of the reaction matrix, taken as
/// the right singular vector of its smallest singular value.
pub fn compute_equilibrium(net: &ReactionNetwork) -> Result<EquilibriumProfile, NetworkError> {
    net.ensure_valid()?;
    let n = net.n_species();
    let svd = net.reaction_matrix().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sv[a].total_cmp(&sv[b]));
    let (smallest, second) = (sv[order[0]], sv[order[1]]);
    let largest = sv[order[n - 1]];
    if second <= RANK_TOLERANCE * largest {
        return Err(NetworkError::Degenerate { smallest, second });
    }
    let mut eta: Vec<f64> = v_t.row(order[0]).iter().copied().collect();
    let total: f64 = eta.iter().sum();
    for e in &mut eta {
        *e /= total;
    }
    if let Some(i) = eta.iter().position(|&e| e <= 0.0) {
        return Err(NetworkError::NonPositiveEquilibrium(i));
    }
    let outflow = (0..n).map(|i| net.outflow(i)).collect();
    Ok(EquilibriumProfile { eta, outflow })
}

/// A reaction path `from = nodes[0] -> ... -> nodes[P] = to`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReactionPath {
    pub nodes: Vec<usize>,
    /// Bottleneck `min_p k_{i_p i_{p-1}} eta_{i_{p-1}}`.
    pub mu: f64,
}

impl ReactionPath {
    fn new(nodes: Vec<usize>, net: &ReactionNetwork, eta: &[f64]) -> Self {
        let mu = bottleneck(&nodes, net, eta);
        Self { nodes, mu }
    }

    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 1
    }
}

fn bottleneck(nodes: &[usize], net: &ReactionNetwork, eta: &[f64]) -> f64 {
    nodes.windows(2).map(|hop| net.rate(hop[1], hop[0]) * eta[hop[0]]).fold(f64::INFINITY, f64::min)
}

/// How a minimal path is chosen when several exist.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathSelection {
    /// Lexicographically smallest minimal path (BFS, neighbours by index).
    #[default]
    Lexicographic,
    /// Among all minimal paths, the one with the largest bottleneck.
    MaxBottleneck,
}

/// Minimal reaction paths for every ordered pair of distinct species, plus a
/// shortest reaction cycle through every species.
#[derive(Clone, Debug, PartialEq)]
pub struct PathTable {
    n: usize,
    /// Indexed `[to * n + from]`; `None` on the diagonal.
    paths: Vec<Option<ReactionPath>>,
    cycles: Vec<ReactionPath>,
}

impl PathTable {
    pub fn n_species(&self) -> usize {
        self.n
    }

    /// Chosen minimal path from `from` to `to`.
    pub fn path(&self, to: usize, from: usize) -> Option<&ReactionPath> {
        self.paths[to * self.n + from].as_ref()
    }

    /// `P_ij`: length of the minimal path `j -> i` (0 on the diagonal).
    pub fn length(&self, i: usize, j: usize) -> usize {
        self.path(i, j).map_or(0, ReactionPath::len)
    }

    /// `mu_ij`; infinite on the diagonal.
    pub fn mu(&self, i: usize, j: usize) -> f64 {
        self.path(i, j).map_or(f64::INFINITY, |p| p.mu)
    }

    /// Shortest reaction cycle starting and ending at `i`.
    pub fn cycle(&self, i: usize) -> &ReactionPath {
        &self.cycles[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &ReactionPath)> {
        let n = self.n;
        self.paths.iter().enumerate().filter_map(move |(k, p)| p.as_ref().map(|p| (k / n, k % n, p)))
    }
}

pub fn shortest_paths(net: &ReactionNetwork, eq: &EquilibriumProfile) -> Result<PathTable, NetworkError> {
    shortest_paths_with(net, eq, PathSelection::Lexicographic)
}

pub fn shortest_paths_with(
    net: &ReactionNetwork,
    eq: &EquilibriumProfile,
    selection: PathSelection,
) -> Result<PathTable, NetworkError> {
    net.ensure_valid()?;
    let n = net.n_species();
    if selection == PathSelection::MaxBottleneck && n > EXHAUSTIVE_PATH_LIMIT {
        return Err(NetworkError::TooLargeForExhaustive(n));
    }
    let eta = &eq.eta;
    let mut paths = vec![None; n * n];
    let mut cycles = Vec::with_capacity(n);
    for from in 0..n {
        let (dist, parent) = net.bfs(from);
        for to in (0..n).filter(|&to| to != from) {
            let nodes = match selection {
                PathSelection::Lexicographic => trace_back(&parent, from, to),
                PathSelection::MaxBottleneck => best_bottleneck_path(net, eta, &dist, from, to),
            };
            paths[to * n + from] = Some(ReactionPath::new(nodes, net, eta));
        }
        // Shortest cycle: close a minimal path from..u with the edge u -> from.
        let closing = (0..n)
            .filter(|&u| u != from && net.rate(from, u) > 0.0)
            .min_by_key(|&u| (dist[u].unwrap_or(usize::MAX), u))
            .expect("validated network has incoming reactions");
        let mut nodes = trace_back(&parent, from, closing);
        nodes.push(from);
        cycles.push(ReactionPath::new(nodes, net, eta));
    }
    Ok(PathTable { n, paths, cycles })
}

fn trace_back(parent: &[Option<usize>], from: usize, to: usize) -> Vec<usize> {
    let mut nodes = vec![to];
    let mut cur = to;
    while cur != from {
        cur = parent[cur].expect("strongly connected network");
        nodes.push(cur);
    }
    nodes.reverse();
    nodes
}

/// Depth-first enumeration of all minimal paths along BFS layers; keeps the
/// first path (in lexicographic order) with the largest bottleneck.
fn best_bottleneck_path(
    net: &ReactionNetwork,
    eta: &[f64],
    dist: &[Option<usize>],
    from: usize,
    to: usize,
) -> Vec<usize> {
    struct Search<'a> {
        net: &'a ReactionNetwork,
        eta: &'a [f64],
        dist: &'a [Option<usize>],
        target: usize,
        best: Option<(f64, Vec<usize>)>,
    }
    impl Search<'_> {
        fn visit(&mut self, stack: &mut Vec<usize>, mu: f64) {
            let u = *stack.last().unwrap();
            if u == self.target {
                if self.best.as_ref().is_none_or(|(b, _)| mu > *b) {
                    self.best = Some((mu, stack.clone()));
                }
                return;
            }
            let next_layer = self.dist[u].map(|d| d + 1);
            let succ: Vec<usize> = self.net.successors(u).collect();
            for w in succ {
                if self.dist[w] == next_layer && self.dist[w] <= self.dist[self.target] {
                    stack.push(w);
                    self.visit(stack, mu.min(self.net.rate(w, u) * self.eta[u]));
                    stack.pop();
                }
            }
        }
    }
    let mut search = Search { net, eta, dist, target: to, best: None };
    search.visit(&mut vec![from], f64::INFINITY);
    search.best.expect("strongly connected network").1
}

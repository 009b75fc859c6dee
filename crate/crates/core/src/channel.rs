//! Packet-loss processes and their sampling.
//!
//! State conventions: for the i.i.d. and two-state channels, state `0`
//! means the packet was lost and state `1` that it arrived. The two-state
//! transition matrix is `[[1-q, q], [p, 1-p]]` in that order, so `p` is the
//! failure rate (arrived → lost) and `q` the recovery rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::rng::SimRng;

const STOCHASTIC_TOL: f64 = 1e-12;

/// Distribution of the i.i.d. link gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IidKind {
    /// Gain 1 with probability `1-p`, else 0.
    Bernoulli,
    /// Gain `mu ± sqrt(sigma2)` with probability 1/2 each.
    TwoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IidChannel {
    pub p: f64,
    pub mu: f64,
    pub sigma2: f64,
    pub kind: IidKind,
}

impl IidChannel {
    /// Bernoulli losses with loss rate `p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidChannel(format!("loss rate {p} outside [0, 1]")));
        }
        Ok(Self {
            p,
            mu: 1.0 - p,
            sigma2: p * (1.0 - p),
            kind: IidKind::Bernoulli,
        })
    }

    /// General fading described by its first two moments.
    pub fn fading(mu: f64, sigma2: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidChannel(format!(
                "fading moments (mu={mu}, sigma2={sigma2}) invalid"
            )));
        }
        if mu == 0.0 && sigma2 == 0.0 {
            return Err(Error::InvalidChannel("fading gain is identically zero".into()));
        }
        Ok(Self {
            p: f64::NAN,
            mu,
            sigma2,
            kind: IidKind::TwoPoint,
        })
    }

    /// μ²/(μ²+σ²); equals 1−p for Bernoulli losses.
    pub fn reliability(&self) -> f64 {
        self.mu * self.mu / (self.mu * self.mu + self.sigma2)
    }

    pub fn gain(&self, state: usize) -> f64 {
        match self.kind {
            IidKind::Bernoulli => state as f64,
            IidKind::TwoPoint => {
                let s = self.sigma2.sqrt();
                if state == 0 {
                    self.mu - s
                } else {
                    self.mu + s
                }
            }
        }
    }
}

/// Gilbert–Elliott style channel shared by every link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoStateChannel {
    pub p: f64,
    pub q: f64,
}

impl TwoStateChannel {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        let mut bad = Vec::new();
        if !(p > 0.0 && p < 1.0) {
            bad.push(format!("failure rate p={p} not in (0,1)"));
        }
        if !(q > 0.0 && q < 1.0) {
            bad.push(format!("recovery rate q={q} not in (0,1)"));
        }
        if !bad.is_empty() {
            return Err(Error::InvalidChannel(bad.join("; ")));
        }
        Ok(Self { p, q })
    }

    pub fn transition(&self) -> Matrix {
        Matrix::from_row_slice(2, 2, &[1.0 - self.q, self.q, self.p, 1.0 - self.p])
    }

    /// (P[lost], P[arrived]) = (p/(p+q), q/(p+q)).
    pub fn stationary(&self) -> [f64; 2] {
        let s = self.p + self.q;
        [self.p / s, self.q / s]
    }

    /// The same process seen as a per-edge channel on `l` edges whose
    /// losses always coincide.
    pub fn as_edge_channel(&self, l: usize) -> Result<EdgeChannel> {
        EdgeChannel::new(l, vec![vec![0; l], vec![1; l]], self.transition())
    }
}

pub fn make_two_state_channel(p: f64, q: f64) -> Result<TwoStateChannel> {
    TwoStateChannel::new(p, q)
}

pub fn make_edge_channel(l: usize, states: Vec<Vec<u8>>, transition: Matrix) -> Result<EdgeChannel> {
    EdgeChannel::new(l, states, transition)
}

/// Joint Markov loss process over the `l` edges of a graph.
///
/// Each state is the diagonal of a 0/1 matrix Γ_i listing which edges
/// deliver (1) or drop (0), in the graph's input edge order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeChannel {
    l: usize,
    states: Vec<Vec<u8>>,
    #[serde(with = "linalg::serde_rows")]
    transition: Matrix,
}

impl EdgeChannel {
    pub fn new(l: usize, states: Vec<Vec<u8>>, transition: Matrix) -> Result<Self> {
        let o = states.len();
        let mut bad = Vec::new();
        if l == 0 {
            bad.push("edge count must be positive".to_string());
        }
        if o == 0 {
            bad.push("at least one state is required".to_string());
        }
        for (i, s) in states.iter().enumerate() {
            if s.len() != l {
                bad.push(format!("state {} has {} entries, expected {l}", i + 1, s.len()));
            }
            if s.iter().any(|&v| v > 1) {
                bad.push(format!("state {} has a non-binary diagonal entry", i + 1));
            }
            if let Some(j) = states[..i].iter().position(|t| t == s) {
                bad.push(format!("state {} duplicates state {}", i + 1, j + 1));
            }
        }
        if transition.shape() != (o, o) {
            bad.push(format!(
                "transition matrix is {}x{}, expected {o}x{o}",
                transition.nrows(),
                transition.ncols()
            ));
        } else {
            for i in 0..o {
                let row = transition.row(i);
                if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                    bad.push(format!("row {} has a negative or non-finite entry", i + 1));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    bad.push(format!("row {} sums to {sum}, not 1", i + 1));
                }
            }
        }
        if !bad.is_empty() {
            return Err(Error::InvalidChannel(bad.join("; ")));
        }
        Ok(Self {
            l,
            states,
            transition,
        })
    }

    /// Builds a channel from binary-expansion indices: state index `i`
    /// denotes Γ = diag(η_1..η_l) with `i = Σ_j η_j 2^(j-1)`.
    pub fn from_indices(l: usize, indices: &[usize], transition: Matrix) -> Result<Self> {
        let states = indices.iter().map(|&i| expansion_state(l, i)).collect();
        Self::new(l, states, transition)
    }

    pub fn n_edges(&self) -> usize {
        self.l
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Vec<u8>] {
        &self.states
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    /// Position of state `i` in the full sample space of 2^l outcomes.
    pub fn expansion_index(&self, i: usize) -> usize {
        self.states[i]
            .iter()
            .enumerate()
            .map(|(j, &eta)| (eta as usize) << j)
            .sum()
    }

    /// Γ_i as a diagonal matrix (input edge order).
    pub fn gamma(&self, i: usize) -> Matrix {
        Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.l,
            self.states[i].iter().map(|&v| v as f64),
        ))
    }

    pub fn stationary(&self) -> Vec<f64> {
        stationary_distribution(&self.transition)
    }
}

/// diag entries of Λ_index in a space of `l` edges.
pub fn expansion_state(l: usize, index: usize) -> Vec<u8> {
    (0..l).map(|j| ((index >> j) & 1) as u8).collect()
}

/// Stationary distribution π with πQ = π, Σπ = 1. Solved directly; for a
/// reducible chain with several closed classes the Cesàro average of the
/// uniform start is returned instead.
pub fn stationary_distribution(q: &Matrix) -> Vec<f64> {
    let o = q.nrows();
    if o == 1 {
        return vec![1.0];
    }
    let mut a = q.transpose() - Matrix::identity(o, o);
    for j in 0..o {
        a[(o - 1, j)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::zeros(o);
    rhs[o - 1] = 1.0;
    if let Some(pi) = a.clone().lu().solve(&rhs) {
        if pi.iter().all(|&v| v > -1e-12) && (&pi.transpose() * q - pi.transpose()).norm() < 1e-10 {
            return pi.iter().map(|v| v.max(0.0)).collect();
        }
    }
    let mut dist = nalgebra::RowDVector::from_element(o, 1.0 / o as f64);
    let mut avg = nalgebra::RowDVector::zeros(o);
    let steps = 10_000;
    for _ in 0..steps {
        avg += &dist;
        dist = &dist * q;
    }
    (avg / steps as f64).iter().copied().collect()
}

/// Any of the supported loss processes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ChannelModel {
    Iid(IidChannel),
    Markov2(TwoStateChannel),
    MarkovEdge(EdgeChannel),
}

impl ChannelModel {
    /// Number of distinct states a sampled path can visit.
    pub fn n_states(&self) -> usize {
        match self {
            Self::Iid(_) | Self::Markov2(_) => 2,
            Self::MarkovEdge(e) => e.n_states(),
        }
    }

    pub fn is_identical(&self) -> bool {
        !matches!(self, Self::MarkovEdge(_))
    }

    /// Link gain on `edge` (input order) while the process sits in `state`.
    pub fn edge_gain(&self, state: usize, edge: usize) -> f64 {
        match self {
            Self::Iid(c) => c.gain(state),
            Self::Markov2(_) => state as f64,
            Self::MarkovEdge(e) => e.states[state][edge] as f64,
        }
    }
}

/// How the first channel state of a path is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// Drawn from the stationary distribution.
    #[default]
    Stationary,
    /// Forced to the given state index.
    Fixed(usize),
}

/// A sampled sequence of channel states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossPath {
    pub states: Vec<usize>,
    pub seed: u64,
}

/// Samples `horizon` channel states from the stream seeded by `seed`.
/// i.i.d. draws: state 0 when `u < p` (Bernoulli) or `u < 1/2` (two-point).
/// Markov draws: inverse-CDF on the current transition row; the initial
/// state uses the stationary distribution unless forced.
pub fn sample_path(
    channel: &ChannelModel,
    horizon: usize,
    seed: u64,
    initial: InitialState,
) -> Result<LossPath> {
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    if let InitialState::Fixed(s) = initial {
        if s >= channel.n_states() {
            return Err(Error::InvalidChannel(format!(
                "initial state {s} out of range for {} states",
                channel.n_states()
            )));
        }
    }
    let mut rng = SimRng::new(seed);
    let mut states = Vec::with_capacity(horizon);
    match channel {
        ChannelModel::Iid(c) => {
            let p0 = match c.kind {
                IidKind::Bernoulli => c.p,
                IidKind::TwoPoint => 0.5,
            };
            for t in 0..horizon {
                let s = match (t, initial) {
                    (0, InitialState::Fixed(s)) => s,
                    _ => usize::from(rng.uniform() >= p0),
                };
                states.push(s);
            }
        }
        ChannelModel::Markov2(c) => {
            markov_path(&c.transition(), &c.stationary(), horizon, initial, &mut rng, &mut states)
        }
        ChannelModel::MarkovEdge(e) => {
            markov_path(&e.transition, &e.stationary(), horizon, initial, &mut rng, &mut states)
        }
    }
    Ok(LossPath { states, seed })
}

fn markov_path(
    q: &Matrix,
    pi: &[f64],
    horizon: usize,
    initial: InitialState,
    rng: &mut SimRng,
    out: &mut Vec<usize>,
) {
    let rows: Vec<Vec<f64>> = (0..q.nrows())
        .map(|i| q.row(i).iter().copied().collect())
        .collect();
    let mut s = match initial {
        InitialState::Fixed(s) => s,
        InitialState::Stationary => rng.categorical(pi),
    };
    out.push(s);
    for _ in 1..horizon {
        s = rng.categorical(&rows[s]);
        out.push(s);
    }
}

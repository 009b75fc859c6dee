//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use consensus_kit::channel::{EdgeChannel, TwoStateChannel};
use consensus_kit::graph::{SpectrumSummary, Topology};
use consensus_kit::linalg::Matrix;
use consensus_kit::mjls::{AgentModel, GainMatrix};
use consensus_kit::rng::SimRng;

pub const EXAMPLE_A: [f64; 9] = [
    1.1830, -0.1421, -0.0399, //
    0.1764, 0.8641, -0.0394, //
    0.1419, -0.1098, 0.9689,
];
pub const EXAMPLE_B: [f64; 6] = [
    0.1697, 0.3572, //
    0.5929, 0.5165, //
    0.1355, 0.9659,
];
pub const IDENTICAL_K: [f64; 6] = [
    2.0646, -1.3157, -0.0939, //
    -0.5767, 0.2947, -0.3324,
];
pub const NONIDENTICAL_K: [f64; 6] = [
    1.7394, -1.3873, 0.0771, //
    -0.2133, 0.2212, -0.5269,
];
pub const EDGE_Q: [f64; 9] = [
    0.3811, 0.1446, 0.4743, //
    0.2445, 0.5121, 0.2434, //
    0.5390, 0.0215, 0.4395,
];
pub const DIAMOND_EDGES: [(usize, usize); 4] = [(1, 2), (1, 3), (1, 4), (2, 3)];

pub fn example_model() -> AgentModel {
    AgentModel::new(
        Matrix::from_row_slice(3, 3, &EXAMPLE_A),
        Matrix::from_row_slice(3, 2, &EXAMPLE_B),
    )
    .unwrap()
}

pub fn gain(rows: usize, cols: usize, data: &[f64]) -> GainMatrix {
    GainMatrix::new(Matrix::from_row_slice(rows, cols, data)).unwrap()
}

pub fn diamond() -> Topology {
    Topology::new(4, &DIAMOND_EDGES).unwrap()
}

pub fn example_edge_channel() -> EdgeChannel {
    EdgeChannel::new(
        4,
        vec![vec![1, 0, 1, 0], vec![0, 1, 0, 1], vec![1, 1, 1, 1]],
        Matrix::from_row_slice(3, 3, &EDGE_Q),
    )
    .unwrap()
}

pub fn uniform_matrix(rng: &mut SimRng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.uniform_in(lo, hi))
}

/// Random connected graph: a random spanning tree plus each remaining
/// pair with probability `extra`. Pairs are listed in a random direction.
pub fn connected_graph(rng: &mut SimRng, n: usize, extra: f64) -> Topology {
    let mut edges = Vec::new();
    for v in 2..=n {
        let u = 1 + (rng.uniform() * (v - 1) as f64) as usize;
        edges.push((u, v));
    }
    for u in 1..=n {
        for v in u + 1..=n {
            if !edges.contains(&(u, v)) && !edges.contains(&(v, u)) && rng.uniform() < extra {
                edges.push((u, v));
            }
        }
    }
    for e in edges.iter_mut() {
        if rng.uniform() < 0.5 {
            *e = (e.1, e.0);
        }
    }
    Topology::new(n, &edges).unwrap()
}

/// Random controllable model with entries of `A` in `[-amp, amp]`.
pub fn model(rng: &mut SimRng, n: usize, m: usize, amp: f64) -> AgentModel {
    loop {
        let a = uniform_matrix(rng, n, n, -amp, amp);
        let b = uniform_matrix(rng, n, m, -1.0, 1.0);
        if let Ok(model) = AgentModel::new(a, b) {
            return model;
        }
    }
}

pub fn two_state(rng: &mut SimRng, lo: f64, hi: f64) -> TwoStateChannel {
    TwoStateChannel::new(rng.uniform_in(lo, hi), rng.uniform_in(lo, hi)).unwrap()
}

/// Row-stochastic matrix with every entry at least `floor`.
pub fn stochastic(rng: &mut SimRng, o: usize, floor: f64) -> Matrix {
    let mut q = Matrix::from_fn(o, o, |_, _| rng.uniform_in(0.05, 1.0));
    for i in 0..o {
        let s: f64 = q.row(i).sum();
        for j in 0..o {
            q[(i, j)] = floor + (1.0 - o as f64 * floor) * q[(i, j)] / s;
        }
    }
    q
}

/// Per-edge channel with `o` distinct random states.
pub fn edge_channel(rng: &mut SimRng, l: usize, o: usize) -> EdgeChannel {
    let mut states: Vec<Vec<u8>> = Vec::new();
    while states.len() < o {
        let s: Vec<u8> = (0..l).map(|_| u8::from(rng.uniform() < 0.6)).collect();
        if !states.contains(&s) {
            states.push(s);
        }
    }
    EdgeChannel::new(l, states, stochastic(rng, o, 0.05)).unwrap()
}

pub fn spectrum(l2: f64, ln: f64) -> SpectrumSummary {
    SpectrumSummary::from_extremes(l2, ln).unwrap()
}

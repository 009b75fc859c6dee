//! Seeded Monte Carlo simulation of the consensus error.
//!
//! Every run draws its initial states and its loss path from seeds derived
//! from the scenario seed and the run index, so results do not depend on
//! scheduling. Per-run series are reduced in run-index order with
//! compensated summation.
//!
//! The vertex form evolves `δ = (I − 11'/N ⊗ I) x` with the protocol applied
//! edge by edge; the protocol only acts on differences, so this equals the
//! projection of the simulated `x` without the cancellation error of
//! subtracting a growing average. The edge form evolves the tree-edge
//! states `z_τ` and reconstructs `δ = (E_τ (E_τ'E_τ)⁻¹ ⊗ I) z_τ`.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{sample_path, ChannelModel, InitialState, LossPath};
use crate::error::{Error, Result};
use crate::graph::{EdgeDecomposition, Orientation, Topology, TreeRule};
use crate::linalg::{self, Matrix, Vector};
use crate::mjls::{AgentModel, GainMatrix};
use crate::rng::{derive_seed, SimRng};

/// A run whose error norm exceeds this is frozen and counted as diverged.
pub const OVERFLOW_GUARD: f64 = 1e15;
pub const DEFAULT_HORIZON: usize = 100;
pub const DEFAULT_RUNS: usize = 1000;
pub const DEFAULT_INIT_BOX: (f64, f64) = (0.0, 0.5);

#[derive(Debug, Clone)]
pub struct SimScenario {
    pub model: AgentModel,
    pub topology: Topology,
    pub channel: ChannelModel,
    pub gain: GainMatrix,
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
    /// Every coordinate of every agent starts uniform on this interval.
    pub init_box: (f64, f64),
    pub initial_state: InitialState,
    /// Drop diverged runs from the averages instead of keeping them
    /// saturated.
    pub exclude_diverged: bool,
}

impl SimScenario {
    pub fn new(model: AgentModel, topology: Topology, channel: ChannelModel, gain: GainMatrix) -> Self {
        Self {
            model,
            topology,
            channel,
            gain,
            horizon: DEFAULT_HORIZON,
            runs: DEFAULT_RUNS,
            seed: 0,
            init_box: DEFAULT_INIT_BOX,
            initial_state: InitialState::Stationary,
            exclude_diverged: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.runs == 0 {
            return Err(Error::Precondition("horizon and runs must be at least 1".into()));
        }
        self.gain.check_dims(&self.model)?;
        let (lo, hi) = self.init_box;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Precondition(format!("init box ({lo}, {hi}) must be finite with lo < hi")));
        }
        if let ChannelModel::MarkovEdge(e) = &self.channel {
            if e.n_edges() != self.topology.n_edges() {
                return Err(Error::DimensionMismatch(format!(
                    "channel covers {} edges, topology has {}",
                    e.n_edges(),
                    self.topology.n_edges()
                )));
            }
        }
        Ok(())
    }

    /// Seed of run `run`; its initial states use `derive_seed(s, 0)` and
    /// its loss path `derive_seed(s, 1)`.
    pub fn run_seed(&self, run: usize) -> u64 {
        derive_seed(self.seed, run as u64)
    }

    /// Agent-major initial states of run `run`.
    pub fn initial_states(&self, run: usize) -> Vector {
        let mut rng = SimRng::new(derive_seed(self.run_seed(run), 0));
        let len = self.topology.n_vertices() * self.model.n();
        Vector::from_iterator(len, (0..len).map(|_| rng.uniform_in(self.init_box.0, self.init_box.1)))
    }

    pub fn loss_path(&self, run: usize) -> Result<LossPath> {
        sample_path(
            &self.channel,
            self.horizon,
            derive_seed(self.run_seed(run), 1),
            self.initial_state,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    /// E‖δ(t)‖² for t = 0..=horizon.
    pub mse_total: Vec<f64>,
    /// `mse_per_agent[i][t]` = E‖x_i(t) − x̄(t)‖².
    pub mse_per_agent: Vec<Vec<f64>>,
    /// E‖z_τ(t)‖², edge form only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree_edge_mse: Option<Vec<f64>>,
    pub decay_ratio: f64,
    pub diverged_runs: usize,
    /// Runs that entered the averages.
    pub averaged_runs: usize,
    pub seed: u64,
    pub run_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
    pub initial_mse: f64,
    pub final_mse: f64,
    pub decay_ratio: f64,
    pub diverged_runs: usize,
}

impl SimResult {
    pub fn summary(&self) -> SimSummary {
        SimSummary {
            horizon: self.mse_total.len() - 1,
            runs: self.run_seeds.len(),
            seed: self.seed,
            initial_mse: self.mse_total[0],
            final_mse: *self.mse_total.last().unwrap(),
            decay_ratio: self.decay_ratio,
            diverged_runs: self.diverged_runs,
        }
    }

    /// Columns `t, mse_total, mse_agent_1..N`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mse_total");
        for i in 1..=self.mse_per_agent.len() {
            out.push_str(&format!(",mse_agent_{i}"));
        }
        out.push('\n');
        for (t, total) in self.mse_total.iter().enumerate() {
            out.push_str(&format!("{t},{}", crate::report::fmt_f64(*total)));
            for agent in &self.mse_per_agent {
                out.push(',');
                out.push_str(&crate::report::fmt_f64(agent[t]));
            }
            out.push('\n');
        }
        out
    }
}

/// Per-run squared norms: `[t][0]` total, `[t][1 + i]` agent i, and the
/// optional tree-edge norm last.
struct RunSeries {
    rows: Vec<Vec<f64>>,
    diverged: bool,
}

fn agent_norms(delta: &Vector, n_agents: usize, n: usize, extra: Option<f64>) -> Vec<f64> {
    let mut row = Vec::with_capacity(n_agents + 2);
    row.push(delta.norm_squared());
    for i in 0..n_agents {
        row.push(delta.rows(i * n, n).norm_squared());
    }
    if let Some(e) = extra {
        row.push(e);
    }
    row
}

/// Removes the network average from agent-major stacked states.
pub fn disagreement(x: &Vector, n_agents: usize, n: usize) -> Vector {
    let mut mean = Vector::zeros(n);
    for i in 0..n_agents {
        mean += x.rows(i * n, n);
    }
    mean /= n_agents as f64;
    let mut d = x.clone();
    for i in 0..n_agents {
        let mut blk = d.rows_mut(i * n, n);
        blk -= &mean;
    }
    d
}

/// Error trajectory `δ(0..=horizon)` in vertex coordinates for a given
/// initial state and loss path.
pub fn vertex_path(
    model: &AgentModel,
    topology: &Topology,
    channel: &ChannelModel,
    gain: &GainMatrix,
    x0: &Vector,
    path: &[usize],
) -> Vec<Vector> {
    let mut out = Vec::with_capacity(path.len() + 1);
    let mut stepper = VertexStepper::new(model, topology, channel, gain);
    let mut d = disagreement(x0, topology.n_vertices(), model.n());
    out.push(d.clone());
    for &s in path {
        d = stepper.step(&d, s);
        out.push(d.clone());
    }
    out
}

struct VertexStepper<'a> {
    a: &'a Matrix,
    bk: Matrix,
    edges: Vec<(usize, usize)>,
    /// gains[state][edge]
    gains: Vec<Vec<f64>>,
    n: usize,
    n_agents: usize,
}

impl<'a> VertexStepper<'a> {
    fn new(model: &'a AgentModel, topology: &Topology, channel: &ChannelModel, gain: &GainMatrix) -> Self {
        let edges: Vec<(usize, usize)> = topology.edges().iter().map(|&(u, v)| (u - 1, v - 1)).collect();
        let gains = (0..channel.n_states())
            .map(|s| (0..edges.len()).map(|e| channel.edge_gain(s, e)).collect())
            .collect();
        Self {
            a: model.a(),
            bk: model.b() * gain.matrix(),
            edges,
            gains,
            n: model.n(),
            n_agents: topology.n_vertices(),
        }
    }

    /// `δ_i ← A δ_i + B K Σ_j γ_ij (δ_i − δ_j)`.
    fn step(&mut self, d: &Vector, state: usize) -> Vector {
        let n = self.n;
        let mut acc = Vector::zeros(d.len());
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            let g = self.gains[state][e];
            if g == 0.0 {
                continue;
            }
            let diff = (d.rows(u * n, n) - d.rows(v * n, n)) * g;
            let mut au = acc.rows_mut(u * n, n);
            au += &diff;
            let mut av = acc.rows_mut(v * n, n);
            av -= &diff;
        }
        let mut next = Vector::zeros(d.len());
        for i in 0..self.n_agents {
            let r = self.a * d.rows(i * n, n) + &self.bk * acc.rows(i * n, n);
            next.rows_mut(i * n, n).copy_from(&r);
        }
        next
    }
}

/// Reduced tree-edge dynamics with one transition matrix per channel state.
struct EdgeStepper {
    modes: Vec<Matrix>,
    reconstruct: Matrix,
    project: Matrix,
}

impl EdgeStepper {
    fn new(model: &AgentModel, decomp: &EdgeDecomposition, channel: &ChannelModel, gain: &GainMatrix) -> Result<Self> {
        let n = model.n();
        let nt = decomp.n_tree_edges();
        let bk = model.b() * gain.matrix();
        let ia = linalg::kron(&Matrix::identity(nt, nt), model.a());
        let modes = (0..channel.n_states())
            .map(|s| {
                let by_input: Vec<f64> = (0..decomp.n_edges()).map(|e| channel.edge_gain(s, e)).collect();
                let zeta = decomp.to_decomposition_order(&by_input);
                &ia + linalg::kron(&decomp.weighted_tree_coupling(&zeta), &bk)
            })
            .collect();
        let gram = decomp.e_tau.transpose() * &decomp.e_tau;
        let gram_inv = linalg::spd_inverse(&gram)
            .ok_or_else(|| Error::Numerical("spanning-tree Gram matrix is singular".into()))?;
        let in_ = Matrix::identity(n, n);
        Ok(Self {
            modes,
            reconstruct: linalg::kron(&(&decomp.e_tau * gram_inv), &in_),
            project: linalg::kron(&decomp.e_tau.transpose(), &in_),
        })
    }
}

/// Tree-edge trajectory `z_τ(0..=horizon)` for a given initial state and
/// loss path, with `z_τ(0) = (E_τ' ⊗ I) x(0)`.
pub fn edge_path(
    model: &AgentModel,
    decomp: &EdgeDecomposition,
    channel: &ChannelModel,
    gain: &GainMatrix,
    x0: &Vector,
    path: &[usize],
) -> Result<Vec<Vector>> {
    let st = EdgeStepper::new(model, decomp, channel, gain)?;
    let mut z = &st.project * x0;
    let mut out = Vec::with_capacity(path.len() + 1);
    out.push(z.clone());
    for &s in path {
        z = &st.modes[s] * z;
        out.push(z.clone());
    }
    Ok(out)
}

/// Mean-square error statistics in vertex coordinates.
pub fn simulate(scenario: &SimScenario) -> Result<SimResult> {
    scenario.validate()?;
    let n = scenario.model.n();
    let na = scenario.topology.n_vertices();
    let series = (0..scenario.runs)
        .into_par_iter()
        .map(|run| -> Result<RunSeries> {
            let path = scenario.loss_path(run)?;
            let mut stepper = VertexStepper::new(&scenario.model, &scenario.topology, &scenario.channel, &scenario.gain);
            let mut d = disagreement(&scenario.initial_states(run), na, n);
            let mut rows = Vec::with_capacity(scenario.horizon + 1);
            rows.push(agent_norms(&d, na, n, None));
            let mut diverged = false;
            for &s in &path.states {
                if !diverged {
                    let next = stepper.step(&d, s);
                    if next.norm() > OVERFLOW_GUARD || !next.iter().all(|v| v.is_finite()) {
                        diverged = true;
                    } else {
                        d = next;
                    }
                }
                rows.push(agent_norms(&d, na, n, None));
            }
            Ok(RunSeries { rows, diverged })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(scenario, series, na, false))
}

/// Mean-square error statistics from the reduced tree-edge dynamics.
pub fn simulate_edge(scenario: &SimScenario, decomp: &EdgeDecomposition) -> Result<SimResult> {
    scenario.validate()?;
    if decomp.n_edges() != scenario.topology.n_edges() || decomp.n_vertices() != scenario.topology.n_vertices() {
        return Err(Error::DimensionMismatch("decomposition does not match the topology".into()));
    }
    let n = scenario.model.n();
    let na = scenario.topology.n_vertices();
    let st = EdgeStepper::new(&scenario.model, decomp, &scenario.channel, &scenario.gain)?;
    let series = (0..scenario.runs)
        .into_par_iter()
        .map(|run| -> Result<RunSeries> {
            let path = scenario.loss_path(run)?;
            let mut z = &st.project * scenario.initial_states(run);
            let norms = |z: &Vector| agent_norms(&(&st.reconstruct * z), na, n, Some(z.norm_squared()));
            let mut rows = Vec::with_capacity(scenario.horizon + 1);
            rows.push(norms(&z));
            let mut diverged = false;
            for &s in &path.states {
                if !diverged {
                    let next = &st.modes[s] * &z;
                    if next.norm() > OVERFLOW_GUARD || !next.iter().all(|v| v.is_finite()) {
                        diverged = true;
                    } else {
                        z = next;
                    }
                }
                rows.push(norms(&z));
            }
            Ok(RunSeries { rows, diverged })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(scenario, series, na, true))
}

/// Decomposes the scenario topology with the default rules and runs
/// [`simulate_edge`].
pub fn simulate_edge_default(scenario: &SimScenario) -> Result<SimResult> {
    let d = scenario
        .topology
        .edge_decomposition(&Orientation::default(), &TreeRule::default())?;
    simulate_edge(scenario, &d)
}

/// Exact E‖δ(t)‖², t = 0..=horizon, from the joint-state second moments
/// `X_j(t) = E[δ(t)δ(t)' 1{θ(t) = j}]` of the full vertex system. The
/// initial states are independent uniforms on `init_box`, so
/// `E[δ(0)δ(0)'] = ((I − 11'/N) ⊗ I) (hi − lo)²/12`.
pub fn exact_mse(scenario: &SimScenario) -> Result<Vec<f64>> {
    scenario.validate()?;
    let n = scenario.model.n();
    let na = scenario.topology.n_vertices();
    let channel = &scenario.channel;
    let o = channel.n_states();
    let (transition, stationary) = channel_chain(channel);
    let bk = scenario.model.b() * scenario.gain.matrix();
    let ia = linalg::kron(&Matrix::identity(na, na), scenario.model.a());
    let modes = (0..o)
        .map(|s| {
            let mut lap = Matrix::zeros(na, na);
            for (e, &(u, v)) in scenario.topology.edges().iter().enumerate() {
                let g = channel.edge_gain(s, e);
                let (u, v) = (u - 1, v - 1);
                lap[(u, u)] += g;
                lap[(v, v)] += g;
                lap[(u, v)] -= g;
                lap[(v, u)] -= g;
            }
            &ia + linalg::kron(&lap, &bk)
        })
        .collect();
    let op = crate::mjls::JumpOperator::new(transition, modes)?;
    let (lo, hi) = scenario.init_box;
    let centering = Matrix::identity(na, na) - Matrix::from_element(na, na, 1.0 / na as f64);
    let sigma0 = linalg::kron(&centering, &Matrix::identity(n, n)) * ((hi - lo) * (hi - lo) / 12.0);
    let weights = match scenario.initial_state {
        InitialState::Stationary => stationary,
        InitialState::Fixed(s) => (0..o).map(|j| f64::from(u8::from(j == s))).collect(),
    };
    let mut x: Vec<Matrix> = weights.iter().map(|&w| &sigma0 * w).collect();
    let mut out = Vec::with_capacity(scenario.horizon + 1);
    out.push(x.iter().map(|m| m.trace()).sum());
    for _ in 0..scenario.horizon {
        x = op.apply(&x);
        out.push(x.iter().map(|m| m.trace()).sum());
    }
    Ok(out)
}

/// Transition matrix and initial law of the state process sampled by
/// [`sample_path`].
fn channel_chain(channel: &ChannelModel) -> (Matrix, Vec<f64>) {
    match channel {
        ChannelModel::Iid(c) => {
            let p0 = match c.kind {
                crate::channel::IidKind::Bernoulli => c.p,
                crate::channel::IidKind::TwoPoint => 0.5,
            };
            let row = [p0, 1.0 - p0];
            (Matrix::from_fn(2, 2, |_, j| row[j]), row.to_vec())
        }
        ChannelModel::Markov2(c) => (c.transition(), c.stationary().to_vec()),
        ChannelModel::MarkovEdge(e) => (e.transition().clone(), e.stationary()),
    }
}

#[derive(Clone)]
struct Kahan {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl Kahan {
    fn new(len: usize) -> Self {
        Self {
            sum: vec![0.0; len],
            comp: vec![0.0; len],
        }
    }

    fn add(&mut self, row: &[f64]) {
        for (k, &v) in row.iter().enumerate() {
            let y = v - self.comp[k];
            let t = self.sum[k] + y;
            self.comp[k] = (t - self.sum[k]) - y;
            self.sum[k] = t;
        }
    }
}

fn aggregate(scenario: &SimScenario, series: Vec<RunSeries>, na: usize, with_edges: bool) -> SimResult {
    let steps = scenario.horizon + 1;
    let width = na + 1 + usize::from(with_edges);
    let mut acc: Vec<Kahan> = vec![Kahan::new(width); steps];
    let diverged_runs = series.iter().filter(|s| s.diverged).count();
    let mut used = 0usize;
    for s in &series {
        if scenario.exclude_diverged && s.diverged {
            continue;
        }
        used += 1;
        for (t, row) in s.rows.iter().enumerate() {
            acc[t].add(row);
        }
    }
    let denom = used.max(1) as f64;
    let mean = |t: usize, k: usize| if used == 0 { f64::NAN } else { acc[t].sum[k] / denom };
    let mse_total: Vec<f64> = (0..steps).map(|t| mean(t, 0)).collect();
    let mse_per_agent = (0..na).map(|i| (0..steps).map(|t| mean(t, 1 + i)).collect()).collect();
    let tree_edge_mse = with_edges.then(|| (0..steps).map(|t| mean(t, na + 1)).collect());
    let decay_ratio = mse_total[scenario.horizon] / mse_total[0];
    SimResult {
        decay_ratio,
        mse_total,
        mse_per_agent,
        tree_edge_mse,
        diverged_runs,
        averaged_runs: used,
        seed: scenario.seed,
        run_seeds: (0..scenario.runs).map(|r| scenario.run_seed(r)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{IidChannel, TwoStateChannel};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn scalar_scenario(a: f64, k: f64, channel: ChannelModel) -> SimScenario {
        let mut s = SimScenario::new(
            AgentModel::scalar(a).unwrap(),
            Topology::path(3).unwrap(),
            channel,
            GainMatrix::scalar(k),
        );
        s.runs = 50;
        s.horizon = 30;
        s.seed = 7;
        s
    }

    #[test]
    fn frozen_states() {
        let m = AgentModel::new(Matrix::identity(2, 2), Matrix::identity(2, 2)).unwrap();
        let mut s = SimScenario::new(
            m.clone(),
            Topology::path(3).unwrap(),
            ChannelModel::Iid(IidChannel::bernoulli(0.3).unwrap()),
            GainMatrix::zeros(&m),
        );
        s.runs = 20;
        s.horizon = 10;
        let r = simulate(&s).unwrap();
        for &v in &r.mse_total {
            assert_abs_diff_eq!(v, r.mse_total[0], epsilon = 1e-15);
        }
        assert_abs_diff_eq!(r.decay_ratio, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn open_loop_grows() {
        let s = scalar_scenario(1.2, -0.3, ChannelModel::Iid(IidChannel::bernoulli(1.0).unwrap()));
        let r = simulate(&s).unwrap();
        assert_relative_eq!(r.decay_ratio, 1.2f64.powi(60), max_relative = 1e-9);
    }

    #[test]
    fn deterministic_and_schedule_independent() {
        let s = scalar_scenario(1.1, -0.3, ChannelModel::Markov2(TwoStateChannel::new(0.2, 0.7).unwrap()));
        let a = simulate(&s).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate(&s).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn lossless_tree_matches_matrix_power() {
        let mut s = scalar_scenario(1.1, -0.3, ChannelModel::Iid(IidChannel::bernoulli(0.0).unwrap()));
        s.runs = 1;
        let r = simulate_edge_default(&s).unwrap();
        let d = s.topology.edge_decomposition(&Orientation::default(), &TreeRule::default()).unwrap();
        let step = Matrix::identity(2, 2) * 1.1 + &d.m * d.r.transpose() * -0.3;
        let z0 = d.e_tau.transpose() * s.initial_states(0);
        let mut z = z0;
        for _ in 0..s.horizon {
            z = &step * z;
        }
        let tree = r.tree_edge_mse.as_ref().unwrap();
        assert_relative_eq!(tree[s.horizon], z.norm_squared(), max_relative = 1e-12);
    }

    #[test]
    fn overflow_guard_marks_divergence() {
        let mut s = scalar_scenario(50.0, 0.0, ChannelModel::Iid(IidChannel::bernoulli(0.5).unwrap()));
        s.horizon = 20;
        let r = simulate(&s).unwrap();
        assert_eq!(r.diverged_runs, s.runs);
        assert!(r.mse_total.iter().all(|v| v.is_finite()));
        s.exclude_diverged = true;
        let r = simulate(&s).unwrap();
        assert_eq!(r.averaged_runs, 0);
        assert!(r.decay_ratio.is_nan());
    }

    #[test]
    fn monte_carlo_matches_exact_moments() {
        let m = AgentModel::new(
            Matrix::from_row_slice(2, 2, &[1.05, 0.2, 0.0, 0.98]),
            Matrix::from_row_slice(2, 1, &[0.0, 1.0]),
        )
        .unwrap();
        let k = GainMatrix::new(Matrix::from_row_slice(1, 2, &[0.15, 0.3])).unwrap();
        for channel in [
            ChannelModel::Markov2(TwoStateChannel::new(0.3, 0.6).unwrap()),
            ChannelModel::Iid(IidChannel::bernoulli(0.25).unwrap()),
        ] {
            let mut s = SimScenario::new(m.clone(), Topology::new(3, &[(1, 2), (2, 3), (1, 3)]).unwrap(), channel, k.clone());
            s.runs = 4000;
            s.horizon = 15;
            s.seed = 11;
            let mc = simulate(&s).unwrap();
            let ex = exact_mse(&s).unwrap();
            for t in [0, 5, 15] {
                assert_relative_eq!(mc.mse_total[t], ex[t], max_relative = 0.05);
            }
        }
    }

    #[test]
    fn csv_layout() {
        let mut s = scalar_scenario(1.1, -0.3, ChannelModel::Iid(IidChannel::bernoulli(0.1).unwrap()));
        s.horizon = 2;
        s.runs = 3;
        let csv = simulate(&s).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,mse_total,mse_agent_1,mse_agent_2,mse_agent_3");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("2,"));
    }

    #[test]
    fn bad_scenarios_rejected() {
        let mut s = scalar_scenario(1.1, -0.3, ChannelModel::Iid(IidChannel::bernoulli(0.1).unwrap()));
        s.horizon = 0;
        assert!(simulate(&s).is_err());
        let mut s = scalar_scenario(1.1, -0.3, ChannelModel::Iid(IidChannel::bernoulli(0.1).unwrap()));
        s.gain = GainMatrix::new(Matrix::zeros(1, 2)).unwrap();
        assert!(matches!(simulate(&s), Err(Error::DimensionMismatch(_))));
    }
}

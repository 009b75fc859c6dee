//! Scenario files: one JSON document with the agent model, graph, channel
//! and the analysis, synthesis and simulation settings, plus the drivers
//! the command-line front end calls.
//!
//! ```json
//! {
//!   "model": {"A": [[2.0]], "B": [[1.0]]},
//!   "topology": {"n": 3, "edges": [[1, 2], [2, 3]]},
//!   "channel": {"type": "markov2", "p": 0.2, "q": 0.9},
//!   "analysis": {"theorems": ["all"]},
//!   "simulation": {"horizon": 100, "runs": 1000, "seed": 7}
//! }
//! ```

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, EdgeChannel, IidChannel, IidKind, InitialState, TwoStateChannel};
use crate::criteria::{self, Verdict};
use crate::error::{Error, Result};
use crate::graph::{EdgeDecomposition, Orientation, SpectrumSummary, Topology, TreeRule};
use crate::linalg::{self, Matrix};
use crate::lmi::LmiOptions;
use crate::mjls::{AgentModel, GainMatrix};
use crate::riccati::{self, CriticalValue};
use crate::sim::{self, SimResult, SimScenario, SimSummary};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub model: ModelSpec,
    pub topology: TopologySpec,
    pub channel: ChannelSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub synthesis: SynthesisSpec,
    #[serde(default)]
    pub simulation: SimulationSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub n: usize,
    /// 1-indexed vertex pairs.
    pub edges: Vec<(usize, usize)>,
    #[serde(default)]
    pub orientation: Orientation,
    /// 0-based indices into `edges` forming the spanning tree; BFS when absent.
    #[serde(default)]
    pub tree: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelSpec {
    /// Bernoulli loss with rate `p`, or fading with moments `mu`, `sigma2`.
    Iid {
        #[serde(default)]
        p: Option<f64>,
        #[serde(default)]
        mu: Option<f64>,
        #[serde(default)]
        sigma2: Option<f64>,
    },
    Markov2 { p: f64, q: f64 },
    /// Per-edge states (one 0/1 entry per listed edge) and transition matrix.
    MarkovEdge {
        states: Vec<Vec<u8>>,
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremSelection {
    All,
    Iid,
    MarkovIff,
    MarkovLmi,
    MarkovAnalytic,
    Necessary,
    Scalar,
    Nonidentical,
}

impl TheoremSelection {
    pub const NAMES: [&'static str; 8] = [
        "all",
        "iid",
        "markov-iff",
        "markov-lmi",
        "markov-analytic",
        "necessary",
        "scalar",
        "nonidentical",
    ];
}

impl FromStr for TheoremSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
            Error::Scenario(format!(
                "unknown theorem '{s}', expected one of: {}",
                Self::NAMES.join(", ")
            ))
        })
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default)]
    pub theorems: Vec<TheoremSelection>,
    /// Gain for the fixed-gain tests and for simulation.
    #[serde(default)]
    pub gain: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSpec {
    #[serde(default)]
    pub lmi: LmiOptions,
    /// Upper end of the κ search interval; `4/λ2` when absent.
    #[serde(default)]
    pub kappa_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coordinates {
    #[default]
    Vertex,
    Edge,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSpec {
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
    pub init_box: (f64, f64),
    pub initial_state: InitialState,
    pub exclude_diverged: bool,
    pub coordinates: Coordinates,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            horizon: sim::DEFAULT_HORIZON,
            runs: sim::DEFAULT_RUNS,
            seed: 0,
            init_box: sim::DEFAULT_INIT_BOX,
            initial_state: InitialState::Stationary,
            exclude_diverged: false,
            coordinates: Coordinates::Vertex,
        }
    }
}

/// A parsed and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: AgentModel,
    pub topology: Topology,
    pub spectrum: SpectrumSummary,
    pub decomposition: EdgeDecomposition,
    pub channel: ChannelModel,
    pub theorems: Vec<TheoremSelection>,
    pub gain: Option<GainMatrix>,
    pub lmi: LmiOptions,
    pub kappa_max: Option<f64>,
    pub simulation: SimulationSpec,
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix> {
    linalg::from_rows(rows).map_err(|e| Error::Scenario(format!("{what}: {e}")))
}

/// Parses a gain given either as a bare row-major array or as an object
/// with a `gain` field (such as a `synthesize` report).
pub fn parse_gain(text: &str) -> Result<GainMatrix> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Scenario(format!("gain file: {e}")))?;
    let rows = match v.get("gain") {
        Some(g) => g.clone(),
        None => v,
    };
    let rows: Vec<Vec<f64>> =
        serde_json::from_value(rows).map_err(|e| Error::Scenario(format!("gain file: {e}")))?;
    GainMatrix::new(matrix(&rows, "gain")?)
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path.is_empty() || path == "." {
                Error::Scenario(inner.to_string())
            } else {
                Error::Scenario(format!("at '{path}': {inner}"))
            }
        })
    }

    pub fn validate(self) -> Result<Scenario> {
        let model = AgentModel::new(matrix(&self.model.a, "model.A")?, matrix(&self.model.b, "model.B")?)?;
        let topology = Topology::new(self.topology.n, &self.topology.edges)?;
        if !topology.is_connected() {
            return Err(Error::NotConnected);
        }
        let spectrum = topology.spectrum()?;
        let tree = match self.topology.tree {
            Some(t) => TreeRule::Edges(t),
            None => TreeRule::Bfs,
        };
        let decomposition = topology.edge_decomposition(&self.topology.orientation, &tree)?;
        let channel = match self.channel {
            ChannelSpec::Iid { p, mu, sigma2 } => match (p, mu, sigma2) {
                (Some(p), None, None) => ChannelModel::Iid(IidChannel::bernoulli(p)?),
                (None, Some(mu), Some(s)) => ChannelModel::Iid(IidChannel::fading(mu, s)?),
                _ => {
                    return Err(Error::Scenario(
                        "channel: an iid channel takes either 'p' or both 'mu' and 'sigma2'".into(),
                    ))
                }
            },
            ChannelSpec::Markov2 { p, q } => ChannelModel::Markov2(TwoStateChannel::new(p, q)?),
            ChannelSpec::MarkovEdge { states, q } => {
                ChannelModel::MarkovEdge(EdgeChannel::new(topology.n_edges(), states, matrix(&q, "channel.Q")?)?)
            }
        };
        let gain = match self.analysis.gain {
            Some(rows) => {
                let k = GainMatrix::new(matrix(&rows, "analysis.gain")?)?;
                k.check_dims(&model)?;
                Some(k)
            }
            None => None,
        };
        if let Some(k) = self.synthesis.kappa_max {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Scenario(format!("synthesis.kappa_max must be positive, got {k}")));
            }
        }
        let lmi = self.synthesis.lmi;
        if lmi.max_iter == 0 || !(lmi.shift >= 0.0 && lmi.shift.is_finite()) {
            return Err(Error::Scenario("synthesis.lmi: max_iter must be positive and shift nonnegative".into()));
        }
        let theorems = if self.analysis.theorems.is_empty() {
            vec![TheoremSelection::All]
        } else {
            self.analysis.theorems
        };
        let s = Scenario {
            model,
            topology,
            spectrum,
            decomposition,
            channel,
            theorems,
            gain,
            lmi,
            kappa_max: self.synthesis.kappa_max,
            simulation: self.simulation,
        };
        // Catches horizon, runs and init-box problems before any work starts.
        s.sim_scenario(GainMatrix::zeros(&s.model)).validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub n: usize,
    pub m: usize,
    pub det_a: f64,
    pub rho_a: f64,
    pub eigenvalue_moduli: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphInfo {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize)>,
    pub spectrum: SpectrumSummary,
    /// Oriented edges in decomposition order, tree edges first.
    pub oriented_edges: Vec<(usize, usize)>,
    pub n_tree_edges: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Skipped {
    pub theorem: TheoremSelection,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub model: ModelInfo,
    pub graph: GraphInfo,
    pub channel: ChannelModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_c: Option<CriticalValue>,
    pub verdicts: Vec<Verdict>,
    pub skipped: Vec<Skipped>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthesisReport {
    /// First synthesized gain that passed its validation, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain: Option<GainMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<criteria::Theorem>,
    pub analysis: AnalysisReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaCReport {
    pub model: ModelInfo,
    pub gamma_c: CriticalValue,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub gain: GainMatrix,
    /// `scenario`, `command-line` or the theorem that synthesized it.
    pub gain_source: String,
    pub coordinates: Coordinates,
    pub summary: SimSummary,
    /// Second moment of agent 1's error, E‖x_1(t) − x̄(t)‖².
    pub agent1_final_mse: f64,
}

/// Verdicts that can supply a gain for simulation, in preference order.
const SYNTHESIS_PREFERENCE: [criteria::Theorem; 5] = [
    criteria::Theorem::ScalarIff,
    criteria::Theorem::IidSingleInput,
    criteria::Theorem::MarkovLmi,
    criteria::Theorem::MarkovAnalytic,
    criteria::Theorem::NonidenticalKappa,
];

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        ScenarioFile::from_json(text)?.validate()
    }

    pub fn model_info(&self) -> ModelInfo {
        ModelInfo {
            n: self.model.n(),
            m: self.model.m(),
            det_a: self.model.det_a(),
            rho_a: self.model.rho_a(),
            eigenvalue_moduli: self.model.eigenvalue_moduli(),
            warnings: self.model.warnings().to_vec(),
        }
    }

    fn graph_info(&self) -> GraphInfo {
        GraphInfo {
            n_vertices: self.topology.n_vertices(),
            edges: self.topology.edges().to_vec(),
            spectrum: self.spectrum.clone(),
            oriented_edges: self.decomposition.oriented_edges.clone(),
            n_tree_edges: self.decomposition.n_tree_edges(),
        }
    }

    /// The identical two-state chain, or the Bernoulli channel seen as one
    /// (`q = 1 − p`).
    fn two_state(&self) -> std::result::Result<TwoStateChannel, String> {
        match &self.channel {
            ChannelModel::Markov2(c) => Ok(*c),
            ChannelModel::Iid(c) if c.kind == IidKind::Bernoulli => {
                TwoStateChannel::new(c.p, 1.0 - c.p).map_err(|e| e.to_string())
            }
            ChannelModel::Iid(_) => Err("needs a Bernoulli or two-state Markov channel, not fading".into()),
            ChannelModel::MarkovEdge(_) => Err("needs an identical channel; use 'nonidentical'".into()),
        }
    }

    fn edge_channel(&self) -> std::result::Result<EdgeChannel, String> {
        match &self.channel {
            ChannelModel::MarkovEdge(e) => Ok(e.clone()),
            ChannelModel::Markov2(c) => c.as_edge_channel(self.topology.n_edges()).map_err(|e| e.to_string()),
            ChannelModel::Iid(_) => Err("needs a Markov channel".into()),
        }
    }

    /// Expands `all` into the criteria that apply to this scenario.
    fn expand(&self, selection: &[TheoremSelection]) -> Vec<TheoremSelection> {
        use TheoremSelection::*;
        let mut out = Vec::new();
        for &t in selection {
            let group: Vec<TheoremSelection> = match (t, &self.channel) {
                (All, ChannelModel::Iid(_)) => vec![Iid, MarkovIff],
                (All, ChannelModel::Markov2(_)) => vec![MarkovIff, MarkovLmi, MarkovAnalytic, Necessary, Scalar],
                (All, ChannelModel::MarkovEdge(_)) => vec![Nonidentical],
                (t, _) => vec![t],
            };
            for g in group {
                if !out.contains(&g) {
                    out.push(g);
                }
            }
        }
        out
    }

    /// Runs the selected criteria. Criteria named explicitly must apply to
    /// the scenario; those pulled in by `all` are skipped with a reason.
    pub fn analyze(&self, selection: &[TheoremSelection], gain: Option<&GainMatrix>) -> Result<AnalysisReport> {
        use TheoremSelection::*;
        let explicit: Vec<TheoremSelection> = selection.iter().copied().filter(|&t| t != All).collect();
        let gain = gain.or(self.gain.as_ref());
        if let Some(k) = gain {
            k.check_dims(&self.model)?;
        }
        let mut verdicts = Vec::new();
        let mut skipped = Vec::new();
        let mut gamma_c: Option<CriticalValue> = None;
        for t in self.expand(selection) {
            let outcome = self.run_one(t, gain, &mut gamma_c);
            match outcome {
                Ok(mut vs) => verdicts.append(&mut vs),
                Err(reason) if !explicit.contains(&t) => skipped.push(Skipped { theorem: t, reason }),
                Err(reason) => {
                    let name = serde_json::to_value(t).ok().and_then(|v| v.as_str().map(String::from));
                    return Err(Error::Scenario(format!(
                        "theorem '{}' does not apply: {reason}",
                        name.unwrap_or_default()
                    )));
                }
            }
        }
        Ok(AnalysisReport {
            model: self.model_info(),
            graph: self.graph_info(),
            channel: self.channel.clone(),
            gamma_c,
            verdicts,
            skipped,
        })
    }

    fn gamma_c_cached(&self, cache: &mut Option<CriticalValue>) -> Result<CriticalValue> {
        if let Some(gc) = cache {
            return Ok(gc.clone());
        }
        let gc = riccati::gamma_c(&self.model)?;
        *cache = Some(gc.clone());
        Ok(gc)
    }

    /// `Err` carries the reason a criterion does not apply; numerical
    /// failures inside an applicable criterion are reported the same way.
    fn run_one(
        &self,
        t: TheoremSelection,
        gain: Option<&GainMatrix>,
        gc: &mut Option<CriticalValue>,
    ) -> std::result::Result<Vec<Verdict>, String> {
        use TheoremSelection::*;
        let s = &self.spectrum;
        let m = &self.model;
        let r = match t {
            All => unreachable!("expanded before dispatch"),
            Iid => match &self.channel {
                ChannelModel::Iid(_) if m.m() != 1 => {
                    return Err(format!("needs a single input (m = 1), got m = {}", m.m()));
                }
                ChannelModel::Iid(c) => match c.kind {
                    IidKind::Bernoulli => criteria::iid_single_input(m, s, c.p),
                    IidKind::TwoPoint => criteria::iid_general_fading(m, s, c.mu, c.sigma2),
                }
                .map(|v| vec![v]),
                _ => return Err("needs an iid channel".into()),
            },
            MarkovIff => {
                let ch = self.two_state()?;
                let k = gain.ok_or("needs a gain (analysis.gain or --gain)")?;
                criteria::markov_identical_fixed_gain(m, s, &ch, k).map(|v| vec![v])
            }
            MarkovLmi => {
                let ch = self.two_state()?;
                criteria::markov_identical_synthesis_lmi(m, s, &ch, &self.lmi).map(|v| vec![v])
            }
            MarkovAnalytic => {
                let ch = self.two_state()?;
                let g = self.gamma_c_cached(gc).map_err(|e| e.to_string())?;
                criteria::markov_identical_analytic_with(m, s, &ch, &g).map(|v| vec![v])
            }
            Necessary => {
                let ch = self.two_state()?;
                criteria::markov_identical_necessary(m, s, &ch, gain).map(|v| vec![v])
            }
            Scalar => {
                let ch = self.two_state()?;
                if m.n() != 1 || m.m() != 1 {
                    return Err(format!("needs scalar agents (n = m = 1), got n = {}, m = {}", m.n(), m.m()));
                }
                if m.a()[(0, 0)].abs() < 1.0 {
                    return Err("needs |a| >= 1".into());
                }
                criteria::scalar_iff_model(m, s, &ch).map(|v| vec![v])
            }
            Nonidentical => {
                let ec = self.edge_channel()?;
                let mut out = Vec::new();
                if let Some(k) = gain {
                    out.push(
                        criteria::nonidentical_analysis(m, &self.decomposition, &ec, k).map_err(|e| e.to_string())?,
                    );
                }
                let g = self.gamma_c_cached(gc).map_err(|e| e.to_string())?;
                criteria::nonidentical_kappa_with(m, &self.decomposition, &ec, &g, self.kappa_max).map(|v| {
                    out.push(v);
                    out
                })
            }
        };
        r.map_err(|e| e.to_string())
    }

    /// Runs every synthesis criterion that applies and returns the first
    /// validated gain.
    pub fn synthesize(&self) -> Result<SynthesisReport> {
        use TheoremSelection::*;
        let selection: &[TheoremSelection] = match self.channel {
            ChannelModel::Iid(_) => &[Iid],
            ChannelModel::Markov2(_) => &[Scalar, MarkovLmi, MarkovAnalytic],
            ChannelModel::MarkovEdge(_) => &[Nonidentical],
        };
        let analysis = self.analyze_optional(selection, None)?;
        let chosen = SYNTHESIS_PREFERENCE.iter().find_map(|&th| {
            analysis
                .verdicts
                .iter()
                .find(|v| {
                    v.theorem == th
                        && matches!(
                            v.decision,
                            criteria::Decision::Consensusable | criteria::Decision::SufficientHolds
                        )
                })
                .and_then(|v| v.gain().cloned().map(|k| (th, k)))
        });
        Ok(SynthesisReport {
            gain: chosen.as_ref().map(|c| c.1.clone()),
            source: chosen.map(|c| c.0),
            analysis,
        })
    }

    fn analyze_optional(&self, selection: &[TheoremSelection], gain: Option<&GainMatrix>) -> Result<AnalysisReport> {
        let mut verdicts = Vec::new();
        let mut skipped = Vec::new();
        let mut gamma_c = None;
        for &t in selection {
            match self.run_one(t, gain, &mut gamma_c) {
                Ok(mut vs) => verdicts.append(&mut vs),
                Err(reason) => skipped.push(Skipped { theorem: t, reason }),
            }
        }
        Ok(AnalysisReport {
            model: self.model_info(),
            graph: self.graph_info(),
            channel: self.channel.clone(),
            gamma_c,
            verdicts,
            skipped,
        })
    }

    pub fn gamma_c(&self) -> Result<GammaCReport> {
        Ok(GammaCReport {
            model: self.model_info(),
            gamma_c: riccati::gamma_c(&self.model)?,
        })
    }

    pub fn sim_scenario(&self, gain: GainMatrix) -> SimScenario {
        let s = &self.simulation;
        let mut sc = SimScenario::new(self.model.clone(), self.topology.clone(), self.channel.clone(), gain);
        sc.horizon = s.horizon;
        sc.runs = s.runs;
        sc.seed = s.seed;
        sc.init_box = s.init_box;
        sc.initial_state = s.initial_state;
        sc.exclude_diverged = s.exclude_diverged;
        sc
    }

    /// Simulates with the command-line gain, the scenario gain, or a
    /// synthesized one, in that order.
    pub fn simulate(&self, gain: Option<&GainMatrix>) -> Result<(SimResult, SimulationReport)> {
        let (k, source) = match (gain, &self.gain) {
            (Some(k), _) => (k.clone(), "command-line".to_string()),
            (None, Some(k)) => (k.clone(), "scenario".to_string()),
            (None, None) => {
                let syn = self.synthesize()?;
                match (syn.gain, syn.source) {
                    (Some(k), Some(th)) => {
                        let name = serde_json::to_value(th)
                            .ok()
                            .and_then(|v| v.as_str().map(String::from))
                            .unwrap_or_default();
                        (k, name)
                    }
                    _ => {
                        return Err(Error::Scenario(
                            "no gain given and none could be synthesized; supply analysis.gain or --gain".into(),
                        ))
                    }
                }
            }
        };
        k.check_dims(&self.model)?;
        let sc = self.sim_scenario(k.clone());
        let result = match self.simulation.coordinates {
            Coordinates::Vertex => sim::simulate(&sc)?,
            Coordinates::Edge => sim::simulate_edge(&sc, &self.decomposition)?,
        };
        let report = SimulationReport {
            gain: k,
            gain_source: source,
            coordinates: self.simulation.coordinates,
            summary: result.summary(),
            agent1_final_mse: result.mse_per_agent[0].last().copied().unwrap_or(f64::NAN),
        };
        Ok((result, report))
    }
}

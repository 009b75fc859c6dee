//! Consensusability decision procedures.
//!
//! Each procedure evaluates one condition and returns a [`Verdict`]. Only
//! iff-grade conditions produce `Consensusable` / `NotConsensusable`;
//! sufficient-only conditions produce `SufficientHolds` (always with a
//! validated gain) or `SufficientFails`, and necessary-only conditions
//! produce `NecessaryFails` or `Undecided`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::channel::{EdgeChannel, IidChannel, TwoStateChannel};
use crate::error::{Error, Result};
use crate::graph::{EdgeDecomposition, SpectrumSummary};
use crate::linalg::{self, Matrix};
use crate::lmi::{self, LmiBlock, LmiOptions, LmiOutcome, LmiProblem};
use crate::mjls::{self, AgentModel, GainMatrix, JumpOperator};
use crate::riccati::{self, CriticalValue, MareOutcome};

/// Inequalities closer than this to equality are flagged as boundary cases.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Points on the initial κ grid.
pub const KAPPA_GRID: usize = 101;
const GOLDEN_ITERS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Consensusable,
    NotConsensusable,
    SufficientHolds,
    SufficientFails,
    NecessaryFails,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    /// i.i.d. Bernoulli loss, single input.
    IidSingleInput,
    /// i.i.d. fading with mean and variance, single input.
    IidFading,
    /// Identical Markov loss, radius test for a given gain.
    MarkovFixedGain,
    /// Identical Markov loss, LMI synthesis.
    MarkovLmi,
    /// Identical Markov loss, γ1 > γ_c.
    MarkovAnalytic,
    /// Identical Markov loss, necessary conditions.
    MarkovNecessary,
    /// Scalar agents, identical Markov loss.
    ScalarIff,
    /// Per-edge Markov loss, radius test for a given gain.
    NonidenticalFixedGain,
    /// Per-edge Markov loss, scalar κ synthesis.
    NonidenticalKappa,
}

/// One evaluated inequality `lhs < rhs` or `lhs > rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub lhs: f64,
    pub relation: &'static str,
    pub rhs: f64,
    pub holds: bool,
    pub boundary: bool,
}

impl Check {
    pub fn less(label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            label: label.into(),
            lhs,
            relation: "<",
            rhs,
            holds: lhs < rhs,
            boundary: (lhs - rhs).abs() <= BOUNDARY_TOL,
        }
    }

    pub fn greater(label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            relation: ">",
            holds: lhs > rhs,
            ..Self::less(label, lhs, rhs)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Certificate {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain: Option<GainMatrix>,
    #[serde(with = "linalg::serde_rows_vec", skip_serializing_if = "Vec::is_empty")]
    pub p: Vec<Matrix>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub radii: Vec<f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Sampled (κ, γ(κ)) pairs from the κ search.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub kappa_curve: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub decision: Decision,
    pub theorem: Theorem,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub boundary: bool,
}

impl Verdict {
    fn new(theorem: Theorem, decision: Decision, checks: Vec<Check>) -> Self {
        let boundary = checks.iter().any(|c| c.boundary);
        Self {
            decision,
            theorem,
            certificate: None,
            checks,
            notes: Vec::new(),
            boundary,
        }
    }

    fn with_certificate(mut self, c: Certificate) -> Self {
        self.certificate = Some(c);
        self
    }

    fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    pub fn gain(&self) -> Option<&GainMatrix> {
        self.certificate.as_ref().and_then(|c| c.gain.as_ref())
    }
}

fn require_single_input(model: &AgentModel) -> Result<()> {
    if model.m() != 1 {
        return Err(Error::Precondition(format!(
            "this condition needs a single input (m = 1), got m = {}; use the Markov LMI or analytic criteria",
            model.m()
        )));
    }
    Ok(())
}

fn kappa_check(spectrum: &SpectrumSummary) -> f64 {
    -2.0 / (spectrum.lambda2 + spectrum.lambda_n)
}

/// Gain from the MARE solution at `gamma` with the given `kappa`.
fn mare_gain(model: &AgentModel, gamma: f64, kappa: f64) -> Result<Option<(GainMatrix, Matrix)>> {
    match riccati::mare_solve(model, gamma.min(1.0))? {
        MareOutcome::Feasible(s) => Ok(Some((riccati::optimal_gain(&s.p, model, kappa)?, s.p))),
        MareOutcome::Infeasible { .. } => Ok(None),
    }
}

/// i.i.d. Bernoulli loss with rate `p`, single-input agents:
/// consensusable iff `(1 − p) c > 1 − 1/det(A)²`.
pub fn iid_single_input(model: &AgentModel, spectrum: &SpectrumSummary, p: f64) -> Result<Verdict> {
    require_single_input(model)?;
    IidChannel::bernoulli(p)?;
    let det = model.det_a();
    let lhs = (1.0 - p) * spectrum.c;
    let rhs = 1.0 - 1.0 / (det * det);
    let check = Check::greater("(1-p) c > 1 - 1/det(A)^2", lhs, rhs);
    if !check.holds {
        return Ok(Verdict::new(Theorem::IidSingleInput, Decision::NotConsensusable, vec![check]));
    }
    let mut v = Verdict::new(Theorem::IidSingleInput, Decision::Consensusable, vec![check]);
    let kappa = kappa_check(spectrum);
    let mut cert = Certificate {
        kappa: Some(kappa),
        ..Default::default()
    };
    cert.values.insert("gamma".into(), lhs);
    match mare_gain(model, lhs, kappa)? {
        Some((k, p_mat)) => {
            // The Bernoulli channel is the two-state chain with q = 1 − p.
            if p > 0.0 {
                let ch = TwoStateChannel::new(p, 1.0 - p)?;
                let sv = mjls::ms_stable_identical(model, &k, spectrum, &ch)?;
                cert.radii = sv.radii;
            } else {
                let radii = spectrum
                    .nonzero()
                    .iter()
                    .map(|&l| linalg::spectral_radius_dense(&model.closed_loop(&k, l)).map(|r| r * r))
                    .collect::<Result<Vec<_>>>()?;
                cert.radii = radii;
            }
            cert.gain = Some(k);
            cert.p = vec![p_mat];
        }
        None => v = v.note("MARE iteration did not certify a solution at this gamma; no gain returned"),
    }
    Ok(v.with_certificate(cert))
}

/// i.i.d. fading with mean `mu` and variance `sigma2`, single input:
/// consensusable iff `μ²/(μ² + σ²) c > 1 − 1/det(A)²`.
pub fn iid_general_fading(
    model: &AgentModel,
    spectrum: &SpectrumSummary,
    mu: f64,
    sigma2: f64,
) -> Result<Verdict> {
    require_single_input(model)?;
    let ch = IidChannel::fading(mu, sigma2)?;
    let det = model.det_a();
    let lhs = ch.reliability() * spectrum.c;
    let rhs = 1.0 - 1.0 / (det * det);
    let check = Check::greater("mu^2/(mu^2+sigma^2) c > 1 - 1/det(A)^2", lhs, rhs);
    let decision = if check.holds {
        Decision::Consensusable
    } else {
        Decision::NotConsensusable
    };
    Ok(Verdict::new(Theorem::IidFading, decision, vec![check]))
}

/// Fixed-gain radius test under identical two-state Markov loss.
pub fn markov_identical_fixed_gain(
    model: &AgentModel,
    spectrum: &SpectrumSummary,
    channel: &TwoStateChannel,
    k: &GainMatrix,
) -> Result<Verdict> {
    let sv = mjls::ms_stable_identical(model, k, spectrum, channel)?;
    let checks = sv
        .radii
        .iter()
        .zip(spectrum.nonzero())
        .map(|(&r, &l)| Check::less(format!("rho(H) < 1 at lambda = {l}"), r, 1.0))
        .collect();
    radius_verdict(Theorem::MarkovFixedGain, sv, k.clone(), checks)
}

fn radius_verdict(
    theorem: Theorem,
    sv: mjls::StabilityVerdict,
    k: GainMatrix,
    checks: Vec<Check>,
) -> Result<Verdict> {
    let cert = Certificate {
        gain: Some(k),
        radii: sv.radii.clone(),
        ..Default::default()
    };
    let v = if sv.stable {
        Verdict::new(theorem, Decision::Consensusable, checks)
    } else {
        Verdict::new(theorem, Decision::Undecided, checks)
            .note("the given gain does not stabilize the error dynamics; another gain may")
    };
    Ok(v.with_certificate(cert))
}

/// The two block LMIs in `(Q1, Q2, Z1, Z2)` for identical Markov loss.
pub fn identical_lmi_problem(model: &AgentModel, c: f64, channel: &TwoStateChannel) -> LmiProblem {
    let (n, m) = (model.n(), model.m());
    let (p, q) = (channel.p, channel.q);
    let a = model.a();
    let b = model.b();
    let i = Matrix::identity(n, n);

    let mut prob = LmiProblem::new();
    let q1 = prob.var("Q1", n, n, true);
    let q2 = prob.var("Q2", n, n, true);
    let z1 = prob.var("Z1", m, n, false);
    let z2 = prob.var("Z2", m, n, false);

    let block = |own: usize, z: usize, s_ctrl: f64, s_open: f64, s_back: f64| {
        LmiBlock::new(vec![n; 4])
            .term(0, 0, i.clone(), own, i.clone())
            .term(1, 0, a * s_ctrl, own, i.clone())
            .term(1, 0, b * s_ctrl, z, i.clone())
            .term(1, 1, i.clone(), q2, i.clone())
            .term(2, 0, a * s_open, own, i.clone())
            .term(2, 2, i.clone(), q2, i.clone())
            .term(3, 0, a * s_back, own, i.clone())
            .term(3, 3, i.clone(), q1, i.clone())
    };
    prob.block(block(q1, z1, (q * c).sqrt(), (q * (1.0 - c)).sqrt(), (1.0 - q).sqrt()));
    prob.block(block(
        q2,
        z2,
        ((1.0 - p) * c).sqrt(),
        ((1.0 - p) * (1.0 - c)).sqrt(),
        p.sqrt(),
    ));
    prob
}

/// LMI sufficient condition under identical two-state Markov loss, with
/// gain `K = −2/(λ2+λN) (B'Q2⁻¹B)⁻¹ B'Q2⁻¹ A` validated by the radius test.
pub fn markov_identical_synthesis_lmi(
    model: &AgentModel,
    spectrum: &SpectrumSummary,
    channel: &TwoStateChannel,
    options: &LmiOptions,
) -> Result<Verdict> {
    let prob = identical_lmi_problem(model, spectrum.c, channel);
    let witness = match lmi::solve_feasibility(&prob, options)? {
        LmiOutcome::Feasible(w) => w,
        LmiOutcome::Undecided {
            iterations,
            best_min_eigenvalue,
        } => {
            return Ok(Verdict::new(Theorem::MarkovLmi, Decision::Undecided, vec![]).note(format!(
                "no strictly feasible point found in {iterations} iterations \
                 (best block eigenvalue {best_min_eigenvalue:.3e}); sufficient condition not established"
            )));
        }
    };
    let margins = prob.margins();
    let checks: Vec<Check> = witness
        .block_min_eigenvalues
        .iter()
        .zip(&margins)
        .enumerate()
        .map(|(bi, (&e, &mg))| Check::greater(format!("lambda_min(LMI block {}) > margin", bi + 1), e, mg))
        .collect();
    let q1 = &witness.assignment[0];
    let q2 = &witness.assignment[1];
    let (p1, p2) = match (linalg::spd_inverse(q1), linalg::spd_inverse(q2)) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Ok(Verdict::new(Theorem::MarkovLmi, Decision::Undecided, checks)
                .note("LMI witness has a numerically singular Q block"))
        }
    };
    let k = riccati::optimal_gain(&p2, model, kappa_check(spectrum))?;
    validated(Theorem::MarkovLmi, model, spectrum, channel, k, vec![p1, p2], checks)
}

/// Packages a synthesized gain after the identical-loss radius test.
fn validated(
    theorem: Theorem,
    model: &AgentModel,
    spectrum: &SpectrumSummary,
    channel: &TwoStateChannel,
    k: GainMatrix,
    p: Vec<Matrix>,
    checks: Vec<Check>,
) -> Result<Verdict> {
    let sv = mjls::ms_stable_identical(model, &k, spectrum, channel)?;
    let mut cert = Certificate {
        radii: sv.radii.clone(),
        kappa: Some(kappa_check(spectrum)),
        ..Default::default()
    };
    if p.len() == 2 {
        // Coupled Lyapunov margins with P_{i,1} = P1, P_{i,2} = P2 for every i.
        let mut worst = f64::INFINITY;
        for &l in spectrum.nonzero() {
            let op = JumpOperator::identical(model, &k, l, channel)?;
            for mgn in mjls::coupled_lyapunov_margins(&op, &p)? {
                worst = worst.min(mgn);
            }
        }
        cert.values.insert("lyapunov_margin".into(), worst);
    }
    cert.gain = Some(k);
    cert.p = p;
    let v = if sv.stable {
        Verdict::new(theorem, Decision::SufficientHolds, checks)
    } else {
        Verdict::new(theorem, Decision::Undecided, checks).note(format!(
            "synthesized gain failed the radius test (worst radius {:.6})",
            sv.worst_radius
        ))
    };
    Ok(v.with_certificate(cert))
}

/// `γ1 = min{q, 1−p} c > γ_c` with the MARE gain at γ1.
pub fn markov_identical_analytic_sufficient(
    model: &AgentModel,
    spectrum: &SpectrumSummary,
    channel: &TwoStateChannel,
) -> Result<Verdict> {
    let gc = riccati::gamma_c(model)?;
    markov_identical_analytic_with(model, spectrum, channel, &gc)
}

/// As [`markov_identical_analytic_sufficient`] with a precomputed γ_c.
pub fn markov_identical_analytic_with(
    model: &AgentModel,
    spectrum: &SpectrumSummary,
    channel: &TwoStateChannel,
    gc: &CriticalValue,
) -> Result<Verdict> {
    let gamma1 = channel.q.min(1.0 - channel.p) * spectrum.c;
    let mut check = Check::greater("min{q, 1-p} c > gamma_c", gamma1, gc.gamma_c);
    check.holds = gc.exceeded_by(gamma1);
    let mut values = BTreeMap::new();
    values.insert("gamma1".to_string(), gamma1);
    values.insert("gamma_c".to_string(), gc.gamma_c);
    let base_cert = Certificate {
        values,
        ..Default::default()
    };
    if !check.holds {
        let mut v = Verdict::new(Theorem::MarkovAnalytic, Decision::SufficientFails, vec![check]);
        if gc.undecided_at(gamma1) {
            v = v.note("gamma1 lies inside the gamma_c bisection bracket");
        }
        return Ok(v.with_certificate(base_cert));
    }
    let kappa = kappa_check(spectrum);
    let Some((k, p)) = mare_gain(model, gamma1, kappa)? else {
        return Ok(Verdict::new(Theorem::MarkovAnalytic, Decision::Undecided, vec![check])
            .note("MARE iteration did not certify a solution at gamma1")
            .with_certificate(base_cert));
    };
    let mut v = validated(Theorem::MarkovAnalytic, model, spectrum, channel, k, vec![p], vec![check])?;
    if let Some(c) = v.certificate.as_mut() {
        c.values.extend(base_cert.values);
    }
    Ok(v)
}

/// Necessary conditions under identical Markov loss:
/// `(1−q)^{1/2} ρ(A) < 1`; with a gain, `(1−p)^{1/2} ρ(A + λ_i B K) < 1`;
/// for single input, `(1−p)^{n/2} |det A| (λN−λ2)/(λN+λ2) < 1`.
pub fn markov_identical_necessary(
    model: &AgentModel,
    spectrum: &SpectrumSummary,
    channel: &TwoStateChannel,
    k: Option<&GainMatrix>,
) -> Result<Verdict> {
    let (p, q) = (channel.p, channel.q);
    let mut checks = vec![Check::less(
        "(1-q)^(1/2) rho(A) < 1",
        (1.0 - q).sqrt() * model.rho_a(),
        1.0,
    )];
    if let Some(k) = k {
        k.check_dims(model)?;
        for &l in spectrum.nonzero() {
            let r = linalg::spectral_radius_dense(&model.closed_loop(k, l))?;
            checks.push(Check::less(
                format!("(1-p)^(1/2) rho(A + lambda B K) < 1 at lambda = {l}"),
                (1.0 - p).sqrt() * r,
                1.0,
            ));
        }
    }
    if model.m() == 1 {
        let ratio = (spectrum.lambda_n - spectrum.lambda2) / (spectrum.lambda_n + spectrum.lambda2);
        let lhs = (1.0 - p).powf(model.n() as f64 / 2.0) * model.det_a().abs() * ratio;
        checks.push(Check::less("(1-p)^(n/2) |det A| (lN-l2)/(lN+l2) < 1", lhs, 1.0));
    }
    let decision = if checks.iter().all(|c| c.holds) {
        Decision::Undecided
    } else {
        Decision::NecessaryFails
    };
    Ok(Verdict::new(Theorem::MarkovNecessary, decision, checks))
}

/// The two scalar inequalities: `(1−q)a² < 1` and, when that holds,
/// `a²θ[1 + p(a²−1)/(1−a²(1−q))] < 1`.
pub fn scalar_region_checks(a: f64, theta: f64, p: f64, q: f64) -> Vec<Check> {
    let a2 = a * a;
    let first = Check::less("(1-q) a^2 < 1", (1.0 - q) * a2, 1.0);
    if !first.holds {
        return vec![first];
    }
    let lhs = a2 * theta * (1.0 + p * (a2 - 1.0) / (1.0 - a2 * (1.0 - q)));
    vec![first, Check::less("a^2 theta [1 + p(a^2-1)/(1-a^2(1-q))] < 1", lhs, 1.0)]
}

/// Scalar agents (`n = m = 1`) under identical Markov loss.
pub fn scalar_iff(a: f64, spectrum: &SpectrumSummary, channel: &TwoStateChannel) -> Result<Verdict> {
    if !a.is_finite() || a.abs() < 1.0 {
        return Err(Error::Precondition(format!("scalar criterion needs |a| >= 1, got {a}")));
    }
    let checks = scalar_region_checks(a, spectrum.theta(), channel.p, channel.q);
    if !checks.iter().all(|c| c.holds) {
        return Ok(Verdict::new(Theorem::ScalarIff, Decision::NotConsensusable, checks));
    }
    let k = GainMatrix::scalar(-2.0 * a / (spectrum.lambda2 + spectrum.lambda_n));
    let cert = Certificate {
        gain: Some(k),
        ..Default::default()
    };
    Ok(Verdict::new(Theorem::ScalarIff, Decision::Consensusable, checks).with_certificate(cert))
}

/// [`scalar_iff`] for a scalar [`AgentModel`] (b must be 1).
pub fn scalar_iff_model(
    model: &AgentModel,
    spectrum: &SpectrumSummary,
    channel: &TwoStateChannel,
) -> Result<Verdict> {
    if model.n() != 1 || model.m() != 1 {
        return Err(Error::Precondition(format!(
            "scalar criterion needs n = m = 1, got n = {}, m = {}",
            model.n(),
            model.m()
        )));
    }
    let b = model.b()[(0, 0)];
    // a + λ b k only depends on the product b k.
    let mut v = scalar_iff(model.a()[(0, 0)], spectrum, channel)?;
    if let Some(cert) = v.certificate.as_mut() {
        if let Some(k) = cert.gain.take() {
            cert.gain = Some(GainMatrix::scalar(k.matrix()[(0, 0)] / b));
        }
    }
    Ok(v)
}

/// Fixed-gain radius test under per-edge Markov loss.
pub fn nonidentical_analysis(
    model: &AgentModel,
    decomp: &EdgeDecomposition,
    channel: &EdgeChannel,
    k: &GainMatrix,
) -> Result<Verdict> {
    let sv = mjls::ms_stable_edge(model, k, decomp, channel)?;
    let checks = vec![Check::less("rho((Q' x I) diag(S_i x S_i)) < 1", sv.worst_radius, 1.0)];
    radius_verdict(Theorem::NonidenticalFixedGain, sv, k.clone(), checks)
}

/// `N_i`, `M_i` for every channel state, in decomposition edge order.
pub fn kappa_matrices(decomp: &EdgeDecomposition, channel: &EdgeChannel) -> Result<(Vec<Matrix>, Vec<Matrix>)> {
    if channel.n_edges() != decomp.n_edges() {
        return Err(Error::DimensionMismatch(format!(
            "channel covers {} edges, graph has {}",
            channel.n_edges(),
            decomp.n_edges()
        )));
    }
    let o = channel.n_states();
    let nt = decomp.n_tree_edges();
    let (r, m) = (&decomp.r, &decomp.m);
    let per_state: Vec<(Matrix, Matrix)> = (0..o)
        .map(|j| {
            let zeta: Vec<f64> = decomp
                .to_decomposition_order(&channel.states()[j])
                .into_iter()
                .map(f64::from)
                .collect();
            let g = Matrix::from_diagonal(&nalgebra::DVector::from_vec(zeta));
            let rgm = r * &g * m.transpose();
            let n_j = &rgm + rgm.transpose();
            let mgr = m * &g * r.transpose();
            let m_j = rgm * mgr;
            (n_j, m_j)
        })
        .collect();
    let q = channel.transition();
    let mut ns = Vec::with_capacity(o);
    let mut ms = Vec::with_capacity(o);
    for i in 0..o {
        let mut ni = Matrix::zeros(nt, nt);
        let mut mi = Matrix::zeros(nt, nt);
        for (j, (nj, mj)) in per_state.iter().enumerate() {
            ni += nj * q[(i, j)];
            mi += mj * q[(i, j)];
        }
        ns.push(linalg::symmetrize(&ni));
        ms.push(linalg::symmetrize(&mi));
    }
    Ok((ns, ms))
}

/// `γ(κ) = min_i λ_min(−κ N_i − κ² M_i)`.
pub fn kappa_gamma(kappa: f64, ns: &[Matrix], ms: &[Matrix]) -> f64 {
    ns.iter()
        .zip(ms)
        .map(|(n, m)| linalg::min_sym_eigenvalue(&(n * -kappa - m * (kappa * kappa))))
        .fold(f64::INFINITY, f64::min)
}

/// Maximizes the concave γ(κ) over `[−kappa_max, 0)`: grid, then
/// golden-section refinement around the best grid point.
pub fn kappa_search(ns: &[Matrix], ms: &[Matrix], kappa_max: f64) -> (f64, f64, Vec<(f64, f64)>) {
    let step = kappa_max / (KAPPA_GRID - 1) as f64;
    let curve: Vec<(f64, f64)> = (0..KAPPA_GRID)
        .map(|i| {
            let k = -kappa_max + step * i as f64;
            (k, kappa_gamma(k, ns, ms))
        })
        .collect();
    let best = (0..curve.len())
        .max_by(|&a, &b| curve[a].1.total_cmp(&curve[b].1))
        .unwrap_or(0);
    let mut lo = curve[best.saturating_sub(1)].0;
    let mut hi = curve[(best + 1).min(curve.len() - 1)].0;
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |k: f64| kappa_gamma(k, ns, ms);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_ITERS {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let (mut k_star, mut g_star) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    if curve[best].1 > g_star {
        (k_star, g_star) = curve[best];
    }
    if k_star >= 0.0 {
        // γ(0) = 0 never certifies anything; stay on the open interval.
        k_star = -step.min(kappa_max) * 1e-3;
        g_star = f(k_star);
    }
    (k_star, g_star, curve)
}

/// Largest eigenvalue over `i` of `[[−I, κV_i'], [κV_i, κN_i + γ_c I]]`.
pub fn kappa_lmi_max_eigenvalue(kappa: f64, gamma_c: f64, ns: &[Matrix], ms: &[Matrix]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for (n, m) in ns.iter().zip(ms) {
        let d = n.nrows();
        let v = linalg::psd_cholesky(m, 1e-12)
            .ok_or_else(|| Error::Numerical("M_i is not positive semidefinite".into()))?;
        let mut blk = Matrix::zeros(2 * d, 2 * d);
        blk.view_mut((0, 0), (d, d)).copy_from(&(-Matrix::identity(d, d)));
        blk.view_mut((0, d), (d, d)).copy_from(&(v.transpose() * kappa));
        blk.view_mut((d, 0), (d, d)).copy_from(&(&v * kappa));
        blk.view_mut((d, d), (d, d))
            .copy_from(&(n * kappa + Matrix::identity(d, d) * gamma_c));
        let e = linalg::jacobi_eigenvalues(&blk);
        worst = worst.max(*e.last().unwrap_or(&f64::NEG_INFINITY));
    }
    Ok(worst)
}

/// Scalar-κ synthesis under per-edge Markov loss.
pub fn nonidentical_kappa_synthesis(
    model: &AgentModel,
    decomp: &EdgeDecomposition,
    channel: &EdgeChannel,
) -> Result<Verdict> {
    let gc = riccati::gamma_c(model)?;
    nonidentical_kappa_with(model, decomp, channel, &gc, None)
}

/// As [`nonidentical_kappa_synthesis`] with a precomputed γ_c and an
/// optional κ search bound (default `4/λ2`).
pub fn nonidentical_kappa_with(
    model: &AgentModel,
    decomp: &EdgeDecomposition,
    channel: &EdgeChannel,
    gc: &CriticalValue,
    kappa_max: Option<f64>,
) -> Result<Verdict> {
    let (ns, ms) = kappa_matrices(decomp, channel)?;
    let kappa_max = match kappa_max {
        Some(k) => k,
        None => {
            let lap = &decomp.e * decomp.e.transpose();
            let ev = linalg::sym_eigenvalues(&lap);
            4.0 / ev.get(1).copied().filter(|&l| l > 0.0).ok_or(Error::NotConnected)?
        }
    };
    let (kappa, gamma, curve) = kappa_search(&ns, &ms, kappa_max);
    let mut check = Check::greater("max_kappa min_i lambda_min(-kappa N_i - kappa^2 M_i) > gamma_c", gamma, gc.gamma_c);
    check.holds = gc.exceeded_by(gamma);
    let mut cert = Certificate {
        kappa: Some(kappa),
        kappa_curve: curve,
        ..Default::default()
    };
    cert.values.insert("gamma_kappa".into(), gamma);
    cert.values.insert("gamma_c".into(), gc.gamma_c);
    cert.values.insert(
        "lmi_max_eigenvalue".into(),
        kappa_lmi_max_eigenvalue(kappa, gc.gamma_c, &ns, &ms)?,
    );
    if !check.holds {
        return Ok(Verdict::new(Theorem::NonidenticalKappa, Decision::SufficientFails, vec![check])
            .with_certificate(cert));
    }
    let Some((k, p)) = mare_gain(model, gamma, kappa)? else {
        return Ok(Verdict::new(Theorem::NonidenticalKappa, Decision::Undecided, vec![check])
            .note("MARE iteration did not certify a solution at gamma(kappa)")
            .with_certificate(cert));
    };
    let sv = mjls::ms_stable_edge(model, &k, decomp, channel)?;
    cert.radii = sv.radii.clone();
    cert.gain = Some(k);
    cert.p = vec![p];
    let v = if sv.stable {
        Verdict::new(Theorem::NonidenticalKappa, Decision::SufficientHolds, vec![check])
    } else {
        Verdict::new(Theorem::NonidenticalKappa, Decision::Undecided, vec![check]).note(format!(
            "synthesized gain failed the radius test (radius {:.6})",
            sv.worst_radius
        ))
    };
    Ok(v.with_certificate(cert))
}

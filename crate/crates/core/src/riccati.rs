//! Modified algebraic Riccati inequality
//! `P > A'PA − γ A'PB(B'PB)⁻¹B'PA` and its critical value γ_c.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::mjls::{AgentModel, GainMatrix};

/// Relative Frobenius change at which the fixed-point iteration stops.
pub const MARE_REL_TOL: f64 = 1e-10;
/// Trace beyond which the iteration is declared divergent.
pub const MARE_DIVERGENCE_TRACE: f64 = 1e12;
pub const MARE_MAX_ITER: usize = 100_000;
/// Smallest acceptable residual for a returned solution.
pub const MARE_MARGIN: f64 = 1e-9;
/// Target bracket width for the bisection search of γ_c.
pub const GAMMA_C_BRACKET: f64 = 1e-5;

const CERTIFICATE_EVERY: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MareSolution {
    #[serde(with = "linalg::serde_rows")]
    pub p: Matrix,
    pub gamma: f64,
    /// Smallest eigenvalue of `P − A'PA + γ A'PB(B'PB)⁻¹B'PA`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MareOutcome {
    Feasible(MareSolution),
    /// The iteration diverged or stalled without a certificate; γ is taken
    /// to be at or below γ_c.
    Infeasible { iterations: usize, trace: f64 },
}

impl MareOutcome {
    pub fn solution(self) -> Option<MareSolution> {
        match self {
            Self::Feasible(s) => Some(s),
            Self::Infeasible { .. } => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Self::Feasible(_))
    }
}

/// `A'PB(B'PB)⁻¹B'PA`. With `strict`, a `B'PB` that is numerically
/// singular relative to its norm is an error.
fn innovation_term(model: &AgentModel, p: &Matrix, strict: bool) -> Result<Matrix> {
    let a = model.a();
    let b = model.b();
    let pb = p * b;
    let bpb = linalg::symmetrize(&(b.transpose() * &pb));
    let chol = nalgebra::Cholesky::new(bpb.clone()).ok_or(Error::SingularInnovation)?;
    let scale = bpb.norm().max(1e-300);
    let min_pivot = chol.l().diagonal().iter().fold(f64::INFINITY, |m, &v| m.min(v.abs()));
    if strict && min_pivot * min_pivot < 1e-14 * scale {
        return Err(Error::SingularInnovation);
    }
    let bpa = pb.transpose() * a;
    Ok(linalg::symmetrize(&(bpa.transpose() * chol.solve(&bpa))))
}

/// Smallest eigenvalue of `P − A'PA + γ A'PB(B'PB)⁻¹B'PA`.
pub fn mare_residual(model: &AgentModel, p: &Matrix, gamma: f64) -> Result<f64> {
    residual(model, p, gamma, true)
}

fn residual(model: &AgentModel, p: &Matrix, gamma: f64, strict: bool) -> Result<f64> {
    let a = model.a();
    let g = innovation_term(model, p, strict)?;
    let lhs = p - a.transpose() * p * a + g * gamma;
    Ok(linalg::min_sym_eigenvalue(&lhs))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Precondition(format!("gamma={gamma} not in (0, 1]")));
    }
    Ok(())
}

/// Fixed-point iteration `P ← A'PA − γ A'PB(B'PB)⁻¹B'PA + I` from `P = I`.
///
/// With `early_exit` the first iterate that already satisfies the strict
/// inequality (checked every few steps) is returned; otherwise the
/// iteration runs to convergence.
fn iterate(model: &AgentModel, gamma: f64, early_exit: bool) -> Result<MareOutcome> {
    check_gamma(gamma)?;
    let n = model.n();
    let a = model.a();
    let at = a.transpose();
    let eye = Matrix::identity(n, n);
    let mut p = eye.clone();
    for it in 1..=MARE_MAX_ITER {
        // Iterates satisfy P >= I, so B'PB >= B'B is positive definite; a
        // badly conditioned B'PB only appears while P blows up along one
        // direction, and a failed factorization is counted as divergence.
        let g = match innovation_term(model, &p, false) {
            Ok(g) => g,
            Err(_) => {
                return Ok(MareOutcome::Infeasible {
                    iterations: it,
                    trace: p.trace(),
                })
            }
        };
        let next = linalg::symmetrize(&(&at * &p * a - &g * gamma + &eye));
        let trace = next.trace();
        if !trace.is_finite() || trace > MARE_DIVERGENCE_TRACE {
            return Ok(MareOutcome::Infeasible {
                iterations: it,
                trace,
            });
        }
        let change = (&next - &p).norm() / next.norm();
        // P_k − g(P_k) = P_k − P_{k+1} + I certifies P_k without extra work.
        let certify = early_exit && it % CERTIFICATE_EVERY == 0;
        if certify {
            let resid = linalg::min_sym_eigenvalue(&(&p - &next + &eye));
            if resid >= MARE_MARGIN {
                return Ok(MareOutcome::Feasible(MareSolution {
                    p,
                    gamma,
                    residual: resid,
                    iterations: it,
                    converged: false,
                }));
            }
        }
        p = next;
        if change < MARE_REL_TOL {
            let residual = residual(model, &p, gamma, false)?;
            return Ok(MareOutcome::Feasible(MareSolution {
                p,
                gamma,
                residual,
                iterations: it,
                converged: true,
            }));
        }
    }
    // Out of budget: keep the last iterate only if it certifies itself.
    let residual = residual(model, &p, gamma, false)?;
    if residual >= MARE_MARGIN {
        Ok(MareOutcome::Feasible(MareSolution {
            p,
            gamma,
            residual,
            iterations: MARE_MAX_ITER,
            converged: false,
        }))
    } else {
        Ok(MareOutcome::Infeasible {
            iterations: MARE_MAX_ITER,
            trace: p.trace(),
        })
    }
}

/// Solves the MARE at `gamma` by the offset fixed-point iteration.
pub fn mare_solve(model: &AgentModel, gamma: f64) -> Result<MareOutcome> {
    iterate(model, gamma, false)
}

/// Feasibility of the MARE at `gamma`, stopping at the first certified
/// iterate.
pub fn mare_feasible(model: &AgentModel, gamma: f64) -> Result<MareOutcome> {
    iterate(model, gamma, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaCMethod {
    RankOneClosedForm,
    InvertibleBClosedForm,
    Bisection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalValue {
    pub gamma_c: f64,
    pub method: GammaCMethod,
    /// (infeasible, feasible) end points; equal for closed forms.
    pub bracket: (f64, f64),
    pub bracket_width: f64,
}

impl CriticalValue {
    /// Whether `gamma` lies inside the uncertainty bracket, where the
    /// comparison with γ_c is undecided.
    pub fn undecided_at(&self, gamma: f64) -> bool {
        self.bracket_width > 0.0 && gamma > self.bracket.0 && gamma <= self.bracket.1
    }

    /// `gamma > γ_c`, conservatively requiring the whole bracket below.
    pub fn exceeded_by(&self, gamma: f64) -> bool {
        if self.bracket_width > 0.0 {
            gamma > self.bracket.1
        } else {
            gamma > self.gamma_c
        }
    }
}

/// Critical value of the MARE. Closed forms when `B` has one column
/// (1 − 1/Π|λ_i(A)|²) or is square and invertible (1 − 1/max|λ_i(A)|²),
/// both valid when no eigenvalue of `A` lies strictly inside the unit
/// disk; bisection otherwise.
pub fn gamma_c(model: &AgentModel) -> Result<CriticalValue> {
    if model.all_eigenvalues_unstable() {
        let moduli = model.eigenvalue_moduli();
        if model.m() == 1 {
            let prod: f64 = moduli.iter().map(|m| m * m).product();
            let g = 1.0 - 1.0 / prod;
            return Ok(closed(g.max(0.0), GammaCMethod::RankOneClosedForm));
        }
        if model.m() == model.n() {
            let max = moduli.iter().copied().fold(0.0, f64::max);
            let g = 1.0 - 1.0 / (max * max);
            return Ok(closed(g.max(0.0), GammaCMethod::InvertibleBClosedForm));
        }
    }
    gamma_c_bisection(model, GAMMA_C_BRACKET)
}

fn closed(g: f64, method: GammaCMethod) -> CriticalValue {
    CriticalValue {
        gamma_c: g,
        method,
        bracket: (g, g),
        bracket_width: 0.0,
    }
}

/// Bisection on (0, 1] with [`mare_feasible`] as the oracle.
pub fn gamma_c_bisection(model: &AgentModel, width: f64) -> Result<CriticalValue> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if !mare_feasible(model, hi)?.is_feasible() {
        return Err(Error::Numerical(
            "MARE infeasible at gamma = 1 for a controllable pair".into(),
        ));
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mare_feasible(model, mid)?.is_feasible() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalValue {
        gamma_c: 0.5 * (lo + hi),
        method: GammaCMethod::Bisection,
        bracket: (lo, hi),
        bracket_width: hi - lo,
    })
}

/// `K = kappa (B'PB)⁻¹ B'PA`.
pub fn optimal_gain(p: &Matrix, model: &AgentModel, kappa: f64) -> Result<GainMatrix> {
    let b = model.b();
    let bpb = linalg::symmetrize(&(b.transpose() * p * b));
    let chol = nalgebra::Cholesky::new(bpb).ok_or(Error::SingularInnovation)?;
    let bpa = b.transpose() * p * model.a();
    GainMatrix::new(chol.solve(&bpa) * kappa)
}

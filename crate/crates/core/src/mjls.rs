//! Second-moment stability of Markov jump linear systems.
//!
//! A jump system `x(t+1) = S_{θ(t)} x(t)` driven by a Markov chain with
//! transition matrix `Q` is mean-square stable iff the spectral radius of
//! `(Q' ⊗ I) diag(S_i ⊗ S_i)` is below one. Block `(j, i)` of that operator
//! is `Q[i][j] (S_i ⊗ S_i)`; acting on second moments it maps
//! `X_j ← Σ_i Q[i][j] S_i X_i S_i'`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{EdgeChannel, TwoStateChannel};
use crate::error::{Error, Result};
use crate::graph::{EdgeDecomposition, SpectrumSummary};
use crate::linalg::{self, Matrix};

/// Dense assembly refuses operators with more rows than this.
pub const DENSE_ROW_LIMIT: usize = 40_000;
/// Above this many rows the radius is computed by cone power iteration.
pub const DENSE_EIG_THRESHOLD: usize = 1_200;
/// Relative change in the power-iteration growth estimate at which it stops.
pub const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 200_000;

/// Agent dynamics `x(t+1) = A x(t) + B u(t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentModel {
    #[serde(with = "linalg::serde_rows")]
    a: Matrix,
    #[serde(with = "linalg::serde_rows")]
    b: Matrix,
    det_a: f64,
    rho_a: f64,
    warnings: Vec<String>,
}

impl AgentModel {
    /// Requires `A` square, `B` with full column rank and `(A, B)`
    /// controllable. Eigenvalues strictly inside the unit disk only produce
    /// a warning.
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(Error::InvalidModel(format!(
                "A must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::InvalidModel(format!(
                "B must have {n} rows and at least one column, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite entry in A or B".into()));
        }
        if linalg::rank(&b, 1e-10) != b.ncols() {
            return Err(Error::InvalidModel("B does not have full column rank".into()));
        }
        let m = b.ncols();
        let mut ctrb = Matrix::zeros(n, n * m);
        let mut blk = b.clone();
        for k in 0..n {
            ctrb.columns_mut(k * m, m).copy_from(&blk);
            blk = &a * blk;
        }
        if linalg::rank(&ctrb, 1e-10) != n {
            return Err(Error::InvalidModel("(A, B) is not controllable".into()));
        }
        let eig = linalg::eigenvalues(&a)?;
        let rho_a = eig.iter().map(|&(r, i)| r.hypot(i)).fold(0.0, f64::max);
        let mut warnings = Vec::new();
        let inside: Vec<_> = eig
            .iter()
            .map(|&(r, i)| r.hypot(i))
            .filter(|&m| m < 1.0 - 1e-12)
            .collect();
        if !inside.is_empty() {
            warnings.push(format!(
                "A has {} eigenvalue(s) strictly inside the unit disk; closed-form results assume none",
                inside.len()
            ));
        }
        Ok(Self {
            det_a: a.determinant(),
            a,
            b,
            rho_a,
            warnings,
        })
    }

    /// Scalar agent `x(t+1) = a x(t) + u(t)`.
    pub fn scalar(a: f64) -> Result<Self> {
        Self::new(Matrix::from_element(1, 1, a), Matrix::from_element(1, 1, 1.0))
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn det_a(&self) -> f64 {
        self.det_a
    }

    pub fn rho_a(&self) -> f64 {
        self.rho_a
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Every eigenvalue of A on or outside the unit circle.
    pub fn all_eigenvalues_unstable(&self) -> bool {
        self.warnings.is_empty()
    }

    /// Eigenvalue moduli of A.
    pub fn eigenvalue_moduli(&self) -> Vec<f64> {
        linalg::eigenvalues(&self.a)
            .map(|e| e.into_iter().map(|(r, i)| r.hypot(i)).collect())
            .unwrap_or_default()
    }

    /// `A + lambda B K`.
    pub fn closed_loop(&self, k: &GainMatrix, lambda: f64) -> Matrix {
        &self.a + (&self.b * k.matrix()) * lambda
    }
}

/// Protocol gain `K` (m×n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GainMatrix(#[serde(with = "linalg::serde_rows")] Matrix);

impl GainMatrix {
    pub fn new(k: Matrix) -> Result<Self> {
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("gain has non-finite entries".into()));
        }
        Ok(Self(k))
    }

    pub fn zeros(model: &AgentModel) -> Self {
        Self(Matrix::zeros(model.m(), model.n()))
    }

    pub fn scalar(k: f64) -> Self {
        Self(Matrix::from_element(1, 1, k))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn check_dims(&self, model: &AgentModel) -> Result<()> {
        if self.0.shape() != (model.m(), model.n()) {
            return Err(Error::DimensionMismatch(format!(
                "gain is {}x{}, model needs {}x{}",
                self.0.nrows(),
                self.0.ncols(),
                model.m(),
                model.n()
            )));
        }
        Ok(())
    }
}

/// Outcome of a fixed-gain second-moment test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub radii: Vec<f64>,
    pub worst_index: usize,
    pub worst_radius: f64,
}

impl StabilityVerdict {
    fn from_radii(radii: Vec<f64>) -> Self {
        let (worst_index, worst_radius) = radii
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, r)| if r > acc.1 { (i, r) } else { acc });
        Self {
            stable: worst_radius < 1.0,
            radii,
            worst_index,
            worst_radius,
        }
    }
}

/// Second-moment operator of a Markov jump linear system.
#[derive(Debug, Clone)]
pub struct JumpOperator {
    transition: Matrix,
    modes: Vec<Matrix>,
}

impl JumpOperator {
    pub fn new(transition: Matrix, modes: Vec<Matrix>) -> Result<Self> {
        let o = modes.len();
        if o == 0 || transition.shape() != (o, o) {
            return Err(Error::DimensionMismatch(format!(
                "{} modes with a {}x{} transition matrix",
                o,
                transition.nrows(),
                transition.ncols()
            )));
        }
        let d = modes[0].nrows();
        if modes.iter().any(|s| s.shape() != (d, d)) {
            return Err(Error::DimensionMismatch("modes must share one square shape".into()));
        }
        Ok(Self { transition, modes })
    }

    /// Identical-loss operator for Laplacian eigenvalue `lambda`: modes
    /// `A` (lost) and `A + lambda B K` (delivered).
    pub fn identical(
        model: &AgentModel,
        k: &GainMatrix,
        lambda: f64,
        channel: &TwoStateChannel,
    ) -> Result<Self> {
        k.check_dims(model)?;
        Self::new(
            channel.transition(),
            vec![model.a().clone(), model.closed_loop(k, lambda)],
        )
    }

    /// Reduced tree-edge operator with modes
    /// `S_i = I ⊗ A + (M Γ_i R') ⊗ B K`.
    pub fn edge(
        model: &AgentModel,
        k: &GainMatrix,
        decomp: &EdgeDecomposition,
        channel: &EdgeChannel,
    ) -> Result<Self> {
        k.check_dims(model)?;
        if channel.n_edges() != decomp.n_edges() {
            return Err(Error::DimensionMismatch(format!(
                "channel covers {} edges, graph has {}",
                channel.n_edges(),
                decomp.n_edges()
            )));
        }
        let modes = (0..channel.n_states())
            .map(|i| edge_mode(model, k, decomp, channel, i))
            .collect();
        Self::new(channel.transition().clone(), modes)
    }

    pub fn modes(&self) -> &[Matrix] {
        &self.modes
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    /// Rows of the assembled operator.
    pub fn dim(&self) -> usize {
        let d = self.modes[0].nrows();
        self.modes.len() * d * d
    }

    pub fn assemble(&self) -> Result<Matrix> {
        let rows = self.dim();
        if rows > DENSE_ROW_LIMIT {
            return Err(Error::OperatorTooLarge {
                rows,
                limit: DENSE_ROW_LIMIT,
            });
        }
        let d = self.modes[0].nrows();
        let b = d * d;
        let krons: Vec<Matrix> = self.modes.iter().map(|s| linalg::kron(s, s)).collect();
        let o = self.modes.len();
        let mut h = Matrix::zeros(rows, rows);
        for j in 0..o {
            for (i, kr) in krons.iter().enumerate() {
                let w = self.transition[(i, j)];
                if w != 0.0 {
                    h.view_mut((j * b, i * b), (b, b)).copy_from(&(kr * w));
                }
            }
        }
        Ok(h)
    }

    /// `X_j ← Σ_i Q[i][j] S_i X_i S_i'`.
    pub fn apply(&self, x: &[Matrix]) -> Vec<Matrix> {
        let d = self.modes[0].nrows();
        let pushed: Vec<Matrix> = self
            .modes
            .iter()
            .zip(x)
            .map(|(s, xi)| s * xi * s.transpose())
            .collect();
        (0..self.modes.len())
            .map(|j| {
                let mut acc = Matrix::zeros(d, d);
                for (i, p) in pushed.iter().enumerate() {
                    let w = self.transition[(i, j)];
                    if w != 0.0 {
                        acc += p * w;
                    }
                }
                acc
            })
            .collect()
    }

    /// Spectral radius: dense eigenvalues up to [`DENSE_EIG_THRESHOLD`]
    /// rows, cone power iteration beyond.
    pub fn spectral_radius(&self) -> Result<f64> {
        if self.dim() <= DENSE_EIG_THRESHOLD {
            spectral_radius(&self.assemble()?)
        } else {
            Ok(self.spectral_radius_power(POWER_TOL, POWER_MAX_ITER))
        }
    }

    /// Power iteration on the positive cone of block-PSD matrices started
    /// from identities. The operator preserves that cone, so its spectral
    /// radius is a dominant eigenvalue with a PSD eigenvector and the trace
    /// growth ratio converges to it.
    pub fn spectral_radius_power(&self, tol: f64, max_iter: usize) -> f64 {
        let d = self.modes[0].nrows();
        let mut x: Vec<Matrix> = vec![Matrix::identity(d, d); self.modes.len()];
        let norm = |x: &[Matrix]| x.iter().map(|m| m.trace()).sum::<f64>();
        let mut prev = f64::NAN;
        let mut est = 0.0;
        for it in 0..max_iter {
            let y = self.apply(&x);
            let ny = norm(&y);
            let nx = norm(&x);
            if ny <= 0.0 || !ny.is_finite() {
                return if ny == 0.0 { 0.0 } else { f64::INFINITY };
            }
            est = ny / nx;
            x = y.into_iter().map(|m| m / ny).collect();
            if it > 10 && ((est - prev) / est).abs() < tol {
                break;
            }
            prev = est;
        }
        est
    }
}

fn edge_mode(
    model: &AgentModel,
    k: &GainMatrix,
    decomp: &EdgeDecomposition,
    channel: &EdgeChannel,
    state: usize,
) -> Matrix {
    let zeta: Vec<f64> = decomp
        .to_decomposition_order(&channel.states()[state])
        .into_iter()
        .map(f64::from)
        .collect();
    let coupling = decomp.weighted_tree_coupling(&zeta);
    let nt = decomp.n_tree_edges();
    linalg::kron(&Matrix::identity(nt, nt), model.a())
        + linalg::kron(&coupling, &(model.b() * k.matrix()))
}

/// `𝒮_i(K)` for state `state` of the edge channel.
pub fn edge_mode_matrix(
    model: &AgentModel,
    k: &GainMatrix,
    decomp: &EdgeDecomposition,
    channel: &EdgeChannel,
    state: usize,
) -> Result<Matrix> {
    Ok(JumpOperator::edge(model, k, decomp, channel)?.modes[state].clone())
}

/// The 2n²×2n² operator ℋ_i for one Laplacian eigenvalue.
pub fn build_identical_operator(
    model: &AgentModel,
    k: &GainMatrix,
    lambda_i: f64,
    channel: &TwoStateChannel,
) -> Result<Matrix> {
    JumpOperator::identical(model, k, lambda_i, channel)?.assemble()
}

/// `(Q' ⊗ I) diag(𝒮_i ⊗ 𝒮_i)` for the reduced tree-edge dynamics.
pub fn build_edge_operator(
    model: &AgentModel,
    k: &GainMatrix,
    decomp: &EdgeDecomposition,
    channel: &EdgeChannel,
) -> Result<Matrix> {
    JumpOperator::edge(model, k, decomp, channel)?.assemble()
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    linalg::spectral_radius_dense(m)
}

/// Mean-square stability of the consensus error under identical losses:
/// stable iff ρ(ℋ_i) < 1 for every nonzero Laplacian eigenvalue.
pub fn ms_stable_identical(
    model: &AgentModel,
    k: &GainMatrix,
    spectrum: &SpectrumSummary,
    channel: &TwoStateChannel,
) -> Result<StabilityVerdict> {
    k.check_dims(model)?;
    let radii = spectrum
        .nonzero()
        .par_iter()
        .map(|&lambda| JumpOperator::identical(model, k, lambda, channel)?.spectral_radius())
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityVerdict::from_radii(radii))
}

/// Mean-square stability of the reduced tree-edge dynamics under a joint
/// edge loss process.
pub fn ms_stable_edge(
    model: &AgentModel,
    k: &GainMatrix,
    decomp: &EdgeDecomposition,
    channel: &EdgeChannel,
) -> Result<StabilityVerdict> {
    let op = JumpOperator::edge(model, k, decomp, channel)?;
    Ok(StabilityVerdict::from_radii(vec![op.spectral_radius()?]))
}

/// Margins (smallest eigenvalues) of the coupled Lyapunov inequalities
/// `P_i − Σ_j Q[i][j] S_j' P_j S_j ≻ 0` for given candidate `P_i`.
/// Verification only: nothing here searches for `P` or `K`.
pub fn coupled_lyapunov_margins(op: &JumpOperator, p: &[Matrix]) -> Result<Vec<f64>> {
    let o = op.modes.len();
    if p.len() != o || p.iter().any(|pi| pi.shape() != op.modes[0].shape()) {
        return Err(Error::DimensionMismatch("one P per mode with the mode's shape".into()));
    }
    let pulled: Vec<Matrix> = op
        .modes
        .iter()
        .zip(p)
        .map(|(s, pj)| s.transpose() * pj * s)
        .collect();
    Ok((0..o)
        .map(|i| {
            let mut rhs = p[i].clone();
            for (j, pj) in pulled.iter().enumerate() {
                rhs -= pj * op.transition[(i, j)];
            }
            linalg::min_sym_eigenvalue(&rhs)
        })
        .collect())
}

//! Dense matrix helpers shared by the analysis modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

// Shifted-QR sweeps allowed per matrix row before giving up.
const SCHUR_ITER_PER_ROW: usize = 1000;

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of a general square matrix as (re, im) pairs.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<(f64, f64)>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let max_iter = SCHUR_ITER_PER_ROW * m.nrows();
    if let Some(schur) = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, max_iter) {
        return Ok(schur.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect());
    }
    // Deflation is relative to neighbouring diagonal entries and can stall on
    // clusters of exact zeros (sparse Kronecker operators). Shift them away.
    let shift = m.norm();
    let n = m.nrows();
    let schur = nalgebra::Schur::try_new(m + Matrix::identity(n, n) * shift, f64::EPSILON, max_iter)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re - shift, z.im))
        .collect())
}

/// Largest eigenvalue modulus of a dense square matrix.
pub fn spectral_radius_dense(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?
        .into_iter()
        .map(|(re, im)| re.hypot(im))
        .fold(0.0, f64::max))
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut ev: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_sym_eigenvalue(m: &Matrix) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

pub fn max_sym_eigenvalue(m: &Matrix) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(f64::NEG_INFINITY)
}

/// Numerical rank from singular values, relative tolerance `rtol`.
pub fn rank(m: &Matrix, rtol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * smax).count()
}

/// Least-squares solution of `a x = b` (column by column).
pub fn lstsq(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-12)
        .map_err(|e| Error::Numerical(format!("least squares failed: {e}")))
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(m: &Matrix) -> Option<Matrix> {
    nalgebra::Cholesky::new(symmetrize(m)).map(|c| c.inverse())
}

/// Lower-triangular factor `V` with `m = V V'` for a symmetric positive
/// semidefinite `m`. Pivots at or below `tol * max diag` are treated as
/// zero and their column left empty, so singular PSD inputs factor cleanly.
/// Returns `None` when `m` has a significantly negative direction.
pub fn psd_cholesky(m: &Matrix, tol: f64) -> Option<Matrix> {
    let n = m.nrows();
    let a = symmetrize(m);
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let thresh = tol * scale;
    let mut v = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= v[(j, k)] * v[(j, k)];
        }
        if d < -thresh {
            return None;
        }
        if d <= thresh {
            // Zero pivot: the rest of column j must vanish for PSD input.
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= v[(i, k)] * v[(j, k)];
                }
                if s.abs() > thresh.sqrt() * scale.sqrt() {
                    return None;
                }
            }
            continue;
        }
        let piv = d.sqrt();
        v[(j, j)] = piv;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= v[(i, k)] * v[(j, k)];
            }
            v[(i, j)] = s / piv;
        }
    }
    Some(v)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
///
/// Deliberately independent of the LAPACK-style routines used elsewhere; it
/// backs verification code that must not share a path with the solvers.
pub fn jacobi_eigenvalues(m: &Matrix) -> Vec<f64> {
    let n = m.nrows();
    let mut a = symmetrize(m);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        let total: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(Matrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Row-major CSV rendering, for debugging dumps.
pub fn to_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.17e}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Serde adapter storing a matrix as an array of rows.
pub mod serde_rows {
    use super::{from_rows, to_rows, Matrix};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for a list of matrices, each an array of rows.
pub mod serde_rows_vec {
    use super::{from_rows, to_rows, Matrix};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(ms: &[Matrix], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Matrix>, D::Error> {
        let all = Vec::<Vec<Vec<f64>>>::deserialize(d)?;
        all.iter()
            .map(|r| from_rows(r).map_err(serde::de::Error::custom))
            .collect()
    }
}

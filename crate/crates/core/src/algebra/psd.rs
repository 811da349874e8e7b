use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Matrix, Quaternion, Scalar};
use crate::{Error, Result};

/// Default PSD tolerance, relative to trace / dimension.
pub const DEFAULT_PSD_TOL: f64 = 1e-10;

/// Outcome of [`psd_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdReport {
    pub min_eig: f64,
    pub is_psd: bool,
}

fn hermitian_tol<T: Scalar>(m: &Matrix<T>) -> f64 {
    let scale = m
        .as_slice()
        .iter()
        .map(|x| x.norm_sqr().sqrt())
        .fold(1.0f64, f64::max);
    1e-12 * scale
}

fn ensure_hermitian<T: Scalar>(m: &Matrix<T>) -> Result<()> {
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix has non-finite entries".into()));
    }
    let defect = m.hermiticity_defect();
    if defect > hermitian_tol(m) {
        return Err(Error::Structural(format!(
            "matrix is not Hermitian (defect {defect:.3e})"
        )));
    }
    Ok(())
}

/// Complex embedding of a Hermitian matrix. Quaternionic entries become the
/// 2x2 blocks `[[a+bi, c+di], [-c+di, a-bi]]`; real and complex entries are
/// copied unchanged.
pub fn embed<T: Scalar>(m: &Matrix<T>) -> Matrix<Complex64> {
    let n = m.dim();
    let e = T::EMBED;
    let mut out = Matrix::<Complex64>::zeros(n * e);
    for i in 0..n {
        for j in 0..n {
            let block = m.get(i, j).embed_block();
            for (r, row) in block.iter().enumerate().take(e) {
                for (c, &v) in row.iter().enumerate().take(e) {
                    out.set(i * e + r, j * e + c, v);
                }
            }
        }
    }
    out
}

/// Embeds a quaternionic Hermitian n x n matrix into a 2n x 2n complex
/// Hermitian matrix. Each eigenvalue of the quaternionic matrix appears
/// twice in the result.
pub fn quat_embed(q: &Matrix<Quaternion>) -> Result<Matrix<Complex64>> {
    ensure_hermitian(q)?;
    Ok(embed(q))
}

/// Ascending eigenvalues of a Hermitian matrix, computed on the complex
/// embedding (so quaternionic spectra come out doubled).
pub fn hermitian_eigenvalues<T: Scalar>(m: &Matrix<T>) -> Result<Vec<f64>> {
    ensure_hermitian(m)?;
    let c = embed(m);
    let n = c.dim();
    let dm = DMatrix::<Complex64>::from_row_slice(n, n, c.as_slice());
    let mut ev: Vec<f64> = dm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

/// Smallest eigenvalue and PSD verdict, `is_psd <=> min_eig >= -tol * trace / dim`.
///
/// Uses a full Hermitian eigen-decomposition so that `min_eig` is available
/// for diagnostics. Quaternionic input is embedded first.
pub fn psd_check<T: Scalar>(h: &Matrix<T>, tol: f64) -> Result<PsdReport> {
    if !tol.is_finite() || tol < 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be >= 0, got {tol}")));
    }
    let ev = hermitian_eigenvalues(h)?;
    let min_eig = ev[0];
    let threshold = tol * (h.trace().abs() / h.dim() as f64);
    Ok(PsdReport {
        min_eig,
        is_psd: min_eig >= -threshold,
    })
}

/// Fast PSD verdict via LDL* of `M + tol * trace/dim * I`; same convention as
/// [`psd_check`] up to the boundary band of width ~tol.
pub fn is_psd_fast<T: Scalar>(h: &Matrix<T>, tol: f64) -> bool {
    let n = h.dim();
    let shift = tol * (h.trace().abs() / n as f64);
    let mut buf = h.as_slice().to_vec();
    super::ldl_positive(&mut buf, n, shift.max(f64::MIN_POSITIVE))
}

use crate::qmc::{LdsStream, StreamKind};
use crate::{invalid, Result};

use super::special::gamma_p_inv;
use super::QuadratureResult;

/// Number of index batches used for QMC error estimates.
pub const QMC_BATCHES: u64 = 16;

fn batch_estimate(means: &[f64]) -> (f64, f64) {
    let b = means.len() as f64;
    let mean = means.iter().sum::<f64>() / b;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}

fn batched<F: FnMut(&[f64]) -> f64>(stream: &LdsStream, n_points: u64, mut g: F) -> Result<QuadratureResult> {
    if n_points < QMC_BATCHES {
        return Err(invalid(format!("need at least {QMC_BATCHES} points (one per batch), got {n_points}")));
    }
    let per = n_points / QMC_BATCHES;
    let mut buf = vec![0.0; stream.dim()];
    let mut means = Vec::with_capacity(QMC_BATCHES as usize);
    for b in 0..QMC_BATCHES {
        let mut acc = 0.0;
        for k in b * per..(b + 1) * per {
            stream.point(k, &mut buf)?;
            acc += g(&buf);
        }
        means.push(acc / per as f64);
    }
    let (value, err) = batch_estimate(&means);
    Ok(QuadratureResult {
        value,
        abs_error_estimate: err,
        evaluations: per * QMC_BATCHES,
    })
}

/// QMC integral of `f` over the standard `dim`-simplex `{x >= 0, sum x <= 1}`.
///
/// Points are Sobol points mapped through normalized exponentials; the
/// error estimate comes from the spread of 16 contiguous index batches.
pub fn integrate_simplex_qmc<F: FnMut(&[f64]) -> f64>(mut f: F, dim: usize, n_points: u64, seed: u64) -> Result<QuadratureResult> {
    if dim == 0 {
        return Err(invalid("simplex dimension must be positive"));
    }
    let stream = LdsStream::new(StreamKind::Sobol, dim + 1, seed)?;
    let vol = 1.0 / (1..=dim).map(|k| k as f64).product::<f64>();
    let mut x = vec![0.0; dim + 1];
    let mut r = batched(&stream, n_points, |u| {
        let mut s = 0.0;
        for (xi, &ui) in x.iter_mut().zip(u) {
            *xi = -(ui.ln());
            s += *xi;
        }
        for xi in x.iter_mut() {
            *xi /= s;
        }
        f(&x[..dim])
    })?;
    r.value *= vol;
    r.abs_error_estimate *= vol;
    Ok(r)
}

/// QMC expectation of `f` under the Dirichlet distribution with parameters
/// `alpha`; `f` receives the full probability vector (length `alpha.len()`).
pub fn expect_dirichlet_qmc<F: FnMut(&[f64]) -> f64>(mut f: F, alpha: &[f64], n_points: u64, seed: u64) -> Result<QuadratureResult> {
    if alpha.len() < 2 || alpha.iter().any(|&a| !(a > 0.0)) {
        return Err(invalid("Dirichlet parameters must be positive and at least two"));
    }
    let stream = LdsStream::new(StreamKind::Sobol, alpha.len(), seed)?;
    let mut x = vec![0.0; alpha.len()];
    batched(&stream, n_points, |u| {
        let mut s = 0.0;
        for ((xi, &ui), &a) in x.iter_mut().zip(u).zip(alpha) {
            *xi = gamma_p_inv(a, ui);
            s += *xi;
        }
        for xi in x.iter_mut() {
            *xi /= s;
        }
        f(&x)
    })
}

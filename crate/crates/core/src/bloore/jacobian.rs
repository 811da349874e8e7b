use crate::algebra::Dyson;
use crate::numerics::{integrate_adaptive, Domain};
use crate::{invalid, Result};

/// Relative tolerance of the inner quadrature in [`jacobian_j`].
pub const JACOBIAN_REL_TOL: f64 = 1e-8;

/// Eliminates rho33 in favour of mu at fixed (rho11, rho22).
///
/// Returns `(rho33, rho44, |d rho33 / d mu|)` with
/// rho33 = rho11 (1 - rho11 - rho22) / (mu^2 rho22 + rho11).
pub fn rho33_from_mu(r11: f64, r22: f64, mu: f64) -> (f64, f64, f64) {
    let rest = 1.0 - r11 - r22;
    let den = mu * mu * r22 + r11;
    let r33 = r11 * rest / den;
    let r44 = rest * mu * mu * r22 / den;
    let d = 2.0 * mu * r11 * r22 * rest / (den * den);
    (r33, r44, d)
}

/// Univariate jacobian J(mu): the Bloore weight (rho11 rho22 rho33 rho44)^{3 beta/2}
/// transformed to mu and integrated over (rho11, rho22).
///
/// 2 int_0^1 J(mu) dmu equals Gamma(3beta/2+1)^4 / Gamma(6beta+4).
pub fn jacobian_j(mu: f64, dyson: Dyson) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(invalid(format!("mu must be positive and finite, got {mu}")));
    }
    let e = 1.5 * dyson.beta_f64();
    let f = |x: &[f64]| {
        let (a, b) = (x[0], x[1]);
        let (r33, r44, d) = rho33_from_mu(a, b, mu);
        let p = a * b * r33 * r44;
        if p <= 0.0 {
            return 0.0;
        }
        p.powf(e) * d
    };
    Ok(integrate_adaptive(f, &Domain::Simplex(2), JACOBIAN_REL_TOL)?.value)
}

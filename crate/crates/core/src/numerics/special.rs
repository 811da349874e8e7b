use statrs::function::{beta, erf, gamma};

use crate::{invalid, Result};

/// Catalan's constant G = sum_k (-1)^k / (2k+1)^2.
pub const CATALAN: f64 = 0.915_965_594_177_219_015_054_603_514_932_384_110_774;

/// Mathematical constants used across the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    pub catalan: f64,
    pub pi: f64,
}

pub const CONSTANTS: Constants = Constants {
    catalan: CATALAN,
    pi: std::f64::consts::PI,
};

/// Sum of the alternating series sum_k (-1)^k a_k by the Cohen-Villegas-Zagier
/// acceleration (algorithm 1), exact for moment sequences such as 1/(2k+1)^2.
pub fn alternating_sum(a: impl Fn(usize) -> f64, n: usize) -> f64 {
    let nf = n as f64;
    let mut d = (3.0 + 8f64.sqrt()).powf(nf);
    d = 0.5 * (d + 1.0 / d);
    let mut b = -1.0;
    let mut c = -d;
    let mut s = 0.0;
    for k in 0..n {
        let kf = k as f64;
        c = b - c;
        s += c * a(k);
        b *= (kf + nf) * (kf - nf) / ((kf + 0.5) * (kf + 1.0));
    }
    s / d
}

/// Regularized incomplete beta function I_x(a, b).
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(a > 0.0) || !(b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(invalid(format!("reg_inc_beta needs x in [0,1], a,b > 0; got x={x}, a={a}, b={b}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    Ok(beta::beta_reg(a, b, x))
}

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p)
}

/// Inverse of the regularized lower incomplete gamma function P(a, .).
pub fn gamma_p_inv(a: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let lga = gamma::ln_gamma(a);
    // Wilson-Hilferty start, with a small-p power law fallback
    let z = normal_quantile(p);
    let wh = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * a.sqrt());
    let mut x = if wh > 0.0 { a * wh * wh * wh } else { 0.0 };
    let small = ((p.ln() + gamma::ln_gamma(a + 1.0)) / a).exp();
    if x <= 0.0 || x < small.min(1.0) * 0.5 {
        x = small;
    }
    for _ in 0..60 {
        let f = gamma::gamma_lr(a, x) - p;
        let logpdf = (a - 1.0) * x.ln() - x - lga;
        let pdf = logpdf.exp();
        if pdf == 0.0 || !pdf.is_finite() {
            break;
        }
        let step = f / pdf;
        // Halley correction
        let corr = 1.0 - 0.5 * step * ((a - 1.0) / x - 1.0);
        let step = if corr.abs() > 0.1 { step / corr } else { step };
        let mut next = x - step;
        if next <= 0.0 {
            next = 0.5 * x;
        }
        let done = (next - x).abs() <= 1e-14 * next;
        x = next;
        if done {
            break;
        }
    }
    x
}

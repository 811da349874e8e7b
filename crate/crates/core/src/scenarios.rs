//! Low-dimensional two-qubit scenarios with one or two free off-diagonal
//! entries: closed-form separability functions, their numeric
//! re-derivation, and total/separable volumes by nested quadrature.

use std::cell::Cell;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::numerics::{inner_integral, integrate_1d, GkOptions, QuadratureResult, CATALAN, INNER_TOL_FACTOR};
use crate::{invalid, Error, Result};

/// Relative tolerance of scenario reports.
pub const SCENARIO_REL_TOL: f64 = 1e-8;

/// Scenario catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "hs-23-real")]
    Hs23Real,
    #[serde(rename = "hs-23-complex")]
    Hs23Complex,
    #[serde(rename = "hs-23-trunc")]
    Hs23Trunc,
    #[serde(rename = "hs-23-quat")]
    Hs23Quat,
    #[serde(rename = "hs-1423-real")]
    Hs1423Real,
    #[serde(rename = "hs-1423-complex")]
    Hs1423Complex,
    #[serde(rename = "bures-23-real")]
    Bures23Real,
    #[serde(rename = "bures-23-complex")]
    Bures23Complex,
    #[serde(rename = "bures-23-trunc")]
    Bures23Trunc,
    #[serde(rename = "bures-23-quat")]
    Bures23Quat,
    #[serde(rename = "bures-1423-real")]
    Bures1423Real,
    #[serde(rename = "bures-1423-complex")]
    Bures1423Complex,
    #[serde(rename = "bures-1423-quat")]
    Bures1423Quat,
}

/// Metric of a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    HilbertSchmidt,
    Bures,
}

use Scenario::*;

impl Scenario {
    pub const ALL: [Scenario; 13] = [
        Hs23Real,
        Hs23Complex,
        Hs23Trunc,
        Hs23Quat,
        Hs1423Real,
        Hs1423Complex,
        Bures23Real,
        Bures23Complex,
        Bures23Trunc,
        Bures23Quat,
        Bures1423Real,
        Bures1423Complex,
        Bures1423Quat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Hs23Real => "hs-23-real",
            Hs23Complex => "hs-23-complex",
            Hs23Trunc => "hs-23-trunc",
            Hs23Quat => "hs-23-quat",
            Hs1423Real => "hs-1423-real",
            Hs1423Complex => "hs-1423-complex",
            Bures23Real => "bures-23-real",
            Bures23Complex => "bures-23-complex",
            Bures23Trunc => "bures-23-trunc",
            Bures23Quat => "bures-23-quat",
            Bures1423Real => "bures-1423-real",
            Bures1423Complex => "bures-1423-complex",
            Bures1423Quat => "bures-1423-quat",
        }
    }

    /// Real components per free entry.
    pub fn beta(self) -> u32 {
        match self {
            Hs23Real | Hs1423Real | Bures23Real | Bures1423Real => 1,
            Hs23Complex | Hs1423Complex | Bures23Complex | Bures1423Complex => 2,
            Hs23Trunc | Bures23Trunc => 3,
            Hs23Quat | Bures23Quat | Bures1423Quat => 4,
        }
    }

    pub fn metric(self) -> Metric {
        match self {
            Hs23Real | Hs23Complex | Hs23Trunc | Hs23Quat | Hs1423Real | Hs1423Complex => Metric::HilbertSchmidt,
            _ => Metric::Bures,
        }
    }

    /// Free off-diagonal entries, one-based.
    pub fn free_entries(self) -> &'static [(usize, usize)] {
        if self.is_pair() {
            &[(1, 4), (2, 3)]
        } else {
            &[(2, 3)]
        }
    }

    fn is_pair(self) -> bool {
        matches!(self, Hs1423Real | Hs1423Complex | Bures1423Real | Bures1423Complex | Bures1423Quat)
    }

    /// Constant relating the printed separability function to the product
    /// of single-entry off-diagonal integrals.
    fn catalog_constant(self) -> f64 {
        match self {
            // printed normalization is four times the product of the two
            // polar integrals
            Bures1423Complex => 4.0,
            // only the mu dependence of the three-ball integral is fixed;
            // the constant is the printed mu > 1 value over 2 pi
            Bures23Trunc => (4.0 - 2f64.sqrt() * (3.0 + 2.0 * 2f64.sqrt()).ln()) / 8.0,
            _ => 1.0,
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| invalid(format!("unknown scenario '{s}'")))
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Printed piecewise separability function.
pub fn closed_sepfunc(sc: Scenario, mu: f64) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(invalid(format!("mu must be positive and finite, got {mu}")));
    }
    let m = mu.min(1.0);
    let c = (1.0 - m * m).max(0.0).sqrt();
    // 1 - c and 2 - 2c - m^2 c without cancellation at small m
    let one_minus = |m: f64, c: f64| m * m / (1.0 + c);
    let quat = |m: f64, c: f64| m.powi(4) * (2.0 + c) / ((1.0 + c) * (1.0 + c));
    let pi2 = PI * PI;
    let pi4 = pi2 * pi2;
    let log_term = 2f64.sqrt() * (3.0 + 2.0 * 2f64.sqrt()).ln();
    Ok(match sc {
        Hs23Real => 2.0 * m,
        Hs23Complex => PI * m * m,
        Hs23Trunc => 4.0 * PI * m.powi(3) / 3.0,
        Hs23Quat => pi2 * m.powi(4) / 2.0,
        Hs1423Real => {
            if mu <= 1.0 {
                4.0 * mu
            } else {
                4.0 / mu
            }
        }
        Hs1423Complex => {
            if mu <= 1.0 {
                pi2 * mu * mu
            } else {
                pi2 / (mu * mu)
            }
        }
        Bures23Real => {
            if mu >= 1.0 {
                PI
            } else {
                2.0 * mu.asin()
            }
        }
        Bures23Complex => {
            if mu >= 1.0 {
                2.0 * PI
            } else {
                2.0 * PI * one_minus(m, c)
            }
        }
        Bures23Trunc => {
            if mu > 1.0 {
                pi2 / 8.0 * (4.0 - log_term)
            } else {
                PI / 4.0 * (mu * c - mu.asin()) * (log_term - 4.0)
            }
        }
        Bures23Quat => {
            if mu > 1.0 {
                4.0 * pi2 / 3.0
            } else {
                2.0 / 3.0 * pi2 * quat(m, c)
            }
        }
        Bures1423Real => {
            if mu == 1.0 {
                pi2
            } else if mu > 1.0 {
                2.0 * PI * (1.0 / mu).asin()
            } else {
                2.0 * PI * mu.asin()
            }
        }
        Bures1423Complex => {
            if mu == 1.0 {
                16.0 * pi2
            } else if mu > 1.0 {
                16.0 * pi2 * one_minus(1.0 / mu, (mu * mu - 1.0).sqrt() / mu)
            } else {
                16.0 * pi2 * one_minus(m, c)
            }
        }
        Bures1423Quat => {
            if mu == 1.0 {
                16.0 * pi4 / 9.0
            } else if mu > 1.0 {
                8.0 / 9.0 * pi4 * quat(1.0 / mu, (mu * mu - 1.0).sqrt() / mu)
            } else {
                8.0 / 9.0 * pi4 * quat(m, c)
            }
        }
    })
}

/// [`closed_sepfunc`] divided by its value at mu = 1.
pub fn closed_sepfunc_normalized(sc: Scenario, mu: f64) -> Result<f64> {
    Ok(closed_sepfunc(sc, mu)? / closed_sepfunc(sc, 1.0)?)
}

/// Surface area of the unit sphere in R^beta.
fn sphere_area(beta: u32) -> f64 {
    match beta {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI * PI,
    }
}

/// Integral of the off-diagonal factor (1, or (1 - |w|^2)^{-1/2} for Bures)
/// over the beta-ball of radius r <= 1, in hyperspherical coordinates with
/// |w| = sin t for the Bures factor.
fn ball_integral(metric: Metric, beta: u32, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Ok(0.0);
    }
    let b = beta as i32;
    let opts = GkOptions::rel(1e-13).with_abs(1e-15);
    let radial = match metric {
        Metric::HilbertSchmidt => integrate_1d(|x| x.powi(b - 1), 0.0, r, opts)?.value,
        Metric::Bures => integrate_1d(|t| t.sin().powi(b - 1), 0.0, r.min(1.0).asin(), opts)?.value,
    };
    Ok(sphere_area(beta) * radial)
}

/// Numeric re-derivation of the separability function on a mu grid.
///
/// PPT for the (2,3) entry reads |w23| <= mu; with the (1,4) entry also
/// free it adds |w14| <= 1/mu. Both are intersected with the PSD bound 1.
pub fn derive_sepfunc_numeric(sc: Scenario, mu_grid: &[f64]) -> Result<Vec<f64>> {
    let (metric, beta) = (sc.metric(), sc.beta());
    mu_grid
        .iter()
        .map(|&mu| {
            if !(mu > 0.0) || !mu.is_finite() {
                return Err(invalid(format!("mu must be positive and finite, got {mu}")));
            }
            let v = ball_integral(metric, beta, mu.min(1.0))?;
            let w = if sc.is_pair() { ball_integral(metric, beta, (1.0 / mu).min(1.0))? } else { 1.0 };
            Ok(v * w * sc.catalog_constant())
        })
        .collect()
}

/// Total and separable volumes with their ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub total_volume: f64,
    pub total_error: f64,
    pub separable_volume: f64,
    pub separable_error: f64,
    pub probability: f64,
    pub probability_error: f64,
}

/// Printed (total, separable, probability) values where available.
pub fn published_targets(sc: Scenario) -> Option<(f64, f64, f64)> {
    let pi2 = PI * PI;
    let c = CATALAN;
    match sc {
        Hs23Real => Some((f64::NAN, f64::NAN, 3.0 * PI / 16.0)),
        Hs23Complex => Some((f64::NAN, f64::NAN, 1.0 / 3.0)),
        Hs23Quat => Some((f64::NAN, f64::NAN, 0.1)),
        Bures23Real => Some((pi2 / 12.0, 0.3658435525, 0.4448124200)),
        Bures23Complex => Some((PI.powi(3) / 64.0, pi2 * (4.0 * c - 6.0 + PI) / 64.0, (4.0 * c - 6.0 + PI) / PI)),
        Bures23Quat => Some((PI.powi(4) / 768.0, 0.012954754466, 0.10213883862)),
        Bures1423Real => Some((PI.powi(3) / 64.0, 0.1473885131, 0.3042243652)),
        Bures1423Complex => Some((PI.powi(4) / 192.0, 0.096915844, 0.19102778)),
        Bures1423Quat => Some((PI.powi(6) / 245760.0, 0.000471134100, 0.120436049)),
        _ => None,
    }
}

type Limits<'a> = dyn Fn(usize, &[f64; 3]) -> (f64, f64, Option<f64>) + 'a;

fn nested3(f: &dyn Fn(&[f64; 3]) -> f64, limits: &Limits, level: usize, x: &mut [f64; 3], rel: f64, fails: &Cell<u32>) -> f64 {
    let (a, b, brk) = limits(level, x);
    if !(b > a) {
        return 0.0;
    }
    let breaks: Vec<f64> = brk.into_iter().filter(|&t| t > a && t < b).collect();
    let mut xs = *x;
    inner_integral(
        |t| {
            xs[level] = t;
            if level == 2 {
                f(&xs)
            } else {
                nested3(f, limits, level + 1, &mut xs, rel * INNER_TOL_FACTOR, fails)
            }
        },
        a,
        b,
        &breaks,
        rel,
        fails,
    )
}

fn integrate3(f: &dyn Fn(&[f64; 3]) -> f64, limits: &Limits, rel: f64) -> Result<QuadratureResult> {
    let fails = Cell::new(0);
    let mut x = [0.0; 3];
    let value = nested3(f, limits, 0, &mut x, rel, &fails);
    let r = QuadratureResult {
        value,
        abs_error_estimate: rel * value.abs(),
        evaluations: 0,
    };
    if !value.is_finite() {
        return Err(Error::NonFinite("scenario integrand".into()));
    }
    if fails.get() > 0 {
        return Err(Error::NonConvergence {
            context: format!("{} inner scenario integrals did not converge", fails.get()),
            partial: r,
        });
    }
    Ok(r)
}

/// Bures (2,3) diagonal factor in (rho11, rho22, mu), printed volume elements
/// with the off-diagonal factor removed.
fn bures23_diag(beta: u32, r11: f64, r22: f64, mu: f64) -> f64 {
    let r = 1.0 - r11 - r22;
    if r <= 0.0 || r11 <= 0.0 || r22 <= 0.0 {
        return 0.0;
    }
    let a = r22 * mu * mu + r11;
    let q = mu * mu * r22 * r22 + (1.0 - r11) * r11;
    match beta {
        1 => (r11 * r * r22).sqrt() / (4.0 * a * q.sqrt()),
        2 => r11 * r22 * r / (4.0 * a * q),
        _ => (r11 * r22 * r).powi(2) / (4.0 * a * q * q),
    }
}

/// Volume-element integrand of the five-parameter real scenario with free
/// (1,2) and (2,3) entries. It does not factorize, and no report is built
/// from it.
pub fn bures_1223_real_element(r11: f64, r22: f64, mu: f64, x12: f64, x23: f64) -> f64 {
    let m2 = mu * mu;
    let a = -r11 * r11 * r22 * r22 * (r11 + r22 - 1.0) * ((m2 - 1.0) * r22 + 1.0);
    let b = (r22 * m2 + r11).powi(2);
    let c = x12 * x12 + x23 * x23 - 1.0;
    let q = -r11 * r11 + r11 + m2 * r22 * r22;
    let d = (r11 + r22) * (x12 * x12 * r22 * (r22 * m2 + r11).powi(2) - ((m2 - 1.0) * r22 + 1.0) * q);
    let e = -x23 * x23 * r22 * (r11 + r22 - 1.0) * q;
    0.25 * (a / (b * c * (d + e))).sqrt()
}

fn ratio(total: QuadratureResult, sep: QuadratureResult, sc: Scenario) -> ScenarioReport {
    let p = sep.value / total.value;
    ScenarioReport {
        scenario: sc,
        total_volume: total.value,
        total_error: total.abs_error_estimate,
        separable_volume: sep.value,
        separable_error: sep.abs_error_estimate,
        probability: p,
        probability_error: p * (sep.abs_error_estimate / sep.value + total.abs_error_estimate / total.value),
    }
}

/// Total and separable volumes by nested adaptive quadrature of the
/// scenario's volume element, and their ratio.
pub fn scenario_report(sc: Scenario, rel_tol: f64) -> Result<ScenarioReport> {
    if !(rel_tol > 0.0) {
        return Err(invalid("rel_tol must be positive"));
    }
    let b = sc.beta();
    let s1 = closed_sepfunc(sc, 1.0)?;
    match sc {
        Hs23Real | Hs23Complex | Hs23Trunc | Hs23Quat => {
            // rho11, rho22, rho33 over the simplex; kink where mu = 1
            let e = b as f64 / 2.0;
            let limits = |level: usize, x: &[f64; 3]| match level {
                0 => (0.0, 1.0, None),
                1 => (0.0, 1.0 - x[0], None),
                _ => {
                    let rest = 1.0 - x[0] - x[1];
                    (0.0, rest, Some(x[0] * rest / (x[0] + x[1])))
                }
            };
            let w = |x: &[f64; 3]| (x[1] * x[2]).powf(e);
            let sep = |x: &[f64; 3]| {
                let r44 = 1.0 - x[0] - x[1] - x[2];
                if r44 <= 0.0 {
                    return 0.0;
                }
                let mu = (x[0] * r44 / (x[1] * x[2])).sqrt();
                w(x) * closed_sepfunc(sc, mu.max(f64::MIN_POSITIVE)).unwrap_or(0.0)
            };
            let mut total = integrate3(&w, &limits, rel_tol)?;
            total.value *= s1;
            total.abs_error_estimate *= s1;
            let sep = integrate3(&sep, &limits, rel_tol)?;
            Ok(ratio(total, sep, sc))
        }
        Bures23Real | Bures23Complex | Bures23Quat => {
            // mu = sin t on (0, 1) and mu = 1/s above 1; then rho11, rho22
            let limits = |level: usize, x: &[f64; 3]| match level {
                0 => (0.0, 1.0, None),
                1 => (0.0, 1.0, None),
                _ => (0.0, 1.0 - x[1], None),
            };
            let low = |x: &[f64; 3], with_s: bool| {
                let t = x[0] * FRAC_PI_2;
                let mu = t.sin();
                let s = if with_s { closed_sepfunc(sc, mu.max(f64::MIN_POSITIVE)).unwrap_or(0.0) } else { s1 };
                bures23_diag(b, x[1], x[2], mu) * t.cos() * FRAC_PI_2 * s
            };
            let high = |x: &[f64; 3]| {
                let s = x[0];
                if s <= 0.0 {
                    return 0.0;
                }
                bures23_diag(b, x[1], x[2], 1.0 / s) / (s * s) * s1
            };
            let tot_low = integrate3(&|x| low(x, false), &limits, rel_tol)?;
            let sep_low = integrate3(&|x| low(x, true), &limits, rel_tol)?;
            let both = integrate3(&high, &limits, rel_tol)?;
            let total = QuadratureResult {
                value: tot_low.value + both.value,
                abs_error_estimate: tot_low.abs_error_estimate + both.abs_error_estimate,
                evaluations: 0,
            };
            let sep = QuadratureResult {
                value: sep_low.value + both.value,
                abs_error_estimate: sep_low.abs_error_estimate + both.abs_error_estimate,
                evaluations: 0,
            };
            Ok(ratio(total, sep, sc))
        }
        Hs1423Real | Hs1423Complex | Bures1423Real | Bures1423Complex | Bures1423Quat => {
            // p, q outer; s = rho22 + rho33 inner with a kink at s = 1/(1+k)
            let bf = b as f64;
            let weight = move |s: f64, p: f64, q: f64| match sc.metric() {
                Metric::HilbertSchmidt => (s * (1.0 - s)).powf(bf + 1.0) * (p * q * (1.0 - p) * (1.0 - q)).powf(bf / 2.0),
                Metric::Bures => {
                    (s * (1.0 - s)).powf(bf / 2.0) * (p * q * (1.0 - p) * (1.0 - q)).powf((bf - 1.0) / 2.0) / 8.0
                }
            };
            let limits = |level: usize, x: &[f64; 3]| match level {
                0 | 1 => (0.0, 1.0, None),
                _ => {
                    let (p, q) = (x[0], x[1]);
                    let k = (p * (1.0 - p) / (q * (1.0 - q))).sqrt();
                    (0.0, 1.0, Some(1.0 / (1.0 + k)))
                }
            };
            let tot = |x: &[f64; 3]| weight(x[2], x[0], x[1]) * s1;
            let sep = |x: &[f64; 3]| {
                let (p, q, s) = (x[0], x[1], x[2]);
                if s <= 0.0 || s >= 1.0 {
                    return 0.0;
                }
                let mu = (1.0 - s) / s * (q * (1.0 - q) / (p * (1.0 - p))).sqrt();
                if !(mu > 0.0) || !mu.is_finite() {
                    return 0.0;
                }
                weight(s, p, q) * closed_sepfunc(sc, mu).unwrap_or(0.0)
            };
            let total = integrate3(&tot, &limits, rel_tol)?;
            let sep = integrate3(&sep, &limits, rel_tol)?;
            Ok(ratio(total, sep, sc))
        }
        Bures23Trunc => Err(invalid(
            "no volume element is available for the truncated Bures (2,3) scenario; only its separability function is cataloged",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for sc in Scenario::ALL {
            assert_eq!(sc.name().parse::<Scenario>().unwrap(), sc);
        }
        assert!("hs-99".parse::<Scenario>().is_err());
    }

    #[test]
    fn printed_examples() {
        assert_eq!(closed_sepfunc(Hs23Real, 0.5).unwrap(), 1.0);
        let v = closed_sepfunc(Bures23Complex, 0.5).unwrap();
        assert!((v - 2.0 * PI * (1.0 - 3f64.sqrt() / 2.0)).abs() < 1e-15);
        let v = closed_sepfunc(Bures1423Real, 2.0).unwrap();
        assert!((v - PI * PI / 3.0).abs() < 1e-14);
        assert!(closed_sepfunc(Hs23Real, 0.0).is_err());
    }

    #[test]
    fn functions_are_continuous_at_one() {
        for sc in Scenario::ALL {
            let a = closed_sepfunc(sc, 1.0 - 1e-9).unwrap();
            let b = closed_sepfunc(sc, 1.0 + 1e-9).unwrap();
            let c = closed_sepfunc(sc, 1.0).unwrap();
            assert!((a - c).abs() < 1e-3 * c && (b - c).abs() < 1e-3 * c, "{sc}: {a} {c} {b}");
        }
    }

    #[test]
    fn numeric_derivation_matches() {
        let grid: Vec<f64> = (1..=50).map(|k| k as f64 / 25.0).collect();
        for sc in Scenario::ALL {
            let num = derive_sepfunc_numeric(sc, &grid).unwrap();
            for (mu, v) in grid.iter().zip(num) {
                let want = closed_sepfunc(sc, *mu).unwrap();
                assert!((v - want).abs() <= 1e-8 * want.abs().max(1e-300), "{sc} at {mu}: {v} vs {want}");
            }
        }
    }

    #[test]
    fn pair_functions_are_reciprocal_symmetric() {
        for sc in [Hs1423Real, Hs1423Complex, Bures1423Real, Bures1423Complex, Bures1423Quat] {
            for k in 1..=50 {
                let mu = k as f64 / 51.0;
                let a = closed_sepfunc(sc, mu).unwrap();
                let b = closed_sepfunc(sc, 1.0 / mu).unwrap();
                if sc.metric() == Metric::Bures {
                    assert!((a - b).abs() <= 1e-12 * a, "{sc} {mu}");
                }
            }
        }
    }

    #[test]
    fn hs_pair_functions_follow_dyson_exactly() {
        for k in 1..100 {
            let mu = k as f64 / 50.0;
            let r = closed_sepfunc_normalized(Hs1423Real, mu).unwrap();
            let c = closed_sepfunc_normalized(Hs1423Complex, mu).unwrap();
            assert!((c - r * r).abs() < 1e-14);
        }
    }

    #[test]
    fn bures_single_entry_dominance_order() {
        let mut gap = 0.0f64;
        for k in 1..1000 {
            let mu = k as f64 / 1000.0;
            let r = closed_sepfunc_normalized(Bures23Real, mu).unwrap().powi(4);
            let c = closed_sepfunc_normalized(Bures23Complex, mu).unwrap().powi(2);
            let q = closed_sepfunc_normalized(Bures23Quat, mu).unwrap();
            assert!(q >= c && c >= r, "{mu}");
            gap = gap.max(q - r);
        }
        assert!(gap < 0.15, "{gap}");
    }

    #[test]
    fn hs_single_entry_probabilities() {
        for sc in [Hs23Real, Hs23Complex, Hs23Quat] {
            let r = scenario_report(sc, 1e-8).unwrap();
            let p = published_targets(sc).unwrap().2;
            assert!(((r.probability - p) / p).abs() < 1e-8, "{sc}: {} vs {p}", r.probability);
        }
    }

    #[test]
    fn truncated_bures_has_no_report() {
        assert!(scenario_report(Bures23Trunc, 1e-8).is_err());
    }

    #[test]
    fn five_parameter_element_is_finite_inside() {
        let v = bures_1223_real_element(0.2, 0.3, 0.8, 0.1, 0.2);
        assert!(v.is_finite() && v > 0.0);
    }
}

//! Exact constants, conjectured closed forms and the R1 x R2 pipeline.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algebra::Dyson;
use crate::bloore::{jacobian_j, System};
use crate::numerics::{expect_dirichlet_qmc, integrate_1d, GkOptions};
use crate::{invalid, ConjectureMatch, Error, EstimateSummary, Result};

/// Rational multiple of a half-integer power of pi: `rational * pi^(pi_halves/2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactValue {
    pub rational: BigRational,
    pub pi_halves: i64,
}

impl ExactValue {
    pub fn new(rational: BigRational, pi_halves: i64) -> Self {
        ExactValue { rational, pi_halves }
    }

    pub fn one() -> Self {
        ExactValue::new(BigRational::one(), 0)
    }

    pub fn to_f64(&self) -> f64 {
        let r = self.rational.to_f64().unwrap_or(f64::NAN);
        r * std::f64::consts::PI.powf(self.pi_halves as f64 / 2.0)
    }

    pub fn mul(&self, o: &ExactValue) -> ExactValue {
        ExactValue::new(&self.rational * &o.rational, self.pi_halves + o.pi_halves)
    }

    pub fn div(&self, o: &ExactValue) -> ExactValue {
        ExactValue::new(&self.rational / &o.rational, self.pi_halves - o.pi_halves)
    }

    pub fn pow(&self, k: u32) -> ExactValue {
        ExactValue::new(Pow::pow(&self.rational, k), self.pi_halves * k as i64)
    }
}

impl fmt::Display for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num = self.rational.numer();
        let den = self.rational.denom();
        let p = self.pi_halves;
        let pi = match p {
            0 => String::new(),
            2 => "π".into(),
            _ if p % 2 == 0 => format!("π^{}", p / 2),
            _ => format!("π^({p}/2)"),
        };
        let head = if pi.is_empty() {
            num.to_string()
        } else if num.is_one() {
            pi
        } else {
            format!("{num}·{pi}")
        };
        if den.is_one() {
            write!(f, "{head}")
        } else {
            write!(f, "{head}/{den}")
        }
    }
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// Gamma(k/2) for a positive integer k, exactly.
pub fn gamma_half(k: u64) -> Result<ExactValue> {
    if k == 0 {
        return Err(invalid("Gamma has a pole at 0"));
    }
    if k.is_multiple_of(2) {
        return Ok(ExactValue::new(BigRational::from_integer(factorial(k / 2 - 1)), 0));
    }
    // Gamma(m + 1/2) = (2m)! / (4^m m!) sqrt(pi)
    let m = (k - 1) / 2;
    let num = factorial(2 * m);
    let den = BigInt::from(4u32).pow(m as u32) * factorial(m);
    Ok(ExactValue::new(BigRational::new(num, den), 1))
}

/// Total Hilbert-Schmidt volume of n x n density matrices with Dyson index beta:
/// pi^{beta n(n-1)/4} / Gamma(beta n(n-1)/2 + n) * prod_{i<n} Gamma(i beta/2 + 1).
pub fn andai_volume(n: u32, dyson: Dyson) -> Result<ExactValue> {
    if n == 0 {
        return Err(invalid("matrix dimension must be at least 1"));
    }
    let b = dyson.beta() as u64;
    let n = n as u64;
    let pairs = n * (n - 1) / 2;
    let mut v = ExactValue::new(BigRational::one(), (b * pairs) as i64);
    // Gamma(x) with x = b*pairs + n, i.e. 2x as the half-argument.
    v = v.div(&gamma_half(2 * (b * pairs + n))?);
    for i in 1..n {
        v = v.mul(&gamma_half(i * b + 2)?);
    }
    Ok(v)
}

/// Integral over the (n-1)-simplex of prod rho_ii^{(n-1) beta / 2}:
/// Gamma((n-1)beta/2 + 1)^n / Gamma(n((n-1)beta/2 + 1)).
pub fn dirichlet_norm(n: u32, dyson: Dyson) -> Result<ExactValue> {
    if n < 2 {
        return Err(invalid("Dirichlet normalization needs n >= 2"));
    }
    let b = dyson.beta() as u64;
    let n = n as u64;
    // a = (n-1) b / 2 + 1, stored as 2a
    let two_a = (n - 1) * b + 2;
    let g = gamma_half(two_a)?.pow(n as u32);
    g.div_checked(&gamma_half(n * two_a)?)
}

impl ExactValue {
    fn div_checked(&self, o: &ExactValue) -> Result<ExactValue> {
        if o.rational.is_zero() {
            return Err(Error::NonFinite("division by zero".into()));
        }
        Ok(self.div(o))
    }
}

/// How firmly a registry value is established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "paper-exact")]
    Exact,
    #[serde(rename = "paper-conjecture")]
    Conjecture,
    #[serde(rename = "paper-estimate")]
    Estimate,
}

/// A named constant with its exact expression and numeric value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjectureEntry {
    pub name: String,
    pub expression: String,
    pub value: f64,
    pub anchor: String,
    pub status: Status,
}

const PI_DIGITS: &str = "3.14159265358979323846264338327950288419716939937510582097494459";
const LN2_DIGITS: &str = "0.69314718055994530941723212145817656807550013436025525412068001";

fn decimal(s: &str) -> BigRational {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let digits: BigInt = format!("{int}{frac}").parse().expect("decimal literal");
    BigRational::new(digits, BigInt::from(10u32).pow(frac.len() as u32))
}

fn int(s: &str) -> BigRational {
    BigRational::from_integer(s.parse::<BigInt>().expect("integer literal"))
}

fn frac(n: &str, d: &str) -> f64 {
    (int(n) / int(d)).to_f64().unwrap_or(f64::NAN)
}

/// Qubit-qutrit R2 closed forms; the log 2 and pi terms cancel to about six
/// digits, so they are evaluated in rational arithmetic.
fn qq_r2_exact(dyson: Dyson) -> f64 {
    let pi = decimal(PI_DIGITS);
    let ln2 = decimal(LN2_DIGITS);
    let v = match dyson {
        Dyson::Real => BigRational::one() - int("4194304") / (int("4849845") * pi),
        Dyson::Complex => (int("-44632342463") + int("68578836480") * ln2) / int("4190140110"),
        Dyson::Truncated => {
            let t1 = int("-967504709") / int("552123");
            let t2 = int("18446744073709551616") * (int("-67294453713397888") + int("5638997741091") * &pi)
                / (int("71729672378917671400466262753675") * &pi * &pi);
            t1 - t2
        }
        Dyson::Quaternion => {
            (int("192210846322598002116984324520591") - int("277301145703236210250598232096768") * ln2)
                / int("501570554133080277487570824")
        }
    };
    v.to_f64().unwrap_or(f64::NAN)
}

fn entry(name: &str, expression: &str, value: f64, anchor: &str, status: Status) -> ConjectureEntry {
    ConjectureEntry {
        name: name.into(),
        expression: expression.into(),
        value,
        anchor: anchor.into(),
        status,
    }
}

/// All registry entries.
pub fn conjectures() -> Vec<ConjectureEntry> {
    use std::f64::consts::PI;
    use Status::*;
    let pi2 = PI * PI;
    let mut v = Vec::new();
    for (n, d) in [(4, Dyson::Quaternion), (4, Dyson::Truncated), (6, Dyson::Real), (6, Dyson::Complex)] {
        let x = andai_volume(n, d).expect("valid Andai arguments");
        v.push(entry(
            &format!("hs-volume-n{n}-beta{}", d.beta()),
            &x.to_string(),
            x.to_f64(),
            "comprehensive HS volume formula",
            Exact,
        ));
    }
    let dq = dirichlet_norm(4, Dyson::Quaternion).expect("valid Dirichlet arguments");
    v.push(entry("dirichlet-norm-n4-beta4", &dq.to_string(), dq.to_f64(), "quaternionic rational fraction", Exact));

    let r2_anchor = "two-qubit R2 ratio";
    v.push(entry("r2-two-qubit-beta1", "1024/(135π²)", 1024.0 / (135.0 * pi2), r2_anchor, Exact));
    v.push(entry("r2-two-qubit-beta2", "71/99", 71.0 / 99.0, r2_anchor, Exact));
    v.push(entry(
        "r2-two-qubit-beta3",
        "726923214848/(106376244975π²)",
        frac("726923214848", "106376244975") / pi2,
        r2_anchor,
        Estimate,
    ));
    v.push(entry("r2-two-qubit-beta4", "125769/185725", 125769.0 / 185725.0, r2_anchor, Exact));

    let r1_anchor = "two-qubit R1 ratio at mu = 1";
    v.push(entry("r1-two-qubit-beta1", "135π²/2176", 135.0 * pi2 / 2176.0, r1_anchor, Conjecture));
    v.push(entry("r1-two-qubit-beta2", "24/71", 24.0 / 71.0, r1_anchor, Conjecture));
    v.push(entry(
        "r1-two-qubit-beta3",
        "160446825π²/5679087616",
        160446825.0 * pi2 / 5679087616.0,
        r1_anchor,
        Estimate,
    ));
    v.push(entry("r1-two-qubit-beta4", "(24/71)²", (24.0f64 / 71.0).powi(2), r1_anchor, Conjecture));

    let p_anchor = "two-qubit HS separability probability";
    v.push(entry("prob-two-qubit-beta1", "8/17", 8.0 / 17.0, p_anchor, Conjecture));
    v.push(entry("prob-two-qubit-beta2", "8/33", 8.0 / 33.0, p_anchor, Conjecture));
    v.push(entry("prob-two-qubit-beta3", "128/663", 128.0 / 663.0, p_anchor, Estimate));
    v.push(entry(
        "prob-two-qubit-beta4",
        "72442944/936239725",
        72442944.0 / 936239725.0,
        p_anchor,
        Conjecture,
    ));

    let qq_anchor = "qubit-qutrit R2 under the candidate separability function";
    v.push(entry("r2-qubit-qutrit-beta1", "1-4194304/(4849845π)", qq_r2_exact(Dyson::Real), qq_anchor, Conjecture));
    v.push(entry(
        "r2-qubit-qutrit-beta2",
        "(-44632342463+68578836480·log 2)/4190140110",
        qq_r2_exact(Dyson::Complex),
        qq_anchor,
        Conjecture,
    ));
    v.push(entry(
        "r2-qubit-qutrit-beta3",
        "-967504709/552123-18446744073709551616(-67294453713397888+5638997741091π)/(71729672378917671400466262753675π²)",
        qq_r2_exact(Dyson::Truncated),
        qq_anchor,
        Estimate,
    ));
    v.push(entry(
        "r2-qubit-qutrit-beta4",
        "(192210846322598002116984324520591-277301145703236210250598232096768·log 2)/501570554133080277487570824",
        qq_r2_exact(Dyson::Quaternion),
        qq_anchor,
        Conjecture,
    ));
    let qq_est = "qubit-qutrit sample estimates";
    v.push(entry("r1-qubit-qutrit-beta1", "0.226468", 0.226468, qq_est, Estimate));
    v.push(entry("r1-qubit-qutrit-beta2", "0.047679", 0.047679, qq_est, Estimate));
    v.push(entry("prob-qubit-qutrit-beta1", "0.164125", 0.164125, qq_est, Estimate));
    v.push(entry("prob-qubit-qutrit-beta2", "0.0330446", 0.0330446, qq_est, Estimate));

    let eig = "eigenvalue-space probabilities";
    v.push(entry("eigen-hs-degenerate", "4/33", 4.0 / 33.0, eig, Conjecture));
    v.push(entry(
        "eigen-bures",
        "1680(√2-1)/π⁸",
        1680.0 * (2f64.sqrt() - 1.0) / PI.powi(8),
        eig,
        Conjecture,
    ));
    v.push(entry("eigen-bures-degenerate", "0.0396214", 0.0396214, eig, Estimate));
    v.push(entry(
        "region-hs-ball",
        "35π/(23328√3)",
        35.0 * PI / (23328.0 * 3f64.sqrt()),
        "separable-ball measure",
        Exact,
    ));
    v.push(entry("region-hs-vad", "0.00365406", 0.00365406, "VAD-region measure", Estimate));
    v.push(entry("region-uniform-ball", "0.3023", 0.3023, "uniform-measure ball", Estimate));
    v.push(entry("region-uniform-vad", "0.3270", 0.3270, "uniform-measure VAD region", Estimate));
    v.push(entry(
        "bures-23-complex-prob",
        "(4C-6+π)/π",
        (4.0 * crate::numerics::CATALAN - 6.0 + PI) / PI,
        "Bures (2,3) complex scenario",
        Exact,
    ));
    v
}

/// Looks up a registry entry by name.
pub fn lookup(name: &str) -> Result<ConjectureEntry> {
    conjectures()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| invalid(format!("no registry entry named '{name}'")))
}

fn system_slug(system: System) -> &'static str {
    match system {
        System::TwoQubit => "two-qubit",
        System::QubitQutrit => "qubit-qutrit",
    }
}

/// Registry name of R1, R2 or the probability for a system and Dyson index.
pub fn entry_name(kind: &str, system: System, dyson: Dyson) -> String {
    format!("{kind}-{}-beta{}", system_slug(system), dyson.beta())
}

/// Numerical settings for [`r2_constant`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct R2Options {
    /// Outer relative tolerance of the two-qubit mu integral.
    pub rel_tol: f64,
    /// QMC points for the qubit-qutrit 5-simplex expectation.
    pub qmc_points: u64,
    pub seed: u64,
}

impl Default for R2Options {
    fn default() -> Self {
        R2Options {
            rel_tol: 1e-8,
            qmc_points: 1 << 20,
            seed: 0,
        }
    }
}

/// Two-qubit Dyson ansatz ((3 - mu^2) mu / 2)^beta, extended by mu -> 1/mu.
pub fn two_qubit_ansatz(mu: f64, dyson: Dyson) -> f64 {
    let m = if mu > 1.0 { 1.0 / mu } else { mu };
    ((3.0 - m * m) * m / 2.0).powi(dyson.beta() as i32)
}

/// Qubit-qutrit candidate 1 - (1 - eta)^{5/2}, extended by eta -> 1/eta and
/// raised to the beta-th power.
pub fn qubit_qutrit_candidate(eta: f64, dyson: Dyson) -> f64 {
    let e = if eta > 1.0 { 1.0 / eta } else { eta };
    (1.0 - (1.0 - e).powf(2.5)).powi(dyson.beta() as i32)
}

/// R2: the diagonal-weighted integral of the normalized separability
/// function over the Bloore weight, divided by the Dirichlet normalization.
pub fn r2_constant(system: System, dyson: Dyson, opts: R2Options) -> Result<EstimateSummary> {
    let (value, err, meta) = match system {
        System::TwoQubit => {
            let norm = dirichlet_norm(4, dyson)?.to_f64();
            let failed = std::cell::Cell::new(None);
            let f = |mu: f64| {
                if mu <= 0.0 {
                    return 0.0;
                }
                match jacobian_j(mu, dyson) {
                    Ok(j) => 2.0 * j * two_qubit_ansatz(mu, dyson),
                    Err(e) => {
                        failed.set(Some(e.to_string()));
                        f64::NAN
                    }
                }
            };
            let r = integrate_1d(f, 0.0, 1.0, GkOptions::rel(opts.rel_tol))?;
            if let Some(e) = failed.take() {
                return Err(Error::NonFinite(format!("jacobian evaluation failed: {e}")));
            }
            (
                r.value / norm,
                r.abs_error_estimate / norm,
                json!({"method": "adaptive", "rel_tol": opts.rel_tol, "evaluations": r.evaluations}),
            )
        }
        System::QubitQutrit => {
            let a = 2.5 * dyson.beta_f64() + 1.0;
            let r = expect_dirichlet_qmc(
                |x| qubit_qutrit_candidate(x[0] * x[5] / (x[2] * x[3]), dyson),
                &[a; 6],
                opts.qmc_points,
                opts.seed,
            )?;
            (
                r.value,
                r.abs_error_estimate,
                json!({
                    "method": "sobol-dirichlet",
                    "points": r.evaluations,
                    "seed": opts.seed,
                    "assumption": "S(eta) = S(1/eta) for eta > 1",
                }),
            )
        }
    };
    let reg = lookup(&entry_name("r2", system, dyson))?;
    let meta = json!({"system": system_slug(system), "beta": dyson.beta(), "quadrature": meta});
    Ok(EstimateSummary::new(entry_name("r2", system, dyson), value, err)
        .with_metadata(meta)
        .with_conjecture(ConjectureMatch::new(&reg.name, &reg.expression, reg.value, value)))
}

/// P = R1 * R2 with R2 from the registry closed form and the R1 standard
/// error propagated linearly.
pub fn pipeline_probability(system: System, dyson: Dyson, r1: &EstimateSummary) -> Result<EstimateSummary> {
    if let Some(s) = r1.metadata.get("system").and_then(|s| s.as_str()) {
        if s != system_slug(system) {
            return Err(invalid(format!("R1 estimate is for {s}, not {}", system_slug(system))));
        }
    }
    if let Some(b) = r1.metadata.get("beta").and_then(|b| b.as_u64()) {
        if b != dyson.beta() as u64 {
            return Err(invalid(format!("R1 estimate is for beta = {b}, not {}", dyson.beta())));
        }
    }
    let r2 = lookup(&entry_name("r2", system, dyson))?;
    let value = r1.value * r2.value;
    let mut out = EstimateSummary::new(entry_name("prob", system, dyson), value, r1.std_error * r2.value).with_metadata(json!({
        "system": system_slug(system),
        "beta": dyson.beta(),
        "r1": r1.value,
        "r1_std_error": r1.std_error,
        "r2": r2.value,
        "r2_expression": r2.expression,
    }));
    if let Ok(p) = lookup(&entry_name("prob", system, dyson)) {
        out = out.with_conjecture(ConjectureMatch::new(&p.name, &p.expression, p.value, value));
    }
    Ok(out)
}

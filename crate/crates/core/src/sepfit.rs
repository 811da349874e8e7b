//! Reference separability-function models, Dyson-index comparisons and
//! least-squares fits of the one- and two-parameter families.

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algebra::Dyson;
use crate::eigenspace::{state_functionals, EigenGrid};
use crate::scans::SepFuncTable;
use crate::{invalid, Error, Result};

/// Closed-form reference models, all equal to 1 at the symmetric point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "model")]
pub enum Model {
    /// ((3 - mu^2) mu / 2)^beta.
    DysonTwoQubit { beta: u32 },
    /// 1 - (1 - eta)^{5/2}.
    QubitQutritCandidate,
    /// 1 - (1 - eta^theta)^gamma.
    QubitQutritFamily { gamma: f64, theta: f64 },
}

/// Value of `model` at mu (two-qubit) or eta (qubit-qutrit) in [0, 1].
pub fn reference_sepfunc(model: Model, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(format!("model argument must lie in [0, 1], got {x}")));
    }
    match model {
        Model::DysonTwoQubit { beta } => {
            Dyson::from_beta(beta)?;
            Ok(((3.0 - x * x) * x / 2.0).powi(beta as i32))
        }
        Model::QubitQutritCandidate => Ok(1.0 - (1.0 - x).powf(2.5)),
        Model::QubitQutritFamily { gamma, theta } => {
            if !(gamma > 0.0 && theta > 0.0) {
                return Err(invalid("gamma and theta must be positive"));
            }
            Ok(1.0 - (1.0 - x.powf(theta)).powf(gamma))
        }
    }
}

/// Pointwise comparison of two normalized tables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DysonCheck {
    pub rms: f64,
    pub max_abs: f64,
}

/// Compares normalized `high` against normalized `low` raised to `power`.
pub fn dyson_check(low: &SepFuncTable, high: &SepFuncTable, power: i32) -> Result<DysonCheck> {
    if low.points != high.points {
        return Err(Error::Structural("tables are on different grids".into()));
    }
    let a = low.normalized()?;
    let b = high.normalized()?;
    Ok(compare(&b, &a.iter().map(|x| x.powi(power)).collect::<Vec<_>>()))
}

/// RMS and maximum absolute difference of two equally long series.
pub fn compare(a: &[f64], b: &[f64]) -> DysonCheck {
    let n = a.len().max(1) as f64;
    let (mut ss, mut mx) = (0.0, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        ss += d * d;
        mx = mx.max(d.abs());
    }
    DysonCheck {
        rms: (ss / n).sqrt(),
        max_abs: mx,
    }
}

/// Fit families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// 1 - (1 - eta)^gamma.
    QqOneParam,
    /// 1 - (1 - eta^theta)^gamma, parameters (gamma, theta).
    QqTwoParam,
    /// min(1, R/3)^p.
    RPower,
    /// min(1, 1 - VAD)^p.
    VadPower,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qq-one-param" => Ok(Family::QqOneParam),
            "qq-two-param" => Ok(Family::QqTwoParam),
            "r-power" => Ok(Family::RPower),
            "vad-power" => Ok(Family::VadPower),
            _ => Err(invalid(format!("unknown fit family '{s}'"))),
        }
    }
}

/// Where a fitted value is observed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FitInput {
    /// eta = nu1 nu2 (or mu).
    Eta(f64),
    /// Eigenvalues of a two-qubit state.
    Lambda([f64; 4]),
}

impl Family {
    pub fn n_params(self) -> usize {
        match self {
            Family::QqTwoParam => 2,
            _ => 1,
        }
    }

    /// Documented starting point / centre of the search.
    pub fn start(self) -> Vec<f64> {
        match self {
            Family::QqOneParam => vec![2.5],
            Family::QqTwoParam => vec![2.5, 1.0],
            Family::RPower | Family::VadPower => vec![1.0],
        }
    }

    /// Model value; `None` when the input does not fit the family.
    pub fn eval(self, params: &[f64], input: FitInput) -> Option<f64> {
        match (self, input) {
            (Family::QqOneParam, FitInput::Eta(e)) => {
                let e = if e > 1.0 { 1.0 / e } else { e };
                Some(1.0 - (1.0 - e).powf(params[0]))
            }
            (Family::QqTwoParam, FitInput::Eta(e)) => {
                let e = if e > 1.0 { 1.0 / e } else { e };
                Some(1.0 - (1.0 - e.powf(params[1])).powf(params[0]))
            }
            (Family::RPower, FitInput::Lambda(l)) => {
                let f = state_functionals(&l).ok()?;
                Some((f.r / 3.0).min(1.0).powf(params[0]))
            }
            (Family::VadPower, FitInput::Lambda(l)) => {
                let f = state_functionals(&l).ok()?;
                Some((1.0 - f.vad).min(1.0).powf(params[0]))
            }
            _ => None,
        }
    }
}

/// Result of a least-squares fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub family: Family,
    pub params: Vec<f64>,
    pub sum_of_squares: f64,
    pub grid_size: usize,
}

impl FitParams {
    /// JSON fit report `{family, params, ss, grid_size, table_metadata}`.
    pub fn report(&self, table_metadata: serde_json::Value) -> serde_json::Value {
        json!({
            "family": self.family,
            "params": self.params,
            "ss": self.sum_of_squares,
            "grid_size": self.grid_size,
            "table_metadata": table_metadata,
        })
    }
}

/// Fit data from a normalized separability table.
pub fn table_data(table: &SepFuncTable) -> Result<Vec<(FitInput, f64)>> {
    let norm = table.normalized()?;
    Ok(table
        .points
        .iter()
        .zip(norm)
        .map(|(p, v)| (FitInput::Eta(p.eta()), v))
        .collect())
}

/// Fit data from an eigenvalue-lattice table (separable fractions).
pub fn eigen_table_data(grid: &EigenGrid) -> Result<Vec<(FitInput, f64)>> {
    if grid.n_unitaries == 0 {
        return Err(invalid("eigen table is empty"));
    }
    Ok((0..grid.len()).map(|i| (FitInput::Lambda(grid.lambda(i)), grid.fraction(i))).collect())
}

/// Fit data from a saved scan or eigen-lattice CSV. Scan tables contribute
/// `(eta, s_norm)`, eigen tables `(lambda, sep_fraction)`.
pub fn csv_table_data<R: BufRead>(input: R) -> Result<Vec<(FitInput, f64)>> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| invalid("empty table file"))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let col = |name: &str| cols.iter().position(|c| *c == name);
    let parse = |s: &str| -> Result<f64> {
        s.trim().parse::<f64>().map_err(|_| invalid(format!("bad number '{s}' in table")))
    };
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(invalid(format!("row '{line}' does not match header '{header}'")));
        }
        let get = |i: usize| parse(f[i]);
        let row = match (col("mu"), col("nu1"), col("l1")) {
            (Some(m), _, _) => (FitInput::Eta(get(m)?), get(col("s_norm").ok_or_else(|| invalid("missing s_norm"))?)?),
            (_, Some(a), _) => {
                let b = col("nu2").ok_or_else(|| invalid("missing nu2"))?;
                (FitInput::Eta(get(a)? * get(b)?), get(col("s_norm").ok_or_else(|| invalid("missing s_norm"))?)?)
            }
            (_, _, Some(a)) => {
                let l1 = get(a)?;
                let l2 = get(col("l2").ok_or_else(|| invalid("missing l2"))?)?;
                let (l3, l4) = match col("l3") {
                    Some(c) => {
                        let l3 = get(c)?;
                        (l3, (1.0 - l1 - l2 - l3).max(0.0))
                    }
                    None => ((1.0 - l1 - l2).max(0.0), 0.0),
                };
                let v = get(col("sep_fraction").ok_or_else(|| invalid("missing sep_fraction"))?)?;
                (FitInput::Lambda([l1, l2, l3, l4]), v)
            }
            _ => return Err(invalid(format!("unrecognised table header '{header}'"))),
        };
        if row.1.is_finite() {
            out.push(row);
        }
    }
    if out.is_empty() {
        return Err(invalid("table has no usable rows"));
    }
    Ok(out)
}

/// RMS and maximum deviation of a normalized table from a reference model.
pub fn reference_check(table: &SepFuncTable, model: Model) -> Result<DysonCheck> {
    let norm = table.normalized()?;
    let reference = table
        .points
        .iter()
        .map(|p| reference_sepfunc(model, p.eta().min(1.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(compare(&norm, &reference))
}

/// Sum of squared residuals at `params`.
pub fn sum_of_squares(data: &[(FitInput, f64)], family: Family, params: &[f64]) -> Result<f64> {
    if params.len() != family.n_params() {
        return Err(invalid(format!("{family:?} takes {} parameters", family.n_params())));
    }
    if params.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Ok(f64::INFINITY);
    }
    let mut ss = 0.0;
    for &(x, v) in data {
        let m = family
            .eval(params, x)
            .ok_or_else(|| invalid(format!("{family:?} cannot be evaluated at {x:?}")))?;
        ss += (v - m).powi(2);
    }
    Ok(ss)
}

/// SS at each parameter vector of a caller-supplied grid.
pub fn ss_curve(data: &[(FitInput, f64)], family: Family, grid: &[Vec<f64>]) -> Result<Vec<f64>> {
    grid.iter().map(|p| sum_of_squares(data, family, p)).collect()
}

const GOLDEN_TOL: f64 = 1e-10;

fn golden<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > GOLDEN_TOL * (1.0 + a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, start: &[f64], step: &[f64]) -> Vec<f64> {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += step[i];
        simplex.push(p);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    for _ in 0..5000 {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        let spread = (vals[n] - vals[0]).abs();
        let size = simplex[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= 1e-16 * (1.0 + vals[0].abs()) && size < 1e-10 {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                vals[n] = fe;
            } else {
                simplex[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            simplex[n] = xr;
            vals[n] = fr;
        } else {
            let xc = if fr < vals[n] { along(-0.5) } else { along(0.5) };
            let fc = f(&xc);
            if fc < vals[n].min(fr) {
                simplex[n] = xc;
                vals[n] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=n {
                    simplex[i] = best.iter().zip(&simplex[i]).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    vals[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    simplex[best].clone()
}

/// Least-squares fit with equal weights: golden-section search for one
/// parameter (on [0.05, 20]), Nelder-Mead from (2.5, 1) for two.
pub fn fit_family(data: &[(FitInput, f64)], family: Family) -> Result<FitParams> {
    if data.is_empty() || data.iter().all(|&(_, v)| v == 0.0) {
        return Err(invalid("cannot fit a table that is identically zero"));
    }
    sum_of_squares(data, family, &family.start())?;
    let ss = |p: &[f64]| sum_of_squares(data, family, p).unwrap_or(f64::INFINITY);
    let params = if family.n_params() == 1 {
        vec![golden(|x| ss(&[x]), 0.05, 20.0)]
    } else {
        nelder_mead(ss, &family.start(), &[0.5, 0.25])
    };
    let sum_of_squares = ss(&params);
    Ok(FitParams {
        family,
        params,
        sum_of_squares,
        grid_size: data.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloore::System;
    use crate::eigenspace::{eigen_scan, Rank};
    use crate::scans::{scan, RunControl, ScanGrid, ScanParams};

    #[test]
    fn csv_tables_round_trip_into_fit_data() {
        let mut p = ScanParams::new(System::TwoQubit, Dyson::Complex);
        p.grid = ScanGrid::Mu { points: 11 };
        let t = scan(&p, 10_000, &RunControl::workers(1)).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let read = csv_table_data(buf.as_slice()).unwrap();
        let direct = table_data(&t).unwrap();
        assert_eq!(read.len(), direct.len());
        for ((a, x), (b, y)) in read.iter().zip(&direct) {
            assert_eq!(a, b);
            assert!((x - y).abs() < 1e-15);
        }

        let g = eigen_scan(4, Rank::Degenerate, 1000, 1, 1).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let read = csv_table_data(buf.as_slice()).unwrap();
        let direct = eigen_table_data(&g).unwrap();
        assert_eq!(read.len(), direct.len());
        for ((a, x), (b, y)) in read.iter().zip(&direct) {
            let (FitInput::Lambda(a), FitInput::Lambda(b)) = (a, b) else { panic!("expected eigenvalue inputs") };
            assert!(a.iter().zip(b).all(|(u, v)| (u - v).abs() < 1e-15));
            assert!((x - y).abs() < 1e-15);
        }
        assert!(csv_table_data("a,b\n1,2\n".as_bytes()).is_err());
    }

    fn synthetic(gamma: f64, theta: f64) -> Vec<(FitInput, f64)> {
        (0..=40)
            .map(|k| {
                let e = k as f64 / 40.0;
                (FitInput::Eta(e), 1.0 - (1.0 - e.powf(theta)).powf(gamma))
            })
            .collect()
    }

    #[test]
    fn model_values() {
        assert_eq!(reference_sepfunc(Model::DysonTwoQubit { beta: 2 }, 1.0).unwrap(), 1.0);
        let v = reference_sepfunc(Model::DysonTwoQubit { beta: 4 }, 0.5).unwrap();
        assert!((v - (11.0f64 / 16.0).powi(4)).abs() < 1e-15);
        assert_eq!(reference_sepfunc(Model::QubitQutritCandidate, 1.0).unwrap(), 1.0);
        assert_eq!(reference_sepfunc(Model::QubitQutritCandidate, 0.0).unwrap(), 0.0);
        assert!(reference_sepfunc(Model::QubitQutritCandidate, 1.5).is_err());
        let bad = Model::QubitQutritFamily { gamma: -1.0, theta: 1.0 };
        assert!(reference_sepfunc(bad, 0.5).is_err());
    }

    #[test]
    fn family_reduces_to_candidate() {
        let fam = Model::QubitQutritFamily { gamma: 2.5, theta: 1.0 };
        for k in 0..100 {
            let e = k as f64 / 99.0;
            assert_eq!(reference_sepfunc(fam, e).unwrap(), reference_sepfunc(Model::QubitQutritCandidate, e).unwrap());
        }
    }

    #[test]
    fn models_are_nondecreasing() {
        let models = [
            Model::DysonTwoQubit { beta: 1 },
            Model::DysonTwoQubit { beta: 4 },
            Model::QubitQutritCandidate,
            Model::QubitQutritFamily { gamma: 3.0, theta: 0.7 },
        ];
        for m in models {
            let mut prev = 0.0;
            for k in 0..1000 {
                let v = reference_sepfunc(m, k as f64 / 999.0).unwrap();
                assert!(v >= prev - 1e-15, "{m:?}");
                prev = v;
            }
        }
    }

    #[test]
    fn exact_recovery_one_param() {
        let fit = fit_family(&synthetic(2.5, 1.0), Family::QqOneParam).unwrap();
        assert!((fit.params[0] - 2.5).abs() < 1e-6, "{fit:?}");
        assert!(fit.sum_of_squares < 1e-20);
    }

    #[test]
    fn exact_recovery_two_param() {
        let data = synthetic(2.2, 1.3);
        let fit = fit_family(&data, Family::QqTwoParam).unwrap();
        assert!((fit.params[0] - 2.2).abs() < 1e-5 && (fit.params[1] - 1.3).abs() < 1e-5, "{fit:?}");
        assert!(fit.sum_of_squares <= sum_of_squares(&data, Family::QqTwoParam, &[2.5, 1.0]).unwrap());
    }

    #[test]
    fn ss_curve_has_minimum_at_truth() {
        let data = synthetic(2.5, 1.0);
        let grid: Vec<Vec<f64>> = [2.0, 2.5, 3.0].iter().map(|&g| vec![g]).collect();
        let c = ss_curve(&data, Family::QqOneParam, &grid).unwrap();
        assert!(c[1] < c[0] && c[1] < c[2]);
    }

    #[test]
    fn zero_table_is_rejected() {
        let data = vec![(FitInput::Eta(0.5), 0.0); 4];
        assert!(fit_family(&data, Family::QqOneParam).is_err());
    }

    #[test]
    fn identical_tables_compare_to_zero() {
        let c = compare(&[0.1, 0.5, 1.0], &[0.1, 0.5, 1.0]);
        assert_eq!(c.rms, 0.0);
        assert_eq!(c.max_abs, 0.0);
    }
}

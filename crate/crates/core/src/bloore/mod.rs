//! Bloore parameterization rho_ij = sqrt(rho_ii rho_jj) w_ij, canonical
//! diagonals for the ratio variables, PPT verdicts and the univariate
//! jacobian.

mod jacobian;
mod kernel;
mod sampler;

pub use jacobian::{jacobian_j, rho33_from_mu, JACOBIAN_REL_TOL};
pub use kernel::PptKernel;
pub use sampler::Sampler;

use serde::{Deserialize, Serialize};

use crate::algebra::{
    is_psd_fast, partial_transpose, psd_check, Dyson, Matrix, Quaternion, Scalar, DEFAULT_PSD_TOL,
};
use crate::{invalid, Error, Result};

/// Bipartite system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    TwoQubit,
    QubitQutrit,
}

impl System {
    pub fn dim(self) -> usize {
        match self {
            System::TwoQubit => 4,
            System::QubitQutrit => 6,
        }
    }

    /// Block size of the positional partial transpose.
    pub fn block_dim(self) -> usize {
        match self {
            System::TwoQubit => 2,
            System::QubitQutrit => 3,
        }
    }

    /// Number of off-diagonal pairs (i < j).
    pub fn n_offdiag(self) -> usize {
        let n = self.dim();
        n * (n - 1) / 2
    }

    /// The ratio point where all ratios equal one.
    pub fn symmetric_point(self) -> RatioPoint {
        match self {
            System::TwoQubit => RatioPoint::Mu(1.0),
            System::QubitQutrit => RatioPoint::Nu(1.0, 1.0),
        }
    }
}

impl std::str::FromStr for System {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-qubit" => Ok(System::TwoQubit),
            "qubit-qutrit" => Ok(System::QubitQutrit),
            _ => Err(invalid(format!("unknown system '{s}'"))),
        }
    }
}

impl std::fmt::Display for System {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            System::TwoQubit => "two-qubit",
            System::QubitQutrit => "qubit-qutrit",
        })
    }
}

/// Diagonal ratio variables: mu^2 = rho11 rho44 / (rho22 rho33) for two
/// qubits; nu1 = rho11 rho55 / (rho22 rho44), nu2 = rho22 rho66 / (rho33 rho55)
/// for qubit-qutrit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RatioPoint {
    Mu(f64),
    Nu(f64, f64),
}

impl RatioPoint {
    /// mu, or eta = nu1 nu2.
    pub fn eta(self) -> f64 {
        match self {
            RatioPoint::Mu(m) => m,
            RatioPoint::Nu(a, b) => a * b,
        }
    }

    fn check(self, system: System, allow_zero: bool) -> Result<()> {
        let vals = match (system, self) {
            (System::TwoQubit, RatioPoint::Mu(m)) => [m, m],
            (System::QubitQutrit, RatioPoint::Nu(a, b)) => [a, b],
            _ => return Err(Error::Structural(format!("ratio point {self:?} does not match {system}"))),
        };
        for v in vals {
            let ok = v.is_finite() && if allow_zero { v >= 0.0 } else { v > 0.0 };
            if !ok {
                return Err(invalid(format!("ratio variables must be finite and positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Diagonal realizing the ratio point: (mu t, t, t, mu t) with
/// t = 1/(2(1+mu)), or (nu1 t, t, t, t, t, nu2 t) with t = 1/(4+nu1+nu2).
pub fn canonical_diag(system: System, point: RatioPoint) -> Result<Vec<f64>> {
    point.check(system, false)?;
    Ok(canonical_diag_unchecked(point))
}

/// [`canonical_diag`] that also accepts zero ratios (degenerate diagonals).
pub(crate) fn canonical_diag_unchecked(point: RatioPoint) -> Vec<f64> {
    match point {
        RatioPoint::Mu(m) => {
            let t = 1.0 / (2.0 * (1.0 + m));
            vec![m * t, t, t, m * t]
        }
        RatioPoint::Nu(a, b) => {
            let t = 1.0 / (4.0 + a + b);
            vec![a * t, t, t, t, t, b * t]
        }
    }
}

/// Ratio variables of a diagonal.
pub fn ratios_of(system: System, diag: &[f64]) -> Result<RatioPoint> {
    if diag.len() != system.dim() {
        return Err(Error::Structural("diagonal length does not match the system".into()));
    }
    Ok(match system {
        System::TwoQubit => RatioPoint::Mu((diag[0] * diag[3] / (diag[1] * diag[2])).sqrt()),
        System::QubitQutrit => RatioPoint::Nu(
            diag[0] * diag[4] / (diag[1] * diag[3]),
            diag[1] * diag[5] / (diag[2] * diag[4]),
        ),
    })
}

/// A non-canonical diagonal with the given ratios, built from positive
/// free parameters (two for two qubits, four for qubit-qutrit).
pub fn diag_with_ratio(system: System, point: RatioPoint, free: &[f64]) -> Result<Vec<f64>> {
    point.check(system, false)?;
    if free.iter().any(|&x| !(x > 0.0)) {
        return Err(invalid("free diagonal parameters must be positive"));
    }
    let mut d = match (system, point) {
        (System::TwoQubit, RatioPoint::Mu(m)) => {
            let [a, b] = free[..2] else { return Err(invalid("two free parameters needed")) };
            // fix rho11 = a, rho22 = b (scaled) and solve rho33
            let (a, b) = (a / (a + b + 1.0), b / (a + b + 1.0));
            let (r33, r44, _) = rho33_from_mu(a, b, m);
            vec![a, b, r33, r44]
        }
        (System::QubitQutrit, RatioPoint::Nu(n1, n2)) => {
            let [d2, d3, d4, d5] = free[..4] else { return Err(invalid("four free parameters needed")) };
            vec![n1 * d2 * d4 / d5, d2, d3, d4, d5, n2 * d3 * d5 / d2]
        }
        _ => unreachable!("checked above"),
    };
    let s: f64 = d.iter().sum();
    d.iter_mut().for_each(|x| *x /= s);
    Ok(d)
}

/// rho = D^{1/2} W D^{1/2}.
pub fn assemble_state<T: Scalar>(diag: &[f64], w: &Matrix<T>) -> Result<Matrix<T>> {
    let n = w.dim();
    if diag.len() != n {
        return Err(Error::Structural(format!("diagonal of length {} for a {n}x{n} W", diag.len())));
    }
    if diag.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(invalid("diagonal entries must be strictly positive"));
    }
    let s: f64 = diag.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("diagonal must sum to one, sums to {s}")));
    }
    let r: Vec<f64> = diag.iter().map(|d| d.sqrt()).collect();
    Ok(Matrix::from_fn(n, |i, j| if i == j { T::from_real(diag[i]) } else { w.get(i, j).scale(r[i] * r[j]) }))
}

/// Off-diagonal Bloore variables of one state, stored as quaternions
/// (unused components zero), upper triangle in row-major pair order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlooreSample {
    pub system: System,
    pub dyson: Dyson,
    pub offdiag: Vec<Quaternion>,
    pub feasible: bool,
}

impl BlooreSample {
    /// Builds a sample and evaluates feasibility (W PSD).
    pub fn new(system: System, dyson: Dyson, offdiag: Vec<Quaternion>) -> Result<Self> {
        if offdiag.len() != system.n_offdiag() {
            return Err(Error::Structural(format!(
                "{system} needs {} off-diagonal entries, got {}",
                system.n_offdiag(),
                offdiag.len()
            )));
        }
        for q in &offdiag {
            let comps = q.to_array();
            if comps.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite("off-diagonal entry".into()));
            }
            if comps[dyson.beta() as usize..].iter().any(|&c| c != 0.0) {
                return Err(invalid(format!("entry {q:?} has components outside the beta={dyson} field")));
            }
        }
        let mut s = BlooreSample { system, dyson, offdiag, feasible: false };
        s.feasible = is_psd_fast(&s.w_matrix::<Quaternion>(), DEFAULT_PSD_TOL);
        Ok(s)
    }

    /// Identity W (all off-diagonal entries zero).
    pub fn identity(system: System, dyson: Dyson) -> Self {
        BlooreSample {
            system,
            dyson,
            offdiag: vec![Quaternion::ZERO; system.n_offdiag()],
            feasible: true,
        }
    }

    /// Sets w_ij (i < j, zero-based).
    pub fn with_entry(mut self, i: usize, j: usize, q: Quaternion) -> Result<Self> {
        let idx = pair_index(self.system.dim(), i, j)?;
        self.offdiag[idx] = q;
        BlooreSample::new(self.system, self.dyson, self.offdiag)
    }

    /// The unit-diagonal matrix W over the scalar type `T`.
    pub fn w_matrix<T: Scalar>(&self) -> Matrix<T> {
        let n = self.system.dim();
        let mut m = Matrix::<T>::identity(n);
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                m.set_hermitian(i, j, T::from_components(&self.offdiag[k].to_array()));
                k += 1;
            }
        }
        m
    }
}

fn pair_index(n: usize, i: usize, j: usize) -> Result<usize> {
    if !(i < j && j < n) {
        return Err(invalid(format!("need i < j < {n}, got ({i}, {j})")));
    }
    Ok(i * n - i * (i + 1) / 2 + (j - i - 1))
}

/// Peres-Horodecki verdict at the canonical diagonal of `point`.
pub fn ppt_verdict(sample: &BlooreSample, point: RatioPoint) -> Result<bool> {
    let diag = canonical_diag(sample.system, point)?;
    ppt_verdict_with_diag(sample, &diag)
}

/// Peres-Horodecki verdict for an explicit diagonal.
pub fn ppt_verdict_with_diag(sample: &BlooreSample, diag: &[f64]) -> Result<bool> {
    if !sample.feasible {
        return Err(invalid("W is not positive semidefinite"));
    }
    let rho = assemble_state(diag, &sample.w_matrix::<Quaternion>())?;
    let pt = partial_transpose(&rho, sample.system.block_dim())?;
    Ok(psd_check(&pt, DEFAULT_PSD_TOL)?.is_psd)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_diagonals() {
        let d = canonical_diag(System::TwoQubit, RatioPoint::Mu(1.0)).unwrap();
        assert_eq!(d, vec![0.25; 4]);
        let d = canonical_diag(System::TwoQubit, RatioPoint::Mu(0.5)).unwrap();
        for (a, b) in d.iter().zip([1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((d[0] * d[3] / (d[1] * d[2]) - 0.25).abs() < 1e-15);
        let d = canonical_diag(System::QubitQutrit, RatioPoint::Nu(1.0, 1.0)).unwrap();
        assert!(d.iter().all(|&x| (x - 1.0 / 6.0).abs() < 1e-15));
        let d = canonical_diag(System::QubitQutrit, RatioPoint::Nu(0.3, 0.7)).unwrap();
        match ratios_of(System::QubitQutrit, &d).unwrap() {
            RatioPoint::Nu(a, b) => assert!((a - 0.3).abs() < 1e-14 && (b - 0.7).abs() < 1e-14),
            _ => unreachable!(),
        }
        assert!(canonical_diag(System::TwoQubit, RatioPoint::Mu(0.0)).is_err());
        assert!(canonical_diag(System::TwoQubit, RatioPoint::Nu(0.5, 0.5)).is_err());
    }

    #[test]
    fn assemble_simple_states() {
        let w = BlooreSample::identity(System::TwoQubit, Dyson::Real);
        let rho = assemble_state(&[0.1, 0.2, 0.3, 0.4], &w.w_matrix::<f64>()).unwrap();
        assert_eq!(rho, Matrix::diagonal(&[0.1, 0.2, 0.3, 0.4]));
        let w = w.with_entry(1, 2, Quaternion::real(1.0)).unwrap();
        let rho = assemble_state(&[0.25; 4], &w.w_matrix::<f64>()).unwrap();
        assert!((rho.get(1, 2) - 0.25).abs() < 1e-16);
        assert!(assemble_state(&[0.5, 0.5, 0.0, 0.0], &w.w_matrix::<f64>()).is_err());
    }

    #[test]
    fn single_real_23_entry_threshold() {
        for &(x, mu) in &[(0.4, 0.5), (0.6, 0.5), (0.9, 0.95), (0.99, 0.9)] {
            let w = BlooreSample::identity(System::TwoQubit, Dyson::Real)
                .with_entry(1, 2, Quaternion::real(x))
                .unwrap();
            assert_eq!(ppt_verdict(&w, RatioPoint::Mu(mu)).unwrap(), mu >= x, "x={x} mu={mu}");
        }
    }

    #[test]
    fn w14_half_at_mu_one() {
        let w = BlooreSample::identity(System::TwoQubit, Dyson::Real)
            .with_entry(0, 3, Quaternion::real(0.5))
            .unwrap();
        assert!(ppt_verdict(&w, RatioPoint::Mu(1.0)).unwrap());
        // 1 - mu^2 w14^2 >= 0 never fails for |w14| <= 1 when mu <= 1 ...
        assert!(ppt_verdict(&w, RatioPoint::Mu(1.9)).unwrap());
        // ... but mu > 1/|w14| does
        assert!(!ppt_verdict(&w, RatioPoint::Mu(2.1)).unwrap());
    }

    #[test]
    fn infeasible_w_rejected() {
        let w = BlooreSample::identity(System::TwoQubit, Dyson::Real)
            .with_entry(0, 1, Quaternion::real(0.9))
            .unwrap()
            .with_entry(0, 2, Quaternion::real(0.9))
            .unwrap()
            .with_entry(1, 2, Quaternion::real(-0.9))
            .unwrap();
        assert!(!w.feasible);
        assert!(ppt_verdict(&w, RatioPoint::Mu(1.0)).is_err());
    }

    #[test]
    fn field_components_validated() {
        let q = Quaternion::new(0.1, 0.2, 0.0, 0.0);
        assert!(BlooreSample::identity(System::TwoQubit, Dyson::Real).with_entry(0, 1, q).is_err());
        assert!(BlooreSample::identity(System::TwoQubit, Dyson::Complex).with_entry(0, 1, q).is_ok());
        let k = Quaternion::new(0.0, 0.0, 0.0, 0.1);
        assert!(BlooreSample::identity(System::TwoQubit, Dyson::Truncated).with_entry(0, 1, k).is_err());
    }
}

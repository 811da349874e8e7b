//! Sampling drivers: two-qubit mu sweeps, qubit-qutrit (nu1, nu2) sweeps and
//! R1 estimates at the symmetric point.

use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algebra::{ldl_positive, Dyson, Matrix, Quaternion, Scalar, DEFAULT_PSD_TOL};
use crate::bloore::{PptKernel, RatioPoint, Sampler, System};
use crate::qmc::{fingerprint, run_blocks, Checkpoint, LdsStream, StreamKind};
use crate::{invalid, registry, ConjectureMatch, Error, EstimateSummary, Result};

/// Default number of mu grid points.
pub const DEFAULT_MU_POINTS: usize = 201;
/// Default number of nu values per axis.
pub const DEFAULT_NU_POINTS: usize = 21;
/// Smallest accepted sample budget for a two-qubit scan.
pub const MIN_SAMPLES_TWO_QUBIT: u64 = 10_000;
/// Smallest accepted sample budget for a qubit-qutrit scan.
pub const MIN_SAMPLES_QUBIT_QUTRIT: u64 = 100_000;
/// Number of index batches behind the R1 standard error.
pub const R1_BATCHES: u64 = 32;
/// Feasible samples below which an R1 estimate is flagged.
pub const R1_MIN_FEASIBLE: u64 = 1_000;

/// Ratio-variable grid of a scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanGrid {
    /// `points` equally spaced mu values in [0, 1].
    Mu { points: usize },
    /// `points` x `points` lattice of (nu1, nu2) in [0, 1]^2, nu1 major.
    Nu { points: usize },
    /// Only the symmetric point (mu = 1, or nu1 = nu2 = 1).
    Symmetric,
}

impl ScanGrid {
    pub fn default_for(system: System) -> Self {
        match system {
            System::TwoQubit => ScanGrid::Mu { points: DEFAULT_MU_POINTS },
            System::QubitQutrit => ScanGrid::Nu { points: DEFAULT_NU_POINTS },
        }
    }

    /// Ratio points in storage order; the symmetric point is always last.
    pub fn points(&self, system: System) -> Result<Vec<RatioPoint>> {
        let axis = |m: usize| -> Result<Vec<f64>> {
            if m < 2 {
                return Err(invalid("a grid axis needs at least two points"));
            }
            Ok((0..m).map(|k| k as f64 / (m - 1) as f64).collect())
        };
        match (self, system) {
            (ScanGrid::Mu { points }, System::TwoQubit) => Ok(axis(*points)?.into_iter().map(RatioPoint::Mu).collect()),
            (ScanGrid::Nu { points }, System::QubitQutrit) => {
                let a = axis(*points)?;
                Ok(a.iter().flat_map(|&x| a.iter().map(move |&y| RatioPoint::Nu(x, y))).collect())
            }
            (ScanGrid::Symmetric, s) => Ok(vec![s.symmetric_point()]),
            _ => Err(invalid(format!("grid {self:?} does not fit {system}"))),
        }
    }
}

/// Resolved parameters that determine the result of a scan. The sample
/// target and the worker count are excluded: point k depends on neither.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub system: System,
    pub dyson: Dyson,
    pub sampler: Sampler,
    pub stream: StreamKind,
    pub seed: u64,
    pub grid: ScanGrid,
    pub psd_tol: f64,
}

impl ScanParams {
    pub fn new(system: System, dyson: Dyson) -> Self {
        ScanParams {
            system,
            dyson,
            sampler: Sampler::default_for(dyson),
            stream: StreamKind::Sobol,
            seed: 0,
            grid: ScanGrid::default_for(system),
            psd_tol: DEFAULT_PSD_TOL,
        }
    }

    pub fn fingerprint(&self) -> Result<String> {
        fingerprint(&json!({"command": "scan", "params": self}))
    }
}

/// Checkpointing and interruption settings.
#[derive(Clone, Debug, Default)]
pub struct RunControl {
    pub workers: usize,
    /// Samples per parallel block (default 4096).
    pub block: u64,
    pub checkpoint: Option<PathBuf>,
    /// Samples between checkpoint writes (default 2^20).
    pub checkpoint_interval: u64,
    /// Continue from this checkpoint.
    pub resume: Option<PathBuf>,
    /// When set, the run stops at the next chunk boundary, writes a
    /// checkpoint and returns [`Error::Interrupted`].
    pub interrupt: Option<Arc<AtomicBool>>,
}

impl RunControl {
    pub fn workers(workers: usize) -> Self {
        RunControl {
            workers,
            ..Default::default()
        }
    }

    fn block(&self) -> u64 {
        if self.block == 0 {
            4096
        } else {
            self.block
        }
    }

    fn interval(&self) -> u64 {
        if self.checkpoint_interval == 0 {
            1 << 20
        } else {
            self.checkpoint_interval
        }
    }
}

/// Per-grid-point separable counts over the feasible draws of a scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SepFuncTable {
    pub params: ScanParams,
    pub points: Vec<RatioPoint>,
    pub n_drawn: u64,
    pub n_feasible: u64,
    pub separable: Vec<u64>,
    pub warnings: Vec<String>,
}

impl SepFuncTable {
    pub fn feasible_fraction(&self) -> f64 {
        self.n_feasible as f64 / self.n_drawn as f64
    }

    /// True when at least one draw was feasible.
    pub fn is_usable(&self) -> bool {
        self.n_feasible > 0
    }

    /// Separable fraction of feasible draws at each grid point.
    pub fn raw(&self) -> Vec<f64> {
        self.separable.iter().map(|&c| c as f64 / self.n_feasible as f64).collect()
    }

    /// Counts divided by the count at the symmetric point.
    pub fn normalized(&self) -> Result<Vec<f64>> {
        let top = *self.separable.last().ok_or_else(|| invalid("empty table"))?;
        if top == 0 {
            return Err(Error::Insufficient("no separable draws at the symmetric point".into()));
        }
        Ok(self.separable.iter().map(|&c| c as f64 / top as f64).collect())
    }

    /// Metadata block embedded in outputs.
    pub fn metadata(&self) -> serde_json::Value {
        json!({
            "system": self.params.system,
            "beta": self.params.dyson.beta(),
            "sampler": self.params.sampler,
            "stream": self.params.stream,
            "seed": self.params.seed,
            "grid": self.params.grid,
            "psd_tol": self.params.psd_tol,
            "n_drawn": self.n_drawn,
            "n_feasible": self.n_feasible,
            "warnings": self.warnings,
        })
    }

    /// CSV body: `mu,feasible,separable,s_raw,s_norm` or
    /// `nu1,nu2,feasible,separable,s_norm`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let norm = self.normalized().unwrap_or_else(|_| vec![f64::NAN; self.separable.len()]);
        let raw = self.raw();
        match self.params.system {
            System::TwoQubit => writeln!(out, "mu,feasible,separable,s_raw,s_norm")?,
            System::QubitQutrit => writeln!(out, "nu1,nu2,feasible,separable,s_norm")?,
        }
        for (g, p) in self.points.iter().enumerate() {
            match *p {
                RatioPoint::Mu(m) => writeln!(
                    out,
                    "{},{},{},{},{}",
                    fmt17(m),
                    self.n_feasible,
                    self.separable[g],
                    fmt17(raw[g]),
                    fmt17(norm[g])
                )?,
                RatioPoint::Nu(a, b) => writeln!(
                    out,
                    "{},{},{},{},{}",
                    fmt17(a),
                    fmt17(b),
                    self.n_feasible,
                    self.separable[g],
                    fmt17(norm[g])
                )?,
            }
        }
        Ok(())
    }
}

/// A float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Acc {
    drawn: u64,
    feasible: u64,
    counts: Vec<u64>,
}

impl Acc {
    fn new(n: usize) -> Self {
        Acc {
            drawn: 0,
            feasible: 0,
            counts: vec![0; n],
        }
    }

    fn merge(&mut self, o: &Acc) {
        self.drawn += o.drawn;
        self.feasible += o.feasible;
        for (a, b) in self.counts.iter_mut().zip(&o.counts) {
            *a += b;
        }
    }

    fn to_vec(&self) -> Vec<u64> {
        let mut v = vec![self.drawn, self.feasible];
        v.extend(&self.counts);
        v
    }

    fn from_vec(v: &[u64], n: usize) -> Result<Self> {
        if v.len() != n + 2 {
            return Err(Error::Checkpoint(format!("expected {} accumulators, found {}", n + 2, v.len())));
        }
        Ok(Acc {
            drawn: v[0],
            feasible: v[1],
            counts: v[2..].to_vec(),
        })
    }
}

struct Engine {
    params: ScanParams,
    kernel: PptKernel,
    stream: LdsStream,
}

impl Engine {
    fn new(params: &ScanParams) -> Result<Self> {
        let points = params.grid.points(params.system)?;
        let kernel = PptKernel::new(params.system, &points, params.psd_tol)?;
        let dim = params.sampler.dimension(params.system, params.dyson)?;
        let stream = LdsStream::new(params.stream, dim, params.seed)?;
        Ok(Engine {
            params: params.clone(),
            kernel,
            stream,
        })
    }

    fn count(&self, lo: u64, hi: u64) -> Result<Acc> {
        match self.params.dyson {
            Dyson::Real => self.count_typed::<f64>(lo, hi),
            Dyson::Complex => self.count_typed::<Complex64>(lo, hi),
            Dyson::Truncated | Dyson::Quaternion => self.count_typed::<Quaternion>(lo, hi),
        }
    }

    fn count_typed<T: Scalar>(&self, lo: u64, hi: u64) -> Result<Acc> {
        let sys = self.params.system;
        let n = sys.dim();
        let mut acc = Acc::new(self.kernel.len());
        let mut u = vec![0.0; self.stream.dim()];
        let mut off = vec![Quaternion::ZERO; sys.n_offdiag()];
        let mut w = Matrix::<T>::identity(n);
        let mut buf: Vec<T> = Vec::with_capacity(n * n);
        let check_w = !self.params.sampler.always_feasible();
        for k in lo..hi {
            self.stream.point(k, &mut u)?;
            self.params.sampler.draw(sys, self.params.dyson, &u, &mut off)?;
            let mut idx = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    w.set_hermitian(i, j, T::from_components(&off[idx].to_array()));
                    idx += 1;
                }
            }
            acc.drawn += 1;
            if check_w {
                buf.clear();
                buf.extend_from_slice(w.as_slice());
                if !ldl_positive(&mut buf, n, self.params.psd_tol) {
                    continue;
                }
            }
            acc.feasible += 1;
            self.kernel.count_into(&w, &mut acc.counts, &mut buf);
        }
        Ok(acc)
    }

    fn run_range(&self, lo: u64, hi: u64, ctl: &RunControl) -> Result<Acc> {
        let parts = run_blocks(lo, hi, ctl.block(), ctl.workers.max(1), |a, b| self.count(a, b))?;
        let mut acc = Acc::new(self.kernel.len());
        for p in &parts {
            acc.merge(p);
        }
        Ok(acc)
    }
}

/// Runs a scan over stream indices [0, n_samples), honouring checkpoints,
/// resume and interruption.
pub fn scan(params: &ScanParams, n_samples: u64, ctl: &RunControl) -> Result<SepFuncTable> {
    let min = match params.system {
        System::TwoQubit => MIN_SAMPLES_TWO_QUBIT,
        System::QubitQutrit => MIN_SAMPLES_QUBIT_QUTRIT,
    };
    if n_samples < min {
        return Err(invalid(format!("{} scans need at least {min} samples, got {n_samples}", params.system)));
    }
    scan_unchecked(params, n_samples, ctl)
}

fn scan_unchecked(params: &ScanParams, n_samples: u64, ctl: &RunControl) -> Result<SepFuncTable> {
    let engine = Engine::new(params)?;
    if n_samples > engine.stream.capacity() {
        return Err(invalid(format!("stream holds at most {} points", engine.stream.capacity())));
    }
    let fp = params.fingerprint()?;
    let started = Instant::now();
    let mut acc = Acc::new(engine.kernel.len());
    let mut next = 0u64;
    let mut elapsed0 = 0.0;
    if let Some(path) = &ctl.resume {
        let cp = Checkpoint::read(path)?;
        let (stream, accs) = cp.restore(&fp)?;
        if stream.state().dim != engine.stream.dim() {
            return Err(Error::Checkpoint("stream dimension differs from the scan".into()));
        }
        acc = Acc::from_vec(&accs, engine.kernel.len())?;
        next = stream.next_index();
        elapsed0 = cp.wall_clock.elapsed_seconds;
        if next > n_samples {
            return Err(invalid(format!("checkpoint is at index {next}, beyond the target {n_samples}")));
        }
    }
    let save = |acc: &Acc, next: u64| -> Result<()> {
        if let Some(path) = &ctl.checkpoint {
            let mut s = engine.stream.clone();
            s.set_next_index(next);
            let elapsed = elapsed0 + started.elapsed().as_secs_f64();
            Checkpoint::save(&s, &acc.to_vec(), &fp, elapsed).write(path)?;
        }
        Ok(())
    };
    while next < n_samples {
        if let Some(flag) = &ctl.interrupt {
            if flag.load(Ordering::SeqCst) {
                save(&acc, next)?;
                return Err(Error::Interrupted(next));
            }
        }
        let hi = (next + ctl.interval()).min(n_samples);
        let part = engine.run_range(next, hi, ctl)?;
        acc.merge(&part);
        next = hi;
        save(&acc, next)?;
    }
    let mut warnings = Vec::new();
    let top = *acc.counts.last().unwrap_or(&0);
    if acc.counts.iter().any(|&c| c > top) {
        warnings.push("separable count at the symmetric point is not maximal over the grid".into());
    }
    if acc.feasible == 0 {
        warnings.push("no feasible samples; table unusable".into());
    }
    Ok(SepFuncTable {
        params: params.clone(),
        points: engine.kernel.points().to_vec(),
        n_drawn: acc.drawn,
        n_feasible: acc.feasible,
        separable: acc.counts,
        warnings,
    })
}

/// Two-qubit mu sweep.
pub fn scan_2qubit(params: &ScanParams, n_samples: u64, ctl: &RunControl) -> Result<SepFuncTable> {
    if params.system != System::TwoQubit {
        return Err(invalid("scan_2qubit needs a two-qubit configuration"));
    }
    scan(params, n_samples, ctl)
}

/// Qubit-qutrit (nu1, nu2) sweep; beta is 1 or 2.
pub fn scan_qubit_qutrit(params: &ScanParams, n_samples: u64, ctl: &RunControl) -> Result<SepFuncTable> {
    if params.system != System::QubitQutrit {
        return Err(invalid("scan_qubit_qutrit needs a qubit-qutrit configuration"));
    }
    if !matches!(params.dyson, Dyson::Real | Dyson::Complex) {
        return Err(invalid("qubit-qutrit scans support beta = 1 or 2"));
    }
    scan(params, n_samples, ctl)
}

/// R1 = separable / feasible at the symmetric point, with a standard error
/// from 32 contiguous index batches. The grid of `params` is ignored.
pub fn r1_estimate(params: &ScanParams, n_samples: u64, workers: usize) -> Result<EstimateSummary> {
    if n_samples < R1_BATCHES {
        return Err(invalid(format!("R1 needs at least {R1_BATCHES} samples")));
    }
    let mut p = params.clone();
    p.grid = ScanGrid::Symmetric;
    let engine = Engine::new(&p)?;
    let per = n_samples / R1_BATCHES;
    let ctl = RunControl::workers(workers);
    let batches = run_blocks(0, per * R1_BATCHES, per, 1, |lo, hi| engine.run_range(lo, hi, &ctl))?;
    let mut total = Acc::new(1);
    let ratios: Vec<f64> = batches
        .iter()
        .map(|b| {
            total.merge(b);
            b.counts[0] as f64 / b.feasible.max(1) as f64
        })
        .collect();
    if total.feasible == 0 {
        return Err(Error::Insufficient("no feasible samples".into()));
    }
    let value = total.counts[0] as f64 / total.feasible as f64;
    let nb = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / nb;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (nb - 1.0);
    let se = (var / nb).sqrt();
    let mut warnings = Vec::new();
    if total.feasible < R1_MIN_FEASIBLE {
        warnings.push(format!("only {} feasible samples", total.feasible));
    }
    let name = registry::entry_name("r1", p.system, p.dyson);
    let mut out = EstimateSummary::new(name.clone(), value, se).with_metadata(json!({
        "system": p.system,
        "beta": p.dyson.beta(),
        "sampler": p.sampler,
        "stream": p.stream,
        "seed": p.seed,
        "n_drawn": total.drawn,
        "n_feasible": total.feasible,
        "batches": R1_BATCHES,
        "warnings": warnings,
    }));
    if let Ok(e) = registry::lookup(&name) {
        out = out.with_conjecture(ConjectureMatch::new(&e.name, &e.expression, e.value, value));
    }
    Ok(out)
}

/// Feasible fraction of the sampler over `n_samples` draws, with a binomial
/// standard error.
pub fn feasible_fraction(params: &ScanParams, n_samples: u64, workers: usize) -> Result<EstimateSummary> {
    let mut p = params.clone();
    p.grid = ScanGrid::Symmetric;
    if n_samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let t = scan_unchecked(&p, n_samples, &RunControl::workers(workers))?;
    let f = t.feasible_fraction();
    Ok(EstimateSummary::new("feasible-fraction", f, (f * (1.0 - f) / n_samples as f64).sqrt()).with_metadata(t.metadata()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(system: System, dyson: Dyson) -> ScanParams {
        let mut p = ScanParams::new(system, dyson);
        p.grid = match system {
            System::TwoQubit => ScanGrid::Mu { points: 11 },
            System::QubitQutrit => ScanGrid::Nu { points: 5 },
        };
        p
    }

    #[test]
    fn grid_layout() {
        let g = ScanGrid::Nu { points: 3 }.points(System::QubitQutrit).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[1], RatioPoint::Nu(0.0, 0.5));
        assert_eq!(*g.last().unwrap(), RatioPoint::Nu(1.0, 1.0));
        assert!(ScanGrid::Mu { points: 5 }.points(System::QubitQutrit).is_err());
    }

    #[test]
    fn rejects_small_budgets() {
        let p = params(System::TwoQubit, Dyson::Real);
        assert!(matches!(scan(&p, 0, &RunControl::default()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn counts_are_bounded_and_worker_independent() {
        let p = params(System::TwoQubit, Dyson::Complex);
        let a = scan(&p, 20_000, &RunControl::workers(1)).unwrap();
        let b = scan(&p, 20_000, &RunControl::workers(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_feasible, 20_000);
        assert!(a.separable.iter().all(|&c| c <= a.n_feasible));
        assert!(a.warnings.is_empty(), "{:?}", a.warnings);
        assert_eq!(*a.normalized().unwrap().last().unwrap(), 1.0);
    }

    #[test]
    fn cube_sampler_rejects_infeasible_draws() {
        let mut p = params(System::TwoQubit, Dyson::Real);
        p.sampler = Sampler::Cube;
        let t = scan(&p, 20_000, &RunControl::default()).unwrap();
        let f = t.feasible_fraction();
        assert!(f > 0.1 && f < 0.3, "{f}");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = params(System::QubitQutrit, Dyson::Real);
        let t = scan(&p, 100_000, &RunControl::default()).unwrap();
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "nu1,nu2,feasible,separable,s_norm");
        assert_eq!(lines.len(), 26);
        assert!(lines[25].starts_with("1.0000000000000000e0,1.0000000000000000e0,100000,"));
    }

    #[test]
    fn interrupt_and_resume_match_uninterrupted_run() {
        let dir = std::env::temp_dir().join(format!("qsep-scan-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cp = dir.join("scan.json");
        let p = params(System::TwoQubit, Dyson::Real);
        let full = scan(&p, 40_000, &RunControl::workers(2)).unwrap();
        let flag = Arc::new(AtomicBool::new(false));
        let first = RunControl {
            workers: 2,
            checkpoint: Some(cp.clone()),
            checkpoint_interval: 10_000,
            ..Default::default()
        };
        let half = scan(&p, 20_000, &first).unwrap();
        assert_eq!(half.n_drawn, 20_000);
        flag.store(true, Ordering::SeqCst);
        let resumed_ctl = RunControl {
            workers: 1,
            checkpoint: Some(cp.clone()),
            checkpoint_interval: 7_000,
            resume: Some(cp.clone()),
            interrupt: Some(flag.clone()),
            ..Default::default()
        };
        assert!(matches!(scan(&p, 40_000, &resumed_ctl), Err(Error::Interrupted(20_000))));
        flag.store(false, Ordering::SeqCst);
        let done = scan(&p, 40_000, &resumed_ctl).unwrap();
        assert_eq!(done, full);
        let mut other = p.clone();
        other.seed = 9;
        let bad = RunControl {
            resume: Some(cp.clone()),
            ..Default::default()
        };
        assert!(matches!(scan(&other, 40_000, &bad), Err(Error::FingerprintMismatch { .. })));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn r1_has_batch_error() {
        let p = params(System::TwoQubit, Dyson::Real);
        let r = r1_estimate(&p, 64_000, 1).unwrap();
        let c = r.conjecture.as_ref().unwrap();
        assert!(c.rel_diff.abs() < 0.05, "{r:?}");
        assert!(r.std_error > 0.0 && r.std_error < 0.01);
    }
}

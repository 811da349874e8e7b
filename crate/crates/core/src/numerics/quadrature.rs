use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Value of an integral with its error estimate and cost.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: u64,
}

// Gauss-Kronrod 7/15 nodes and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Default cap on the number of subintervals of one adaptive 1-D integral.
pub const DEFAULT_MAX_INTERVALS: usize = 4000;

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut finite = fc.is_finite();
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        finite &= s.is_finite();
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    if !finite {
        return Err(Error::NonFinite(format!("integrand not finite on [{a}, {b}]")));
    }
    Ok((kron * h, ((kron - gauss) * h).abs()))
}

/// Tolerances for [`integrate_1d`].
#[derive(Clone, Copy, Debug)]
pub struct GkOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl GkOptions {
    pub fn rel(rel_tol: f64) -> Self {
        GkOptions {
            rel_tol,
            abs_tol: 0.0,
            max_intervals: DEFAULT_MAX_INTERVALS,
        }
    }

    pub fn with_abs(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`,
/// optionally pre-split at interior `breaks`. Nodes never touch the
/// endpoints, so integrable endpoint singularities are tolerated.
pub fn integrate_1d_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: GkOptions,
) -> Result<QuadratureResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("integration limits must be finite: [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadratureResult::default());
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    inner.sort_by(|x, y| x.total_cmp(y));
    inner.dedup();
    cuts.extend(inner);
    cuts.push(hi);

    // Each window [cut_k, cut_k+1] is mapped from t in [k, k+1] by the cubic
    // x = cut_k + width * (3u^2 - 2u^3), u = t - k. The map has zero slope at
    // both ends, which turns inverse-square-root endpoint singularities into
    // bounded integrands.
    let nwin = cuts.len() - 1;
    let mut g = |t: f64| {
        let k = (t.floor() as usize).min(nwin - 1);
        let u = t - k as f64;
        let w = 6.0 * u * (1.0 - u);
        if w <= 0.0 {
            return 0.0;
        }
        let (c0, c1) = (cuts[k], cuts[k + 1]);
        let x = c0 + (c1 - c0) * u * u * (3.0 - 2.0 * u);
        f(x) * (c1 - c0) * w
    };
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0u64;
    for k in 0..nwin {
        let (a, b) = (k as f64, (k + 1) as f64);
        let (v, e) = gk15(&mut g, a, b)?;
        evals += 15;
        total += v;
        err += e;
        heap.push(Segment { a, b, value: v, error: e });
    }
    let done = |total: f64, err: f64| err <= opts.abs_tol.max(opts.rel_tol * total.abs());
    while !done(total, err) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::NonConvergence {
                context: format!("1-D integral on [{lo}, {hi}] exceeded {} intervals", opts.max_intervals),
                partial: QuadratureResult {
                    value: sign * total,
                    abs_error_estimate: err,
                    evaluations: evals,
                },
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // cannot split further; accept what we have
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut g, worst.a, mid)?;
        let (v2, e2) = gk15(&mut g, mid, worst.b)?;
        evals += 30;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // recompute sums to shed accumulated rounding
    let (mut total, mut err) = (0.0, 0.0);
    for s in heap.iter() {
        total += s.value;
        err += s.error;
    }
    if !done(total, err) && err > 1e-13 * total.abs() {
        return Err(Error::NonConvergence {
            context: format!("1-D integral on [{lo}, {hi}] hit the resolution limit"),
            partial: QuadratureResult {
                value: sign * total,
                abs_error_estimate: err,
                evaluations: evals,
            },
        });
    }
    Ok(QuadratureResult {
        value: sign * total,
        abs_error_estimate: err,
        evaluations: evals,
    })
}

/// [`integrate_1d_breaks`] without break points.
pub fn integrate_1d<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: GkOptions) -> Result<QuadratureResult> {
    integrate_1d_breaks(f, a, b, &[], opts)
}

/// Integration domain for [`integrate_adaptive`].
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// Axis-aligned box, one `(lo, hi)` pair per dimension.
    Box(Vec<(f64, f64)>),
    /// The standard simplex `{x >= 0, sum x <= 1}` in the given dimension.
    Simplex(usize),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Box(b) => b.len(),
            Domain::Simplex(d) => *d,
        }
    }
}

/// Gauss-Legendre nodes and weights on [0, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Tolerance factor between successive levels of a nested scheme.
pub const INNER_TOL_FACTOR: f64 = 0.1;

/// One level of a nested scheme. A result that misses `rel_tol` but is
/// within ten times of it is accepted; anything worse is counted in
/// `failures` and its partial value used.
pub fn inner_integral<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel_tol: f64,
    failures: &Cell<u32>,
) -> f64 {
    let opts = GkOptions::rel(rel_tol).with_abs(1e-300);
    match integrate_1d_breaks(f, a, b, breaks, opts) {
        Ok(r) => r.value,
        Err(Error::NonConvergence { partial, .. }) => {
            if partial.abs_error_estimate > 10.0 * rel_tol * partial.value.abs() {
                failures.set(failures.get() + 1);
            }
            partial.value
        }
        Err(_) => {
            failures.set(failures.get() + 1);
            f64::NAN
        }
    }
}

fn nested_box<F: Fn(&[f64]) -> f64>(
    f: &F,
    bounds: &[(f64, f64)],
    level: usize,
    x: &mut Vec<f64>,
    rel_tol: f64,
    failures: &Cell<u32>,
    evals: &Cell<u64>,
) -> f64 {
    let (lo, hi) = bounds[level];
    let last = level + 1 == bounds.len();
    inner_integral(
        |t| {
            x[level] = t;
            if last {
                evals.set(evals.get() + 1);
                f(x)
            } else {
                nested_box(f, bounds, level + 1, x, rel_tol * INNER_TOL_FACTOR, failures, evals)
            }
        },
        lo,
        hi,
        &[],
        rel_tol,
        failures,
    )
}

/// Deterministic adaptive integration of `f` over a box or simplex of
/// dimension 1 to 3 by iterated 1-D Gauss-Kronrod. Simplex domains are
/// mapped from the unit cube by stick-breaking.
pub fn integrate_adaptive<F: Fn(&[f64]) -> f64>(f: F, domain: &Domain, rel_tol: f64) -> Result<QuadratureResult> {
    let dim = domain.dim();
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidArgument(format!("adaptive quadrature supports 1-3 dimensions, got {dim}")));
    }
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidArgument("rel_tol must be positive".into()));
    }
    let failures = Cell::new(0u32);
    let evals = Cell::new(0u64);
    let mut x = vec![0.0; dim];
    let value = match domain {
        Domain::Box(bounds) => nested_box(&f, bounds, 0, &mut x, rel_tol, &failures, &evals),
        Domain::Simplex(d) => {
            let mut y = vec![0.0; *d];
            let g = |u: &[f64]| {
                let mut rem = 1.0;
                let mut jac = 1.0;
                let mut pt = [0.0f64; 3];
                for (i, &ui) in u.iter().enumerate() {
                    pt[i] = rem * ui;
                    jac *= rem;
                    rem -= pt[i];
                }
                f(&pt[..u.len()]) * jac
            };
            let unit = vec![(0.0, 1.0); *d];
            nested_box(&g, &unit, 0, &mut y, rel_tol, &failures, &evals)
        }
    };
    let result = QuadratureResult {
        value,
        abs_error_estimate: rel_tol * value.abs(),
        evaluations: evals.get(),
    };
    if !value.is_finite() {
        return Err(Error::NonFinite("integrand produced non-finite values".into()));
    }
    if failures.get() > 0 {
        return Err(Error::NonConvergence {
            context: format!("{} inner integrals did not converge", failures.get()),
            partial: result,
        });
    }
    Ok(result)
}

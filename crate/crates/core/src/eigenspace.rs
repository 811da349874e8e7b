//! Eigenvalue-space separability: Haar-random eigenvector frames, lattice
//! scans of PPT over eigenvalue triples, eigenvalue measures, and
//! deterministic probabilities of regions and model separability functions.

use std::cell::Cell;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algebra::{ldl_positive, pt_source, Matrix, DEFAULT_PSD_TOL};
use crate::numerics::{gauss_legendre, integrate_1d_breaks, reg_inc_beta, GkOptions, INNER_TOL_FACTOR};
use crate::qmc::run_blocks;
use crate::scans::fmt17;
use crate::{invalid, Error, EstimateSummary, Result};

/// Default lattice denominator.
pub const DEFAULT_GRID_M: u32 = 20;
/// Smallest accepted number of unitaries in a scan.
pub const MIN_UNITARIES: u64 = 1000;
/// Index batches kept per scan for standard errors.
pub const EIGEN_BATCHES: usize = 16;
/// Default relative tolerance of chamber integrals.
pub const CHAMBER_REL_TOL: f64 = 1e-7;
/// Pittenger-Rubin bound: all eigenvalues above it certify separability.
pub const PITTENGER_BOUND: f64 = 7.0 / 30.0;

const SIMPLEX_TOL: f64 = 1e-9;
const GAUSS_POINTS: usize = 8;

/// Full rank (trivariate) or one eigenvalue fixed at zero (bivariate).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rank {
    Full,
    Degenerate,
}

impl std::str::FromStr for Rank {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Rank::Full),
            "degenerate" => Ok(Rank::Degenerate),
            _ => Err(invalid(format!("unknown rank '{s}' (full, degenerate)"))),
        }
    }
}

/// Measure on the eigenvalue simplex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenMetric {
    HilbertSchmidt,
    Bures,
    Uniform,
}

impl std::str::FromStr for EigenMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hs" | "hilbert-schmidt" => Ok(EigenMetric::HilbertSchmidt),
            "bures" => Ok(EigenMetric::Bures),
            "uniform" => Ok(EigenMetric::Uniform),
            _ => Err(invalid(format!("unknown metric '{s}' (hs, bures, uniform)"))),
        }
    }
}

/// Eigenvalue density of a metric, Dyson index and rank.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenMeasure {
    pub metric: EigenMetric,
    pub beta: u32,
    pub rank: Rank,
}

impl EigenMeasure {
    pub fn new(metric: EigenMetric, beta: u32, rank: Rank) -> Result<Self> {
        if !(1..=4).contains(&beta) {
            return Err(invalid(format!("beta must be 1..=4, got {beta}")));
        }
        if metric == EigenMetric::Bures && beta != 2 {
            return Err(invalid("the Bures eigenvalue measure is only available for beta = 2"));
        }
        Ok(EigenMeasure { metric, beta, rank })
    }

    pub fn hs(beta: u32, rank: Rank) -> Result<Self> {
        Self::new(EigenMetric::HilbertSchmidt, beta, rank)
    }

    /// Unnormalized density; for degenerate rank the last entry is ignored
    /// and taken as zero.
    fn density(&self, l: &[f64; 4]) -> f64 {
        let k = match self.rank {
            Rank::Full => 4,
            Rank::Degenerate => 3,
        };
        let b = self.beta as i32;
        match self.metric {
            EigenMetric::Uniform => 1.0,
            EigenMetric::HilbertSchmidt => {
                let mut v = 1.0;
                for i in 0..k {
                    for j in (i + 1)..k {
                        v *= (l[i] - l[j]).abs().powi(b);
                    }
                }
                if self.rank == Rank::Degenerate {
                    v *= (l[0] * l[1] * l[2]).powi(b);
                }
                v
            }
            EigenMetric::Bures => {
                let mut v = 1.0;
                for i in 0..k {
                    for j in (i + 1)..k {
                        let s = l[i] + l[j];
                        if s <= 0.0 {
                            return 0.0;
                        }
                        v *= (l[i] - l[j]).powi(2) / s;
                    }
                }
                match self.rank {
                    Rank::Full => v / (l[0] * l[1] * l[2] * l[3]).sqrt(),
                    Rank::Degenerate => v * (l[0] * l[1] * l[2]).sqrt(),
                }
            }
        }
    }
}

fn check_simplex(l: &[f64; 4]) -> Result<()> {
    if l.iter().any(|x| !x.is_finite() || *x < -SIMPLEX_TOL) || (l.iter().sum::<f64>() - 1.0).abs() > SIMPLEX_TOL {
        return Err(invalid(format!("eigenvalues {l:?} are not in the probability simplex")));
    }
    Ok(())
}

fn sorted_desc(l: &[f64; 4]) -> [f64; 4] {
    let mut s = *l;
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Eigenvalue density at `l` (any order). Degenerate rank needs a zero
/// eigenvalue.
pub fn eigen_measure(l: &[f64; 4], measure: EigenMeasure) -> Result<f64> {
    check_simplex(l)?;
    let s = sorted_desc(l);
    if measure.rank == Rank::Degenerate && s[3].abs() > SIMPLEX_TOL {
        return Err(invalid("degenerate rank needs one zero eigenvalue"));
    }
    Ok(measure.density(&s))
}

/// Participation ratio, its linear transform S, the VAD function and the
/// two certified-separable flags.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFunctionals {
    pub r: f64,
    pub s: f64,
    pub vad: f64,
    pub in_pittenger_ball: bool,
    pub in_separable_ball: bool,
}

fn functionals_unchecked(l: &[f64; 4]) -> StateFunctionals {
    let s = sorted_desc(l);
    let p: f64 = s.iter().map(|x| x * x).sum();
    let r = 1.0 / p;
    StateFunctionals {
        r,
        s: 1.5 * (1.0 - p),
        vad: s[0] - s[2] - 2.0 * (s[1].max(0.0) * s[3].max(0.0)).sqrt(),
        in_pittenger_ball: s[3] > PITTENGER_BOUND,
        in_separable_ball: 3.0 * p <= 1.0 + 1e-12,
    }
}

pub fn state_functionals(l: &[f64; 4]) -> Result<StateFunctionals> {
    check_simplex(l)?;
    Ok(functionals_unchecked(l))
}

/// Haar-distributed n x n unitary: Gram-Schmidt on the columns of a complex
/// Gaussian matrix, which leaves a positive diagonal in the triangular factor.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix<Complex64> {
    let mut cols: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
                .collect()
        })
        .collect();
    for j in 0..n {
        for k in 0..j {
            let (done, rest) = cols.split_at_mut(j);
            let qk = &done[k];
            let proj: Complex64 = qk.iter().zip(rest[0].iter()).map(|(a, b)| a.conj() * b).sum();
            for (x, q) in rest[0].iter_mut().zip(qk) {
                *x -= proj * q;
            }
        }
        let norm = cols[j].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    Matrix::from_fn(n, |i, j| cols[j][i])
}

fn unitary_for(seed: u64, index: u64) -> Matrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    haar_unitary(&mut rng, 4)
}

/// Lattice of eigenvalue tuples with denominator m and PPT counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenGrid {
    pub m: u32,
    pub rank: Rank,
    /// Eigenvalue numerators, summing to m; the fourth is zero for
    /// degenerate grids.
    pub lattice: Vec<[u32; 4]>,
    pub counts: Vec<u64>,
    /// Per-batch counts over contiguous unitary index ranges; empty when
    /// the grid was read back from CSV.
    pub batches: Vec<Vec<u64>>,
    pub n_unitaries: u64,
    pub seed: u64,
}

impl EigenGrid {
    /// Closed lattice: every tuple with entries in {0, 1/m, ..., 1}.
    pub fn new(m: u32, rank: Rank) -> Result<Self> {
        if m < 1 {
            return Err(invalid("grid denominator must be at least 1"));
        }
        let mut lattice = Vec::new();
        for i in 0..=m {
            for j in 0..=(m - i) {
                match rank {
                    Rank::Full => {
                        for k in 0..=(m - i - j) {
                            lattice.push([i, j, k, m - i - j - k]);
                        }
                    }
                    Rank::Degenerate => lattice.push([i, j, m - i - j, 0]),
                }
            }
        }
        let n = lattice.len();
        Ok(EigenGrid { m, rank, lattice, counts: vec![0; n], batches: Vec::new(), n_unitaries: 0, seed: 0 })
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn lambda(&self, i: usize) -> [f64; 4] {
        let m = self.m as f64;
        self.lattice[i].map(|k| k as f64 / m)
    }

    /// Position of a lattice tuple.
    pub fn index_of(&self, n: [u32; 4]) -> Option<usize> {
        let m = self.m;
        if n.iter().sum::<u32>() != m || (self.rank == Rank::Degenerate && n[3] != 0) {
            return None;
        }
        // lexicographic enumeration order of `new`
        let mut idx = 0usize;
        for i in 0..n[0] {
            let r = (m - i) as usize;
            idx += match self.rank {
                Rank::Full => (r + 1) * (r + 2) / 2,
                Rank::Degenerate => r + 1,
            };
        }
        match self.rank {
            Rank::Full => {
                let r = (m - n[0]) as usize;
                for j in 0..n[1] as usize {
                    idx += r - j + 1;
                }
                idx += n[2] as usize;
            }
            Rank::Degenerate => idx += n[1] as usize,
        }
        Some(idx)
    }

    pub fn fraction(&self, i: usize) -> f64 {
        if self.n_unitaries == 0 {
            return f64::NAN;
        }
        self.counts[i] as f64 / self.n_unitaries as f64
    }

    pub fn metadata(&self) -> serde_json::Value {
        json!({
            "m": self.m,
            "rank": self.rank,
            "points": self.len(),
            "n_unitaries": self.n_unitaries,
            "seed": self.seed,
        })
    }

    /// `l1,l2,l3,sep_fraction,n_unitaries` (full) or
    /// `l1,l2,sep_fraction,n_unitaries` (degenerate).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        match self.rank {
            Rank::Full => writeln!(out, "l1,l2,l3,sep_fraction,n_unitaries")?,
            Rank::Degenerate => writeln!(out, "l1,l2,sep_fraction,n_unitaries")?,
        }
        for i in 0..self.len() {
            let l = self.lambda(i);
            let f = fmt17(self.fraction(i));
            match self.rank {
                Rank::Full => writeln!(out, "{},{},{},{},{}", fmt17(l[0]), fmt17(l[1]), fmt17(l[2]), f, self.n_unitaries)?,
                Rank::Degenerate => writeln!(out, "{},{},{},{}", fmt17(l[0]), fmt17(l[1]), f, self.n_unitaries)?,
            }
        }
        Ok(())
    }

    /// Reads a table written by [`EigenGrid::write_csv`].
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| invalid("empty eigen table"))??;
        let rank = match header.trim() {
            "l1,l2,l3,sep_fraction,n_unitaries" => Rank::Full,
            "l1,l2,sep_fraction,n_unitaries" => Rank::Degenerate,
            h => return Err(Error::Structural(format!("unexpected eigen table header '{h}'"))),
        };
        let width = if rank == Rank::Full { 5 } else { 4 };
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Structural(format!("bad number '{t}': {e}"))))
                .collect::<Result<_>>()?;
            if v.len() != width {
                return Err(Error::Structural(format!("expected {width} columns, got {}", v.len())));
            }
            rows.push(v);
        }
        let smallest = rows
            .iter()
            .flat_map(|r| r[..width - 2].iter().copied())
            .filter(|&x| x > 0.0)
            .fold(f64::INFINITY, f64::min);
        if !smallest.is_finite() {
            return Err(Error::Structural("eigen table has no positive eigenvalue".into()));
        }
        let m = (1.0 / smallest).round() as u32;
        let mut grid = EigenGrid::new(m, rank)?;
        if rows.len() != grid.len() {
            return Err(Error::Structural(format!("expected {} rows for m = {m}, got {}", grid.len(), rows.len())));
        }
        let n = rows[0][width - 1] as u64;
        for r in &rows {
            let k: Vec<u32> = r[..width - 2].iter().map(|x| (x * m as f64).round() as u32).collect();
            let tuple = match rank {
                Rank::Full => [k[0], k[1], k[2], m.checked_sub(k[0] + k[1] + k[2]).unwrap_or(u32::MAX)],
                Rank::Degenerate => [k[0], k[1], m.checked_sub(k[0] + k[1]).unwrap_or(u32::MAX), 0],
            };
            let i = grid.index_of(tuple).ok_or_else(|| Error::Structural(format!("row {r:?} is off the lattice")))?;
            if r[width - 1] as u64 != n {
                return Err(Error::Structural("n_unitaries differs between rows".into()));
            }
            grid.counts[i] = (r[width - 2] * n as f64).round() as u64;
        }
        grid.n_unitaries = n;
        Ok(grid)
    }
}

/// Counts, for each lattice tuple, the Haar unitaries U for which
/// U diag(l) U† has a positive partial transpose.
pub fn eigen_scan(m: u32, rank: Rank, n_unitaries: u64, seed: u64, workers: usize) -> Result<EigenGrid> {
    if n_unitaries < MIN_UNITARIES {
        return Err(invalid(format!("eigen scans need at least {MIN_UNITARIES} unitaries, got {n_unitaries}")));
    }
    let mut grid = EigenGrid::new(m, rank)?;
    let lambdas: Vec<[f64; 4]> = (0..grid.len()).map(|i| grid.lambda(i)).collect();
    let mut src = [0usize; 16];
    for r in 0..4 {
        for c in 0..4 {
            let (a, b) = pt_source(r, c, 2);
            src[r * 4 + c] = a * 4 + b;
        }
    }
    let shift = DEFAULT_PSD_TOL / 4.0;
    let count = |lo: u64, hi: u64| -> Result<Vec<u64>> {
        let mut counts = vec![0u64; lambdas.len()];
        let mut proj = [[Complex64::new(0.0, 0.0); 16]; 4];
        let mut rho = [Complex64::new(0.0, 0.0); 16];
        let mut buf = [Complex64::new(0.0, 0.0); 16];
        for idx in lo..hi {
            let u = unitary_for(seed, idx);
            for (k, p) in proj.iter_mut().enumerate() {
                for a in 0..4 {
                    for b in 0..4 {
                        p[a * 4 + b] = u.get(a, k) * u.get(b, k).conj();
                    }
                }
            }
            for (g, l) in lambdas.iter().enumerate() {
                for (e, r) in rho.iter_mut().enumerate() {
                    *r = proj[0][e] * l[0] + proj[1][e] * l[1] + proj[2][e] * l[2] + proj[3][e] * l[3];
                }
                for (e, b) in buf.iter_mut().enumerate() {
                    *b = rho[src[e]];
                }
                if ldl_positive(&mut buf, 4, shift) {
                    counts[g] += 1;
                }
            }
        }
        Ok(counts)
    };
    let nb = EIGEN_BATCHES as u64;
    let mut batches = Vec::with_capacity(EIGEN_BATCHES);
    for b in 0..nb {
        let (lo, hi) = (b * n_unitaries / nb, (b + 1) * n_unitaries / nb);
        let parts = run_blocks(lo, hi, 256, workers.max(1), count)?;
        let mut acc = vec![0u64; lambdas.len()];
        for p in parts {
            for (a, c) in acc.iter_mut().zip(p) {
                *a += c;
            }
        }
        batches.push(acc);
    }
    for b in &batches {
        for (c, x) in grid.counts.iter_mut().zip(b) {
            *c += x;
        }
    }
    grid.batches = batches;
    grid.n_unitaries = n_unitaries;
    grid.seed = seed;
    Ok(grid)
}

/// Weights c_g = ∫ φ_g w over the simplex for the piecewise-linear hat
/// functions φ_g of the lattice, and the total ∫ w. Each Kuhn simplex of
/// the lattice in cumulative coordinates is integrated with a collapsed
/// tensor Gauss rule.
fn hat_weights(grid: &EigenGrid, measure: EigenMeasure) -> (Vec<f64>, f64) {
    let m = grid.m;
    let (x, w) = if measure.metric == EigenMetric::Bures {
        // smoothstep map u -> 3u^2 - 2u^3 on each collapsed coordinate keeps
        // the inverse square roots at the faces bounded
        let (u, wu) = gauss_legendre(2 * GAUSS_POINTS);
        let x: Vec<f64> = u.iter().map(|u| u * u * (3.0 - 2.0 * u)).collect();
        let w: Vec<f64> = u.iter().zip(&wu).map(|(u, w)| w * 6.0 * u * (1.0 - u)).collect();
        (x, w)
    } else {
        gauss_legendre(GAUSS_POINTS)
    };
    let mut c = vec![0.0; grid.len()];
    let mut total = 0.0;
    let to_tuple = |cum: &[u32]| -> [u32; 4] {
        match grid.rank {
            Rank::Full => [cum[0], cum[1] - cum[0], cum[2] - cum[1], m - cum[2]],
            Rank::Degenerate => [cum[0], cum[1] - cum[0], m - cum[1], 0],
        }
    };
    let dim = if grid.rank == Rank::Full { 3 } else { 2 };
    let perms: &[&[usize]] = if dim == 3 {
        &[&[0, 1, 2], &[0, 2, 1], &[1, 0, 2], &[1, 2, 0], &[2, 0, 1], &[2, 1, 0]]
    } else {
        &[&[0, 1], &[1, 0]]
    };
    let mf = m as f64;
    let mut cell = [0u32; 3];
    let cells = (m as usize).pow(dim as u32);
    for ci in 0..cells {
        let mut r = ci;
        for c in cell.iter_mut().take(dim) {
            *c = (r % m as usize) as u32;
            r /= m as usize;
        }
        for perm in perms {
            let mut verts = [[0u32; 3]; 4];
            verts[0] = cell;
            for (k, &p) in perm.iter().enumerate() {
                verts[k + 1] = verts[k];
                verts[k + 1][p] += 1;
            }
            let inside = verts[..=dim]
                .iter()
                .all(|v| (0..dim - 1).all(|i| v[i] <= v[i + 1]) && v[dim - 1] <= m);
            if !inside {
                continue;
            }
            let ids: Vec<usize> = verts[..=dim]
                .iter()
                .map(|v| grid.index_of(to_tuple(&v[..dim])).expect("Kuhn vertex on the lattice"))
                .collect();
            let mut acc = [0.0f64; 4];
            let mut acc_w = 0.0;
            let mut eval = |xi: &[f64], jw: f64| {
                let mut bary = [0.0f64; 4];
                bary[0] = 1.0 - xi.iter().sum::<f64>();
                bary[1..=dim].copy_from_slice(xi);
                let mut cum = [0.0f64; 3];
                for (k, b) in bary[..=dim].iter().enumerate() {
                    for d in 0..dim {
                        cum[d] += b * verts[k][d] as f64 / mf;
                    }
                }
                let l = match grid.rank {
                    Rank::Full => [cum[0], cum[1] - cum[0], cum[2] - cum[1], 1.0 - cum[2]],
                    Rank::Degenerate => [cum[0], cum[1] - cum[0], 1.0 - cum[1], 0.0],
                };
                let v = measure.density(&sorted_desc(&l)) * jw;
                acc_w += v;
                for k in 0..=dim {
                    acc[k] += v * bary[k];
                }
            };
            if dim == 3 {
                for (s, ws) in x.iter().zip(&w) {
                    for (t, wt) in x.iter().zip(&w) {
                        for (u, wu) in x.iter().zip(&w) {
                            let xi = [*s, (1.0 - s) * t, (1.0 - s) * (1.0 - t) * u];
                            eval(&xi, ws * wt * wu * (1.0 - s) * (1.0 - s) * (1.0 - t));
                        }
                    }
                }
            } else {
                for (s, ws) in x.iter().zip(&w) {
                    for (t, wt) in x.iter().zip(&w) {
                        eval(&[*s, (1.0 - s) * t], ws * wt * (1.0 - s));
                    }
                }
            }
            for k in 0..=dim {
                c[ids[k]] += acc[k];
            }
            total += acc_w;
        }
    }
    (c, total)
}

/// ∫ S w / ∫ w with S the piecewise-linear interpolant of the separable
/// fractions. The standard error comes from the per-batch tables when
/// present.
pub fn probability_from_table(grid: &EigenGrid, measure: EigenMeasure) -> Result<EstimateSummary> {
    if grid.is_empty() || grid.n_unitaries == 0 {
        return Err(invalid("eigen table is empty"));
    }
    if measure.rank != grid.rank {
        return Err(invalid("measure rank differs from the table rank"));
    }
    let (c, total) = hat_weights(grid, measure);
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::NonFinite("eigenvalue measure normalization".into()));
    }
    let estimate = |counts: &[u64], n: u64| -> f64 {
        counts.iter().zip(&c).map(|(&k, w)| w * k as f64 / n as f64).sum::<f64>() / total
    };
    let value = estimate(&grid.counts, grid.n_unitaries);
    let nb = grid.batches.len();
    let (se, kind) = if nb > 1 {
        let per: Vec<f64> = grid
            .batches
            .iter()
            .enumerate()
            .map(|(b, counts)| {
                let n = (b as u64 + 1) * grid.n_unitaries / nb as u64 - b as u64 * grid.n_unitaries / nb as u64;
                estimate(counts, n)
            })
            .collect();
        let mean = per.iter().sum::<f64>() / nb as f64;
        let var = per.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (nb as f64 - 1.0);
        ((var / nb as f64).sqrt(), "batch")
    } else {
        // independent-binomial bound; ignores correlation between points
        let n = grid.n_unitaries as f64;
        let v: f64 = grid
            .counts
            .iter()
            .zip(&c)
            .map(|(&k, w)| {
                let p = k as f64 / n;
                (w / total).powi(2) * p * (1.0 - p) / n
            })
            .sum();
        (v.sqrt(), "binomial")
    };
    let mut meta = grid.metadata();
    meta["measure"] = json!(measure);
    meta["std_error_kind"] = json!(kind);
    Ok(EstimateSummary::new("eigen-probability", value, se).with_metadata(meta))
}

/// Certified-separable regions of the eigenvalue simplex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// R >= 3.
    SeparableBall,
    /// VAD < 0.
    VadNegative,
    /// Every eigenvalue above 7/30.
    Pittenger,
}

impl std::str::FromStr for Region {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ball" | "separable-ball" => Ok(Region::SeparableBall),
            "vad" | "vad-negative" => Ok(Region::VadNegative),
            "pittenger" => Ok(Region::Pittenger),
            _ => Err(invalid(format!("unknown region '{s}' (ball, vad, pittenger)"))),
        }
    }
}

impl Region {
    fn contains(self, f: &StateFunctionals) -> bool {
        match self {
            Region::SeparableBall => f.in_separable_ball,
            Region::VadNegative => f.vad < 0.0,
            Region::Pittenger => f.in_pittenger_ball,
        }
    }
}

/// Roots of sum(l^2) = 1/3 along the innermost variable t, with the other
/// eigenvalues a, b fixed and the largest one equal to c - t.
fn ball_roots(c: f64, a2b2: f64) -> [f64; 2] {
    let d = 2.0 / 3.0 - c * c - 2.0 * a2b2;
    if d <= 0.0 {
        return [f64::NAN; 2];
    }
    [(c - d.sqrt()) / 2.0, (c + d.sqrt()) / 2.0]
}

/// One nested level with a relative and an absolute target; misses beyond
/// ten times the target are counted in `fails`.
fn level<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], rel: f64, abs: f64, fails: &Cell<u32>) -> f64 {
    match integrate_1d_breaks(f, a, b, breaks, GkOptions::rel(rel).with_abs(abs)) {
        Ok(r) => r.value,
        Err(Error::NonConvergence { partial, .. }) => {
            if partial.abs_error_estimate > 10.0 * (rel * partial.value.abs()).max(abs) {
                fails.set(fails.get() + 1);
            }
            partial.value
        }
        Err(_) => {
            fails.set(fails.get() + 1);
            f64::NAN
        }
    }
}

/// ∫ f w over the ordered chamber l1 >= l2 >= l3 >= l4 (l4 = 0 for
/// degenerate rank), with break points at the region boundaries. `abs` is
/// the absolute target of every level.
fn chamber_integral(f: &dyn Fn(&[f64; 4]) -> f64, measure: EigenMeasure, rel: f64, abs: f64, fails: &Cell<u32>) -> f64 {
    let g = |l: &[f64; 4]| {
        let w = measure.density(l);
        if w == 0.0 {
            0.0
        } else {
            f(l) * w
        }
    };
    let (r1, r2) = (rel * INNER_TOL_FACTOR, rel * INNER_TOL_FACTOR.powi(2));
    match measure.rank {
        Rank::Full => level(
            |l2| {
                level(
                    |l3| {
                        let c = 1.0 - l2 - l3;
                        let hi = l3.min(c - l2);
                        let mut br = Vec::with_capacity(4);
                        let v = (1.0 - 2.0 * l3).max(0.0).sqrt() - l2.sqrt();
                        if v > 0.0 {
                            br.push(v * v);
                        }
                        br.extend(ball_roots(c, l2 * l2 + l3 * l3));
                        br.push(PITTENGER_BOUND);
                        br.retain(|t| t.is_finite() && *t > 0.0 && *t < hi);
                        level(|l4| g(&[c - l4, l2, l3, l4]), 0.0, hi, &br, r2, abs, fails)
                    },
                    0.0,
                    l2.min(1.0 - 2.0 * l2),
                    &[PITTENGER_BOUND],
                    r1,
                    abs,
                    fails,
                )
            },
            0.0,
            0.5,
            &[PITTENGER_BOUND, 1.0 / 3.0, 0.25],
            rel,
            abs,
            fails,
        ),
        Rank::Degenerate => level(
            |l2| {
                let c = 1.0 - l2;
                let hi = l2.min(c - l2);
                let mut br: Vec<f64> = ball_roots(c, l2 * l2).to_vec();
                br.push(PITTENGER_BOUND);
                br.retain(|t| t.is_finite() && *t > 0.0 && *t < hi);
                level(|l3| g(&[c - l3, l2, l3, 0.0]), 0.0, hi, &br, r1, abs, fails)
            },
            0.0,
            0.5,
            &[1.0 / 3.0],
            rel,
            abs,
            fails,
        ),
    }
}

fn chamber_ratio(f: &dyn Fn(&[f64; 4]) -> f64, measure: EigenMeasure, rel: f64) -> Result<f64> {
    let fails = Cell::new(0);
    let scale = chamber_integral(&|_| 1.0, measure, 1e-4, 0.0, &Cell::new(0)).abs();
    let abs = rel * scale * INNER_TOL_FACTOR.powi(2);
    let num = chamber_integral(f, measure, rel, abs, &fails);
    let den = chamber_integral(&|_| 1.0, measure, rel, abs, &fails);
    let p = num / den;
    if !p.is_finite() {
        return Err(Error::NonFinite("eigenvalue chamber integral".into()));
    }
    if fails.get() > 0 {
        return Err(Error::NonConvergence {
            context: format!("{} inner eigenvalue integrals did not converge", fails.get()),
            partial: crate::numerics::QuadratureResult { value: p, abs_error_estimate: rel * p, evaluations: 0 },
        });
    }
    Ok(p)
}

/// Measure of a certified-separable region relative to the whole simplex.
pub fn region_probability(region: Region, measure: EigenMeasure, rel_tol: f64) -> Result<f64> {
    chamber_ratio(&|l| if region.contains(&functionals_unchecked(l)) { 1.0 } else { 0.0 }, measure, rel_tol)
}

/// Model separability functions on the eigenvalue simplex. Each is 1 on
/// its certified region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "model")]
pub enum EigenModel {
    /// min(1, R/3)^p.
    RPower { p: f64 },
    /// min(1, 1 - VAD)^p.
    VadPower { p: f64 },
    /// I_x(a, b) with x = min(1, S^2), raised to the Dyson index.
    BetaS2 { a: f64, b: f64 },
    /// I_x(a, b) with x = min(1, (1 - VAD)^2), raised to the Dyson index.
    BetaVad { a: f64, b: f64 },
    /// Constant 1.
    One,
}

impl EigenModel {
    pub fn eval(&self, f: &StateFunctionals, beta: u32) -> Result<f64> {
        Ok(match *self {
            EigenModel::RPower { p } => (f.r / 3.0).min(1.0).powf(p),
            EigenModel::VadPower { p } => (1.0 - f.vad).min(1.0).powf(p),
            EigenModel::BetaS2 { a, b } => reg_inc_beta((f.s * f.s).min(1.0), a, b)?.powi(beta as i32),
            EigenModel::BetaVad { a, b } => reg_inc_beta((1.0 - f.vad).powi(2).min(1.0), a, b)?.powi(beta as i32),
            EigenModel::One => 1.0,
        })
    }
}

/// ∫ model w / ∫ w over the simplex.
pub fn model_probability(model: EigenModel, measure: EigenMeasure, rel_tol: f64) -> Result<f64> {
    if let EigenModel::RPower { p } | EigenModel::VadPower { p } = model {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(invalid(format!("model exponent must be finite and non-negative, got {p}")));
        }
    }
    if let EigenModel::BetaS2 { a, b } | EigenModel::BetaVad { a, b } = model {
        if !(a > 0.0 && b > 0.0) {
            return Err(invalid("beta model parameters must be positive"));
        }
    }
    let beta = measure.beta;
    chamber_ratio(&|l| model.eval(&functionals_unchecked(l), beta).unwrap_or(f64::NAN), measure, rel_tol)
}

/// Power-law families for [`solve_power`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerFamily {
    RPower,
    VadPower,
}

impl PowerFamily {
    pub fn model(self, p: f64) -> EigenModel {
        match self {
            PowerFamily::RPower => EigenModel::RPower { p },
            PowerFamily::VadPower => EigenModel::VadPower { p },
        }
    }
}

impl std::str::FromStr for PowerFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "r-power" => Ok(PowerFamily::RPower),
            "vad-power" => Ok(PowerFamily::VadPower),
            _ => Err(invalid(format!("unknown power family '{s}' (r-power, vad-power)"))),
        }
    }
}

/// Exponent p at which the family's model probability equals `target`,
/// by bisection in log p to 1e-6 in probability.
pub fn solve_power(target: f64, family: PowerFamily, measure: EigenMeasure) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(invalid(format!("target must be in (0, 1), got {target}")));
    }
    let rel = 1e-8;
    let prob = |p: f64| model_probability(family.model(p), measure, rel);
    let (mut lo, mut hi) = (1e-3f64, 1e3f64);
    let (p_lo, p_hi) = (prob(lo)?, prob(hi)?);
    if !(target < p_lo && target > p_hi) {
        return Err(invalid(format!("target {target} is outside the attainable range ({p_hi}, {p_lo})")));
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        let v = prob(mid)?;
        if (v - target).abs() < 1e-6 * 0.1 || hi / lo < 1.0 + 1e-12 {
            return Ok(mid);
        }
        if v > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;

    fn random_lambda(rng: &mut ChaCha8Rng) -> [f64; 4] {
        let mut e = [0.0; 4];
        for x in e.iter_mut() {
            *x = -rng.random::<f64>().ln();
        }
        let s: f64 = e.iter().sum();
        e.map(|x| x / s)
    }

    #[test]
    fn haar_unitary_is_unitary_with_uniform_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m11 = 0.0;
        let n = 10_000;
        for _ in 0..n {
            let u = haar_unitary(&mut rng, 4);
            let p = u.conj_transpose().matmul(&u).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((p.get(i, j) - Complex64::new(want, 0.0)).norm() < 1e-12);
                }
            }
            m11 += u.get(0, 0).norm_sqr();
        }
        assert!((m11 / n as f64 - 0.25).abs() < 0.01);
    }

    #[test]
    fn haar_eigenphases_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut phases = Vec::new();
        for _ in 0..2500 {
            let u = haar_unitary(&mut rng, 4);
            let m = nalgebra::Matrix4::from_fn(|i, j| u.get(i, j));
            for z in m.schur().eigenvalues().expect("complex Schur form").iter() {
                phases.push((z.arg() + std::f64::consts::PI) / (2.0 * std::f64::consts::PI));
            }
        }
        phases.sort_by(f64::total_cmp);
        let n = phases.len() as f64;
        let ks = phases
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "KS statistic {ks}");
    }

    #[test]
    fn functionals_examples() {
        let f = state_functionals(&[0.25; 4]).unwrap();
        assert!((f.r - 4.0).abs() < 1e-14 && (f.s - 1.125).abs() < 1e-14 && (f.vad + 0.5).abs() < 1e-14);
        assert!(f.in_pittenger_ball && f.in_separable_ball);
        let f = state_functionals(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((f.r - 1.0).abs() < 1e-14 && (f.vad - 1.0).abs() < 1e-14);
        let f = state_functionals(&[0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!((f.r - 2.0).abs() < 1e-14 && (f.vad - 0.5).abs() < 1e-14);
        assert!(state_functionals(&[0.5, 0.6, 0.0, 0.0]).is_err());
    }

    #[test]
    fn measures_vanish_on_repeated_eigenvalues_and_are_symmetric() {
        let hs2 = EigenMeasure::hs(2, Rank::Full).unwrap();
        assert_eq!(eigen_measure(&[0.5, 0.25, 0.125, 0.125], hs2).unwrap(), 0.0);
        let bures = EigenMeasure::new(EigenMetric::Bures, 2, Rank::Full).unwrap();
        assert_eq!(eigen_measure(&[0.4, 0.4, 0.1, 0.1], bures).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let l = random_lambda(&mut rng);
            for m in [hs2, bures, EigenMeasure::hs(1, Rank::Full).unwrap()] {
                let a = eigen_measure(&l, m).unwrap();
                let mut p = l;
                p.shuffle(&mut rng);
                let b = eigen_measure(&p, m).unwrap();
                assert!((a - b).abs() <= 1e-14 * a.abs());
            }
        }
        assert!(EigenMeasure::new(EigenMetric::Bures, 1, Rank::Full).is_err());
        assert!(eigen_measure(&[0.5, 0.5, 0.1, 0.0], hs2).is_err());
    }

    #[test]
    fn hs_normalization_agrees_with_qmc() {
        use crate::numerics::{integrate_adaptive, integrate_simplex_qmc, Domain};
        let m = EigenMeasure::hs(2, Rank::Full).unwrap();
        let w = |x: &[f64]| m.density(&[x[0], x[1], x[2], 1.0 - x[0] - x[1] - x[2]]);
        let a = integrate_adaptive(w, &Domain::Simplex(3), 1e-6).unwrap();
        let q = integrate_simplex_qmc(w, 3, 1 << 16, 1).unwrap();
        assert!((a.value - q.value).abs() < 4.0 * (q.abs_error_estimate + a.abs_error_estimate), "{a:?} {q:?}");
    }

    #[test]
    fn lattice_indexing_round_trips() {
        for rank in [Rank::Full, Rank::Degenerate] {
            let g = EigenGrid::new(7, rank).unwrap();
            for (i, t) in g.lattice.iter().enumerate() {
                assert_eq!(g.index_of(*t), Some(i));
            }
        }
        assert_eq!(EigenGrid::new(40, Rank::Full).unwrap().len(), 12341);
        assert_eq!(EigenGrid::new(40, Rank::Degenerate).unwrap().len(), 861);
    }

    #[test]
    fn scan_examples() {
        let g = eigen_scan(4, Rank::Full, 1000, 1, 1).unwrap();
        let n = g.n_unitaries;
        assert_eq!(g.counts[g.index_of([1, 1, 1, 1]).unwrap()], n);
        assert!(g.counts[g.index_of([4, 0, 0, 0]).unwrap()] <= n / 100);
        assert!(g.counts.iter().all(|&c| c <= n));
        let d = eigen_scan(3, Rank::Degenerate, 1000, 1, 1).unwrap();
        assert_eq!(d.counts[d.index_of([1, 1, 1, 0]).unwrap()], d.n_unitaries);
    }

    #[test]
    fn scan_is_worker_independent() {
        let a = eigen_scan(3, Rank::Full, 1000, 7, 1).unwrap();
        let b = eigen_scan(3, Rank::Full, 1000, 7, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn permuted_eigenvalues_with_permuted_frame_give_same_verdict() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let u = haar_unitary(&mut rng, 4);
            let l = random_lambda(&mut rng);
            let mut perm = [0usize, 1, 2, 3];
            perm.shuffle(&mut rng);
            let verdict = |u: &Matrix<Complex64>, l: &[f64; 4]| {
                let rho = Matrix::from_fn(4, |a, b| (0..4).map(|k| u.get(a, k) * u.get(b, k).conj() * l[k]).sum::<Complex64>());
                let pt = crate::algebra::partial_transpose(&rho, 2).unwrap();
                crate::algebra::psd_check(&pt, 1e-12).unwrap().is_psd
            };
            let up = Matrix::from_fn(4, |a, k| u.get(a, perm[k]));
            let lp = [l[perm[0]], l[perm[1]], l[perm[2]], l[perm[3]]];
            assert_eq!(verdict(&u, &l), verdict(&up, &lp));
        }
    }

    #[test]
    fn table_with_all_separable_gives_one_and_csv_round_trips() {
        for rank in [Rank::Full, Rank::Degenerate] {
            let mut g = EigenGrid::new(5, rank).unwrap();
            g.n_unitaries = 1000;
            g.counts.iter_mut().for_each(|c| *c = 1000);
            let m = EigenMeasure::hs(2, rank).unwrap();
            let p = probability_from_table(&g, m).unwrap();
            assert!((p.value - 1.0).abs() < 1e-12);
            for (i, c) in g.counts.iter_mut().enumerate() {
                *c = (i as u64 * 37) % 1001;
            }
            let mut buf = Vec::new();
            g.write_csv(&mut buf).unwrap();
            let back = EigenGrid::read_csv(&buf[..]).unwrap();
            assert_eq!(back.counts, g.counts);
            assert_eq!(back.m, 5);
        }
    }

    #[test]
    fn uniform_ball_is_inscribed_sphere() {
        let m = EigenMeasure::new(EigenMetric::Uniform, 1, Rank::Full).unwrap();
        let p = region_probability(Region::SeparableBall, m, 1e-7).unwrap();
        let want = std::f64::consts::PI / (6.0 * 3f64.sqrt());
        assert!(((p - want) / want).abs() < 1e-6, "{p} vs {want}");
    }

    #[test]
    fn model_one_is_normalized() {
        for m in [
            EigenMeasure::hs(2, Rank::Full).unwrap(),
            EigenMeasure::new(EigenMetric::Bures, 2, Rank::Degenerate).unwrap(),
        ] {
            let p = model_probability(EigenModel::One, m, 1e-7).unwrap();
            assert!((p - 1.0).abs() < 1e-12);
        }
    }
}

//! Property checks shared by the property tests and the acceptance suite.
#![allow(dead_code)]

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use qsep_core::algebra::{
    hermitian_eigenvalues, partial_transpose, psd_check, quat_embed, Dyson, Matrix, Quaternion, Scalar,
};
use qsep_core::bloore::{
    canonical_diag, diag_with_ratio, jacobian_j, ppt_verdict_with_diag, BlooreSample, RatioPoint, Sampler, System,
};
use qsep_core::scans::{scan, RunControl, ScanGrid, ScanParams};
use qsep_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one property check.
pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

pub fn random_sample(rng: &mut ChaCha8Rng, system: System, dyson: Dyson) -> BlooreSample {
    let dim = Sampler::Onion.dimension(system, dyson).unwrap();
    let u: Vec<f64> = (0..dim).map(|_| rng.random::<f64>().clamp(1e-12, 1.0 - 1e-12)).collect();
    let mut out = vec![Quaternion::ZERO; system.n_offdiag()];
    Sampler::Onion.draw(system, dyson, &u, &mut out).unwrap();
    BlooreSample::new(system, dyson, out).unwrap()
}

/// Random quaternionic Hermitian matrix with entries restricted to the
/// first beta components.
pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, beta: usize) -> Matrix<Quaternion> {
    let mut m = Matrix::<Quaternion>::zeros(n);
    for i in 0..n {
        m.set(i, i, Quaternion::real(rng.random::<f64>() * 2.0 - 1.0));
        for j in (i + 1)..n {
            let mut c = [0.0; 4];
            for x in c.iter_mut().take(beta) {
                *x = rng.random::<f64>() * 2.0 - 1.0;
            }
            m.set_hermitian(i, j, Quaternion::from_slice(&c));
        }
    }
    m
}

/// PPT verdicts agree across 10 random diagonals with the same ratios.
/// Verdicts whose smallest partial-transpose eigenvalue lies within 1e-9 of
/// zero are counted as boundary cases, not violations.
pub fn ppt_diagonal_invariance(cases: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut violations, mut boundary) = (0, 0);
    let combos = [
        (System::TwoQubit, Dyson::Real),
        (System::TwoQubit, Dyson::Complex),
        (System::TwoQubit, Dyson::Quaternion),
        (System::QubitQutrit, Dyson::Real),
        (System::QubitQutrit, Dyson::Complex),
    ];
    for k in 0..cases {
        let (system, dyson) = combos[k % combos.len()];
        let s = random_sample(&mut rng, system, dyson);
        let point = match system {
            System::TwoQubit => RatioPoint::Mu(rng.random::<f64>() * 2.0 + 1e-3),
            System::QubitQutrit => RatioPoint::Nu(rng.random::<f64>() * 2.0 + 1e-3, rng.random::<f64>() * 2.0 + 1e-3),
        };
        let min_eig = |d: &[f64]| {
            let rho = qsep_core::bloore::assemble_state(d, &s.w_matrix::<Quaternion>()).unwrap();
            let pt = partial_transpose(&rho, system.block_dim()).unwrap();
            psd_check(&pt, 0.0).unwrap().min_eig
        };
        let reference = ppt_verdict_with_diag(&s, &canonical_diag(system, point).unwrap()).unwrap();
        let mut near = min_eig(&canonical_diag(system, point).unwrap()).abs() < 1e-9;
        let mut differs = false;
        for _ in 0..10 {
            let free: Vec<f64> = (0..4).map(|_| rng.random::<f64>() + 0.05).collect();
            let d = diag_with_ratio(system, point, &free).unwrap();
            near |= min_eig(&d).abs() < 1e-9;
            differs |= ppt_verdict_with_diag(&s, &d).unwrap() != reference;
        }
        if differs {
            if near {
                boundary += 1;
            } else {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{cases} cases, {violations} violations, {boundary} boundary flips"))
}

/// Complex embeddings of quaternionic Hermitian matrices have doubled spectra.
pub fn quat_embed_even_multiplicities(cases: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let q = random_hermitian(&mut rng, 4, 4);
        let c = quat_embed(&q).unwrap();
        let ev = hermitian_eigenvalues(&c).unwrap();
        for p in ev.chunks(2) {
            worst = worst.max((p[0] - p[1]).abs());
        }
    }
    outcome(worst <= 1e-9, format!("{cases} matrices, largest pair gap {worst:.1e}"))
}

/// Partial transpose is an involution and preserves trace and diagonal.
pub fn partial_transpose_involution(cases: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = true;
    for k in 0..cases {
        let (n, b) = if k % 2 == 0 { (4, 2) } else { (6, 3) };
        let q = random_hermitian(&mut rng, n, 2);
        let m: Matrix<Complex64> = q.map(|x| Complex64::from_components(&x.to_array()));
        let pt = partial_transpose(&m, b).unwrap();
        let back = partial_transpose(&pt, b).unwrap();
        ok &= back == m;
        ok &= (0..n).all(|i| pt.get(i, i) == m.get(i, i));
        ok &= pt.trace() == m.trace();
    }
    outcome(ok, format!("{cases} matrices"))
}

/// J(1/mu) / mu^2 = J(mu) on a 20-point grid.
pub fn jacobian_reflection() -> Outcome {
    let mut worst = 0.0f64;
    for dyson in Dyson::ALL {
        for k in 1..=20 {
            let mu = k as f64 / 21.0;
            let a = jacobian_j(mu, dyson).unwrap();
            let b = jacobian_j(1.0 / mu, dyson).unwrap() / (mu * mu);
            worst = worst.max(((a - b) / a).abs());
        }
    }
    outcome(worst <= 1e-6, format!("largest relative gap {worst:.1e}"))
}

/// Scans with 1, 4 and 16 workers give identical tables.
pub fn worker_independence(n: u64) -> Outcome {
    let mut ok = true;
    for (system, dyson, n) in [(System::TwoQubit, Dyson::Complex, n), (System::QubitQutrit, Dyson::Real, n.max(100_000))] {
        let p = ScanParams::new(system, dyson);
        let base = scan(&p, n, &RunControl::workers(1)).unwrap();
        for w in [4, 16] {
            let ctl = RunControl { workers: w, block: 1000, ..Default::default() };
            ok &= scan(&p, n, &ctl).unwrap() == base;
        }
    }
    outcome(ok, "workers {1, 4, 16}")
}

/// Interrupted and resumed scans equal an uninterrupted one.
pub fn checkpoint_resume() -> Outcome {
    let dir = std::env::temp_dir().join(format!("qsep-resume-{}-{}", std::process::id(), rand::random::<u32>()));
    std::fs::create_dir_all(&dir).unwrap();
    let cp = dir.join("scan.json");
    let mut p = ScanParams::new(System::TwoQubit, Dyson::Quaternion);
    p.grid = ScanGrid::Mu { points: 51 };
    let full = scan(&p, 60_000, &RunControl::workers(1)).unwrap();
    let flag = Arc::new(AtomicBool::new(false));
    let first = RunControl { workers: 4, checkpoint: Some(cp.clone()), checkpoint_interval: 15_000, ..Default::default() };
    scan(&p, 30_000, &first).unwrap();
    flag.store(true, Ordering::SeqCst);
    let ctl = RunControl {
        workers: 2,
        checkpoint: Some(cp.clone()),
        checkpoint_interval: 10_000,
        resume: Some(cp.clone()),
        interrupt: Some(flag.clone()),
        ..Default::default()
    };
    let interrupted = matches!(scan(&p, 60_000, &ctl), Err(Error::Interrupted(30_000)));
    flag.store(false, Ordering::SeqCst);
    let done = scan(&p, 60_000, &ctl).unwrap();
    std::fs::remove_dir_all(&dir).ok();
    outcome(interrupted && done == full, "two-qubit beta=4, 30k + 30k samples with an interrupt")
}

mod common;

use proptest::prelude::*;
use qsep_core::algebra::{embed, partial_transpose, psd_check, Dyson, Quaternion};
use qsep_core::bloore::{assemble_state, canonical_diag, diag_with_ratio, ppt_verdict_with_diag, BlooreSample, RatioPoint, System};
use qsep_core::numerics::{integrate_adaptive, integrate_simplex_qmc, reg_inc_beta, Domain};
use qsep_core::qmc::{run_blocks, LdsStream, StreamKind};
use qsep_core::registry::{pipeline_probability, r2_constant, R2Options};
use qsep_core::scans::{scan, RunControl, ScanParams};
use qsep_core::EstimateSummary;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn quat_embed_spectra_are_doubled() {
    let o = common::quat_embed_even_multiplicities(1000, 1);
    assert!(o.passed, "{}", o.detail);
}

#[test]
fn partial_transpose_is_an_involution() {
    let o = common::partial_transpose_involution(200, 2);
    assert!(o.passed, "{}", o.detail);
}

#[test]
fn ppt_verdict_depends_only_on_ratios() {
    let o = common::ppt_diagonal_invariance(1000, 3);
    assert!(o.passed, "{}", o.detail);
}

#[test]
fn jacobian_is_reflection_symmetric() {
    let o = common::jacobian_reflection();
    assert!(o.passed, "{}", o.detail);
}

#[test]
fn checkpointed_scans_resume_exactly() {
    let o = common::checkpoint_resume();
    assert!(o.passed, "{}", o.detail);
}

#[test]
fn scans_are_worker_independent() {
    let o = common::worker_independence(20_000);
    assert!(o.passed, "{}", o.detail);
}

#[test]
fn assembled_state_is_psd_iff_w_is() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 0..1000 {
        let shrink = if k % 2 == 0 { 0.5 } else { 1.0 };
        let mut w = common::random_hermitian(&mut rng, 4, 2).map(|x| x.scale(shrink));
        for i in 0..4 {
            w.set(i, i, Quaternion::ONE);
        }
        let d = [0.1, 0.2, 0.3, 0.4];
        let rho = assemble_state(&d, &w).unwrap();
        let a = psd_check(&w, 1e-12).unwrap();
        let b = psd_check(&rho, 1e-12).unwrap();
        if a.min_eig.abs() > 1e-9 {
            assert_eq!(a.is_psd, b.is_psd);
        }
    }
}

#[test]
fn mu_suffices_for_two_qubit_verdicts() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for dyson in [Dyson::Real, Dyson::Complex] {
        for _ in 0..200 {
            let s = common::random_sample(&mut rng, System::TwoQubit, dyson);
            let mu = rand::Rng::random::<f64>(&mut rng) * 3.0 + 0.01;
            let canon = ppt_verdict_with_diag(&s, &canonical_diag(System::TwoQubit, RatioPoint::Mu(mu)).unwrap()).unwrap();
            let d = diag_with_ratio(System::TwoQubit, RatioPoint::Mu(mu), &[0.7, 0.2]).unwrap();
            let rho = assemble_state(&d, &s.w_matrix::<Quaternion>()).unwrap();
            let pt = partial_transpose(&rho, 2).unwrap();
            let direct = psd_check(&pt, 0.0).unwrap();
            if direct.min_eig.abs() > 1e-9 {
                assert_eq!(canon, direct.is_psd);
            }
        }
    }
}

#[test]
fn native_and_embedded_psd_checks_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for beta in [1, 2] {
        for _ in 0..200 {
            let q = common::random_hermitian(&mut rng, 4, beta);
            let a = psd_check(&q, 1e-10).unwrap();
            let b = psd_check(&embed(&q), 1e-10).unwrap();
            assert_eq!(a.is_psd, b.is_psd);
            assert!((a.min_eig - b.min_eig).abs() < 1e-12);
        }
    }
}

#[test]
fn adaptive_and_qmc_agree_on_polynomials() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let c: Vec<f64> = (0..6).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
        let (i, j) = (rand::Rng::random_range(&mut rng, 0..4), rand::Rng::random_range(&mut rng, 0..4));
        let f = |x: &[f64]| c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0].powi(i) * x[1].powi(j) + c[4] * x[0] * x[1] + c[5];
        let a = integrate_adaptive(f, &Domain::Simplex(2), 1e-9).unwrap();
        let q = integrate_simplex_qmc(f, 2, 1 << 14, 3).unwrap();
        assert!((a.value - q.value).abs() <= 4.0 * (a.abs_error_estimate + q.abs_error_estimate) + 1e-12);
    }
}

#[test]
fn r2_decreases_with_beta() {
    let values: Vec<f64> = Dyson::ALL
        .iter()
        .map(|&d| r2_constant(System::TwoQubit, d, R2Options::default()).unwrap().value)
        .collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
}

#[test]
fn pipeline_is_linear_in_r1() {
    let r1 = |v| EstimateSummary::new("r1", v, 0.0);
    let a = pipeline_probability(System::TwoQubit, Dyson::Complex, &r1(0.3)).unwrap().value;
    let b = pipeline_probability(System::TwoQubit, Dyson::Complex, &r1(0.6)).unwrap().value;
    assert!((b - 2.0 * a).abs() < 1e-15);
}

#[test]
fn counts_do_not_increase_when_samples_are_removed() {
    let p = ScanParams::new(System::TwoQubit, Dyson::Real);
    let small = scan(&p, 20_000, &RunControl::workers(1)).unwrap();
    let large = scan(&p, 40_000, &RunControl::workers(1)).unwrap();
    assert!(small.separable.iter().zip(&large.separable).all(|(a, b)| a <= b));
}

proptest! {
    #[test]
    fn reg_inc_beta_reflection(x in 0.0f64..=1.0, a in 0.1f64..60.0, b in 0.1f64..60.0) {
        let l = reg_inc_beta(x, a, b).unwrap();
        let r = reg_inc_beta(1.0 - x, b, a).unwrap();
        prop_assert!((l - (1.0 - r)).abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_keeps_diagonal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = common::random_hermitian(&mut rng, 6, 4);
        let pt = partial_transpose(&q, 3).unwrap();
        for i in 0..6 {
            prop_assert_eq!(pt.get(i, i), q.get(i, i));
        }
    }

    #[test]
    fn block_partitions_merge_identically(blocks in 1u64..40, workers in 1usize..8) {
        let stream = LdsStream::new(StreamKind::Sobol, 3, 11).unwrap();
        let n = 2000u64;
        let sum = |lo: u64, hi: u64| -> qsep_core::Result<Vec<f64>> {
            let mut p = [0.0; 3];
            let mut acc = vec![0.0; 3];
            for k in lo..hi {
                stream.point(k, &mut p)?;
                for (a, x) in acc.iter_mut().zip(p) {
                    *a += x;
                }
            }
            Ok(acc)
        };
        let merge = |parts: Vec<Vec<f64>>| parts.into_iter().fold(vec![0.0; 3], |mut a, p| {
            a.iter_mut().zip(p).for_each(|(x, y)| *x += y);
            a
        });
        let one = merge(run_blocks(0, n, n.div_ceil(blocks), 1, sum).unwrap());
        let many = merge(run_blocks(0, n, n.div_ceil(blocks), workers, sum).unwrap());
        prop_assert_eq!(one, many);
    }

    #[test]
    fn bloore_entries_outside_the_field_are_rejected(x in -1.0f64..1.0) {
        let q = Quaternion::new(0.0, x.abs() + 0.1, 0.0, 0.0);
        let r = BlooreSample::identity(System::TwoQubit, Dyson::Real).with_entry(0, 1, q);
        prop_assert!(r.is_err());
    }
}

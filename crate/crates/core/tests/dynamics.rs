mod common;

use common::*;
use qtransport_core::dynamics::{
    drift_matrix, propagate_covariance, propagate_mean, stability, steady_covariance, trajectory,
    DriftMatrix, MomentState, OffDiagonalD, Propagation, TrajectoryOptions,
};
use qtransport_core::model::{DissipationParams, ModeKind, SystemParams};
use qtransport_core::transport::diffusion_matrix;
use qtransport_core::{p_index, q_index, Error, Mat, Vector};

fn assert_gibbs(p: &SystemParams<f64>, d: &DissipationParams<f64>, sigma: &Mat<f64>, rel: f64) {
    let n = p.n_modes();
    for k in 0..n {
        let (m, w) = (p.eq_mass[k], p.eq_frequency[k]);
        let qq = gibbs_qq(m, w, d.temperature);
        let pp = gibbs_pp(m, w, d.temperature);
        let (q, pi) = (q_index(k), p_index(k));
        assert!((sigma[(q, q)] / qq - 1.0).abs() < rel, "qq mode {k}: {} vs {qq}", sigma[(q, q)]);
        assert!((sigma[(pi, pi)] / pp - 1.0).abs() < rel, "pp mode {k}: {} vs {pp}", sigma[(pi, pi)]);
    }
    for a in 0..2 * n {
        for b in 0..2 * n {
            if a != b {
                let scaled = sigma[(a, b)] / (sigma[(a, a)] * sigma[(b, b)]).sqrt();
                assert!(scaled.abs() < rel, "entry ({a},{b}) scaled {scaled}");
            }
        }
    }
}

#[test]
fn fig1_steady_state_is_gibbs() {
    let (p, d, _) = fig1();
    let m = drift_matrix(&p, &d).unwrap();
    let dm = diffusion_matrix(&p, &d).unwrap();
    let tilde = steady_covariance(&m, &dm).unwrap();
    assert_gibbs(&p, &d, &tilde, 1e-10);
}

#[test]
fn fully_coupled_three_mode_steady_state_is_gibbs() {
    let (p, d) = general_three_mode();
    let m = drift_matrix(&p, &d).unwrap();
    assert!(stability(&m).unwrap().is_stable);
    let dm = diffusion_matrix(&p, &d).unwrap();
    let tilde = steady_covariance(&m, &dm).unwrap();
    assert_gibbs(&p, &d, &tilde, 1e-10);
}

#[test]
fn fig1_spectrum_real_parts_are_minus_lambda() {
    let (p, d, _) = fig1();
    let st = stability(&drift_matrix(&p, &d).unwrap()).unwrap();
    assert!(st.is_stable);
    for (re, _) in &st.spectrum.eigenvalues {
        assert!((re + 2.0).abs() < 1e-9, "{re}");
    }
}

#[test]
fn undamped_oscillator() {
    let p = SystemParams::uncoupled(vec![2.0], vec![1.5]);
    let d = DissipationParams::diagonal(&[0.0], 1.0);
    let m = drift_matrix(&p, &d).unwrap();
    assert_eq!(m.matrix(), &Mat::from_row_slice(2, 2, &[0.0, 0.5, -4.5, 0.0]));
    let st = stability(&m).unwrap();
    assert!(!st.is_stable);
    for (re, im) in &st.spectrum.eigenvalues {
        assert!(re.abs() < 1e-12 && (im.abs() - 1.5).abs() < 1e-12);
    }
    let v0 = Vector::from_vec(vec![0.3, 0.0]);
    for t in [0.0_f64, 0.7, 4.0] {
        let v = propagate_mean(&m, &v0, t).unwrap();
        assert!((v[0] - 0.3 * (1.5 * t).cos()).abs() < 1e-14);
        assert!((v[1] + 2.0 * 1.5 * 0.3 * (1.5 * t).sin()).abs() < 1e-13);
    }
}

#[test]
fn barrier_flips_curvature() {
    let mut p = SystemParams::uncoupled(vec![2.0], vec![1.5]);
    p.mode_kind = vec![ModeKind::InvertedBarrier];
    let d = DissipationParams::diagonal(&[0.0], 1.0);
    let m = drift_matrix(&p, &d).unwrap();
    assert_eq!(m.matrix()[(1, 0)], 4.5);
    let st = stability(&m).unwrap();
    let re: Vec<f64> = st.spectrum.eigenvalues.iter().map(|e| e.0).collect();
    assert!((re[0] - 1.5).abs() < 1e-12 && (re[1] + 1.5).abs() < 1e-12);
}

#[test]
fn fig10_spectrum_has_unstable_direction() {
    let (p, d, _) = fig10(0.6);
    let st = stability(&drift_matrix(&p, &d).unwrap()).unwrap();
    assert!(!st.is_stable);
    assert!(st.spectrum.max_real() > 0.0);
    let m = drift_matrix(&p, &d).unwrap();
    let dm = diffusion_matrix(&p, &d).unwrap();
    assert!(matches!(steady_covariance(&m, &dm), Err(Error::Unstable { .. })));
}

#[test]
fn zero_diffusion_gives_zero_steady_state() {
    let (p, d, _) = fig1();
    let m = drift_matrix(&p, &d).unwrap();
    let zero = qtransport_core::transport::DiffusionMatrix::new(Mat::zeros(4, 4));
    assert_eq!(steady_covariance(&m, &zero).unwrap(), Mat::zeros(4, 4));
}

#[test]
fn single_mode_steady_state_closed_form() {
    let p = SystemParams::uncoupled(vec![3.0], vec![0.8]);
    let d = DissipationParams::diagonal(&[0.4], 0.3);
    let m = drift_matrix(&p, &d).unwrap();
    let s = steady_covariance(&m, &diffusion_matrix(&p, &d).unwrap()).unwrap();
    assert!((s[(0, 0)] / gibbs_qq(3.0, 0.8, 0.3) - 1.0).abs() < 1e-13);
    assert!((s[(1, 1)] / gibbs_pp(3.0, 0.8, 0.3) - 1.0).abs() < 1e-13);
    assert!(s[(0, 1)].abs() < 1e-15);
}

#[test]
fn fig1_steady_state_matches_long_integration() {
    let (p, d, s0) = fig1();
    let m = drift_matrix(&p, &d).unwrap();
    let dm = diffusion_matrix(&p, &d).unwrap();
    let tilde = steady_covariance(&m, &dm).unwrap();
    let late = rk4_oracle(m.matrix(), dm.matrix(), &s0.covariance, 20.0, 2e-4);
    for a in 0..4 {
        for b in 0..4 {
            let scale = (tilde[(a, a)] * tilde[(b, b)]).sqrt();
            assert!(((late[(a, b)] - tilde[(a, b)]) / scale).abs() < 1e-8, "({a},{b})");
        }
    }
}

#[test]
fn fig1_closed_form_matches_rk4_oracle() {
    let (p, d, s0) = fig1();
    let m = drift_matrix(&p, &d).unwrap();
    let dm = diffusion_matrix(&p, &d).unwrap();
    let t = seconds(5e-22);
    let exact = propagate_covariance(&m, &dm, &s0.covariance, t).unwrap();
    let oracle = rk4_oracle(m.matrix(), dm.matrix(), &s0.covariance, t, seconds(1e-25));
    let err = (exact - oracle).abs().max();
    assert!(err < 1e-6, "{err}");
}

#[test]
fn covariance_fixed_point_and_time_zero() {
    let (p, d, s0) = fig1();
    let m = drift_matrix(&p, &d).unwrap();
    let dm = diffusion_matrix(&p, &d).unwrap();
    let tilde = steady_covariance(&m, &dm).unwrap();
    let later = propagate_covariance(&m, &dm, &tilde, 3.0).unwrap();
    assert!(((later - &tilde).abs().max() / tilde.abs().max()) < 1e-12);
    let start = propagate_covariance(&m, &dm, &s0.covariance, 0.0).unwrap();
    assert!((start - &s0.covariance).abs().max() < 1e-9 * s0.covariance.abs().max());
}

#[test]
fn semigroup_property() {
    let (p, d) = general_three_mode();
    let m = drift_matrix(&p, &d).unwrap();
    let dm = diffusion_matrix(&p, &d).unwrap();
    let v0 = Vector::from_vec(vec![0.3, -0.1, 0.2, 0.5, -0.4, 0.1]);
    let s0 = Mat::identity(6, 6) * 0.7;
    let (s, t) = (0.8, 1.7);
    let direct = propagate_mean(&m, &v0, s + t).unwrap();
    let split = propagate_mean(&m, &propagate_mean(&m, &v0, s).unwrap(), t).unwrap();
    assert!((&direct - &split).norm() < 1e-10 * direct.norm());
    let direct = propagate_covariance(&m, &dm, &s0, s + t).unwrap();
    let mid = propagate_covariance(&m, &dm, &s0, s).unwrap();
    let split = propagate_covariance(&m, &dm, &mid, t).unwrap();
    assert!((&direct - &split).abs().max() < 1e-10 * direct.abs().max());
}

#[test]
fn unstable_path_matches_independent_integration() {
    let (p, d, s0) = fig10(0.6);
    let m = drift_matrix(&p, &d).unwrap();
    let dm = diffusion_matrix(&p, &d).unwrap();
    let t = seconds(5e-22);
    let lib = propagate_covariance(&m, &dm, &s0.covariance, t).unwrap();
    let oracle = rk4_oracle(m.matrix(), dm.matrix(), &s0.covariance, t, 1e-3);
    let rel = (&lib - &oracle).abs().max() / oracle.abs().max();
    assert!(rel < 1e-9, "{rel}");
}

#[test]
fn trajectory_uses_closed_form_when_stable() {
    let (p, d, s0) = fig1();
    let times: Vec<f64> = (0..50).map(|i| seconds(i as f64 * 1e-23)).collect();
    let tr = trajectory(&p, &d, &s0, &times, TrajectoryOptions::default()).unwrap();
    assert_eq!(tr.states.len(), 50);
    assert_eq!(tr.provenance.propagation, Propagation::ClosedForm);
    assert_eq!(tr.provenance.parameter_hash.len(), 64);
    for s in &tr.states {
        assert_eq!(s.covariance, s.covariance.transpose());
    }
    assert_eq!(tr.states[0].covariance, MomentState::new(s0.mean.clone(), s0.covariance.clone()).unwrap().covariance);
}

#[test]
fn trajectory_empty_grid() {
    let (p, d, s0) = fig1();
    let tr = trajectory(&p, &d, &s0, &[], TrajectoryOptions::default()).unwrap();
    assert!(tr.states.is_empty() && tr.times.is_empty());
}

#[test]
fn trajectory_rejects_bad_grid() {
    let (p, d, s0) = fig1();
    for grid in [vec![1.0, 1.0], vec![2.0, 1.0], vec![-1.0, 0.0]] {
        assert!(matches!(
            trajectory(&p, &d, &s0, &grid, TrajectoryOptions::default()),
            Err(Error::BadTimeGrid)
        ));
    }
}

#[test]
fn fig1_off_diagonal_diffusion_is_needed_for_gibbs() {
    let (p, d, s0) = fig1();
    let target = gibbs_qq(461.6344, 2.9468, 5.0);
    let times = [seconds(70e-22)];
    let full = trajectory(&p, &d, &s0, &times, TrajectoryOptions::default()).unwrap();
    let zeroed = trajectory(
        &p,
        &d,
        &s0,
        &times,
        TrajectoryOptions {
            off_diagonal_d: OffDiagonalD::Zeroed,
        },
    )
    .unwrap();
    assert_eq!(zeroed.provenance.off_diagonal_d, OffDiagonalD::Zeroed);
    let full_zz = full.states[0].covariance[(0, 0)];
    let zeroed_zz = zeroed.states[0].covariance[(0, 0)];
    assert!((full_zz / target - 1.0).abs() < 1e-6);
    assert!((zeroed_zz / target - 1.0).abs() > 0.01);
}

#[test]
fn fig1_converges_by_ten_inverse_mev() {
    let (p, d, s0) = fig1();
    let tr = trajectory(&p, &d, &s0, &[10.0], TrajectoryOptions::default()).unwrap();
    let zz = tr.states[0].covariance[(0, 0)];
    assert!((zz / gibbs_qq(461.6344, 2.9468, 5.0) - 1.0).abs() < 1e-6);
}

#[test]
fn rejects_malformed_drift() {
    assert!(DriftMatrix::from_matrix(Mat::<f64>::zeros(3, 3)).is_err());
    assert!(DriftMatrix::from_matrix(Mat::from_element(2, 2, f64::INFINITY)).is_err());
}

#[test]
fn moment_state_requires_positive_blocks() {
    let bad = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(matches!(
        MomentState::new(Vector::zeros(2), bad),
        Err(Error::NotPositiveDefinite)
    ));
    assert!(MomentState::<f64>::new(Vector::zeros(3), Mat::identity(3, 3)).is_err());
}

#[test]
fn f32_pipeline_reaches_gibbs() {
    let p = SystemParams::<f32>::uncoupled(vec![3.0], vec![0.8]);
    let d = DissipationParams::diagonal(&[0.4], 0.3);
    let m = drift_matrix(&p, &d).unwrap();
    let s = steady_covariance(&m, &diffusion_matrix(&p, &d).unwrap()).unwrap();
    assert!((s[(0, 0)] as f64 / gibbs_qq(3.0, 0.8, 0.3) - 1.0).abs() < 1e-4);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn stays_symmetric_and_approaches_steady_state(
            lam in 0.3_f64..2.0,
            nu in -0.4_f64..0.4,
            temp in 0.05_f64..5.0,
            t in 0.0_f64..30.0,
        ) {
            let mut p = SystemParams::uncoupled(vec![1.0, 1.5], vec![1.0, 0.7]);
            p.nu[(0, 1)] = nu;
            p.nu[(1, 0)] = nu;
            let d = DissipationParams::diagonal(&[lam, lam], temp);
            let m = drift_matrix(&p, &d).unwrap();
            let dm = diffusion_matrix(&p, &d).unwrap();
            let tilde = steady_covariance(&m, &dm).unwrap();
            let s0 = Mat::identity(4, 4) * 0.5;
            let s = propagate_covariance(&m, &dm, &s0, t).unwrap();
            prop_assert_eq!(&s, &s.transpose());
            let e = qtransport_core::linalg::expm(&(m.matrix() * t)).unwrap();
            let bound = e.norm().powi(2) * (&s0 - &tilde).norm();
            prop_assert!((&s - &tilde).norm() <= bound * (1.0 + 1e-9) + 1e-12);
        }
    }
}

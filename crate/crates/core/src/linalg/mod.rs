//! Dense linear algebra used by the dynamics: matrix exponential, continuous
//! Lyapunov solver, spectra, and the exact one-step covariance propagator.

mod eigen;
mod expm;
mod lyapunov;

pub use eigen::{spectrum, symmetric_extremes, Spectrum};
pub use expm::expm;
pub use lyapunov::{lyapunov_residual, solve_lyapunov};

use crate::{Mat, Real, Result};

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1<T: Real>(a: &Mat<T>) -> T {
    (0..a.ncols())
        .map(|j| a.column(j).iter().fold(T::zero(), |s, v| s + v.abs()))
        .fold(T::zero(), |m, v| m.max(v))
}

/// Largest absolute entry.
pub fn max_abs<T: Real>(a: &Mat<T>) -> T {
    a.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

/// `(a + aᵀ) / 2`.
pub fn symmetrize<T: Real>(a: &Mat<T>) -> Mat<T> {
    (a + a.transpose()) * T::lit(0.5)
}

/// Exact propagator of `dσ/dt = Mσ + σMᵀ + Q` over a step `h`:
/// returns `(Φ, Qh)` with `σ(t + h) = Φ σ(t) Φᵀ + Qh`.
///
/// Uses the block exponential of `[[-M, Q], [0, Mᵀ]]` on a sub-step small
/// enough that `‖M‖ h ≤ 1`, then composes by doubling.
pub fn covariance_step<T: Real>(m: &Mat<T>, q: &Mat<T>, h: T) -> Result<(Mat<T>, Mat<T>)> {
    let n = m.nrows();
    let scale = norm1(m) * h.abs();
    let mut doublings = 0u32;
    while scale > T::lit(2f64.powi(doublings as i32)) && doublings < 60 {
        doublings += 1;
    }
    let sub = h / T::lit(2f64.powi(doublings as i32));

    let mut block = Mat::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(-m * sub));
    block.view_mut((0, n), (n, n)).copy_from(&(q * sub));
    block.view_mut((n, n), (n, n)).copy_from(&(m.transpose() * sub));
    let e = expm(&block)?;
    let phi: Mat<T> = e.view((n, n), (n, n)).transpose();
    let mut qh = symmetrize(&(&phi * e.view((0, n), (n, n))));
    let mut phi = phi;
    for _ in 0..doublings {
        qh = symmetrize(&(&phi * &qh * phi.transpose() + &qh));
        phi = &phi * &phi;
    }
    Ok((phi, qh))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_step_matches_closed_form_scalar() {
        // dσ/dt = 2aσ + q  =>  σ(h) = e^{2ah}σ0 + q(e^{2ah} - 1)/(2a)
        for &a in &[-3.0_f64, -0.1, 0.4, 5.0] {
            let m = Mat::from_element(1, 1, a);
            let q = Mat::from_element(1, 1, 0.7);
            let h = 1.3;
            let (phi, qh) = covariance_step(&m, &q, h).unwrap();
            let e = (2.0 * a * h).exp();
            assert!((phi[(0, 0)] - (a * h).exp()).abs() < 1e-12 * e.sqrt());
            let expect = 0.7 * (e - 1.0) / (2.0 * a);
            assert!((qh[(0, 0)] - expect).abs() < 1e-12 * expect.abs(), "{a}");
        }
    }

    #[test]
    fn norms() {
        let a = Mat::from_row_slice(2, 2, &[1.0_f64, -2.0, 3.0, 4.0]);
        assert_eq!(norm1(&a), 6.0);
        assert_eq!(max_abs(&a), 4.0);
        assert_eq!(symmetrize(&a)[(0, 1)], 0.5);
    }
}

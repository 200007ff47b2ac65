use crate::linalg::max_abs;
use crate::{Error, Mat, Real, Result, Vector};

/// Solves `A X + X Aᵀ + C = 0` for symmetric `X`, given symmetric `C`.
///
/// The upper triangle of `X` is vectorized into `n(n+1)/2` unknowns and the
/// resulting dense system is solved by LU.
pub fn solve_lyapunov<T: Real>(a: &Mat<T>, c: &Mat<T>) -> Result<Mat<T>> {
    let n = a.nrows();
    if a.ncols() != n || c.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            what: "Lyapunov operands",
            expected: n,
            got: c.nrows(),
        });
    }
    let index = |i: usize, j: usize| {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * n - i * (i + 1) / 2 + j
    };
    let size = n * (n + 1) / 2;
    let mut lhs = Mat::<T>::zeros(size, size);
    let mut rhs = Vector::<T>::zeros(size);
    for i in 0..n {
        for j in i..n {
            let row = index(i, j);
            rhs[row] = -c[(i, j)];
            for l in 0..n {
                lhs[(row, index(l, j))] += a[(i, l)];
                lhs[(row, index(i, l))] += a[(j, l)];
            }
        }
    }
    let x = lhs
        .lu()
        .solve(&rhs)
        .ok_or(Error::Singular("Lyapunov operator"))?;
    let out = Mat::from_fn(n, n, |i, j| x[index(i, j)]);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Lyapunov solution"));
    }
    Ok(out)
}

/// `max|A X + X Aᵀ + C|`.
pub fn lyapunov_residual<T: Real>(a: &Mat<T>, x: &Mat<T>, c: &Mat<T>) -> T {
    max_abs(&(a * x + x * a.transpose() + c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scalar() {
        let a = Mat::from_element(1, 1, -2.0_f64);
        let c = Mat::from_element(1, 1, 3.0);
        let x = solve_lyapunov(&a, &c).unwrap();
        assert!((x[(0, 0)] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn singular_operator() {
        let a = Mat::from_row_slice(2, 2, &[0.0_f64, 1.0, -1.0, 0.0]);
        assert!(solve_lyapunov(&a, &Mat::identity(2, 2)).is_err());
    }

    proptest! {
        #[test]
        fn residual_small_for_stable(entries in prop::collection::vec(-1.0_f64..1.0, 16),
                                     shift in 4.5_f64..8.0) {
            let a = Mat::from_vec(4, 4, entries) - Mat::identity(4, 4) * shift;
            let c = Mat::from_fn(4, 4, |i, j| if i == j { 1.0 + i as f64 } else { 0.1 });
            let x = solve_lyapunov(&a, &c).unwrap();
            prop_assert!(lyapunov_residual(&a, &x, &c) < 1e-12);
            prop_assert!((&x - x.transpose()).abs().max() == 0.0);
        }
    }
}

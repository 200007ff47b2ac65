use nalgebra as na;

use crate::{Error, Mat, Real, Result};

/// Eigenvalues of a real square matrix as (real, imaginary) pairs, sorted by
/// descending real part.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<(f64, f64)>,
}

impl Spectrum {
    pub fn max_real(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| e.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn spectrum<T: Real>(a: &Mat<T>) -> Result<Spectrum> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigenvalue argument"));
    }
    let schur = na::Schur::try_new(a.clone(), T::default_epsilon(), 10_000)
        .ok_or(Error::EigenFailure)?;
    let mut eigenvalues: Vec<(f64, f64)> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re.as_f64(), z.im.as_f64()))
        .collect();
    eigenvalues.sort_by(|x, y| y.0.total_cmp(&x.0).then(y.1.total_cmp(&x.1)));
    Ok(Spectrum { eigenvalues })
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn symmetric_extremes<T: Real>(a: &Mat<T>) -> Result<(f64, f64)> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("symmetric eigenvalue argument"));
    }
    let eig = na::SymmetricEigen::try_new(a.clone(), T::default_epsilon(), 10_000)
        .ok_or(Error::EigenFailure)?;
    let vals = eig.eigenvalues.iter().map(|v| v.as_f64());
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    Ok((lo, hi))
}

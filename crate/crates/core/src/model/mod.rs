//! Physical parameter sets and their validity checks.

mod report;
pub mod units;
mod validate;

pub use report::{Check, ValidationReport};
pub use units::{unit_convert, Unit};
pub use validate::{validate_dissipation, validate_hamiltonian};

use crate::{Error, Mat, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeKind {
    Oscillator,
    /// Parabolic barrier: the curvature term enters the dynamics with the
    /// opposite sign.
    InvertedBarrier,
}

/// Quadratic Hamiltonian of N coupled modes plus the equilibrium oscillators
/// that define the target Gibbs state.
///
/// `mass`/`frequency` parametrise the Hamiltonian (M_k, Ω_k); `eq_mass` and
/// `eq_frequency` the Gibbs Hamiltonian (m_k, ω_k). `mu` is unrestricted,
/// `nu` and `kappa` are symmetric with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams<T: Real> {
    pub mass: Vec<T>,
    pub frequency: Vec<T>,
    pub eq_mass: Vec<T>,
    pub eq_frequency: Vec<T>,
    pub mu: Mat<T>,
    pub nu: Mat<T>,
    pub kappa: Mat<T>,
    pub mode_kind: Vec<ModeKind>,
}

/// Friction matrix λ, antisymmetric α and η, and the bath temperature (MeV).
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationParams<T: Real> {
    pub lambda: Mat<T>,
    pub alpha: Mat<T>,
    pub eta: Mat<T>,
    pub temperature: T,
}

impl<T: Real> SystemParams<T> {
    /// Uncoupled oscillators whose Hamiltonian and Gibbs parameters coincide.
    pub fn uncoupled(mass: Vec<T>, frequency: Vec<T>) -> Self {
        let n = mass.len();
        Self {
            eq_mass: mass.clone(),
            eq_frequency: frequency.clone(),
            mass,
            frequency,
            mu: Mat::zeros(n, n),
            nu: Mat::zeros(n, n),
            kappa: Mat::zeros(n, n),
            mode_kind: vec![ModeKind::Oscillator; n],
        }
    }

    pub fn n_modes(&self) -> usize {
        self.mass.len()
    }

    pub fn is_barrier(&self, k: usize) -> bool {
        self.mode_kind[k] == ModeKind::InvertedBarrier
    }

    pub fn has_barrier(&self) -> bool {
        self.mode_kind.contains(&ModeKind::InvertedBarrier)
    }

    /// Structural invariants: dimensions, positivity, Onsager symmetry.
    pub fn check_structure(&self) -> Result<()> {
        let n = self.n_modes();
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n_modes".into(),
                reason: "at least one mode is required".into(),
            });
        }
        for (what, len) in [
            ("frequency", self.frequency.len()),
            ("eq_mass", self.eq_mass.len()),
            ("eq_frequency", self.eq_frequency.len()),
            ("mode_kind", self.mode_kind.len()),
        ] {
            expect_len(what, n, len)?;
        }
        for (what, m) in [("mu", &self.mu), ("nu", &self.nu), ("kappa", &self.kappa)] {
            expect_square(what, n, m)?;
        }
        for (name, values) in [
            ("mass", &self.mass),
            ("frequency", &self.frequency),
            ("eq_mass", &self.eq_mass),
            ("eq_frequency", &self.eq_frequency),
        ] {
            if let Some(k) = values.iter().position(|v| !(*v > T::zero()) || !v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: format!("{name}[{k}]"),
                    reason: "must be finite and strictly positive".into(),
                });
            }
        }
        for (name, m) in [("nu", &self.nu), ("kappa", &self.kappa)] {
            for k in 0..n {
                if m[(k, k)] != T::zero() {
                    return Err(Error::InvalidParameter {
                        name: format!("{name}[{k}][{k}]"),
                        reason: "diagonal must be zero".into(),
                    });
                }
                for j in (k + 1)..n {
                    if m[(k, j)] != m[(j, k)] {
                        return Err(Error::InvalidParameter {
                            name: format!("{name}[{k}][{j}]"),
                            reason: "coupling must be symmetric".into(),
                        });
                    }
                }
            }
        }
        if self.mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mu"));
        }
        Ok(())
    }
}

impl<T: Real> DissipationParams<T> {
    /// Diagonal friction only; α = η = 0.
    pub fn diagonal(lambda: &[T], temperature: T) -> Self {
        let n = lambda.len();
        Self {
            lambda: Mat::from_diagonal(&crate::Vector::from_column_slice(lambda)),
            alpha: Mat::zeros(n, n),
            eta: Mat::zeros(n, n),
            temperature,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.lambda.nrows()
    }

    pub fn check_structure(&self, n: usize) -> Result<()> {
        for (what, m) in [("lambda", &self.lambda), ("alpha", &self.alpha), ("eta", &self.eta)] {
            expect_square(what, n, m)?;
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(what));
            }
        }
        if !(self.temperature > T::zero()) {
            return Err(Error::NonPositiveTemperature(self.temperature.as_f64()));
        }
        Ok(())
    }
}

pub(crate) fn expect_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { what, expected, got });
    }
    Ok(())
}

pub(crate) fn expect_square<T: Real>(what: &'static str, n: usize, m: &Mat<T>) -> Result<()> {
    expect_len(what, n, m.nrows())?;
    expect_len(what, n, m.ncols())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure_rejects_asymmetric_nu() {
        let mut p = SystemParams::<f64>::uncoupled(vec![1.0, 1.0], vec![1.0, 1.0]);
        p.nu[(0, 1)] = 0.3;
        assert!(matches!(p.check_structure(), Err(Error::InvalidParameter { .. })));
        p.nu[(1, 0)] = 0.3;
        assert!(p.check_structure().is_ok());
    }

    #[test]
    fn structure_rejects_nonzero_kappa_diagonal() {
        let mut p = SystemParams::<f64>::uncoupled(vec![1.0], vec![1.0]);
        p.kappa[(0, 0)] = 1.0;
        assert!(p.check_structure().is_err());
    }

    #[test]
    fn structure_rejects_bad_dimensions_and_masses() {
        let mut p = SystemParams::<f64>::uncoupled(vec![1.0, 2.0], vec![1.0, 1.0]);
        p.eq_frequency.pop();
        assert!(matches!(p.check_structure(), Err(Error::DimensionMismatch { .. })));
        let p = SystemParams::<f64>::uncoupled(vec![1.0, -2.0], vec![1.0, 1.0]);
        assert!(p.check_structure().is_err());
    }

    #[test]
    fn dissipation_requires_positive_temperature() {
        let d = DissipationParams::diagonal(&[1.0_f64], 0.0);
        assert!(matches!(d.check_structure(1), Err(Error::NonPositiveTemperature(_))));
    }
}

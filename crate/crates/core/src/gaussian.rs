//! Observables on Gaussian states.

use nalgebra as na;

use crate::dynamics::MomentState;
use crate::model::SystemParams;
use crate::special::{thermal_coth, upper_tail};
use crate::{p_index, q_index, Error, Mat, Real, Result, Vector};

/// A moment state whose full covariance is positive definite.
#[derive(Debug, Clone)]
pub struct GaussianState<T: Real> {
    state: MomentState<T>,
    cholesky: na::Cholesky<T, na::Dyn>,
}

impl<T: Real> GaussianState<T> {
    pub fn new(state: MomentState<T>) -> Result<Self> {
        let cholesky = na::Cholesky::new(state.covariance.clone()).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { state, cholesky })
    }

    pub fn moments(&self) -> &MomentState<T> {
        &self.state
    }

    pub fn n_modes(&self) -> usize {
        self.state.n_modes()
    }

    pub fn mean_q(&self, k: usize) -> T {
        self.state.mean[q_index(k)]
    }

    pub fn mean_p(&self, k: usize) -> T {
        self.state.mean[p_index(k)]
    }

    /// Covariance between entries `a` and `b` of the interleaved vector.
    pub fn cov(&self, a: usize, b: usize) -> T {
        self.state.covariance[(a, b)]
    }
}

fn log_normalization<T: Real>(chol: &na::Cholesky<T, na::Dyn>, dim: usize) -> T {
    // log of (2π)^{-dim/2} det(σ)^{-1/2}
    let log_det_half = chol.l_dirty().diagonal().iter().fold(T::zero(), |s, v| s + v.ln());
    -T::lit(0.5 * dim as f64) * T::two_pi().ln() - log_det_half
}

fn gaussian_exponent<T: Real>(chol: &na::Cholesky<T, na::Dyn>, r: &Vector<T>) -> T {
    let w = chol.l().solve_lower_triangular(r).expect("Cholesky factor is non-singular");
    -T::lit(0.5) * w.dot(&w)
}

/// Wigner function `(2π)^{-N} det(σ)^{-1/2} exp(−½(z−𝒱)ᵀσ⁻¹(z−𝒱))`.
pub fn wigner_eval<T: Real>(state: &GaussianState<T>, z: &Vector<T>) -> Result<T> {
    let dim = state.state.mean.len();
    crate::model::expect_len("phase-space point", dim, z.len())?;
    let r = z - &state.state.mean;
    Ok((log_normalization(&state.cholesky, dim) + gaussian_exponent(&state.cholesky, &r)).exp())
}

/// Gaussian marginal over a subset of coordinates.
#[derive(Debug, Clone)]
pub struct PositionMarginal<T: Real> {
    modes: Vec<usize>,
    mean: Vector<T>,
    covariance: Mat<T>,
    cholesky: na::Cholesky<T, na::Dyn>,
    log_norm: T,
}

impl<T: Real> PositionMarginal<T> {
    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn mean(&self) -> &Vector<T> {
        &self.mean
    }

    pub fn covariance(&self) -> &Mat<T> {
        &self.covariance
    }

    /// Density at coordinates `q`, ordered as [`Self::modes`].
    pub fn density(&self, q: &[T]) -> Result<T> {
        crate::model::expect_len("coordinate point", self.modes.len(), q.len())?;
        let r = Vector::from_column_slice(q) - &self.mean;
        Ok((self.log_norm + gaussian_exponent(&self.cholesky, &r)).exp())
    }
}

/// Exact coordinate marginal: sub-mean and sub-covariance of the q entries.
pub fn position_marginal<T: Real>(state: &GaussianState<T>, modes: &[usize]) -> Result<PositionMarginal<T>> {
    if modes.is_empty() {
        return Err(Error::EmptySubset);
    }
    let n = state.n_modes();
    if let Some(&index) = modes.iter().find(|&&k| k >= n) {
        return Err(Error::ModeOutOfRange { index, n_modes: n });
    }
    let mean = Vector::from_iterator(modes.len(), modes.iter().map(|&k| state.mean_q(k)));
    let covariance = Mat::from_fn(modes.len(), modes.len(), |a, b| {
        state.cov(q_index(modes[a]), q_index(modes[b]))
    });
    let cholesky = na::Cholesky::new(covariance.clone()).ok_or(Error::NotPositiveDefinite)?;
    let log_norm = log_normalization(&cholesky, modes.len());
    Ok(PositionMarginal {
        modes: modes.to_vec(),
        mean,
        covariance,
        cholesky,
        log_norm,
    })
}

/// ρ(q; t) at each point of `grid` (each point ordered as `modes`).
pub fn position_density<T: Real>(state: &GaussianState<T>, modes: &[usize], grid: &[Vec<T>]) -> Result<Vec<T>> {
    let marginal = position_marginal(state, modes)?;
    grid.iter().map(|q| marginal.density(q)).collect()
}

/// Probability that q_k lies beyond the barrier top at q_k = 0.
pub fn penetration_probability<T: Real>(state: &MomentState<T>, k: usize) -> Result<T> {
    let n = state.n_modes();
    if k >= n {
        return Err(Error::ModeOutOfRange { index: k, n_modes: n });
    }
    let var = state.covariance[(q_index(k), q_index(k))];
    if !(var > T::zero()) {
        return Err(Error::NonPositiveVariance(var.as_f64()));
    }
    Ok(upper_tail(state.mean[q_index(k)], var))
}

/// `σ_{q_kq_k}σ_{p_kp_k} − σ_{q_kp_k}²` for every mode.
pub fn uncertainty_products<T: Real>(state: &MomentState<T>) -> Vec<T> {
    let s = &state.covariance;
    (0..state.n_modes())
        .map(|k| {
            let (q, p) = (q_index(k), p_index(k));
            s[(q, q)] * s[(p, p)] - s[(q, p)] * s[(q, p)]
        })
        .collect()
}

/// Coordinate correlation `σ_{q_iq_j} / √(σ_{q_iq_i}σ_{q_jq_j})`.
pub fn correlation_coefficient<T: Real>(state: &MomentState<T>, i: usize, j: usize) -> Result<T> {
    let n = state.n_modes();
    for index in [i, j] {
        if index >= n {
            return Err(Error::ModeOutOfRange { index, n_modes: n });
        }
    }
    let s = &state.covariance;
    let (vi, vj) = (s[(q_index(i), q_index(i))], s[(q_index(j), q_index(j))]);
    for v in [vi, vj] {
        if !(v > T::zero()) {
            return Err(Error::NonPositiveVariance(v.as_f64()));
        }
    }
    Ok(s[(q_index(i), q_index(j))] / (vi * vj).sqrt())
}

/// Gibbs-limit energy `Σ (ω_k/2) coth(ω_k/2T)` of the equilibrium oscillators.
pub fn asymptotic_energy<T: Real>(p: &SystemParams<T>, temperature: T) -> Result<T> {
    p.check_structure()?;
    if let Some(k) = (0..p.n_modes()).find(|&k| p.is_barrier(k)) {
        return Err(Error::BarrierModePresent(k));
    }
    if !(temperature > T::zero()) {
        return Err(Error::NonPositiveTemperature(temperature.as_f64()));
    }
    Ok(p.eq_frequency.iter().fold(T::zero(), |e, &w| {
        e + w * T::lit(0.5) * thermal_coth(w, temperature)
    }))
}

/// `⟨Ĥ⟩` from the first and second moments. Barrier modes contribute
/// `−½M_kΩ_k²⟨q_k²⟩`.
pub fn mean_energy<T: Real>(p: &SystemParams<T>, state: &MomentState<T>) -> Result<T> {
    p.check_structure()?;
    let n = p.n_modes();
    crate::model::expect_len("state modes", n, state.n_modes())?;
    let v = &state.mean;
    let s = &state.covariance;
    let second = |a: usize, b: usize| s[(a, b)] + v[a] * v[b];
    let half = T::lit(0.5);
    let mut e = T::zero();
    for k in 0..n {
        let (qk, pk) = (q_index(k), p_index(k));
        let stiffness = p.mass[k] * p.frequency[k] * p.frequency[k];
        let potential = half * stiffness * second(qk, qk);
        e += second(pk, pk) / (p.mass[k] + p.mass[k]);
        e += if p.is_barrier(k) { -potential } else { potential };
        e += p.mu[(k, k)] * second(qk, pk);
        for j in 0..n {
            if j == k {
                continue;
            }
            let (qj, pj) = (q_index(j), p_index(j));
            e += half * (p.nu[(k, j)] * second(qk, qj) + p.kappa[(k, j)] * second(pk, pj));
            e += p.mu[(k, j)] * second(pk, qj);
        }
    }
    Ok(e)
}

//! Drift matrix, stability, the Lyapunov steady state and moment propagation.

use sha2::{Digest, Sha256};

use crate::linalg::{self, max_abs, norm1, solve_lyapunov, spectrum, symmetrize, Spectrum};
use crate::model::{DissipationParams, SystemParams};
use crate::transport::{diffusion_matrix, DiffusionMatrix};
use crate::{p_index, q_index, Error, Mat, Real, Result, Vector};

/// Generator of the first moments, `d𝒱/dt = M𝒱`, in interleaved ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftMatrix<T: Real> {
    matrix: Mat<T>,
}

impl<T: Real> DriftMatrix<T> {
    /// Wraps an arbitrary square matrix.
    pub fn from_matrix(matrix: Mat<T>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || !matrix.nrows().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                what: "drift matrix",
                expected: matrix.nrows() + matrix.nrows() % 2,
                got: matrix.ncols(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("drift matrix"));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// First and second moments of a Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState<T: Real> {
    pub mean: Vector<T>,
    pub covariance: Mat<T>,
}

impl<T: Real> MomentState<T> {
    /// Checks dimensions, symmetrizes σ and requires every per-mode 2×2
    /// block to be positive definite.
    pub fn new(mean: Vector<T>, covariance: Mat<T>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                what: "mean vector length",
                expected: dim + dim % 2,
                got: dim,
            });
        }
        if covariance.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch {
                what: "covariance",
                expected: dim,
                got: covariance.nrows(),
            });
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("moment state"));
        }
        let covariance = symmetrize(&covariance);
        for k in 0..dim / 2 {
            let (q, p) = (q_index(k), p_index(k));
            let det = covariance[(q, q)] * covariance[(p, p)] - covariance[(q, p)].powi(2);
            if !(covariance[(q, q)] > T::zero()) || !(det > T::zero()) {
                return Err(Error::NotPositiveDefinite);
            }
        }
        Ok(Self { mean, covariance })
    }

    /// Uncorrelated state from per-mode means and variances.
    pub fn uncorrelated(q: &[T], p: &[T], var_q: &[T], var_p: &[T]) -> Result<Self> {
        let n = q.len();
        for (what, len) in [("p means", p.len()), ("q variances", var_q.len()), ("p variances", var_p.len())] {
            crate::model::expect_len(what, n, len)?;
        }
        let mut mean = Vector::zeros(2 * n);
        let mut cov = Mat::zeros(2 * n, 2 * n);
        for k in 0..n {
            mean[q_index(k)] = q[k];
            mean[p_index(k)] = p[k];
            cov[(q_index(k), q_index(k))] = var_q[k];
            cov[(p_index(k), p_index(k))] = var_p[k];
        }
        Self::new(mean, cov)
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }
}

/// Result of the spectral stability test.
#[derive(Debug, Clone, PartialEq)]
pub struct Stability {
    pub is_stable: bool,
    pub spectrum: Spectrum,
}

/// Which diffusion matrix drives the covariances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffDiagonalD {
    #[default]
    Full,
    /// Cross-mode entries of D set to zero.
    Zeroed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrajectoryOptions {
    pub off_diagonal_d: OffDiagonalD,
}

/// How the covariances of a trajectory were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagation {
    /// `e^{Mt}(σ₀ − σ̃)e^{Mᵀt} + σ̃`.
    ClosedForm,
    /// Fixed-step fourth-order Runge–Kutta (M not stable).
    RungeKutta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    /// SHA-256 over the bit patterns of every parameter.
    pub parameter_hash: String,
    pub off_diagonal_d: OffDiagonalD,
    pub propagation: Propagation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    /// Times in MeV⁻¹.
    pub times: Vec<T>,
    pub states: Vec<MomentState<T>>,
    pub provenance: Provenance,
}

/// Assembles M. Each diagonal block uses the Hamiltonian M_k and Ω_k;
/// barrier modes enter with the curvature sign flipped.
pub fn drift_matrix<T: Real>(p: &SystemParams<T>, d: &DissipationParams<T>) -> Result<DriftMatrix<T>> {
    p.check_structure()?;
    let n = p.n_modes();
    d.check_structure(n)?;
    let mut m = Mat::zeros(2 * n, 2 * n);
    for k in 0..n {
        let (qk, pk) = (q_index(k), p_index(k));
        let stiffness = p.mass[k] * p.frequency[k] * p.frequency[k];
        m[(qk, qk)] = -d.lambda[(k, k)] + p.mu[(k, k)];
        m[(qk, pk)] = T::one() / p.mass[k];
        m[(pk, qk)] = if p.is_barrier(k) { stiffness } else { -stiffness };
        m[(pk, pk)] = -d.lambda[(k, k)] - p.mu[(k, k)];
        for j in 0..n {
            if j == k {
                continue;
            }
            let (qj, pj) = (q_index(j), p_index(j));
            m[(qk, qj)] = -d.lambda[(k, j)] + p.mu[(k, j)];
            m[(qk, pj)] = -d.alpha[(k, j)] + p.kappa[(k, j)];
            m[(pk, qj)] = d.eta[(k, j)] - p.nu[(k, j)];
            m[(pk, pj)] = -d.lambda[(j, k)] - p.mu[(j, k)];
        }
    }
    DriftMatrix::from_matrix(m)
}

/// Stable iff every eigenvalue has real part below `−1e-12‖M‖`.
pub fn stability<T: Real>(m: &DriftMatrix<T>) -> Result<Stability> {
    let spectrum = spectrum(&m.matrix)?;
    let threshold = -1e-12 * norm1(&m.matrix).as_f64();
    Ok(Stability {
        is_stable: spectrum.max_real() < threshold,
        spectrum,
    })
}

fn residual_tolerance<T: Real>() -> f64 {
    1e-10_f64.max(1e3 * T::default_epsilon().as_f64())
}

/// Solves `Mσ̃ + σ̃Mᵀ + 2D = 0`.
///
/// The system is rescaled so that D has a unit diagonal before the solve;
/// coordinate and momentum variances can differ by many orders of magnitude.
pub fn steady_covariance<T: Real>(m: &DriftMatrix<T>, dm: &DiffusionMatrix<T>) -> Result<Mat<T>> {
    let dim = m.dim();
    crate::model::expect_len("diffusion matrix", dim, dm.matrix().nrows())?;
    let st = stability(m)?;
    if !st.is_stable {
        return Err(Error::Unstable {
            max_real: st.spectrum.max_real(),
        });
    }
    let two_d = dm.matrix() * T::lit(2.0);
    let scale: Vec<T> = (0..dim)
        .map(|i| {
            let v = two_d[(i, i)];
            if v > T::zero() {
                T::one() / v.sqrt()
            } else {
                T::one()
            }
        })
        .collect();
    let m_s = Mat::from_fn(dim, dim, |i, j| scale[i] * m.matrix[(i, j)] / scale[j]);
    let c_s = Mat::from_fn(dim, dim, |i, j| scale[i] * two_d[(i, j)] * scale[j]);
    let x = solve_lyapunov(&m_s, &c_s)?;
    let sigma = Mat::from_fn(dim, dim, |i, j| x[(i, j)] / (scale[i] * scale[j]));

    let residual = linalg::lyapunov_residual(&m.matrix, &sigma, &two_d).as_f64();
    let tolerance = residual_tolerance::<T>() * max_abs(&two_d).as_f64();
    if residual > tolerance {
        return Err(Error::Residual {
            what: "Lyapunov equation",
            residual,
            tolerance,
        });
    }
    Ok(sigma)
}

/// `𝒱(t) = e^{Mt}𝒱₀`.
pub fn propagate_mean<T: Real>(m: &DriftMatrix<T>, v0: &Vector<T>, t: T) -> Result<Vector<T>> {
    crate::model::expect_len("mean vector", m.dim(), v0.len())?;
    Ok(linalg::expm(&(&m.matrix * t))? * v0)
}

/// σ(t) from σ₀. Closed form when M is stable, otherwise fixed-step RK4 with
/// step `min(1e-3/‖M‖, t/10)`.
pub fn propagate_covariance<T: Real>(
    m: &DriftMatrix<T>,
    dm: &DiffusionMatrix<T>,
    sigma0: &Mat<T>,
    t: T,
) -> Result<Mat<T>> {
    crate::model::expect_len("covariance", m.dim(), sigma0.nrows())?;
    if stability(m)?.is_stable {
        let tilde = steady_covariance(m, dm)?;
        closed_form(m, &tilde, sigma0, t)
    } else {
        let h = rk4_step_limit(m, t);
        let mut sigma = sigma0.clone();
        rk4_covariance(&m.matrix, &(dm.matrix() * T::lit(2.0)), &mut sigma, t, h);
        Ok(symmetrize(&sigma))
    }
}

fn closed_form<T: Real>(m: &DriftMatrix<T>, tilde: &Mat<T>, sigma0: &Mat<T>, t: T) -> Result<Mat<T>> {
    if t == T::zero() {
        return Ok(symmetrize(sigma0));
    }
    let e = linalg::expm(&(&m.matrix * t))?;
    Ok(symmetrize(&(&e * (sigma0 - tilde) * e.transpose() + tilde)))
}

fn rk4_step_limit<T: Real>(m: &DriftMatrix<T>, spacing: T) -> T {
    let norm = norm1(&m.matrix);
    let by_norm = if norm > T::zero() {
        T::lit(1e-3) / norm
    } else {
        spacing
    };
    by_norm.min(spacing / T::lit(10.0))
}

/// Advances `dσ/dt = Mσ + σMᵀ + Q` by `span` in equal steps no longer than
/// `h_max`.
fn rk4_covariance<T: Real>(m: &Mat<T>, q: &Mat<T>, sigma: &mut Mat<T>, span: T, h_max: T) {
    if span <= T::zero() {
        return;
    }
    let steps = (span / h_max).ceil().as_f64().max(1.0) as usize;
    let h = span / T::lit(steps as f64);
    let half = h * T::lit(0.5);
    let dim = m.nrows();
    let mut ms = Mat::zeros(dim, dim);
    let mut stage = Mat::zeros(dim, dim);
    let mut acc = Mat::zeros(dim, dim);
    let mut k = Mat::zeros(dim, dim);
    let rhs = |x: &Mat<T>, ms: &mut Mat<T>, out: &mut Mat<T>| {
        ms.gemm(T::one(), m, x, T::zero());
        out.copy_from(q);
        *out += &*ms;
        *out += ms.transpose();
    };
    for _ in 0..steps {
        rhs(sigma, &mut ms, &mut k);
        acc.copy_from(&k);
        stage.copy_from(sigma);
        add_scaled(&mut stage, half, &k);
        rhs(&stage, &mut ms, &mut k);
        add_scaled(&mut acc, T::lit(2.0), &k);
        stage.copy_from(sigma);
        add_scaled(&mut stage, half, &k);
        rhs(&stage, &mut ms, &mut k);
        add_scaled(&mut acc, T::lit(2.0), &k);
        stage.copy_from(sigma);
        add_scaled(&mut stage, h, &k);
        rhs(&stage, &mut ms, &mut k);
        acc += &k;
        add_scaled(sigma, h / T::lit(6.0), &acc);
    }
}

fn add_scaled<T: Real>(dst: &mut Mat<T>, a: T, src: &Mat<T>) {
    for (d, s) in dst.iter_mut().zip(src.iter()) {
        *d += a * *s;
    }
}

/// SHA-256 over the bit patterns of every parameter, in a fixed order.
pub fn parameter_hash<T: Real>(p: &SystemParams<T>, d: &DissipationParams<T>) -> String {
    let mut hasher = Sha256::new();
    let mut feed = |values: &mut dyn Iterator<Item = &T>| {
        for v in values {
            hasher.update(v.as_f64().to_bits().to_le_bytes());
        }
        hasher.update(b";");
    };
    feed(&mut p.mass.iter());
    feed(&mut p.frequency.iter());
    feed(&mut p.eq_mass.iter());
    feed(&mut p.eq_frequency.iter());
    feed(&mut p.mu.iter());
    feed(&mut p.nu.iter());
    feed(&mut p.kappa.iter());
    feed(&mut d.lambda.iter());
    feed(&mut d.alpha.iter());
    feed(&mut d.eta.iter());
    feed(&mut std::iter::once(&d.temperature));
    for kind in &p.mode_kind {
        hasher.update([p_kind_byte(*kind)]);
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn p_kind_byte(kind: crate::model::ModeKind) -> u8 {
    match kind {
        crate::model::ModeKind::Oscillator => 0,
        crate::model::ModeKind::InvertedBarrier => 1,
    }
}

/// Evaluates the moments at each time of a strictly increasing grid
/// (MeV⁻¹, starting at or after t = 0 where `state0` is given).
pub fn trajectory<T: Real>(
    p: &SystemParams<T>,
    d: &DissipationParams<T>,
    state0: &MomentState<T>,
    times: &[T],
    options: TrajectoryOptions,
) -> Result<Trajectory<T>> {
    let m = drift_matrix(p, d)?;
    crate::model::expect_len("initial state", m.dim(), state0.mean.len())?;
    let mut dm = diffusion_matrix(p, d)?;
    if options.off_diagonal_d == OffDiagonalD::Zeroed {
        dm = dm.without_cross_terms();
    }
    if times.first().is_some_and(|t| *t < T::zero() || !t.is_finite())
        || times.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite())
    {
        return Err(Error::BadTimeGrid);
    }
    let stable = stability(&m)?.is_stable;
    let provenance = Provenance {
        parameter_hash: parameter_hash(p, d),
        off_diagonal_d: options.off_diagonal_d,
        propagation: if stable {
            Propagation::ClosedForm
        } else {
            Propagation::RungeKutta
        },
    };
    let mut states = Vec::with_capacity(times.len());
    if stable {
        let tilde = steady_covariance(&m, &dm)?;
        for &t in times {
            states.push(MomentState {
                mean: propagate_mean(&m, &state0.mean, t)?,
                covariance: closed_form(&m, &tilde, &state0.covariance, t)?,
            });
        }
    } else {
        let spacing = times
            .iter()
            .scan(T::zero(), |prev, &t| {
                let gap = t - *prev;
                *prev = t;
                Some(gap)
            })
            .filter(|g| *g > T::zero())
            .fold(T::max_value().unwrap_or(T::one()), |a, b| a.min(b));
        let h = rk4_step_limit(&m, spacing);
        let q = dm.matrix() * T::lit(2.0);
        let mut sigma = state0.covariance.clone();
        let mut now = T::zero();
        for &t in times {
            rk4_covariance(&m.matrix, &q, &mut sigma, t - now, h);
            sigma = symmetrize(&sigma);
            now = t;
            states.push(MomentState {
                mean: propagate_mean(&m, &state0.mean, t)?,
                covariance: sigma.clone(),
            });
        }
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        provenance,
    })
}

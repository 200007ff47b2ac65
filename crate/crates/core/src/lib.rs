//! Markovian-dissipative dynamics of N coupled quantum harmonic oscillators.
//!
//! The crate builds the quantum diffusion matrix that drives a set of coupled
//! oscillators to a Gibbs state, checks the positivity constraints attached to
//! the friction and diffusion coefficients, and propagates Gaussian first and
//! second moments in closed form. Observables on the resulting Gaussian states
//! (densities, uncertainty products, correlation coefficients, energies and
//! barrier-penetration probabilities) live in [`gaussian`].
//!
//! Everything is generic over the scalar type through [`Real`]; the `*F64`
//! aliases below are what most callers want.
//!
//! Internal units: ħ = 1, k_B = 1, energies and frequencies in MeV, times in
//! MeV⁻¹, masses in MeV⁻¹ (ħ²/MeV). See [`model::units`].

// `!(x > 0)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod model;
pub mod special;
pub mod transport;

use nalgebra as na;
use num_traits as nt;

pub use error::{Error, Result};

/// Scalar types the engine can run on.
pub trait Real:
    na::RealField + Copy + nt::FloatConst + nt::FromPrimitive + nt::ToPrimitive + Send + Sync
{
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as nt::FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        <Self as nt::ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Row of coordinate `q_k` in the interleaved (q₁, p₁, q₂, p₂, …) ordering.
pub const fn q_index(k: usize) -> usize {
    2 * k
}

/// Row of momentum `p_k` in the interleaved ordering.
pub const fn p_index(k: usize) -> usize {
    2 * k + 1
}

/// Dense dynamically sized matrix used throughout the crate.
pub type Mat<T> = na::DMatrix<T>;
/// Dense dynamically sized column vector.
pub type Vector<T> = na::DVector<T>;

pub type SystemParamsF64 = model::SystemParams<f64>;
pub type DissipationParamsF64 = model::DissipationParams<f64>;
pub type DiffusionMatrixF64 = transport::DiffusionMatrix<f64>;
pub type DriftMatrixF64 = dynamics::DriftMatrix<f64>;
pub type MomentStateF64 = dynamics::MomentState<f64>;
pub type TrajectoryF64 = dynamics::Trajectory<f64>;
pub type GaussianStateF64 = gaussian::GaussianState<f64>;

pub type SystemParamsF32 = model::SystemParams<f32>;
pub type DissipationParamsF32 = model::DissipationParams<f32>;
pub type MomentStateF32 = dynamics::MomentState<f32>;

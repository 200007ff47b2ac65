//! The quantum diffusion matrix and the checks attached to it.

use crate::model::{DissipationParams, SystemParams, ValidationReport};
use crate::special::thermal_coth;
use crate::{p_index, q_index, Mat, Real, Result};

/// Symmetric 2N×2N diffusion matrix in interleaved (q, p) ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix<T: Real> {
    matrix: Mat<T>,
}

impl<T: Real> DiffusionMatrix<T> {
    /// Wraps `matrix`, symmetrizing it.
    pub fn new(matrix: Mat<T>) -> Self {
        let matrix = (&matrix + matrix.transpose()) * T::lit(0.5);
        Self { matrix }
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat<T> {
        self.matrix
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn qq(&self, k: usize, j: usize) -> T {
        self.matrix[(q_index(k), q_index(j))]
    }

    pub fn pp(&self, k: usize, j: usize) -> T {
        self.matrix[(p_index(k), p_index(j))]
    }

    /// `D_{q_k p_j}`.
    pub fn qp(&self, k: usize, j: usize) -> T {
        self.matrix[(q_index(k), p_index(j))]
    }

    /// Overwrites `D_{a b}` and its mirror entry.
    pub fn set(&mut self, a: usize, b: usize, value: T) {
        self.matrix[(a, b)] = value;
        self.matrix[(b, a)] = value;
    }

    /// Copy with every cross-mode entry set to zero; per-mode 2×2 blocks kept.
    pub fn without_cross_terms(&self) -> Self {
        let mut m = self.matrix.clone();
        for a in 0..m.nrows() {
            for b in 0..m.ncols() {
                if a / 2 != b / 2 {
                    m[(a, b)] = T::zero();
                }
            }
        }
        Self { matrix: m }
    }
}

/// Scalar diffusion-coefficient formulas. `mw` is m_kω_k of the Gibbs
/// Hamiltonian and `c` the thermal factor coth(ω_k/2T).
pub mod formulas {
    use crate::Real;

    pub fn qq_diagonal<T: Real>(lambda: T, mu: T, mw: T, c: T) -> T {
        T::lit(0.5) * (lambda - mu) / mw * c
    }

    pub fn pp_diagonal<T: Real>(lambda: T, mu: T, mw: T, c: T) -> T {
        T::lit(0.5) * mw * (lambda + mu) * c
    }

    /// `big_m`, `big_omega` are the Hamiltonian M_k, Ω_k.
    pub fn qp_diagonal<T: Real>(big_m: T, big_omega: T, mw: T, c: T) -> T {
        T::lit(0.25) * (big_m * big_omega * big_omega / mw - mw / big_m) * c
    }

    /// `D_{q_k q_j}`; `lkj` = λ_kj, `ljk` = λ_jk and likewise for μ.
    #[allow(clippy::too_many_arguments)]
    pub fn qq_pair<T: Real>(lkj: T, ljk: T, mkj: T, mjk: T, mw_k: T, mw_j: T, c_k: T, c_j: T) -> T {
        T::lit(0.25) * ((ljk - mjk) * c_k / mw_k + (lkj - mkj) * c_j / mw_j)
    }

    /// `D_{p_k p_j}`, each friction coefficient paired with the mass of its
    /// first index.
    #[allow(clippy::too_many_arguments)]
    pub fn pp_pair<T: Real>(lkj: T, ljk: T, mkj: T, mjk: T, mw_k: T, mw_j: T, c_k: T, c_j: T) -> T {
        T::lit(0.25) * ((lkj + mkj) * mw_k * c_k + (ljk + mjk) * mw_j * c_j)
    }

    /// `D_{q_k p_j}`.
    #[allow(clippy::too_many_arguments)]
    pub fn qp_pair<T: Real>(
        eta_kj: T,
        nu_kj: T,
        alpha_kj: T,
        kappa_kj: T,
        mw_k: T,
        mw_j: T,
        c_k: T,
        c_j: T,
    ) -> T {
        T::lit(0.25) * ((eta_kj + nu_kj) * c_k / mw_k + (alpha_kj - kappa_kj) * mw_j * c_j)
    }
}

/// Builds D so that the coupled system relaxes to the Gibbs state of the
/// equilibrium oscillators (m_k, ω_k) at the bath temperature.
///
/// Barrier modes use the real ω_k in the thermal factor.
pub fn diffusion_matrix<T: Real>(
    p: &SystemParams<T>,
    d: &DissipationParams<T>,
) -> Result<DiffusionMatrix<T>> {
    p.check_structure()?;
    let n = p.n_modes();
    d.check_structure(n)?;
    let mw: Vec<T> = (0..n).map(|k| p.eq_mass[k] * p.eq_frequency[k]).collect();
    let c: Vec<T> = (0..n)
        .map(|k| thermal_coth(p.eq_frequency[k], d.temperature))
        .collect();

    let mut out = DiffusionMatrix {
        matrix: Mat::zeros(2 * n, 2 * n),
    };
    for k in 0..n {
        let (l, m) = (d.lambda[(k, k)], p.mu[(k, k)]);
        out.set(q_index(k), q_index(k), formulas::qq_diagonal(l, m, mw[k], c[k]));
        out.set(p_index(k), p_index(k), formulas::pp_diagonal(l, m, mw[k], c[k]));
        out.set(
            q_index(k),
            p_index(k),
            formulas::qp_diagonal(p.mass[k], p.frequency[k], mw[k], c[k]),
        );
        for j in 0..n {
            if j == k {
                continue;
            }
            let (lkj, ljk) = (d.lambda[(k, j)], d.lambda[(j, k)]);
            let (mkj, mjk) = (p.mu[(k, j)], p.mu[(j, k)]);
            if j > k {
                let qq = formulas::qq_pair(lkj, ljk, mkj, mjk, mw[k], mw[j], c[k], c[j]);
                let pp = formulas::pp_pair(lkj, ljk, mkj, mjk, mw[k], mw[j], c[k], c[j]);
                out.set(q_index(k), q_index(j), qq);
                out.set(p_index(k), p_index(j), pp);
            }
            let qp = formulas::qp_pair(
                d.eta[(k, j)],
                p.nu[(k, j)],
                d.alpha[(k, j)],
                p.kappa[(k, j)],
                mw[k],
                mw[j],
                c[k],
                c[j],
            );
            out.set(q_index(k), p_index(j), qp);
        }
    }
    Ok(out)
}

/// Cauchy–Schwarz type constraints on D, λ, α and η. Each check reports the
/// margin `lhs − rhs`, which must be non-negative.
pub fn fundamental_constraints<T: Real>(
    dm: &DiffusionMatrix<T>,
    d: &DissipationParams<T>,
) -> Result<ValidationReport> {
    let n = dm.n_modes();
    d.check_structure(n)?;
    let mut report = ValidationReport::new();
    let f = |v: T| v.as_f64();
    let push = |report: &mut ValidationReport, name: String, a: f64, b: f64, cross: f64, coef: f64| {
        let margin = a * b - cross * cross - 0.25 * coef * coef;
        let slack = 1e-12 * ((a * b).abs() + cross * cross + 0.25 * coef * coef);
        report.push(name, margin >= -slack, margin, 0.0);
    };
    for k in 0..n {
        for j in 0..n {
            let (a, b) = (k + 1, j + 1);
            push(
                &mut report,
                format!("D_q{a}q{a} D_p{b}p{b} - D_q{a}p{b}^2 >= lambda_{a}{b}^2/4"),
                f(dm.qq(k, k)),
                f(dm.pp(j, j)),
                f(dm.qp(k, j)),
                f(d.lambda[(k, j)]),
            );
            if j <= k {
                continue;
            }
            push(
                &mut report,
                format!("D_q{a}q{a} D_q{b}q{b} - D_q{a}q{b}^2 >= alpha_{a}{b}^2/4"),
                f(dm.qq(k, k)),
                f(dm.qq(j, j)),
                f(dm.qq(k, j)),
                f(d.alpha[(k, j)]),
            );
            push(
                &mut report,
                format!("D_p{a}p{a} D_p{b}p{b} - D_p{a}p{b}^2 >= eta_{a}{b}^2/4"),
                f(dm.pp(k, k)),
                f(dm.pp(j, j)),
                f(dm.pp(k, j)),
                f(d.eta[(k, j)]),
            );
        }
        let a = k + 1;
        report.push(
            format!("alpha_{a}{a} = 0"),
            d.alpha[(k, k)] == T::zero(),
            f(d.alpha[(k, k)]).abs(),
            0.0,
        );
        report.push(
            format!("eta_{a}{a} = 0"),
            d.eta[(k, k)] == T::zero(),
            f(d.eta[(k, k)]).abs(),
            0.0,
        );
    }
    Ok(report)
}

/// Relative deviations from the high-temperature Einstein relations.
/// `None` marks an undefined ratio (vanishing friction).
#[derive(Debug, Clone, PartialEq)]
pub struct EinsteinDeviation {
    /// `|D_{p_kp_k} / (λ̃_kk m_k T) − 1|` per mode.
    pub modes: Vec<Option<f64>>,
    /// `((k, j), |D_{p_kp_j} / (Λ_kj (m_k+m_j)/2 T) − 1|)` for k < j.
    pub pairs: Vec<((usize, usize), Option<f64>)>,
}

impl EinsteinDeviation {
    /// Largest defined deviation, if any.
    pub fn max(&self) -> Option<f64> {
        self.modes
            .iter()
            .chain(self.pairs.iter().map(|(_, v)| v))
            .flatten()
            .copied()
            .reduce(f64::max)
    }
}

/// Effective pair friction Λ_kj, consistent with the pairing in
/// [`formulas::pp_pair`].
pub fn pair_friction<T: Real>(p: &SystemParams<T>, d: &DissipationParams<T>, k: usize, j: usize) -> T {
    let (mk, mj) = (p.eq_mass[k], p.eq_mass[j]);
    ((d.lambda[(k, j)] + p.mu[(k, j)]) * mk + (d.lambda[(j, k)] + p.mu[(j, k)]) * mj) / (mk + mj)
}

pub fn einstein_deviation<T: Real>(
    p: &SystemParams<T>,
    d: &DissipationParams<T>,
) -> Result<EinsteinDeviation> {
    let dm = diffusion_matrix(p, d)?;
    let n = p.n_modes();
    let temp = d.temperature.as_f64();
    let ratio = |num: f64, den: f64| (den != 0.0).then(|| (num / den - 1.0).abs());
    let modes = (0..n)
        .map(|k| {
            let lt = (d.lambda[(k, k)] + p.mu[(k, k)]).as_f64();
            ratio(dm.pp(k, k).as_f64(), lt * p.eq_mass[k].as_f64() * temp)
        })
        .collect();
    let mut pairs = Vec::new();
    for k in 0..n {
        for j in (k + 1)..n {
            let big_l = pair_friction(p, d, k, j).as_f64();
            let mbar = 0.5 * (p.eq_mass[k] + p.eq_mass[j]).as_f64();
            pairs.push(((k, j), ratio(dm.pp(k, j).as_f64(), big_l * mbar * temp)));
        }
    }
    Ok(EinsteinDeviation { modes, pairs })
}

/// Scaled residual of one equation of the stationarity conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub equation: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub equations: Vec<Residual>,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.equations.iter().map(|r| r.value).fold(0.0, f64::max)
    }
}

/// Hyperbolic factors of x = ω/T, each multiplied by e^{-x} so that products
/// stay finite at low temperature.
#[derive(Clone, Copy)]
struct Scaled {
    one: f64,
    s: f64,
    c: f64,
    cm1: f64,
}

impl Scaled {
    fn new(omega: f64, temperature: f64) -> Self {
        let e = if temperature <= crate::special::ZERO_TEMPERATURE {
            0.0
        } else {
            (-omega / temperature).exp()
        };
        Self {
            one: e,
            s: 0.5 * (1.0 - e * e),
            c: 0.5 * (1.0 + e * e),
            cm1: 0.5 * (1.0 - e) * (1.0 - e),
        }
    }
}

fn scaled_sum(name: String, terms: &[f64]) -> Residual {
    let scale = terms.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    let sum: f64 = terms.iter().sum();
    let value = if scale == 0.0 { 0.0 } else { sum.abs() / scale };
    Residual {
        equation: name,
        value,
    }
}

/// Substitutes D into the linear conditions that make the Gibbs state of the
/// equilibrium oscillators stationary: four single-mode equations per mode
/// and six cross-mode equations per ordered pair. Each residual is
/// `|Σ terms| / max|term|`.
pub fn algebraic_residuals<T: Real>(
    p: &SystemParams<T>,
    d: &DissipationParams<T>,
    dm: &DiffusionMatrix<T>,
) -> Result<Residuals> {
    p.check_structure()?;
    let n = p.n_modes();
    d.check_structure(n)?;
    crate::model::expect_len("diffusion matrix modes", n, dm.n_modes())?;
    let f = |v: T| v.as_f64();
    let temp = f(d.temperature);
    let h: Vec<Scaled> = (0..n)
        .map(|k| Scaled::new(f(p.eq_frequency[k]), temp))
        .collect();
    let mw: Vec<f64> = (0..n).map(|k| f(p.eq_mass[k] * p.eq_frequency[k])).collect();
    let mut equations = Vec::with_capacity(4 * n + 6 * n * n);

    for k in 0..n {
        let x = h[k];
        let (s, c, o, cm) = (x.s, x.c, x.one, x.cm1);
        let cp = cm + 2.0 * o;
        let (lam, mu, w, mwk) = (f(d.lambda[(k, k)]), f(p.mu[(k, k)]), f(p.eq_frequency[k]), mw[k]);
        let (dqq, dpp, dqp) = (f(dm.qq(k, k)), f(dm.pp(k, k)), f(dm.qp(k, k)));
        let big_m = f(p.mass[k]);
        let big_w = f(p.frequency[k]);
        let delta = 0.5 * (f(p.eq_mass[k]) / big_m - big_m * big_w * big_w / (mwk * w));
        let m = k + 1;
        equations.push(scaled_sum(
            format!("mode {m}: mu cosh"),
            &[mu * s * s, dqq * mwk * s * c, -dpp / mwk * s * c, 2.0 * dpp / mwk * s * o, -lam * cp * o],
        ));
        equations.push(scaled_sum(
            format!("mode {m}: D_qq"),
            &[mu / mwk * s * c, dqq * cm * cm, lam / mwk * s * o, -dpp / (mwk * mwk) * s * s],
        ));
        equations.push(scaled_sum(
            format!("mode {m}: D_pp"),
            &[mu * mwk * s * c, -dpp * cm * cm, -lam * mwk * s * o, dqq * mwk * mwk * s * s],
        ));
        equations.push(scaled_sum(
            format!("mode {m}: delta"),
            &[2.0 * delta * s * s, 4.0 * dqp / w * cm * s],
        ));
    }

    for k in 0..n {
        for j in 0..n {
            if j == k {
                continue;
            }
            let (hk, hj) = (h[k], h[j]);
            let (mk, mj) = (mw[k], mw[j]);
            let (lkj, ljk) = (f(d.lambda[(k, j)]), f(d.lambda[(j, k)]));
            let (ukj, ujk) = (f(p.mu[(k, j)]), f(p.mu[(j, k)]));
            let (eta, nu) = (f(d.eta[(k, j)]), f(p.nu[(k, j)]));
            let (alpha, kappa) = (f(d.alpha[(k, j)]), f(p.kappa[(k, j)]));
            let dqq = f(dm.qq(k, j));
            let dpp = f(dm.pp(k, j));
            let dqkpj = f(dm.qp(k, j));
            let dqjpk = f(dm.qp(j, k));
            let tag = format!("pair ({}, {})", k + 1, j + 1);

            equations.push(scaled_sum(
                format!("{tag}: A"),
                &[
                    2.0 * mj * mk * dqq * hk.cm1 * hj.cm1,
                    mj * ljk * hk.s * hj.one,
                    mj * ujk * hk.s * hj.c,
                    lkj * mk * hk.one * hj.s,
                    ukj * mk * hk.c * hj.s,
                    -2.0 * dpp * hk.s * hj.s,
                ],
            ));
            equations.push(scaled_sum(
                format!("{tag}: B"),
                &[
                    2.0 * dpp * hk.cm1 * hj.cm1,
                    mj * ljk * hk.one * hj.s,
                    -mj * ujk * hk.c * hj.s,
                    mk * lkj * hk.s * hj.one,
                    -mk * ukj * hk.s * hj.c,
                    -2.0 * mk * mj * dqq * hk.s * hj.s,
                ],
            ));
            equations.push(scaled_sum(
                format!("{tag}: C"),
                &[
                    2.0 * dpp / mk * hk.s * hj.cm1,
                    -2.0 * mj * dqq * hk.cm1 * hj.s,
                    ukj * hk.one * hj.one,
                    -lkj * hk.one * hj.c,
                    lkj * hk.c * hj.one,
                    -ukj * hk.c * hj.c,
                    -ujk * mj / mk * hk.s * hj.s,
                ],
            ));
            equations.push(scaled_sum(
                format!("{tag}: D"),
                &[
                    -2.0 * dqkpj * hk.cm1 * hj.cm1,
                    -eta / mk * hk.s * hj.one,
                    nu / mk * hk.s * hj.c,
                    -mj * alpha * hk.one * hj.s,
                    -mj * kappa * hk.c * hj.s,
                    -2.0 * mj / mk * dqjpk * hk.s * hj.s,
                ],
            ));
            equations.push(scaled_sum(
                format!("{tag}: E"),
                &[
                    -2.0 * dqjpk * hk.cm1 * hj.cm1,
                    mk * alpha * hk.s * hj.one,
                    -mk * kappa * hk.s * hj.c,
                    eta / mj * hk.one * hj.s,
                    nu / mj * hk.c * hj.s,
                    -2.0 * mk / mj * dqkpj * hk.s * hj.s,
                ],
            ));
            equations.push(scaled_sum(
                format!("{tag}: F"),
                &[
                    nu * hk.one * hj.one,
                    -eta * hk.one * hj.c,
                    -2.0 * mj * dqjpk * hk.one * hj.s,
                    kappa * mj * mk * hk.s * hj.s,
                    eta * hk.c * hj.one,
                    -nu * hk.c * hj.c,
                    2.0 * dqjpk * mj * hk.c * hj.s,
                    2.0 * dqkpj * mk * hk.s * hj.cm1,
                ],
            ));
        }
    }
    Ok(Residuals { equations })
}

use super::{DissipationParams, SystemParams, ValidationReport};
use crate::linalg::symmetric_extremes;
use crate::{Mat, Real, Result};

/// Relative tolerance for "exactly equal" parameter comparisons.
const SAME: f64 = 1e-12;
/// Positive-definiteness threshold relative to the spectral norm.
const PD_TOL: f64 = 1e-12;

/// Checks that the kinetic and potential quadratic forms are positive
/// definite. For N = 2, and for N = 3 with two identical modes that couple
/// identically to the third, the closed-form coupling bounds are reported as
/// well. Barrier modes are left out of the potential check.
pub fn validate_hamiltonian<T: Real>(p: &SystemParams<T>) -> Result<ValidationReport> {
    p.check_structure()?;
    let n = p.n_modes();
    let mut report = ValidationReport::new();

    let (min, max) = symmetric_extremes(&kinetic_form(p))?;
    let tol = PD_TOL * max.abs().max(min.abs());
    report.push("kinetic form positive definite", min > tol, min, tol);

    let oscillators: Vec<usize> = (0..n).filter(|&k| !p.is_barrier(k)).collect();
    if oscillators.is_empty() {
        report.note("all modes are barriers; potential positivity not applicable");
    } else {
        let (min, max) = symmetric_extremes(&potential_form(p, &oscillators))?;
        let tol = PD_TOL * max.abs().max(min.abs());
        report.push("potential form positive definite (oscillator modes)", min > tol, min, tol);
    }

    if n == 2 {
        let (m1, m2) = (p.mass[0].as_f64(), p.mass[1].as_f64());
        let kappa = p.kappa[(0, 1)].as_f64().abs();
        let bound = (1.0 / (m1 * m2)).sqrt();
        report.push("|kappa_12| < 1/sqrt(M_1 M_2)", kappa < bound, kappa, bound);
        if oscillators.len() == 2 {
            let (w1, w2) = (p.frequency[0].as_f64(), p.frequency[1].as_f64());
            let nu = p.nu[(0, 1)].as_f64().abs();
            let bound = (m1 * m2).sqrt() * w1 * w2;
            report.push("|nu_12| < sqrt(M_1 M_2) Omega_1 Omega_2", nu < bound, nu, bound);
        }
    }

    if n == 3 && oscillators.len() == 3 {
        if let Some((a, b, c)) = symmetric_triplet(p) {
            three_mode_bounds(p, a, b, c, &mut report);
        }
    }
    Ok(report)
}

/// Constraint checks on λ, α, η: antisymmetry, the friction bound that holds
/// when μ = 0, and the α/η bounds for pairs without cross friction.
pub fn validate_dissipation<T: Real>(
    d: &DissipationParams<T>,
    p: &SystemParams<T>,
) -> Result<ValidationReport> {
    p.check_structure()?;
    let n = p.n_modes();
    d.check_structure(n)?;
    let mut report = ValidationReport::new();
    report.push_at_least("temperature > 0", d.temperature.as_f64(), f64::MIN_POSITIVE);

    for (name, m) in [("alpha", &d.alpha), ("eta", &d.eta)] {
        let scale = m.iter().fold(0.0_f64, |acc, v| acc.max(v.as_f64().abs()));
        let mut worst = 0.0_f64;
        for k in 0..n {
            for j in k..n {
                worst = worst.max((m[(k, j)] + m[(j, k)]).as_f64().abs());
            }
        }
        report.push_at_most(format!("{name} antisymmetric"), worst, SAME * scale);
    }

    let lam = |k: usize, j: usize| d.lambda[(k, j)].as_f64();
    let mw = |k: usize| (p.eq_mass[k] * p.eq_frequency[k]).as_f64();

    if p.mu.iter().all(|v| *v == T::zero()) {
        report.note(
            "xi_kj uses sqrt(m_k m_j omega_k omega_j) in its second term \
             (symmetric in k and j)",
        );
        for k in 0..n {
            for j in 0..n {
                if k == j {
                    continue;
                }
                let radicand = lam(k, k) * lam(j, j) - (mw(k) / mw(j)) * lam(k, j).powi(2);
                let lhs = radicand.signum() * radicand.abs().sqrt();
                let bound = xi(p, d, k, j).max(xi(p, d, j, k));
                report.push(
                    format!("friction bound ({}, {})", k + 1, j + 1),
                    lhs >= bound * (1.0 - SAME),
                    lhs,
                    bound,
                );
            }
        }
    }

    for k in 0..n {
        for j in (k + 1)..n {
            if lam(k, j) != 0.0 || lam(j, k) != 0.0 {
                continue;
            }
            let ll = lam(k, k) * lam(j, j);
            let prod = mw(k) * mw(j);
            let alpha = d.alpha[(k, j)].as_f64().abs();
            let bound = (ll / prod).sqrt();
            report.push(
                format!("|alpha_{}{}| bound", k + 1, j + 1),
                alpha <= bound * (1.0 + SAME),
                alpha,
                bound,
            );
            let eta = d.eta[(k, j)].as_f64().abs();
            let bound = (ll * prod).sqrt();
            report.push(
                format!("|eta_{}{}| bound", k + 1, j + 1),
                eta <= bound * (1.0 + SAME),
                eta,
                bound,
            );
        }
    }
    Ok(report)
}

fn xi<T: Real>(p: &SystemParams<T>, d: &DissipationParams<T>, k: usize, j: usize) -> f64 {
    let root = (p.eq_mass[k] * p.eq_mass[j] * p.eq_frequency[k] * p.eq_frequency[j])
        .as_f64()
        .sqrt();
    let eta_nu = (d.eta[(k, j)] + p.nu[(k, j)]).as_f64();
    let alpha_kappa = (d.alpha[(k, j)] - p.kappa[(k, j)]).as_f64();
    0.5 * (eta_nu / root + root * alpha_kappa).abs()
}

/// Matrix of the kinetic quadratic form: 1/M_k on the diagonal, κ_kj off it.
pub fn kinetic_form<T: Real>(p: &SystemParams<T>) -> Mat<T> {
    let n = p.n_modes();
    Mat::from_fn(n, n, |k, j| {
        if k == j {
            T::one() / p.mass[k]
        } else {
            p.kappa[(k, j)]
        }
    })
}

/// Matrix of the potential quadratic form restricted to `modes`:
/// M_kΩ_k² on the diagonal, ν_kj off it.
pub fn potential_form<T: Real>(p: &SystemParams<T>, modes: &[usize]) -> Mat<T> {
    let n = modes.len();
    Mat::from_fn(n, n, |a, b| {
        let (k, j) = (modes[a], modes[b]);
        if k == j {
            p.mass[k] * p.frequency[k] * p.frequency[k]
        } else {
            p.nu[(k, j)]
        }
    })
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= SAME * a.abs().max(b.abs())
}

/// Finds a labelling (a, b, c) with modes b and c identical and coupled
/// identically to a.
fn symmetric_triplet<T: Real>(p: &SystemParams<T>) -> Option<(usize, usize, usize)> {
    [(0, 1, 2), (1, 0, 2), (2, 0, 1)].into_iter().find(|&(a, b, c)| {
        same(p.mass[b].as_f64(), p.mass[c].as_f64())
            && same(p.frequency[b].as_f64(), p.frequency[c].as_f64())
            && same(p.nu[(a, b)].as_f64(), p.nu[(a, c)].as_f64())
            && same(p.kappa[(a, b)].as_f64(), p.kappa[(a, c)].as_f64())
    })
}

fn three_mode_bounds<T: Real>(
    p: &SystemParams<T>,
    a: usize,
    b: usize,
    c: usize,
    report: &mut ValidationReport,
) {
    let (ma, mb) = (p.mass[a].as_f64(), p.mass[b].as_f64());
    let (wa, wb) = (p.frequency[a].as_f64(), p.frequency[b].as_f64());
    let (ia, ib, ic) = (a + 1, b + 1, c + 1);

    let kbc = p.kappa[(b, c)].as_f64();
    report.push(
        format!("|kappa_{ib}{ic}| < 1/M_{ib}"),
        kbc.abs() < 1.0 / mb,
        kbc.abs(),
        1.0 / mb,
    );
    let kab = p.kappa[(a, b)].as_f64().abs();
    let bound = ((1.0 + mb * kbc) / (2.0 * ma * mb)).max(0.0).sqrt();
    report.push(
        format!("|kappa_{ia}{ib}| < sqrt((1 + M_{ib} kappa_{ib}{ic}) / (2 M_{ia} M_{ib}))"),
        kab < bound,
        kab,
        bound,
    );

    let nbc = p.nu[(b, c)].as_f64();
    let stiff_b = mb * wb * wb;
    report.push(
        format!("|nu_{ib}{ic}| < M_{ib} Omega_{ib}^2"),
        nbc.abs() < stiff_b,
        nbc.abs(),
        stiff_b,
    );
    let nab = p.nu[(a, b)].as_f64().abs();
    let bound = (0.5 * ma * wa * wa * (nbc + stiff_b)).max(0.0).sqrt();
    report.push(
        format!("|nu_{ia}{ib}| < sqrt(M_{ia} Omega_{ia}^2 (nu_{ib}{ic} + M_{ib} Omega_{ib}^2) / 2)"),
        nab < bound,
        nab,
        bound,
    );
}

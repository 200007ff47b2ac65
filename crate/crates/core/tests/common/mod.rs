#![allow(dead_code)]

use qtransport_core::model::{DissipationParams, ModeKind, SystemParams};
use qtransport_core::{Mat, MomentStateF64};

pub const HBAR_MEV_S: f64 = 6.582119569e-22;

pub fn seconds(t: f64) -> f64 {
    t / HBAR_MEV_S
}

pub fn sym(n: usize, entries: &[(usize, usize, f64)]) -> Mat<f64> {
    let mut m = Mat::zeros(n, n);
    for &(k, j, v) in entries {
        m[(k, j)] = v;
        m[(j, k)] = v;
    }
    m
}

pub fn antisym(n: usize, entries: &[(usize, usize, f64)]) -> Mat<f64> {
    let mut m = Mat::zeros(n, n);
    for &(k, j, v) in entries {
        m[(k, j)] = v;
        m[(j, k)] = -v;
    }
    m
}

/// Charge (Z) and neutron (N) asymmetry modes of the dinuclear system.
pub fn fig1() -> (SystemParams<f64>, DissipationParams<f64>, MomentStateF64) {
    let mut p = SystemParams::uncoupled(vec![461.6344, 461.6344], vec![2.9468, 2.9288]);
    p.nu = sym(2, &[(0, 1, -1869.0)]);
    let d = DissipationParams::diagonal(&[2.0, 2.0], 5.0);
    let s = MomentStateF64::uncorrelated(
        &[0.0, 0.0],
        &[0.0, 0.0],
        &[1e-4, 1e-3],
        &[0.25 / 1e-4, 0.25 / 1e-3],
    )
    .unwrap();
    (p, d, s)
}

/// Two inverted-barrier modes.
pub fn fig10(lambda_22: f64) -> (SystemParams<f64>, DissipationParams<f64>, MomentStateF64) {
    let mut p = SystemParams::uncoupled(vec![2.5, 60.0], vec![1.7, 0.6]);
    p.mode_kind = vec![ModeKind::InvertedBarrier; 2];
    p.nu = sym(2, &[(0, 1, 7.0)]);
    let d = DissipationParams::diagonal(&[2.5, lambda_22], 0.1);
    let s = MomentStateF64::uncorrelated(&[-6.0, 0.0], &[9.0, 0.0], &[0.4, 0.07], &[0.25 / 0.4, 0.25 / 0.07])
        .unwrap();
    (p, d, s)
}

/// Three coupled modes with every coefficient switched on and Hamiltonian
/// masses/frequencies different from the equilibrium ones.
pub fn general_three_mode() -> (SystemParams<f64>, DissipationParams<f64>) {
    let mut p = SystemParams::uncoupled(vec![1.3, 0.8, 2.1], vec![1.1, 0.7, 1.6]);
    p.eq_mass = vec![1.0, 0.9, 2.4];
    p.eq_frequency = vec![1.2, 0.6, 1.5];
    p.mu = Mat::from_row_slice(3, 3, &[0.05, 0.02, -0.03, 0.04, -0.06, 0.01, -0.02, 0.03, 0.02]);
    p.nu = sym(3, &[(0, 1, 0.15), (0, 2, -0.1), (1, 2, 0.08)]);
    p.kappa = sym(3, &[(0, 1, 0.05), (0, 2, 0.03), (1, 2, -0.04)]);
    let mut d = DissipationParams::diagonal(&[0.9, 0.7, 1.1], 0.8);
    d.lambda[(0, 1)] = 0.1;
    d.lambda[(1, 0)] = -0.05;
    d.lambda[(0, 2)] = 0.07;
    d.lambda[(2, 1)] = 0.12;
    d.alpha = antisym(3, &[(0, 1, 0.04), (0, 2, -0.02), (1, 2, 0.03)]);
    d.eta = antisym(3, &[(0, 1, 0.06), (0, 2, 0.05), (1, 2, -0.04)]);
    (p, d)
}

/// Classic fixed-step RK4 on dσ/dt = Mσ + σMᵀ + 2D over plain row-major
/// arrays, kept independent of the library's propagators.
pub fn rk4_oracle(m: &Mat<f64>, d: &Mat<f64>, sigma0: &Mat<f64>, t: f64, h: f64) -> Mat<f64> {
    let n = m.nrows();
    let mm: Vec<f64> = (0..n * n).map(|i| m[(i / n, i % n)]).collect();
    let dd: Vec<f64> = (0..n * n).map(|i| d[(i / n, i % n)]).collect();
    let f = |s: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 2.0 * dd[i * n + j];
                for l in 0..n {
                    acc += mm[i * n + l] * s[l * n + j] + s[i * n + l] * mm[j * n + l];
                }
                out[i * n + j] = acc;
            }
        }
        out
    };
    let steps = (t / h).round() as usize;
    let h = t / steps as f64;
    let mut s: Vec<f64> = (0..n * n).map(|i| sigma0[(i / n, i % n)]).collect();
    for _ in 0..steps {
        let k1 = f(&s);
        let y: Vec<f64> = s.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
        let k2 = f(&y);
        let y: Vec<f64> = s.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
        let k3 = f(&y);
        let y: Vec<f64> = s.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
        let k4 = f(&y);
        for i in 0..n * n {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Mat::from_fn(n, n, |i, j| s[i * n + j])
}

/// Composite Simpson rule on [a, b] with an even number of panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels + panels % 2;
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn gibbs_qq(m: f64, w: f64, t: f64) -> f64 {
    0.5 / (m * w) / (w / (2.0 * t)).tanh()
}

pub fn gibbs_pp(m: f64, w: f64, t: f64) -> f64 {
    0.5 * m * w / (w / (2.0 * t)).tanh()
}

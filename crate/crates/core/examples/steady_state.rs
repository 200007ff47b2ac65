//! Two coupled oscillators relaxing to their stationary covariance.

use qtransport_core::dynamics::{drift_matrix, propagate_covariance, steady_covariance};
use qtransport_core::model::{unit_convert, DissipationParams, SystemParams, Unit};
use qtransport_core::transport::diffusion_matrix;
use qtransport_core::{p_index, q_index, Mat, Result};

fn main() -> Result<()> {
    let mut system = SystemParams::uncoupled(vec![461.6344, 461.6344], vec![2.9468, 2.9288]);
    system.nu[(0, 1)] = -1869.0;
    system.nu[(1, 0)] = -1869.0;
    let dissipation = DissipationParams::diagonal(&[2.0, 2.0], 5.0);

    let m = drift_matrix(&system, &dissipation)?;
    let d = diffusion_matrix(&system, &dissipation)?;
    let stationary = steady_covariance(&m, &d)?;

    let mut sigma0 = Mat::zeros(4, 4);
    for (k, var_q) in [1e-4, 1e-3].into_iter().enumerate() {
        sigma0[(q_index(k), q_index(k))] = var_q;
        sigma0[(p_index(k), p_index(k))] = 0.25 / var_q;
    }
    for t_s in [1e-22, 10e-22, 70e-22] {
        let sigma = propagate_covariance(&m, &d, &sigma0, unit_convert(t_s, Unit::Seconds))?;
        let q = q_index(0);
        println!("t = {t_s:e} s: var q0 = {:e} (stationary {:e})", sigma[(q, q)], stationary[(q, q)]);
    }
    Ok(())
}

//! The work behind each subcommand, separated from argument parsing so tests
//! can drive it directly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use qtransport_core::dynamics::{
    drift_matrix, stability, steady_covariance, trajectory, OffDiagonalD, Propagation,
    Provenance, TrajectoryOptions,
};
use qtransport_core::gaussian::{
    correlation_coefficient, mean_energy, penetration_probability, position_marginal,
    uncertainty_products, GaussianState,
};
use qtransport_core::linalg::Spectrum;
use qtransport_core::model::{
    validate_dissipation, validate_hamiltonian, ValidationReport,
};
use qtransport_core::special::thermal_coth;
use qtransport_core::transport::{
    algebraic_residuals, diffusion_matrix, einstein_deviation, fundamental_constraints,
};
use qtransport_core::{p_index, q_index, Mat};

use crate::config::{Member, ScenarioConfig};
use crate::error::CliError;
use crate::output::*;

/// Largest scaled residual accepted by `validate`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

const GENERATOR: &str = concat!("qtransport ", env!("CARGO_PKG_VERSION"));

fn core_err(config: &ScenarioConfig) -> impl Fn(qtransport_core::Error) -> CliError + '_ {
    move |e| CliError::core(config.name.clone(), e)
}

/// Symbol of state coordinate `a` in the interleaved ordering, e.g. `qZ`.
pub fn coordinate_name(labels: &[String], a: usize) -> String {
    let kind = if a.is_multiple_of(2) { 'q' } else { 'p' };
    format!("{kind}{}", labels[a / 2])
}

pub fn trajectory_header(labels: &[String]) -> Vec<String> {
    let dim = 2 * labels.len();
    let mut h = vec!["t_seconds".to_string()];
    h.extend((0..dim).map(|a| format!("mean_{}", coordinate_name(labels, a))));
    for a in 0..dim {
        for b in a..dim {
            h.push(format!(
                "sigma_{}_{}",
                coordinate_name(labels, a),
                coordinate_name(labels, b)
            ));
        }
    }
    h.extend(labels.iter().map(|l| format!("uncertainty_{l}")));
    for k in 0..labels.len() {
        for j in (k + 1)..labels.len() {
            h.push(format!("chi_{}_{}", labels[k], labels[j]));
        }
    }
    h
}

/// Every check behind `validate`: Hamiltonian positivity, dissipation
/// constraints, the fundamental constraints on D, stability of the drift
/// matrix and the algebraic residuals.
pub fn run_validate(config: &ScenarioConfig) -> Result<ValidationReport, CliError> {
    let err = core_err(config);
    let (p, d) = (&config.system, &config.dissipation);
    let mut report = validate_hamiltonian(p).map_err(&err)?;
    report.merge(validate_dissipation(d, p).map_err(&err)?);
    let dm = diffusion_matrix(p, d).map_err(&err)?;
    report.merge(fundamental_constraints(&dm, d).map_err(&err)?);
    let st = stability(&drift_matrix(p, d).map_err(&err)?).map_err(&err)?;
    let max_real = st.spectrum.max_real();
    if p.has_barrier() {
        report.note(format!(
            "drift matrix spectrum has max real part {max_real:e}; \
             systems with barrier modes are unstable by construction"
        ));
    } else {
        report.push("drift matrix stable: max Re(eigenvalue) < 0", st.is_stable, max_real, 0.0);
    }
    let residuals = algebraic_residuals(p, d, &dm).map_err(&err)?;
    report.push_at_most("algebraic residuals (max scaled)", residuals.max(), RESIDUAL_TOLERANCE);
    Ok(report)
}

pub fn validation_summary(member: &Member, report: &ValidationReport) -> ValidationSummary {
    ValidationSummary {
        scenario: member.config.name.clone(),
        sweep: sweep_point(member),
        passed: report.passed(),
        checks: report
            .checks
            .iter()
            .map(|c| CheckSummary {
                name: c.name.clone(),
                passed: c.passed,
                measured: c.measured,
                bound: c.bound,
            })
            .collect(),
        notes: report.notes.clone(),
    }
}

fn sweep_point(member: &Member) -> Option<SweepPoint> {
    member.sweep_value.as_ref().map(|(p, v)| SweepPoint {
        parameter: p.clone(),
        value: *v,
    })
}

fn spectrum_summary(s: &Spectrum) -> Vec<Eigenvalue> {
    s.eigenvalues
        .iter()
        .map(|&(re, im)| Eigenvalue { re, im })
        .collect()
}

fn rows(m: &Mat<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn provenance_summary(config: &ScenarioConfig, prov: &Provenance) -> ProvenanceSummary {
    let mut notes = Vec::new();
    if config.system.has_barrier() {
        notes.push(
            "barrier modes use the real frequency omega_k in the thermal factor coth(omega_k / 2T)"
                .to_string(),
        );
    }
    ProvenanceSummary {
        generator: GENERATOR.to_string(),
        parameter_hash: prov.parameter_hash.clone(),
        off_diagonal_d: match prov.off_diagonal_d {
            OffDiagonalD::Full => "full",
            OffDiagonalD::Zeroed => "zeroed",
        },
        propagation: match prov.propagation {
            Propagation::ClosedForm => "closed_form",
            Propagation::RungeKutta => "runge_kutta",
        },
        units: BTreeMap::from([
            ("time", "s"),
            ("coordinates", "dimensionless"),
            ("momenta", "hbar"),
            ("energy", "MeV"),
        ]),
        notes,
    }
}

fn options(config: &ScenarioConfig) -> TrajectoryOptions {
    TrajectoryOptions {
        off_diagonal_d: if config.zero_offdiag_d {
            OffDiagonalD::Zeroed
        } else {
            OffDiagonalD::Full
        },
    }
}

/// Trapezoidal `∫|y| dt`.
fn abs_area(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0].abs() + y[1].abs()))
        .sum()
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub stem: String,
    pub table: Table,
    pub summary: SimulationSummary,
}

pub fn simulate(member: &Member) -> Result<Simulation, CliError> {
    let config = &member.config;
    let err = core_err(config);
    let (p, d) = (&config.system, &config.dissipation);
    let labels = &config.labels;
    let n = config.n_modes();
    let (seconds, times) = config.times();
    let traj = trajectory(p, d, &config.initial, &times, options(config)).map_err(&err)?;

    let header = trajectory_header(labels);
    let mut table = Table::new(header.clone());
    let mut min_product = f64::INFINITY;
    for (t, state) in seconds.iter().zip(&traj.states) {
        let mut row = Vec::with_capacity(header.len());
        row.push(*t);
        row.extend(state.mean.iter().copied());
        let s = &state.covariance;
        for a in 0..2 * n {
            for b in a..2 * n {
                row.push(s[(a, b)]);
            }
        }
        let products = uncertainty_products(state);
        min_product = products.iter().copied().fold(min_product, f64::min);
        row.extend(products);
        for k in 0..n {
            for j in (k + 1)..n {
                row.push(correlation_coefficient(state, k, j).map_err(&err)?);
            }
        }
        table.push(row);
    }

    let m = drift_matrix(p, d).map_err(&err)?;
    let st = stability(&m).map_err(&err)?;
    let steady = if st.is_stable {
        let mut dm = diffusion_matrix(p, d).map_err(&err)?;
        if config.zero_offdiag_d {
            dm = dm.without_cross_terms();
        }
        Some(rows(&steady_covariance(&m, &dm).map_err(&err)?))
    } else {
        None
    };
    let gibbs_targets = (0..n)
        .filter(|&k| !p.is_barrier(k))
        .map(|k| {
            let (mass, w) = (p.eq_mass[k], p.eq_frequency[k]);
            let c = thermal_coth(w, d.temperature);
            let q = coordinate_name(labels, q_index(k));
            let pk = coordinate_name(labels, p_index(k));
            GibbsTarget {
                mode: labels[k].clone(),
                column_q: format!("sigma_{q}_{q}"),
                column_p: format!("sigma_{pk}_{pk}"),
                var_q: c / (2.0 * mass * w),
                var_p: 0.5 * mass * w * c,
            }
        })
        .collect();
    let ein = einstein_deviation(p, d).map_err(&err)?;
    let einstein = EinsteinSummary {
        modes: ein
            .modes
            .iter()
            .enumerate()
            .map(|(k, v)| ModeDeviation {
                mode: labels[k].clone(),
                deviation: *v,
            })
            .collect(),
        pairs: ein
            .pairs
            .iter()
            .map(|((k, j), v)| PairDeviation {
                modes: [labels[*k].clone(), labels[*j].clone()],
                deviation: *v,
            })
            .collect(),
    };
    let mean_decay_areas = (0..2 * n)
        .map(|a| {
            let y: Vec<f64> = traj.states.iter().map(|s| s.mean[a]).collect();
            (format!("mean_{}", coordinate_name(labels, a)), abs_area(&seconds, &y))
        })
        .collect();
    let last = traj.states.last().expect("grid has at least two points");

    let summary = SimulationSummary {
        scenario: config.name.clone(),
        sweep: sweep_point(member),
        modes: labels.clone(),
        columns: header,
        samples: seconds.len(),
        t_start_seconds: seconds[0],
        t_end_seconds: *seconds.last().unwrap(),
        stable: st.is_stable,
        spectrum: spectrum_summary(&st.spectrum),
        steady_covariance: steady,
        gibbs_targets,
        final_covariance: rows(&last.covariance),
        min_uncertainty_product: min_product,
        max_uncertainty_violation: (0.25 - min_product).max(0.0),
        einstein_deviation: einstein,
        mean_decay_areas,
        provenance: provenance_summary(config, &traj.provenance),
    };
    Ok(Simulation {
        stem: member.stem(),
        table,
        summary,
    })
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub t_seconds: f64,
    pub table: Table,
    pub ranges: Vec<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct Tunnel {
    pub stem: String,
    pub table: Table,
    pub frames: Vec<Frame>,
    pub summary: TunnelSummary,
}

pub fn tunnel(member: &Member) -> Result<Tunnel, CliError> {
    let config = &member.config;
    let err = core_err(config);
    let (p, d) = (&config.system, &config.dissipation);
    let labels = &config.labels;
    let k = config.penetration_mode().ok_or_else(|| {
        CliError::Usage(format!("{}: tunnel needs at least one barrier mode", config.name))
    })?;
    let (seconds, times) = config.times();
    let opts = options(config);
    let traj = trajectory(p, d, &config.initial, &times, opts).map_err(&err)?;
    let mut table = Table::new(vec!["t_seconds".into(), "P".into()]);
    for (t, state) in seconds.iter().zip(&traj.states) {
        table.push(vec![*t, penetration_probability(state, k).map_err(&err)?]);
    }
    let frames = density_frames(config, opts)?;
    let st = stability(&drift_matrix(p, d).map_err(&err)?).map_err(&err)?;
    let stem = member.stem();
    let tunnel_modes: Vec<String> = config
        .tunnel
        .as_ref()
        .map(|t| t.density_modes.iter().map(|&m| labels[m].clone()).collect())
        .unwrap_or_default();
    let summary = TunnelSummary {
        scenario: config.name.clone(),
        sweep: sweep_point(member),
        modes: labels.clone(),
        penetration_mode: labels[k].clone(),
        samples: seconds.len(),
        t_start_seconds: seconds[0],
        t_end_seconds: *seconds.last().unwrap(),
        p_initial: penetration_probability(&config.initial, k).map_err(&err)?,
        p_final: table.rows.last().unwrap()[1],
        initial_energy_mev: mean_energy(p, &config.initial).map_err(&err)?,
        stable: st.is_stable,
        spectrum: spectrum_summary(&st.spectrum),
        frames: frames
            .iter()
            .enumerate()
            .map(|(i, f)| FrameSummary {
                t_seconds: f.t_seconds,
                file: frame_file(&stem, i),
                modes: tunnel_modes.clone(),
                ranges: f.ranges.clone(),
                points: f.table.rows.len(),
            })
            .collect(),
        provenance: provenance_summary(config, &traj.provenance),
    };
    Ok(Tunnel {
        stem,
        table,
        frames,
        summary,
    })
}

pub fn frame_file(stem: &str, index: usize) -> String {
    format!("{stem}.density_{index}.csv")
}

/// Position densities on a regular grid at the requested frame times.
fn density_frames(config: &ScenarioConfig, opts: TrajectoryOptions) -> Result<Vec<Frame>, CliError> {
    let err = core_err(config);
    let Some(settings) = &config.tunnel else {
        return Ok(Vec::new());
    };
    if settings.frames_s.is_empty() {
        return Ok(Vec::new());
    }
    let mut frame_s = settings.frames_s.clone();
    frame_s.sort_by(f64::total_cmp);
    frame_s.dedup();
    let times: Vec<f64> = frame_s
        .iter()
        .map(|&t| qtransport_core::model::unit_convert(t, qtransport_core::model::Unit::Seconds))
        .collect();
    let traj = trajectory(&config.system, &config.dissipation, &config.initial, &times, opts)
        .map_err(&err)?;
    let modes = &settings.density_modes;
    let ranges: Vec<[f64; 2]> = match &settings.density_ranges {
        Some(r) => r.clone(),
        None => modes
            .iter()
            .map(|&m| {
                let a = q_index(m);
                traj.states.iter().fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], s| {
                    let half = 5.0 * s.covariance[(a, a)].sqrt();
                    [lo.min(s.mean[a] - half), hi.max(s.mean[a] + half)]
                })
            })
            .collect(),
    };
    let npts = settings.density_points;
    let axes: Vec<Vec<f64>> = ranges
        .iter()
        .map(|[lo, hi]| {
            (0..npts)
                .map(|i| lo + (hi - lo) * (i as f64 / (npts - 1) as f64))
                .collect()
        })
        .collect();
    let mut header: Vec<String> = modes
        .iter()
        .map(|&m| coordinate_name(&config.labels, q_index(m)))
        .collect();
    header.push("rho".into());

    let mut frames = Vec::with_capacity(frame_s.len());
    for (t, state) in frame_s.iter().zip(traj.states) {
        let g = GaussianState::new(state).map_err(&err)?;
        let marginal = position_marginal(&g, modes).map_err(&err)?;
        let mut table = Table::new(header.clone());
        let mut idx = vec![0usize; axes.len()];
        loop {
            let mut row: Vec<f64> = idx.iter().zip(&axes).map(|(&i, ax)| ax[i]).collect();
            row.push(marginal.density(&row).map_err(&err)?);
            table.push(row);
            // last axis fastest
            let mut dim = idx.len();
            while dim > 0 {
                dim -= 1;
                idx[dim] += 1;
                if idx[dim] < npts {
                    break;
                }
                idx[dim] = 0;
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }
        frames.push(Frame {
            t_seconds: *t,
            table,
            ranges: ranges.clone(),
        });
    }
    Ok(frames)
}

/// Runs `f` on every member concurrently, keeping the input order.
pub fn run_members<T: Send>(
    members: &[Member],
    f: impl Fn(&Member) -> Result<T, CliError> + Sync,
) -> Result<Vec<T>, CliError> {
    if members.len() == 1 {
        return Ok(vec![f(&members[0])?]);
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = members.iter().map(|m| scope.spawn(|| f(m))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep member panicked"))
            .collect()
    })
}

/// Validates every member and fails on the first one that does not pass.
pub fn require_valid(members: &[Member]) -> Result<(), CliError> {
    for m in members {
        let report = run_validate(&m.config)?;
        if !report.passed() {
            return Err(CliError::Validation {
                scenario: m.stem(),
                report: Box::new(report),
            });
        }
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_simulation(sim: &Simulation, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(dir)?;
    let csv = dir.join(format!("{}.csv", sim.stem));
    let json = dir.join(format!("{}.summary.json", sim.stem));
    sim.table.write_file(&csv)?;
    write_json(&sim.summary, &json)?;
    Ok(vec![csv, json])
}

pub fn write_tunnel(run: &Tunnel, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(dir)?;
    let csv = dir.join(format!("{}.tunnel.csv", run.stem));
    let json = dir.join(format!("{}.tunnel.json", run.stem));
    run.table.write_file(&csv)?;
    let mut written = vec![csv];
    for (i, f) in run.frames.iter().enumerate() {
        let path = dir.join(frame_file(&run.stem, i));
        f.table.write_file(&path)?;
        written.push(path);
    }
    write_json(&run.summary, &json)?;
    written.push(json);
    Ok(written)
}

pub fn write_validation(member: &Member, report: &ValidationReport, dir: &Path) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(format!("{}.validation.json", member.stem()));
    write_json(&validation_summary(member, report), &path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let labels = vec!["Z".to_string(), "N".to_string()];
        let h = trajectory_header(&labels);
        // t, 4 means, 10 covariances, 2 products, 1 chi
        assert_eq!(h.len(), 1 + 4 + 10 + 2 + 1);
        assert_eq!(&h[..5], ["t_seconds", "mean_qZ", "mean_pZ", "mean_qN", "mean_pN"]);
        assert_eq!(h[5], "sigma_qZ_qZ");
        assert_eq!(h[6], "sigma_qZ_pZ");
        assert_eq!(h[8], "sigma_qZ_pN");
        assert_eq!(h[14], "sigma_pN_pN");
        assert_eq!(&h[15..], ["uncertainty_Z", "uncertainty_N", "chi_Z_N"]);
    }

    #[test]
    fn trapezoid_area() {
        let t = [0.0, 1.0, 2.0];
        assert_eq!(abs_area(&t, &[1.0, -1.0, 1.0]), 2.0);
    }
}

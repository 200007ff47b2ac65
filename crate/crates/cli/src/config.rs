//! Scenario files.
//!
//! A scenario is a TOML document. Every physical quantity carries its unit in
//! the key name, and mode labels are spliced into the key:
//!
//! ```toml
//! name = "example"
//! modes = ["Z", "N"]
//!
//! [system]
//! mass_Z_hbar2_per_MeV = 461.6344
//! mass_N_hbar2_per_MeV = 461.6344
//! hbar_omega_Z_MeV = 2.9468
//! hbar_omega_N_MeV = 2.9288
//! nu_ZN_MeV = -1869.0
//!
//! [dissipation]
//! temperature_MeV = 5.0
//! hbar_lambda_ZZ_MeV = 2.0
//! hbar_lambda_NN_MeV = 2.0
//!
//! [initial]
//! var_q_Z = 1e-4
//! var_q_N = 1e-3
//!
//! [time]
//! end_s = 70e-22
//! ```
//!
//! See [`KEY_REFERENCE`] for the full list of keys.

use std::collections::BTreeMap;
use std::path::Path;

use qtransport_core::model::{unit_convert, DissipationParams, ModeKind, SystemParams, Unit};
use qtransport_core::{p_index, q_index, Mat, MomentStateF64, Vector};
use serde::Deserialize;
use toml::{Spanned, Value};

use crate::error::{CliError, ConfigError};

pub const DEFAULT_GRID: usize = 2000;
pub const DEFAULT_DENSITY_POINTS: usize = 101;

/// Printed by `scenarios keys`.
pub const KEY_REFERENCE: &str = "\
top level      name, description, modes = [labels]
[system]       mass_<A>_hbar2_per_MeV, hbar_omega_<A>_MeV           (required per mode)
               eq_mass_<A>_hbar2_per_MeV, hbar_eq_omega_<A>_MeV     (default: Hamiltonian values)
               kind_<A> = \"oscillator\" | \"barrier\"
               hbar_mu_<A><B>_MeV                                   (any entry, including A = B)
               nu_<A><B>_MeV                                        (symmetric, A != B)
               kappa_<A><B>_MeV | kappa_<A><B>_per_MeV_s2           (symmetric, A != B)
[dissipation]  temperature_MeV                                      (required)
               hbar_lambda_<A><B>_MeV                               (any entry)
               alpha_<A><B>_MeV | alpha_<A><B>_per_MeV_s2           (antisymmetric: sets <B><A> = -value)
               eta_<A><B>_MeV                                       (antisymmetric)
[initial]      q_<A>, p_<A>_hbar                                    (means, default 0)
               var_q_<A>                                            (required per mode)
               var_p_<A>_hbar2                                      (default: minimum uncertainty)
               cov_q<A>_q<B>, cov_q<A>_p<B>_hbar, cov_p<A>_p<B>_hbar2
[time]         end_s (required), start_s = 0, grid = 2000
[options]      zero_offdiag_D = false
[tunnel]       mode = \"<A>\", frames_s = [..], density_modes = [\"<A>\", \"<B>\"],
               density_ranges = [[lo, hi], ..], density_points = 101
[sweep]        parameter = \"<key>\" or \"<key>+<key>\", values = [..]
";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    name: Option<String>,
    description: Option<String>,
    modes: Spanned<Vec<String>>,
    system: RawSection,
    dissipation: RawSection,
    initial: Option<RawSection>,
    time: Spanned<RawTime>,
    #[serde(default)]
    options: RawOptions,
    tunnel: Option<Spanned<RawTunnel>>,
    sweep: Option<Spanned<RawSweep>>,
}

type RawSection = BTreeMap<String, Spanned<Value>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    #[serde(default)]
    start_s: f64,
    end_s: f64,
    grid: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    #[serde(default, rename = "zero_offdiag_D")]
    zero_offdiag_d: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTunnel {
    mode: Option<String>,
    #[serde(default)]
    frames_s: Vec<f64>,
    density_modes: Option<Vec<String>>,
    density_ranges: Option<Vec<[f64; 2]>>,
    density_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    parameter: String,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    System,
    Dissipation,
    Initial,
}

impl Section {
    const ALL: [Section; 3] = [Section::System, Section::Dissipation, Section::Initial];

    fn name(self) -> &'static str {
        match self {
            Section::System => "system",
            Section::Dissipation => "dissipation",
            Section::Initial => "initial",
        }
    }
}

/// One scalar parameter. Pairs of symmetric and antisymmetric matrices are
/// stored once, with `k < j`; state indices use the interleaved ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Slot {
    Mass(usize),
    EqMass(usize),
    Omega(usize),
    EqOmega(usize),
    Mu(usize, usize),
    Nu(usize, usize),
    Kappa(usize, usize),
    Temperature,
    Lambda(usize, usize),
    Alpha(usize, usize),
    Eta(usize, usize),
    Mean(usize),
    Cov(usize, usize),
}

#[derive(Debug, Clone, Copy)]
struct Resolved {
    slot: Slot,
    unit: Unit,
    sign: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pairing {
    Single,
    /// Any ordered pair, diagonal allowed.
    Entry,
    Symmetric,
    Antisymmetric,
}

struct Pattern {
    prefix: &'static str,
    suffix: &'static str,
    pairing: Pairing,
    unit: Unit,
    slot: fn(usize, usize) -> Slot,
}

const fn pat(
    prefix: &'static str,
    suffix: &'static str,
    pairing: Pairing,
    unit: Unit,
    slot: fn(usize, usize) -> Slot,
) -> Pattern {
    Pattern {
        prefix,
        suffix,
        pairing,
        unit,
        slot,
    }
}

const SYSTEM_KEYS: &[Pattern] = &[
    pat("mass_", "_hbar2_per_MeV", Pairing::Single, Unit::Hbar2PerMeV, |k, _| Slot::Mass(k)),
    pat("eq_mass_", "_hbar2_per_MeV", Pairing::Single, Unit::Hbar2PerMeV, |k, _| Slot::EqMass(k)),
    pat("hbar_omega_", "_MeV", Pairing::Single, Unit::MeVPerHbar, |k, _| Slot::Omega(k)),
    pat("hbar_eq_omega_", "_MeV", Pairing::Single, Unit::MeVPerHbar, |k, _| Slot::EqOmega(k)),
    pat("hbar_mu_", "_MeV", Pairing::Entry, Unit::MeVPerHbar, Slot::Mu),
    pat("nu_", "_MeV", Pairing::Symmetric, Unit::MeV, Slot::Nu),
    pat("kappa_", "_per_MeV_s2", Pairing::Symmetric, Unit::PerMeVPerS2, Slot::Kappa),
    pat("kappa_", "_MeV", Pairing::Symmetric, Unit::MeV, Slot::Kappa),
];

const DISSIPATION_KEYS: &[Pattern] = &[
    pat("hbar_lambda_", "_MeV", Pairing::Entry, Unit::MeVPerHbar, Slot::Lambda),
    pat("alpha_", "_per_MeV_s2", Pairing::Antisymmetric, Unit::PerMeVPerS2, Slot::Alpha),
    pat("alpha_", "_MeV", Pairing::Antisymmetric, Unit::MeV, Slot::Alpha),
    pat("eta_", "_MeV", Pairing::Antisymmetric, Unit::MeV, Slot::Eta),
];

// Coordinates are dimensionless and momenta are in units of ħ, which is
// already the internal unit; `Unit::MeV` converts as the identity.
const INITIAL_KEYS: &[Pattern] = &[
    pat("q_", "", Pairing::Single, Unit::MeV, |k, _| Slot::Mean(q_index(k))),
    pat("p_", "_hbar", Pairing::Single, Unit::MeV, |k, _| Slot::Mean(p_index(k))),
    pat("var_q_", "", Pairing::Single, Unit::MeV, |k, _| Slot::Cov(q_index(k), q_index(k))),
    pat("var_p_", "_hbar2", Pairing::Single, Unit::MeV, |k, _| Slot::Cov(p_index(k), p_index(k))),
];

/// Mode labels, in order.
#[derive(Debug, Clone, PartialEq)]
struct Labels(Vec<String>);

impl Labels {
    fn new(labels: Vec<String>) -> Result<Self, String> {
        if labels.is_empty() {
            return Err("at least one mode is required".into());
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() || !l.chars().all(|c| c.is_ascii_alphanumeric()) {
                return Err(format!("mode label `{l}` must be non-empty and alphanumeric"));
            }
            if labels[..i].contains(l) {
                return Err(format!("mode label `{l}` is repeated"));
            }
        }
        Ok(Self(labels))
    }

    fn index(&self, label: &str) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    /// Splits `ZN` (or `Z_N`) into two labels.
    fn pair(&self, s: &str) -> Result<(usize, usize), String> {
        if let Some((a, b)) = s.split_once('_') {
            return match (self.index(a), self.index(b)) {
                (Some(k), Some(j)) => Ok((k, j)),
                _ => Err(format!("`{s}` is not a pair of mode labels")),
            };
        }
        let found: Vec<(usize, usize)> = (1..s.len())
            .filter(|&i| s.is_char_boundary(i))
            .filter_map(|i| Some((self.index(&s[..i])?, self.index(&s[i..])?)))
            .collect();
        match found.as_slice() {
            [one] => Ok(*one),
            [] => Err(format!("`{s}` is not a pair of mode labels")),
            _ => Err(format!("`{s}` splits into mode labels in more than one way; write it as <A>_<B>")),
        }
    }
}

fn resolve_pattern(p: &Pattern, key: &str, labels: &Labels) -> Option<Result<Resolved, String>> {
    let middle = key.strip_prefix(p.prefix)?.strip_suffix(p.suffix)?;
    if middle.is_empty() {
        return None;
    }
    let (k, j) = match p.pairing {
        Pairing::Single => match labels.index(middle) {
            Some(k) => (k, k),
            None => return Some(Err(format!("unknown mode label `{middle}`"))),
        },
        _ => match labels.pair(middle) {
            Ok(kj) => kj,
            Err(e) => return Some(Err(e)),
        },
    };
    let mut sign = 1.0;
    let (k, j) = match p.pairing {
        Pairing::Single | Pairing::Entry => (k, j),
        Pairing::Symmetric | Pairing::Antisymmetric if k == j => {
            return Some(Err("diagonal entries are fixed at zero".into()))
        }
        Pairing::Symmetric => (k.min(j), k.max(j)),
        Pairing::Antisymmetric => {
            if k > j {
                sign = -1.0;
            }
            (k.min(j), k.max(j))
        }
    };
    Some(Ok(Resolved {
        slot: (p.slot)(k, j),
        unit: p.unit,
        sign,
    }))
}

/// `cov_qZ_pN_hbar` and friends.
fn resolve_cov(key: &str, labels: &Labels) -> Option<Result<Resolved, String>> {
    let rest = key.strip_prefix("cov_")?;
    let parts: Vec<&str> = rest.split('_').collect();
    let (a, b, unit) = match parts.as_slice() {
        [a, b] => (*a, *b, ""),
        [a, b, u] => (*a, *b, *u),
        _ => return Some(Err("expected cov_<x><A>_<y><B>[_unit]".into())),
    };
    let index = |s: &str| -> Result<(usize, bool), String> {
        let (is_p, label) = if let Some(l) = s.strip_prefix('q') {
            (false, l)
        } else if let Some(l) = s.strip_prefix('p') {
            (true, l)
        } else {
            return Err(format!("`{s}` must start with q or p"));
        };
        let k = labels
            .index(label)
            .ok_or_else(|| format!("unknown mode label `{label}`"))?;
        Ok((if is_p { p_index(k) } else { q_index(k) }, is_p))
    };
    let ((ia, pa), (ib, pb)) = match (index(a), index(b)) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return Some(Err(e)),
    };
    let expected = match (pa as u8) + (pb as u8) {
        0 => "",
        1 => "hbar",
        _ => "hbar2",
    };
    if unit != expected {
        let want = if expected.is_empty() {
            "no unit suffix".to_string()
        } else {
            format!("the `_{expected}` suffix")
        };
        return Some(Err(format!("this covariance takes {want}")));
    }
    Some(Ok(Resolved {
        slot: Slot::Cov(ia.min(ib), ia.max(ib)),
        unit: Unit::MeV,
        sign: 1.0,
    }))
}

fn resolve(section: Section, key: &str, labels: &Labels) -> Result<Resolved, String> {
    let table = match section {
        Section::System => SYSTEM_KEYS,
        Section::Dissipation => {
            if key == "temperature_MeV" {
                return Ok(Resolved {
                    slot: Slot::Temperature,
                    unit: Unit::MeV,
                    sign: 1.0,
                });
            }
            DISSIPATION_KEYS
        }
        Section::Initial => {
            if let Some(r) = resolve_cov(key, labels) {
                return r;
            }
            INITIAL_KEYS
        }
    };
    let mut first_err = None;
    for p in table {
        match resolve_pattern(p, key, labels) {
            Some(Ok(r)) => return Ok(r),
            Some(Err(e)) => {
                first_err.get_or_insert(e);
            }
            None => {}
        }
    }
    Err(first_err.unwrap_or_else(|| {
        format!(
            "unknown key in [{}]; run `qtransport scenarios keys` for the accepted keys",
            section.name()
        )
    }))
}

/// Finds the section a sweepable key belongs to.
fn resolve_anywhere(key: &str, labels: &Labels) -> Result<Resolved, String> {
    let hits: Vec<Resolved> = Section::ALL
        .iter()
        .filter_map(|s| resolve(*s, key, labels).ok())
        .collect();
    match hits.as_slice() {
        [one] => Ok(*one),
        [] => Err(format!("`{key}` is not a numeric parameter key")),
        _ => Err(format!("`{key}` is ambiguous")),
    }
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    line: Option<usize>,
    value: f64,
}

/// Everything needed to rebuild the numeric model after an override.
#[derive(Debug, Clone)]
struct ParamSet {
    labels: Labels,
    kinds: Vec<ModeKind>,
    entries: BTreeMap<Slot, Entry>,
}

impl ParamSet {
    fn insert(&mut self, key: &str, line: Option<usize>, raw: f64, r: Resolved) -> Result<(), ConfigError> {
        if !raw.is_finite() {
            return Err(ConfigError::new("value must be finite").at(line, key));
        }
        let value = unit_convert(raw, r.unit) * r.sign;
        if let Some(prev) = self.entries.get(&r.slot) {
            return Err(ConfigError::new(format!("sets the same parameter as `{}`", prev.key)).at(line, key));
        }
        self.entries.insert(
            r.slot,
            Entry {
                key: key.to_string(),
                line,
                value,
            },
        );
        Ok(())
    }

    fn get(&self, slot: Slot) -> Option<f64> {
        self.entries.get(&slot).map(|e| e.value)
    }

    fn required(&self, slot: Slot, key: String) -> Result<f64, ConfigError> {
        self.get(slot)
            .ok_or_else(|| ConfigError::new("required key is missing").at(None, key))
    }

    fn n(&self) -> usize {
        self.labels.0.len()
    }

    fn system(&self) -> Result<SystemParams<f64>, ConfigError> {
        let n = self.n();
        let l = &self.labels.0;
        let mut mass = Vec::with_capacity(n);
        let mut frequency = Vec::with_capacity(n);
        for (k, label) in l.iter().enumerate() {
            mass.push(self.required(Slot::Mass(k), format!("system.mass_{label}_hbar2_per_MeV"))?);
            frequency.push(self.required(Slot::Omega(k), format!("system.hbar_omega_{label}_MeV"))?);
        }
        let eq_mass = (0..n).map(|k| self.get(Slot::EqMass(k)).unwrap_or(mass[k])).collect();
        let eq_frequency = (0..n)
            .map(|k| self.get(Slot::EqOmega(k)).unwrap_or(frequency[k]))
            .collect();
        let mut mu = Mat::zeros(n, n);
        let mut nu = Mat::zeros(n, n);
        let mut kappa = Mat::zeros(n, n);
        for (slot, e) in &self.entries {
            match *slot {
                Slot::Mu(k, j) => mu[(k, j)] = e.value,
                Slot::Nu(k, j) => {
                    nu[(k, j)] = e.value;
                    nu[(j, k)] = e.value;
                }
                Slot::Kappa(k, j) => {
                    kappa[(k, j)] = e.value;
                    kappa[(j, k)] = e.value;
                }
                _ => {}
            }
        }
        let p = SystemParams {
            mass,
            frequency,
            eq_mass,
            eq_frequency,
            mu,
            nu,
            kappa,
            mode_kind: self.kinds.clone(),
        };
        p.check_structure()
            .map_err(|e| ConfigError::new(e.to_string()).at(None, "system"))?;
        Ok(p)
    }

    fn dissipation(&self) -> Result<DissipationParams<f64>, ConfigError> {
        let n = self.n();
        let temperature = self.required(Slot::Temperature, "dissipation.temperature_MeV".into())?;
        if !(temperature > 0.0) {
            let line = self.entries.get(&Slot::Temperature).and_then(|e| e.line);
            return Err(ConfigError::new("temperature must be positive").at(line, "dissipation.temperature_MeV"));
        }
        let mut lambda = Mat::zeros(n, n);
        let mut alpha = Mat::zeros(n, n);
        let mut eta = Mat::zeros(n, n);
        for (slot, e) in &self.entries {
            match *slot {
                Slot::Lambda(k, j) => lambda[(k, j)] = e.value,
                Slot::Alpha(k, j) => {
                    alpha[(k, j)] = e.value;
                    alpha[(j, k)] = -e.value;
                }
                Slot::Eta(k, j) => {
                    eta[(k, j)] = e.value;
                    eta[(j, k)] = -e.value;
                }
                _ => {}
            }
        }
        Ok(DissipationParams {
            lambda,
            alpha,
            eta,
            temperature,
        })
    }

    /// Initial moments plus warnings for states below the uncertainty bound.
    fn initial(&self) -> Result<(MomentStateF64, Vec<String>), ConfigError> {
        let n = self.n();
        let mut mean = Vector::zeros(2 * n);
        let mut cov = Mat::zeros(2 * n, 2 * n);
        for (slot, e) in &self.entries {
            match *slot {
                Slot::Mean(a) => mean[a] = e.value,
                Slot::Cov(a, b) => {
                    cov[(a, b)] = e.value;
                    cov[(b, a)] = e.value;
                }
                _ => {}
            }
        }
        let mut warnings = Vec::new();
        for (k, label) in self.labels.0.iter().enumerate() {
            let (q, p) = (q_index(k), p_index(k));
            let key = format!("initial.var_q_{label}");
            let vq = self.required(Slot::Cov(q, q), key.clone())?;
            if !(vq > 0.0) {
                return Err(ConfigError::new("variance must be positive").at(None, key));
            }
            if self.get(Slot::Cov(p, p)).is_none() {
                cov[(p, p)] = (0.25 + cov[(q, p)] * cov[(q, p)]) / vq;
            }
            let product = cov[(q, q)] * cov[(p, p)] - cov[(q, p)] * cov[(q, p)];
            if product < 0.25 - 1e-12 {
                warnings.push(format!(
                    "initial state of mode {label} violates the uncertainty relation: \
                     sigma_qq sigma_pp - sigma_qp^2 = {product:e} < 1/4"
                ));
            }
        }
        let state = MomentStateF64::new(mean, cov)
            .map_err(|e| ConfigError::new(format!("initial covariance: {e}")).at(None, "initial"))?;
        Ok((state, warnings))
    }

    /// Replaces the value behind `key` (given in the key's own unit).
    fn set(&mut self, key: &str, raw: f64) -> Result<(), ConfigError> {
        let r = resolve_anywhere(key, &self.labels).map_err(|e| ConfigError::new(e).at(None, key))?;
        self.entries.remove(&r.slot);
        self.insert(key, None, raw, r)
    }
}

/// Time window in seconds; samples are uniform and include both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub start_s: f64,
    pub end_s: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn seconds(&self) -> Vec<f64> {
        let span = self.end_s - self.start_s;
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.end_s
                } else {
                    self.start_s + span * (i as f64 / last)
                }
            })
            .collect()
    }

    fn check(&self) -> Result<(), String> {
        if !(self.start_s >= 0.0) || !self.end_s.is_finite() {
            return Err("start_s must be >= 0 and end_s finite".into());
        }
        if !(self.end_s > self.start_s) {
            return Err("end_s must exceed start_s".into());
        }
        if self.points < 2 {
            return Err("the grid needs at least 2 points".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunnelSettings {
    /// Mode whose coordinate is tested against the barrier top at q = 0.
    pub mode: Option<usize>,
    pub frames_s: Vec<f64>,
    pub density_modes: Vec<usize>,
    /// Per density mode; `None` picks a range covering every frame.
    pub density_ranges: Option<Vec<[f64; 2]>>,
    pub density_points: usize,
}

/// A named scalar (or `+`-joined set of scalars) and the values to try.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub parameter: String,
    pub values: Vec<f64>,
}

impl Sweep {
    /// Parses `name=v1,v2,...`.
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        let (name, values) = s
            .split_once('=')
            .ok_or_else(|| ConfigError::new("expected <parameter>=<v1,v2,...>").at(None, "--sweep"))?;
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| ConfigError::new(format!("`{v}` is not a number")).at(None, "--sweep"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sweep = Sweep {
            parameter: name.trim().to_string(),
            values,
        };
        if sweep.parameter.is_empty() || sweep.values.is_empty() {
            return Err(ConfigError::new("expected <parameter>=<v1,v2,...>").at(None, "--sweep"));
        }
        Ok(sweep)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.parameter.split('+').map(str::trim)
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub description: String,
    pub labels: Vec<String>,
    pub system: SystemParams<f64>,
    pub dissipation: DissipationParams<f64>,
    pub initial: MomentStateF64,
    pub time: TimeGrid,
    pub zero_offdiag_d: bool,
    pub tunnel: Option<TunnelSettings>,
    pub sweep: Option<Sweep>,
    pub warnings: Vec<String>,
    params: ParamSet,
}

fn line_of(src: &str, offset: usize) -> usize {
    src.as_bytes()[..offset.min(src.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl ScenarioConfig {
    /// Parses a scenario; `source_name` only decorates error messages.
    pub fn parse(text: &str, source_name: &str) -> Result<Self, ConfigError> {
        Self::parse_inner(text).map_err(|mut e| {
            e.source_name = source_name.to_string();
            e
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self::parse(&text, &path.display().to_string())?)
    }

    fn parse_inner(text: &str) -> Result<Self, ConfigError> {
        let raw: RawFile = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            ConfigError {
                source_name: String::new(),
                line,
                field: None,
                message: e.message().to_string(),
            }
        })?;
        let line = |span: std::ops::Range<usize>| Some(line_of(text, span.start));

        let modes_line = line(raw.modes.span());
        let labels =
            Labels::new(raw.modes.into_inner()).map_err(|e| ConfigError::new(e).at(modes_line, "modes"))?;
        let n = labels.0.len();
        let mut params = ParamSet {
            labels: labels.clone(),
            kinds: vec![ModeKind::Oscillator; n],
            entries: BTreeMap::new(),
        };

        let sections = [
            (Section::System, Some(raw.system)),
            (Section::Dissipation, Some(raw.dissipation)),
            (Section::Initial, raw.initial),
        ];
        for (section, table) in sections {
            for (key, value) in table.unwrap_or_default() {
                let at = line(value.span());
                let field = format!("{}.{key}", section.name());
                if section == Section::System {
                    if let Some(label) = key.strip_prefix("kind_") {
                        let k = labels
                            .index(label)
                            .ok_or_else(|| ConfigError::new(format!("unknown mode label `{label}`")).at(at, &field))?;
                        params.kinds[k] = match value.get_ref().as_str() {
                            Some("oscillator") => ModeKind::Oscillator,
                            Some("barrier") => ModeKind::InvertedBarrier,
                            _ => {
                                return Err(ConfigError::new("expected \"oscillator\" or \"barrier\"").at(at, &field))
                            }
                        };
                        continue;
                    }
                }
                let r = resolve(section, &key, &labels).map_err(|e| ConfigError::new(e).at(at, &field))?;
                let v = number(value.get_ref()).ok_or_else(|| ConfigError::new("expected a number").at(at, &field))?;
                params.insert(&key, at, v, r).map_err(|e| e.at(at, &field))?;
            }
        }

        let time_line = line(raw.time.span());
        let rt = raw.time.into_inner();
        let time = TimeGrid {
            start_s: rt.start_s,
            end_s: rt.end_s,
            points: rt.grid.unwrap_or(DEFAULT_GRID),
        };
        time.check().map_err(|e| ConfigError::new(e).at(time_line, "time"))?;

        let tunnel = match raw.tunnel {
            None => None,
            Some(t) => {
                let at = line(t.span());
                Some(tunnel_settings(t.into_inner(), &labels).map_err(|e| ConfigError::new(e).at(at, "tunnel"))?)
            }
        };
        let sweep = match raw.sweep {
            None => None,
            Some(s) => {
                let at = line(s.span());
                let s = s.into_inner();
                let sweep = Sweep {
                    parameter: s.parameter,
                    values: s.values,
                };
                if sweep.values.is_empty() {
                    return Err(ConfigError::new("values must not be empty").at(at, "sweep"));
                }
                Some(sweep)
            }
        };

        let mut config = Self::assemble(
            raw.name.unwrap_or_else(|| "scenario".into()),
            raw.description.unwrap_or_default(),
            params,
            time,
            raw.options.zero_offdiag_d,
            tunnel,
        )?;
        if let Some(s) = sweep {
            config.set_sweep(s)?;
        }
        Ok(config)
    }

    fn assemble(
        name: String,
        description: String,
        params: ParamSet,
        time: TimeGrid,
        zero_offdiag_d: bool,
        tunnel: Option<TunnelSettings>,
    ) -> Result<Self, ConfigError> {
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(ConfigError::new("must be non-empty and free of path separators").at(None, "name"));
        }
        let system = params.system()?;
        let dissipation = params.dissipation()?;
        let (initial, warnings) = params.initial()?;
        if let Some(t) = &tunnel {
            if t.mode.is_some_and(|k| !system.is_barrier(k)) {
                return Err(ConfigError::new("the penetration mode must be a barrier mode").at(None, "tunnel.mode"));
            }
        }
        Ok(Self {
            name,
            description,
            labels: params.labels.0.clone(),
            system,
            dissipation,
            initial,
            time,
            zero_offdiag_d,
            tunnel,
            sweep: None,
            warnings,
            params,
        })
    }

    /// Attaches a sweep after checking every key it names.
    pub fn set_sweep(&mut self, sweep: Sweep) -> Result<(), ConfigError> {
        for key in sweep.keys() {
            resolve_anywhere(key, &self.params.labels)
                .map_err(|e| ConfigError::new(e).at(None, format!("sweep parameter {key}")))?;
        }
        if let Some(bad) = sweep.values.iter().find(|v| !v.is_finite()) {
            return Err(ConfigError::new(format!("sweep value {bad} is not finite")).at(None, "sweep"));
        }
        self.sweep = Some(sweep);
        Ok(())
    }

    /// A copy with `key` (or every `+`-joined key) set to `value`, in the
    /// key's own unit. The copy carries no sweep.
    pub fn with_value(&self, parameter: &str, value: f64) -> Result<Self, ConfigError> {
        let mut params = self.params.clone();
        for key in parameter.split('+').map(str::trim) {
            params.set(key, value)?;
        }
        Self::assemble(
            self.name.clone(),
            self.description.clone(),
            params,
            self.time.clone(),
            self.zero_offdiag_d,
            self.tunnel.clone(),
        )
    }

    /// One config per sweep value, or just this one when there is no sweep.
    pub fn members(&self) -> Result<Vec<Member>, ConfigError> {
        match &self.sweep {
            None => {
                let mut c = self.clone();
                c.sweep = None;
                Ok(vec![Member {
                    sweep_value: None,
                    config: c,
                }])
            }
            Some(s) => s
                .values
                .iter()
                .map(|&v| {
                    Ok(Member {
                        sweep_value: Some((s.parameter.clone(), v)),
                        config: self.with_value(&s.parameter, v)?,
                    })
                })
                .collect(),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.labels.len()
    }

    /// Sample times in seconds and in internal units.
    pub fn times(&self) -> (Vec<f64>, Vec<f64>) {
        let s = self.time.seconds();
        let internal = s.iter().map(|&t| unit_convert(t, Unit::Seconds)).collect();
        (s, internal)
    }

    /// Penetration mode: the configured one, else the first barrier mode.
    pub fn penetration_mode(&self) -> Option<usize> {
        self.tunnel
            .as_ref()
            .and_then(|t| t.mode)
            .or_else(|| (0..self.n_modes()).find(|&k| self.system.is_barrier(k)))
    }
}

/// A single run of a (possibly swept) scenario.
#[derive(Debug, Clone)]
pub struct Member {
    pub sweep_value: Option<(String, f64)>,
    pub config: ScenarioConfig,
}

impl Member {
    /// File stem: the scenario name, plus the sweep parameter and value.
    pub fn stem(&self) -> String {
        match &self.sweep_value {
            None => self.config.name.clone(),
            Some((p, v)) => format!("{}_{}_{}", self.config.name, p, value_tag(*v)),
        }
    }
}

fn value_tag(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 10 {
        plain
    } else {
        format!("{v:e}")
    }
}

fn tunnel_settings(t: RawTunnel, labels: &Labels) -> Result<TunnelSettings, String> {
    let lookup = |l: &str| labels.index(l).ok_or_else(|| format!("unknown mode label `{l}`"));
    let mode = t.mode.as_deref().map(lookup).transpose()?;
    let n = labels.0.len();
    let density_modes = match &t.density_modes {
        Some(m) => m.iter().map(|l| lookup(l)).collect::<Result<Vec<_>, _>>()?,
        None => (0..n.min(2)).collect(),
    };
    if density_modes.is_empty() || density_modes.len() > 2 {
        return Err("density_modes must list one or two modes".into());
    }
    if density_modes.len() == 2 && density_modes[0] == density_modes[1] {
        return Err("density_modes must be distinct".into());
    }
    if let Some(r) = &t.density_ranges {
        if r.len() != density_modes.len() {
            return Err("density_ranges needs one [lo, hi] per density mode".into());
        }
        if r.iter().any(|[lo, hi]| !(hi > lo) || !lo.is_finite() || !hi.is_finite()) {
            return Err("each density range needs lo < hi".into());
        }
    }
    let density_points = t.density_points.unwrap_or(DEFAULT_DENSITY_POINTS);
    if density_points < 2 {
        return Err("density_points must be at least 2".into());
    }
    if t.frames_s.iter().any(|f| !(*f >= 0.0) || !f.is_finite()) {
        return Err("frames_s must be non-negative".into());
    }
    Ok(TunnelSettings {
        mode,
        frames_s: t.frames_s,
        density_modes,
        density_ranges: t.density_ranges,
        density_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(l: &[&str]) -> Labels {
        Labels::new(l.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn pair_splitting() {
        let l = labels(&["Z", "N"]);
        assert_eq!(l.pair("ZN"), Ok((0, 1)));
        assert_eq!(l.pair("NN"), Ok((1, 1)));
        assert!(l.pair("ZX").is_err());
        let l = labels(&["1", "2", "12", "21"]);
        // 1+21 or 12+1
        assert!(l.pair("121").unwrap_err().contains("more than one way"));
        assert_eq!(l.pair("122"), Ok((2, 1)));
        assert_eq!(l.pair("12_1"), Ok((2, 0)));
        assert_eq!(l.pair("21"), Ok((1, 0)));
    }

    #[test]
    fn antisymmetric_keys_flip_sign() {
        let l = labels(&["Z", "N"]);
        let r = resolve(Section::Dissipation, "alpha_NZ_MeV", &l).unwrap();
        assert_eq!(r.slot, Slot::Alpha(0, 1));
        assert_eq!(r.sign, -1.0);
        let r = resolve(Section::System, "nu_NZ_MeV", &l).unwrap();
        assert_eq!(r.slot, Slot::Nu(0, 1));
        assert_eq!(r.sign, 1.0);
        assert!(resolve(Section::System, "nu_ZZ_MeV", &l).is_err());
    }

    #[test]
    fn covariance_keys_need_matching_units() {
        let l = labels(&["Z", "N"]);
        let r = resolve(Section::Initial, "cov_pN_qZ_hbar", &l).unwrap();
        assert_eq!(r.slot, Slot::Cov(q_index(0), p_index(1)));
        assert!(resolve(Section::Initial, "cov_pN_qZ", &l).is_err());
        assert!(resolve(Section::Initial, "cov_qN_qZ_hbar", &l).is_err());
    }

    #[test]
    fn kappa_units() {
        let l = labels(&["Z", "N"]);
        let r = resolve(Section::System, "kappa_ZN_per_MeV_s2", &l).unwrap();
        assert_eq!(r.unit, Unit::PerMeVPerS2);
        let r = resolve(Section::System, "kappa_ZN_MeV", &l).unwrap();
        assert_eq!(r.unit, Unit::MeV);
    }

    #[test]
    fn uniform_grid_hits_both_ends() {
        let g = TimeGrid {
            start_s: 0.0,
            end_s: 70e-22,
            points: 2000,
        };
        let s = g.seconds();
        assert_eq!(s.len(), 2000);
        assert_eq!(s[0], 0.0);
        assert_eq!(s[1999], 70e-22);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn sweep_argument() {
        let s = Sweep::parse("nu_NZ_MeV=3000,-1869, -3000").unwrap();
        assert_eq!(s.values, vec![3000.0, -1869.0, -3000.0]);
        assert!(Sweep::parse("nu_NZ_MeV").is_err());
        assert!(Sweep::parse("nu_NZ_MeV=a").is_err());
    }
}

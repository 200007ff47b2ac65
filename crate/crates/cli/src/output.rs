//! CSV tables and JSON summaries.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, ConfigError};

/// Header plus rows of floats. Values are written in Rust's shortest
/// round-trip exponent form, so reading a file back and writing it again
/// reproduces it byte for byte.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_to<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    /// Reads a table written by [`Table::write_to`]; every row must have
    /// one numeric field per header column.
    pub fn read_from<R: Read>(r: R) -> Result<Self, ConfigError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| ConfigError::new(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut table = Table::new(header);
        for (i, record) in reader.records().enumerate() {
            let line = Some(i + 2);
            let record = record.map_err(|e| ConfigError::new(e.to_string()).at(line, "row"))?;
            if record.len() != table.header.len() {
                return Err(ConfigError::new(format!(
                    "expected {} fields, found {}",
                    table.header.len(),
                    record.len()
                ))
                .at(line, "row"));
            }
            let row = record
                .iter()
                .zip(&table.header)
                .map(|(f, h)| {
                    f.parse::<f64>()
                        .map_err(|_| ConfigError::new(format!("`{f}` is not a number")).at(line, h))
                })
                .collect::<Result<Vec<_>, _>>()?;
            table.rows.push(row);
        }
        Ok(table)
    }

    pub fn write_file(&self, path: &Path) -> Result<(), CliError> {
        let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        self.write_to(std::io::BufWriter::new(file))
            .map_err(|source| CliError::Csv {
                path: path.to_path_buf(),
                source,
            })
    }

    pub fn read_file(path: &Path) -> Result<Self, CliError> {
        let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        Table::read_from(std::io::BufReader::new(file)).map_err(|mut e| {
            e.source_name = path.display().to_string();
            e.into()
        })
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("summaries serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub parameter: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GibbsTarget {
    pub mode: String,
    pub column_q: String,
    pub column_p: String,
    pub var_q: f64,
    pub var_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeDeviation {
    pub mode: String,
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDeviation {
    pub modes: [String; 2],
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EinsteinSummary {
    pub modes: Vec<ModeDeviation>,
    pub pairs: Vec<PairDeviation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProvenanceSummary {
    pub generator: String,
    pub parameter_hash: String,
    pub off_diagonal_d: &'static str,
    pub propagation: &'static str,
    pub units: BTreeMap<&'static str, &'static str>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub scenario: String,
    pub sweep: Option<SweepPoint>,
    pub modes: Vec<String>,
    pub columns: Vec<String>,
    pub samples: usize,
    pub t_start_seconds: f64,
    pub t_end_seconds: f64,
    pub stable: bool,
    pub spectrum: Vec<Eigenvalue>,
    /// Stationary covariance, interleaved (q1, p1, q2, p2, ...) ordering.
    pub steady_covariance: Option<Vec<Vec<f64>>>,
    pub gibbs_targets: Vec<GibbsTarget>,
    pub final_covariance: Vec<Vec<f64>>,
    pub min_uncertainty_product: f64,
    /// `max(0, 1/4 − min product)` over all samples and modes.
    pub max_uncertainty_violation: f64,
    pub einstein_deviation: EinsteinSummary,
    /// `∫|mean| dt` over the window (seconds), per mean column.
    pub mean_decay_areas: BTreeMap<String, f64>,
    pub provenance: ProvenanceSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameSummary {
    pub t_seconds: f64,
    pub file: String,
    pub modes: Vec<String>,
    pub ranges: Vec<[f64; 2]>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TunnelSummary {
    pub scenario: String,
    pub sweep: Option<SweepPoint>,
    pub modes: Vec<String>,
    pub penetration_mode: String,
    pub samples: usize,
    pub t_start_seconds: f64,
    pub t_end_seconds: f64,
    pub p_initial: f64,
    pub p_final: f64,
    #[serde(rename = "initial_energy_MeV")]
    pub initial_energy_mev: f64,
    pub stable: bool,
    pub spectrum: Vec<Eigenvalue>,
    pub frames: Vec<FrameSummary>,
    pub provenance: ProvenanceSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub scenario: String,
    pub sweep: Option<SweepPoint>,
    pub passed: bool,
    pub checks: Vec<CheckSummary>,
    pub notes: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let mut t = Table::new(vec!["t_seconds".into(), "x".into()]);
        t.push(vec![0.0, -1.0 / 3.0]);
        t.push(vec![7e-22, f64::MIN_POSITIVE]);
        t.push(vec![1.5e300, 123456.789]);
        let text = t.to_csv_string();
        let back = Table::read_from(text.as_bytes()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_csv_string(), text);
    }

    #[test]
    fn malformed_rows_are_located() {
        let e = Table::read_from("a,b\n1,2\n3,x\n".as_bytes()).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert_eq!(e.field.as_deref(), Some("b"));
        assert!(Table::read_from("a,b\n1\n".as_bytes()).is_err());
    }
}

//! Tabular sweep output (CSV with a JSON mirror).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sweep::ScenarioSummary;
use crate::error::{AncsError, Result};

pub const CSV_HEADER: [&str; 11] = [
    "scenario_id",
    "swept_param",
    "swept_value",
    "sampler",
    "estimator",
    "trials",
    "tnmse_lin",
    "tnmse_db",
    "roi_tnmse_db",
    "nonroi_tnmse_db",
    "stderr_lin",
];

/// One row per (swept value, method). Undefined dB values are left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scenario_id: String,
    pub swept_param: String,
    pub swept_value: f64,
    pub sampler: String,
    pub estimator: String,
    pub trials: usize,
    pub tnmse_lin: f64,
    pub tnmse_db: Option<f64>,
    pub roi_tnmse_db: Option<f64>,
    pub nonroi_tnmse_db: Option<f64>,
    pub stderr_lin: f64,
}

impl SweepRow {
    pub fn from_summary(scenario_id: String, param: &str, value: f64, s: &ScenarioSummary) -> Self {
        Self {
            scenario_id,
            swept_param: param.to_string(),
            swept_value: value,
            sampler: s.config.sampler.as_str().to_string(),
            estimator: s.config.estimator.as_str().to_string(),
            trials: s.trials,
            tnmse_lin: s.tnmse,
            tnmse_db: s.tnmse_db(),
            roi_tnmse_db: s.roi_tnmse_db(),
            nonroi_tnmse_db: s.non_roi_tnmse_db(),
            stderr_lin: s.tnmse_stderr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), String> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(CSV_HEADER).map_err(|e| e.to_string())?;
        for row in &self.rows {
            w.serialize(row).map_err(|e| e.to_string())?;
        }
        w.flush().map_err(|e| e.to_string())
    }

    pub fn read_csv<R: Read>(input: R) -> std::result::Result<Self, String> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
        if header != CSV_HEADER {
            return Err(format!("unexpected header {header:?}"));
        }
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<SweepRow>, _>>()
            .map_err(|e| e.to_string())?;
        Ok(Self { rows })
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("rows serialize")
    }

    pub fn from_json_str(s: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(s).map(|rows| Self { rows }).map_err(|e| e.to_string())
    }
}

/// Writes `table` to `path`, attaching the path to any I/O failure.
pub fn emit(table: &SweepTable, path: &Path, format: Format) -> Result<()> {
    let io_err = |source| AncsError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    match format {
        Format::Csv => table.write_csv(&mut out).map_err(|message| AncsError::Format {
            path: path.to_path_buf(),
            message,
        })?,
        Format::Json => {
            out.write_all(table.to_json_string().as_bytes()).map_err(io_err)?;
            out.write_all(b"\n").map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

/// Reads a table written by [`emit`].
pub fn load(path: &Path, format: Format) -> Result<SweepTable> {
    let text = std::fs::read_to_string(path).map_err(|source| AncsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parsed = match format {
        Format::Csv => SweepTable::read_csv(text.as_bytes()),
        Format::Json => SweepTable::from_json_str(&text),
    };
    parsed.map_err(|message| AncsError::Format {
        path: path.to_path_buf(),
        message,
    })
}

//! CSV and JSON report emission.
//!
//! CSV: header row, comma separated, LF endings, floats at 4 decimals.
//! JSON: `{"results": [...], "meta": {...}}` with full float precision.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::metrics::EvalResult;
use super::ppa::PpaReport;
use super::ttest::TTest;
use crate::error::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub seed: u64,
    pub backend: String,
    pub template_id: String,
    pub timestamp: String,
    /// What the paired t-tests paired, when the report carries any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub results: Vec<T>,
    pub meta: ReportMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Float(f64),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(f) => format!("{f:.4}"),
            Cell::Empty => String::new(),
        }
    }
}

/// A row type that can be laid out as a CSV table.
pub trait Tabular {
    fn header(&self) -> Vec<String>;
    fn cells(&self) -> Vec<Cell>;
}

impl Tabular for EvalResult {
    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["system", "accuracy", "avg_turns", "train_seconds", "param_count"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend(self.per_disease_recall.keys().map(|d| format!("recall:{d}")));
        h.push("warnings".into());
        h
    }

    fn cells(&self) -> Vec<Cell> {
        let mut c = vec![
            Cell::Text(self.system.clone()),
            Cell::Float(self.accuracy),
            Cell::Float(self.avg_turns),
            Cell::Float(self.train_seconds),
            Cell::Int(self.param_count as i64),
        ];
        c.extend(
            self.per_disease_recall
                .values()
                .map(|r| r.map_or(Cell::Empty, Cell::Float)),
        );
        c.push(Cell::Text(self.warnings.join("; ")));
        c
    }
}

impl Tabular for PpaReport {
    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["prompt_count", "permutations_per_prompt", "mean_ppa"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend((0..self.per_prompt.len()).map(|i| format!("ppa:{i}")));
        h
    }

    fn cells(&self) -> Vec<Cell> {
        let mut c = vec![
            Cell::Int(self.prompt_count as i64),
            Cell::Int(self.permutations_per_prompt as i64),
            Cell::Float(self.mean_ppa),
        ];
        c.extend(self.per_prompt.iter().map(|p| Cell::Float(*p)));
        c
    }
}

/// One paired comparison between two systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub system_a: String,
    pub system_b: String,
    pub accuracy_a: f64,
    pub accuracy_b: f64,
    pub test: TTest,
}

impl Tabular for Comparison {
    fn header(&self) -> Vec<String> {
        ["system_a", "system_b", "accuracy_a", "accuracy_b", "t", "df", "p", "degenerate_variance"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Text(self.system_a.clone()),
            Cell::Text(self.system_b.clone()),
            Cell::Float(self.accuracy_a),
            Cell::Float(self.accuracy_b),
            Cell::Float(self.test.t),
            Cell::Int(self.test.df as i64),
            Cell::Float(self.test.p),
            Cell::Text(self.test.degenerate_variance.to_string()),
        ]
    }
}

pub fn render_csv<T: Tabular>(rows: &[T]) -> Result<String, EvalError> {
    let first = rows.first().ok_or(EvalError::EmptyReport)?;
    let header = first.header();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        if r.header() != header {
            return Err(EvalError::RaggedReport);
        }
        w.write_record(r.cells().iter().map(Cell::render)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| csv_err(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn csv_err(e: csv::Error) -> EvalError {
    EvalError::Io {
        path: "<csv>".into(),
        source: std::io::Error::other(e.to_string()),
    }
}

pub fn render_json<T: Serialize>(rows: &[T], meta: &ReportMeta) -> Result<String, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::EmptyReport);
    }
    #[derive(Serialize)]
    struct Borrowed<'a, T> {
        results: &'a [T],
        meta: &'a ReportMeta,
    }
    let report = Borrowed { results: rows, meta };
    let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
    s.push('\n');
    Ok(s)
}

pub fn parse_json_report<T: DeserializeOwned>(text: &str) -> Result<Report<T>, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn emit_report<T: Tabular + Serialize>(
    rows: &[T],
    meta: &ReportMeta,
    format: ReportFormat,
    path: &Path,
) -> Result<(), EvalError> {
    let text = match format {
        ReportFormat::Csv => render_csv(rows)?,
        ReportFormat::Json => render_json(rows, meta)?,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| EvalError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })
}

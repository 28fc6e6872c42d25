//! Experiment reports and their CSV / JSON serialisations.
//!
//! CSV output is three files for a target `out.csv`:
//! - `out.csv` holds one [`Record`] per row;
//! - `out.summary.csv` holds one [`SummaryRow`] per row;
//! - `out.gp` is a gnuplot script that reads both by file name.
//!
//! CSV files hold no wall-clock data, so identical configurations give
//! byte-identical CSV. The JSON form (`"schema": 1`) is a single document
//! with keys in this order: `schema`, `version`, `experiment`, `config`,
//! `warnings`, `wall_time_s`, `records`, `summary`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, OutputFormat};
use super::HarnessError;

/// Version of the JSON layout.
pub const REPORT_SCHEMA: u32 = 1;

/// One computed statistic for one cell.
///
/// `alpha` is the exact hex form of the multiplier (`[-]0x<hex>p<exp>`);
/// it is empty for i.i.d. point sets, which are identified by
/// `(seed, stream)` instead. `reference` and `z_score` are empty when the
/// statistic has no reference value, `passed` is empty when no check applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub experiment: String,
    pub source: String,
    pub sequence: String,
    pub n: usize,
    pub l: f64,
    pub replicate: usize,
    pub seed: u64,
    pub stream: u64,
    pub alpha: String,
    pub alpha_approx: Option<f64>,
    pub precision_bits: u32,
    pub statistic: String,
    pub value: f64,
    pub reference: Option<f64>,
    pub z_score: Option<f64>,
    pub error_bound: f64,
    pub method: String,
    pub passed: Option<bool>,
}

/// An aggregate over records, or a trend check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub source: String,
    /// 0 for checks that span several N.
    pub n: usize,
    pub l: f64,
    pub statistic: String,
    pub value: f64,
    pub reference: Option<f64>,
    pub z_score: Option<f64>,
    pub samples: usize,
    pub passed: Option<bool>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub records: Vec<Record>,
    pub summary: Vec<SummaryRow>,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
    pub version: String,
}

impl ExperimentReport {
    /// Summary rows that carry a verdict.
    pub fn checks(&self) -> impl Iterator<Item = &SummaryRow> {
        self.summary.iter().filter(|r| r.passed.is_some())
    }

    /// True when no record or summary row failed its check.
    pub fn all_passed(&self) -> bool {
        self.records.iter().all(|r| r.passed != Some(false))
            && self.summary.iter().all(|r| r.passed != Some(false))
    }

    /// First summary row with the given statistic and N.
    pub fn summary_value(&self, statistic: &str, n: usize) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.statistic == statistic && r.n == n)
    }

    /// The records in CSV form (header plus one row each).
    pub fn records_csv(&self) -> Result<String, HarnessError> {
        to_csv_string(RECORD_COLUMNS, &self.records)
    }

    pub fn summary_csv(&self) -> Result<String, HarnessError> {
        to_csv_string(SUMMARY_COLUMNS, &self.summary)
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        let doc = JsonReport {
            schema: REPORT_SCHEMA,
            version: &self.version,
            experiment: self.config.experiment.as_str(),
            config: self.config.echo(),
            warnings: &self.warnings,
            wall_time_s: self.wall_time_s,
            records: &self.records,
            summary: &self.summary,
        };
        let mut s = serde_json::to_string_pretty(&doc)
            .map_err(|e| HarnessError::Serialize(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema: u32,
    version: &'a str,
    experiment: &'a str,
    config: std::collections::BTreeMap<String, String>,
    warnings: &'a [String],
    wall_time_s: f64,
    records: &'a [Record],
    summary: &'a [SummaryRow],
}

/// Column order of the records CSV.
pub const RECORD_COLUMNS: &[&str] = &[
    "experiment",
    "source",
    "sequence",
    "n",
    "l",
    "replicate",
    "seed",
    "stream",
    "alpha",
    "alpha_approx",
    "precision_bits",
    "statistic",
    "value",
    "reference",
    "z_score",
    "error_bound",
    "method",
    "passed",
];

/// Column order of the summary CSV.
pub const SUMMARY_COLUMNS: &[&str] = &[
    "experiment",
    "source",
    "n",
    "l",
    "statistic",
    "value",
    "reference",
    "z_score",
    "samples",
    "passed",
    "note",
];

// The header is written by hand so that an empty report still has one.
fn to_csv_string<T: Serialize>(header: &[&str], rows: &[T]) -> Result<String, HarnessError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| HarnessError::Serialize(e.to_string()))?;
    for row in rows {
        w.serialize(row)
            .map_err(|e| HarnessError::Serialize(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Serialize(e.to_string()))
}

/// Parses records written by [`ExperimentReport::records_csv`].
pub fn parse_records_csv(text: &str) -> Result<Vec<Record>, HarnessError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .map(|row| row.map_err(|e| HarnessError::Serialize(e.to_string())))
        .collect()
}

/// Parses rows written by [`ExperimentReport::summary_csv`].
pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>, HarnessError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .map(|row| row.map_err(|e| HarnessError::Serialize(e.to_string())))
        .collect()
}

/// `dir/stem.summary.csv` for `dir/stem.csv`.
pub fn summary_path(path: &Path) -> PathBuf {
    sibling(path, "summary.csv")
}

/// `dir/stem.gp` for `dir/stem.csv`.
pub fn plot_script_path(path: &Path) -> PathBuf {
    sibling(path, "gp")
}

fn sibling(path: &Path, ext: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    path.with_file_name(format!("{stem}.{ext}"))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// A gnuplot script plotting each summary statistic against N, reading
/// the summary file and the records file by the given names.
pub fn plot_script(report: &ExperimentReport, records_name: &str, summary_name: &str) -> String {
    let mut stats: Vec<&str> = Vec::new();
    for row in &report.summary {
        if row.n > 0 && !stats.contains(&row.statistic.as_str()) {
            stats.push(&row.statistic);
        }
    }
    let mut s = String::new();
    s.push_str(&format!(
        "# gnuplot script for experiment {}\n",
        report.config.experiment.as_str()
    ));
    s.push_str(&format!("records = '{records_name}'\n"));
    s.push_str(&format!("summary = '{summary_name}'\n"));
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set logscale x 2\n");
    s.push_str("set xlabel 'N'\n");
    s.push_str("set grid\n");
    // summary columns: 1 experiment, 2 source, 3 n, 4 l, 5 statistic, 6 value
    for st in &stats {
        s.push_str(&format!(
            "plot summary using (strcol(5) eq '{st}' ? $3 : 1/0):6 with linespoints title '{st}'\n"
        ));
        s.push_str("pause -1\n");
    }
    // records columns: 4 n, 12 statistic, 13 value
    s.push_str(&format!(
        "plot records using 4:(strcol(12) eq '{}' ? $13 : 1/0) with points title 'records'\n",
        report.records.first().map_or("", |r| r.statistic.as_str())
    ));
    s.push_str("pause -1\n");
    s
}

/// Writes the report. CSV writes the records file, a summary file and a
/// gnuplot script next to it; JSON writes one document. Returns the paths
/// written.
pub fn emit_report(
    report: &ExperimentReport,
    path: impl AsRef<Path>,
    format: OutputFormat,
) -> Result<Vec<PathBuf>, HarnessError> {
    let path = path.as_ref();
    let write = |p: &Path, text: &str| {
        fs::write(p, text).map_err(|source| HarnessError::Io {
            path: p.display().to_string(),
            source,
        })
    };
    match format {
        OutputFormat::Json => {
            write(path, &report.to_json()?)?;
            Ok(vec![path.to_path_buf()])
        }
        OutputFormat::Csv => {
            let summary = summary_path(path);
            let script = plot_script_path(path);
            write(path, &report.records_csv()?)?;
            write(&summary, &report.summary_csv()?)?;
            write(
                &script,
                &plot_script(report, &file_name(path), &file_name(&summary)),
            )?;
            Ok(vec![path.to_path_buf(), summary, script])
        }
    }
}

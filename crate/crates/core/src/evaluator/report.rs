//! Accuracy reports and their three file formats.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prompting::StrategyFlags;

/// Grid coordinates of one cell. Frame-list cells carry `lambda` and
/// `sample_size`; video cells carry `fps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub strategy: StrategyFlags,
    pub lambda: Option<f64>,
    pub sample_size: Option<usize>,
    pub fps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    #[serde(flatten)]
    pub key: CellKey,
    pub accuracy: f64,
    pub correct_count: usize,
    pub total: usize,
    pub abstain_count: usize,
    pub failure_count: usize,
}

impl Cell {
    pub fn new(key: CellKey, correct_count: usize, total: usize, abstain_count: usize, failure_count: usize) -> Self {
        let accuracy = if total == 0 {
            0.0
        } else {
            correct_count as f64 / total as f64
        };
        Self {
            key,
            accuracy,
            correct_count,
            total,
            abstain_count,
            failure_count,
        }
    }

    /// More than half of the questions failed before producing an answer.
    pub fn degraded(&self) -> bool {
        2 * self.failure_count > self.total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub backend: String,
    pub artifact_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metadata: RunMetadata,
    pub cells: Vec<Cell>,
}

impl Report {
    /// Equality ignoring the wall-clock fields.
    pub fn same_results(&self, other: &Report) -> bool {
        let strip = |r: &Report| {
            let mut r = r.clone();
            r.metadata.started_at.clear();
            r.metadata.finished_at.clear();
            r
        };
        strip(self) == strip(other)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::Precondition("a report needs at least one cell".into()));
        }
        for c in &self.cells {
            if c.correct_count > c.total || c.accuracy != Cell::new(c.key, c.correct_count, c.total, 0, 0).accuracy {
                return Err(Error::Validation(vec![format!("inconsistent cell {:?}", c.key)]));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    /// From a file extension: `.json`, `.csv`, `.md`/`.markdown`.
    pub fn from_path(path: &Path) -> Option<Self> {
        path.extension()?.to_str()?.parse().ok()
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "md" | "markdown" => Ok(Self::Markdown),
            _ => Err(Error::Config(format!("unknown report format {s:?}; expected json, csv or markdown"))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    strategy: String,
    lambda: Option<f64>,
    sample_size: Option<usize>,
    fps: Option<f64>,
    accuracy: f64,
    correct_count: usize,
    total: usize,
    abstain_count: usize,
    failure_count: usize,
}

pub fn render_report(report: &Report, format: ReportFormat) -> Result<String> {
    report.validate()?;
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report).expect("report serializes") + "\n"),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for c in &report.cells {
                w.serialize(CsvRow {
                    strategy: c.key.strategy.slug().into(),
                    lambda: c.key.lambda,
                    sample_size: c.key.sample_size,
                    fps: c.key.fps,
                    accuracy: c.accuracy,
                    correct_count: c.correct_count,
                    total: c.total,
                    abstain_count: c.abstain_count,
                    failure_count: c.failure_count,
                })
                .map_err(|e| Error::Format(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
        }
        ReportFormat::Markdown => Ok(markdown(report)),
    }
}

pub fn emit_report(report: &Report, format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(report, format)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_report_json(path: &Path) -> Result<Report> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let report: Report = serde_json::from_slice(&bytes).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    report.validate()?;
    Ok(report)
}

/// Cells of a CSV report. Metadata is not part of the CSV format.
pub fn read_report_csv(path: &Path) -> Result<Vec<Cell>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut cells = Vec::new();
    for (i, row) in reader.deserialize::<CsvRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            row: i + 2,
            message: e.to_string(),
        })?;
        let strategy = row.strategy.parse().map_err(|e: Error| Error::Parse {
            row: i + 2,
            message: e.to_string(),
        })?;
        cells.push(Cell {
            key: CellKey {
                strategy,
                lambda: row.lambda,
                sample_size: row.sample_size,
                fps: row.fps,
            },
            accuracy: row.accuracy,
            correct_count: row.correct_count,
            total: row.total,
            abstain_count: row.abstain_count,
            failure_count: row.failure_count,
        });
    }
    Ok(cells)
}

/// `0`, `1`, `1/k` for reciprocals of integers, decimal otherwise.
pub fn format_lambda(lambda: f64) -> String {
    if lambda == 0.0 || lambda == 1.0 {
        return format!("{lambda}");
    }
    let k = 1.0 / lambda;
    if (k - k.round()).abs() < 1e-9 {
        format!("1/{}", k.round() as i64)
    } else {
        format!("{lambda}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Column {
    Lambda(f64),
    Fps(f64),
}

impl Column {
    fn of(key: &CellKey) -> Option<Self> {
        match (key.lambda, key.fps) {
            (Some(l), _) => Some(Column::Lambda(l)),
            (None, Some(f)) => Some(Column::Fps(f)),
            (None, None) => None,
        }
    }

    fn sort_key(&self) -> (u8, f64) {
        match *self {
            Column::Lambda(l) => (0, l),
            Column::Fps(f) => (1, f),
        }
    }

    fn header(&self) -> String {
        match *self {
            Column::Lambda(l) => format!("λ={}", format_lambda(l)),
            Column::Fps(f) => format!("{f} fps"),
        }
    }
}

/// Rows are strategies when the strategy varies, sample sizes when only the
/// sample size varies, and both otherwise. Columns are λ or fps values.
fn markdown(report: &Report) -> String {
    let keys: Vec<&CellKey> = report.cells.iter().map(|c| &c.key).collect();
    let strategies: BTreeSet<usize> = keys.iter().map(|k| k.strategy.row()).collect();
    let sizes: BTreeSet<Option<usize>> = keys.iter().map(|k| k.sample_size).collect();
    let by_strategy = strategies.len() > 1 || sizes.len() == 1;
    let by_size = sizes.len() > 1;

    let mut columns: Vec<Column> = Vec::new();
    for k in &keys {
        if let Some(c) = Column::of(k) {
            if !columns.contains(&c) {
                columns.push(c);
            }
        }
    }
    columns.sort_by(|a, b| a.sort_key().partial_cmp(&b.sort_key()).expect("finite axes"));

    let mut rows: Vec<(StrategyFlags, Option<usize>)> = Vec::new();
    for k in &keys {
        let row = (k.strategy, k.sample_size);
        if !rows.contains(&row) {
            rows.push(row);
        }
    }
    rows.sort_by_key(|(s, n)| (s.row(), *n));

    let row_label = |s: StrategyFlags, n: Option<usize>| match (by_strategy, by_size, n) {
        (true, true, Some(n)) => format!("{}, n={n}", s.label()),
        (false, true, Some(n)) => format!("n={n}"),
        _ => s.label().to_string(),
    };
    let header = if by_strategy { "Strategy" } else { "Sample size" };

    let mut out = String::new();
    write!(out, "| {header} |").unwrap();
    for c in &columns {
        write!(out, " {} |", c.header()).unwrap();
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in &columns {
        out.push_str("---:|");
    }
    out.push('\n');
    for (s, n) in rows {
        write!(out, "| {} |", row_label(s, n)).unwrap();
        for col in &columns {
            let cell = report
                .cells
                .iter()
                .find(|c| c.key.strategy == s && c.key.sample_size == n && Column::of(&c.key) == Some(*col));
            match cell {
                Some(c) => write!(out, " {:.3} |", c.accuracy).unwrap(),
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    let m = &report.metadata;
    write!(
        out,
        "\nBackend `{}`, seed {}, hoicue {}{}.\n",
        m.backend,
        m.seed,
        m.artifact_version,
        if m.degraded { ", DEGRADED (over half of a cell's questions failed)" } else { "" }
    )
    .unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metadata() -> RunMetadata {
        RunMetadata {
            seed: 1,
            backend: "mock_random|m".into(),
            artifact_version: "0.1.0".into(),
            started_at: "a".into(),
            finished_at: "b".into(),
            degraded: false,
        }
    }

    fn table2_like() -> Report {
        let lambdas = [0.0, 0.01, 0.02, 0.04, 0.1, 1.0];
        let mut cells = Vec::new();
        for s in StrategyFlags::ALL {
            for (j, l) in lambdas.iter().enumerate() {
                cells.push(Cell::new(
                    CellKey {
                        strategy: s,
                        lambda: Some(*l),
                        sample_size: Some(15),
                        fps: None,
                    },
                    s.row() * 10 + j,
                    100,
                    1,
                    0,
                ));
            }
        }
        Report {
            metadata: metadata(),
            cells,
        }
    }

    #[test]
    fn lambda_labels() {
        assert_eq!(format_lambda(0.0), "0");
        assert_eq!(format_lambda(1.0), "1");
        assert_eq!(format_lambda(0.01), "1/100");
        assert_eq!(format_lambda(1.0 / 25.0), "1/25");
        assert_eq!(format_lambda(0.3), "0.3");
    }

    #[test]
    fn markdown_orientation() {
        let md = render_report(&table2_like(), ReportFormat::Markdown).unwrap();
        let lines: Vec<&str> = md.lines().take_while(|l| l.starts_with('|')).collect();
        assert_eq!(lines.len(), 2 + 4);
        assert_eq!(lines[0].matches('|').count(), 8, "{}", lines[0]);
        assert!(lines[0].contains("λ=1/50"));
        assert!(lines[2].starts_with("| VLLM only |"));
        assert!(lines[5].starts_with("| SoM + Gaze |"));
    }

    #[test]
    fn sample_size_rows() {
        let mut r = table2_like();
        r.cells.retain(|c| c.key.strategy == StrategyFlags::SOM_GAZE);
        for c in r.cells.clone() {
            let mut d = c.clone();
            d.key.sample_size = Some(30);
            r.cells.push(d);
        }
        let md = render_report(&r, ReportFormat::Markdown).unwrap();
        assert!(md.starts_with("| Sample size |"));
        assert!(md.contains("| n=30 |"));
    }

    #[test]
    fn csv_round_trip() {
        let r = table2_like();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        emit_report(&r, ReportFormat::Csv, &path).unwrap();
        assert_eq!(read_report_csv(&path).unwrap(), r.cells);
        let json = dir.path().join("r.json");
        emit_report(&r, ReportFormat::Json, &json).unwrap();
        assert_eq!(read_report_json(&json).unwrap(), r);
    }

    #[test]
    fn empty_report_is_rejected() {
        let r = Report {
            metadata: metadata(),
            cells: vec![],
        };
        assert!(render_report(&r, ReportFormat::Json).is_err());
    }

    #[test]
    fn comparison_ignores_timestamps() {
        let a = table2_like();
        let mut b = a.clone();
        b.metadata.finished_at = "later".into();
        assert!(a.same_results(&b));
        b.cells[0].correct_count += 1;
        assert!(!a.same_results(&b));
    }
}

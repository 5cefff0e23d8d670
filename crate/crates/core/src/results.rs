//! Per-trial records, their CSV form, and the cross-trial summary.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

pub const CSV_HEADER: &str =
    "test_name,trial,format,dataset_count,dims,create_avg_s,write_avg_s,open_avg_s,read_avg_s,verified";

const COLUMNS: usize = 10;

/// The four timed operations, in chart order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operation {
    Create,
    Write,
    Open,
    Read,
}

impl Operation {
    pub const ALL: [Operation; 4] = [
        Operation::Create,
        Operation::Write,
        Operation::Open,
        Operation::Read,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Operation::Create => "create",
            Operation::Write => "write",
            Operation::Open => "open",
            Operation::Read => "read",
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Measured per-dataset averages for one (trial, format) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub test_name: String,
    pub trial: usize,
    pub format: String,
    pub dataset_count: usize,
    pub dims: Vec<usize>,
    pub create_avg_s: f64,
    pub write_avg_s: f64,
    pub open_avg_s: f64,
    pub read_avg_s: f64,
    /// Every payload read back matched the one that was written.
    pub verified: bool,
}

impl TrialRecord {
    pub fn average(&self, op: Operation) -> f64 {
        match op {
            Operation::Create => self.create_avg_s,
            Operation::Write => self.write_avg_s,
            Operation::Open => self.open_avg_s,
            Operation::Read => self.read_avg_s,
        }
    }
}

/// Whole nanoseconds as seconds. Values produced this way survive the
/// 9-digit CSV encoding unchanged.
pub fn nanos_to_seconds(nanos: u64) -> f64 {
    nanos as f64 / 1e9
}

/// `x`-joined dims, e.g. `128x128`.
pub fn format_dims(dims: &[usize]) -> String {
    let mut s = String::new();
    for (i, d) in dims.iter().enumerate() {
        if i > 0 {
            s.push('x');
        }
        let _ = write!(s, "{d}");
    }
    s
}

pub fn parse_dims(s: &str) -> Option<Vec<usize>> {
    s.split('x').map(|p| p.parse().ok()).collect()
}

fn push_field(out: &mut String, field: &str) {
    if field.contains([',', '"', '\n', '\r']) {
        out.push('"');
        for c in field.chars() {
            if c == '"' {
                out.push('"');
            }
            out.push(c);
        }
        out.push('"');
    } else {
        out.push_str(field);
    }
}

pub fn to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::with_capacity(CSV_HEADER.len() + 1 + records.len() * 96);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        push_field(&mut out, &r.test_name);
        let _ = write!(out, ",{},", r.trial);
        push_field(&mut out, &r.format);
        let _ = writeln!(
            out,
            ",{},{},{:.9},{:.9},{:.9},{:.9},{}",
            r.dataset_count,
            format_dims(&r.dims),
            r.create_avg_s,
            r.write_avg_s,
            r.open_avg_s,
            r.read_avg_s,
            r.verified
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CsvErrorKind {
    Empty,
    Header,
    ColumnCount(usize),
    Quoting,
    Field(&'static str),
}

/// CSV decoding failure at a 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvError {
    pub row: usize,
    pub kind: CsvErrorKind,
}

impl fmt::Display for CsvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: ", self.row)?;
        match &self.kind {
            CsvErrorKind::Empty => f.write_str("no header"),
            CsvErrorKind::Header => write!(f, "unexpected header, want `{CSV_HEADER}`"),
            CsvErrorKind::ColumnCount(n) => write!(f, "expected {COLUMNS} columns, found {n}"),
            CsvErrorKind::Quoting => f.write_str("unterminated or misplaced quote"),
            CsvErrorKind::Field(name) => write!(f, "malformed `{name}` field"),
        }
    }
}

impl core::error::Error for CsvError {}

fn split_fields(line: &str) -> Option<Vec<String>> {
    let mut fields = Vec::with_capacity(COLUMNS);
    let mut chars = line.chars().peekable();
    loop {
        let mut field = String::new();
        if chars.peek() == Some(&'"') {
            chars.next();
            loop {
                match chars.next()? {
                    '"' if chars.peek() == Some(&'"') => {
                        chars.next();
                        field.push('"');
                    }
                    '"' => break,
                    c => field.push(c),
                }
            }
            match chars.next() {
                None => {
                    fields.push(field);
                    return Some(fields);
                }
                Some(',') => {}
                Some(_) => return None,
            }
        } else {
            loop {
                match chars.next() {
                    None => {
                        fields.push(field);
                        return Some(fields);
                    }
                    Some(',') => break,
                    Some('"') => return None,
                    Some(c) => field.push(c),
                }
            }
        }
        fields.push(field);
    }
}

fn parse_seconds(s: &str, name: &'static str) -> Result<f64, CsvErrorKind> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(CsvErrorKind::Field(name)),
    }
}

fn parse_row(fields: &[String]) -> Result<TrialRecord, CsvErrorKind> {
    if fields.len() != COLUMNS {
        return Err(CsvErrorKind::ColumnCount(fields.len()));
    }
    let int = |i: usize, name| fields[i].parse::<usize>().map_err(|_| CsvErrorKind::Field(name));
    let dims = parse_dims(&fields[4])
        .filter(|d| !d.is_empty())
        .ok_or(CsvErrorKind::Field("dims"))?;
    let verified = match fields[9].as_str() {
        "true" => true,
        "false" => false,
        _ => return Err(CsvErrorKind::Field("verified")),
    };
    Ok(TrialRecord {
        test_name: fields[0].clone(),
        trial: int(1, "trial")?,
        format: fields[2].clone(),
        dataset_count: int(3, "dataset_count")?,
        dims,
        create_avg_s: parse_seconds(&fields[5], "create_avg_s")?,
        write_avg_s: parse_seconds(&fields[6], "write_avg_s")?,
        open_avg_s: parse_seconds(&fields[7], "open_avg_s")?,
        read_avg_s: parse_seconds(&fields[8], "read_avg_s")?,
        verified,
    })
}

pub fn from_csv(text: &str) -> Result<Vec<TrialRecord>, CsvError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        None => return Err(CsvError { row: 1, kind: CsvErrorKind::Empty }),
        Some((_, h)) if h.trim_end_matches('\r') != CSV_HEADER => {
            return Err(CsvError { row: 1, kind: CsvErrorKind::Header })
        }
        Some(_) => {}
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let row = i + 1;
        let fields = split_fields(line).ok_or(CsvError { row, kind: CsvErrorKind::Quoting })?;
        records.push(parse_row(&fields).map_err(|kind| CsvError { row, kind })?);
    }
    Ok(records)
}

/// Mean of one operation's per-dataset averages for one format.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub format: String,
    pub operation: Operation,
    pub mean_avg_s: f64,
    pub trial_count: usize,
}

/// Cross-trial means per (format, operation). Rows are ordered by format
/// name, then by operation.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub test_name: String,
    pub dataset_count: usize,
    pub dims: Vec<usize>,
    pub rows: Vec<SummaryRow>,
    /// Records that failed read-back verification but were still averaged.
    pub unverified: usize,
}

impl SummaryTable {
    pub fn formats(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&r.format.as_str()) {
                out.push(&r.format);
            }
        }
        out
    }

    pub fn mean(&self, format: &str, op: Operation) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.format == format && r.operation == op)
            .map(|r| r.mean_avg_s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AggregateError {
    Empty,
    MixedTestName { first: String, other: String },
    MixedWorkload { test_name: String },
}

impl fmt::Display for AggregateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregateError::Empty => f.write_str("no trial records to aggregate"),
            AggregateError::MixedTestName { first, other } => {
                write!(f, "records mix test names `{first}` and `{other}`")
            }
            AggregateError::MixedWorkload { test_name } => {
                write!(f, "records for `{test_name}` disagree on dataset count or dims")
            }
        }
    }
}

impl core::error::Error for AggregateError {}

/// Averages the per-trial averages of every (format, operation).
///
/// Values are summed in sorted order so the result does not depend on the
/// order of `records`.
pub fn aggregate(records: &[TrialRecord]) -> Result<SummaryTable, AggregateError> {
    let first = records.first().ok_or(AggregateError::Empty)?;
    let mut by_format: BTreeMap<&str, [Vec<f64>; 4]> = BTreeMap::new();
    let mut unverified = 0;
    for r in records {
        if r.test_name != first.test_name {
            return Err(AggregateError::MixedTestName {
                first: first.test_name.clone(),
                other: r.test_name.clone(),
            });
        }
        if r.dataset_count != first.dataset_count || r.dims != first.dims {
            return Err(AggregateError::MixedWorkload {
                test_name: first.test_name.clone(),
            });
        }
        if !r.verified {
            unverified += 1;
        }
        let cols = by_format.entry(&r.format).or_default();
        for (col, op) in cols.iter_mut().zip(Operation::ALL) {
            col.push(r.average(op));
        }
    }
    let mut rows = Vec::with_capacity(by_format.len() * 4);
    for (format, mut cols) in by_format {
        for (col, op) in cols.iter_mut().zip(Operation::ALL) {
            col.sort_by(f64::total_cmp);
            let sum: f64 = col.iter().sum();
            rows.push(SummaryRow {
                format: format.to_string(),
                operation: op,
                mean_avg_s: sum / col.len() as f64,
                trial_count: col.len(),
            });
        }
    }
    Ok(SummaryTable {
        test_name: first.test_name.clone(),
        dataset_count: first.dataset_count,
        dims: first.dims.clone(),
        rows,
        unverified,
    })
}

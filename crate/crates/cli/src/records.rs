//! Record files: one row per (optimum, layer), as CSV or JSON.
//!
//! Reals are written as 17 significant digits in scientific notation, which
//! round-trips every finite `f64` exactly.

use std::fmt;
use std::str::FromStr;

use qaoa_lab::concentration::SweepRecord;
use qaoa_lab::{Branch, LayerParameters, OptimizationResult, OverlapValue};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::CliError;

pub const CSV_HEADER: [&str; 9] = [
    "n",
    "p",
    "layer",
    "beta",
    "gamma",
    "overlap_scaled",
    "grad_norm",
    "branch",
    "seed",
];

pub const TIMESTAMP_KEY: &str = "generated_at_unix";

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// An `f64` that serializes to JSON as a 17-digit literal.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(transparent)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(format_real(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_real(self.0))
    }
}

pub fn reals(xs: &[f64]) -> Vec<Real> {
    xs.iter().copied().map(Real).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub n: u64,
    pub p: usize,
    pub layer: usize,
    pub beta: Real,
    pub gamma: Real,
    pub overlap_scaled: Real,
    pub grad_norm: Real,
    pub branch: String,
    pub seed: u64,
}

impl RecordRow {
    fn csv_fields(&self) -> [String; 9] {
        [
            self.n.to_string(),
            self.p.to_string(),
            self.layer.to_string(),
            self.beta.to_string(),
            self.gamma.to_string(),
            self.overlap_scaled.to_string(),
            self.grad_norm.to_string(),
            self.branch.clone(),
            self.seed.to_string(),
        ]
    }
}

pub fn rows_from_records(records: &[SweepRecord], seed: u64) -> Vec<RecordRow> {
    let mut rows = Vec::new();
    for rec in records {
        let params = &rec.result.params;
        for (k, (&gamma, &beta)) in params.gammas().iter().zip(params.betas()).enumerate() {
            rows.push(RecordRow {
                n: rec.n,
                p: rec.p,
                layer: k + 1,
                beta: Real(beta),
                gamma: Real(gamma),
                overlap_scaled: Real(rec.result.overlap.scaled),
                grad_norm: Real(rec.result.grad_norm),
                branch: rec.result.branch.as_str().to_string(),
                seed,
            });
        }
    }
    rows
}

/// Groups rows back into one record per optimum. Rows of one optimum must be
/// contiguous and list layers `1..=p` in order.
pub fn records_from_rows(rows: &[RecordRow]) -> Result<Vec<SweepRecord>, CliError> {
    let mut records = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let head = &rows[i];
        let p = head.p;
        if p == 0 || i + p > rows.len() {
            return Err(CliError::Input(format!(
                "record at n = {} is truncated (p = {p})",
                head.n
            )));
        }
        let group = &rows[i..i + p];
        for (k, row) in group.iter().enumerate() {
            if row.n != head.n || row.p != p || row.layer != k + 1 {
                return Err(CliError::Input(format!(
                    "expected layer {} of n = {}, p = {p}; found layer {} of n = {}, p = {}",
                    k + 1,
                    head.n,
                    row.layer,
                    row.n,
                    row.p
                )));
            }
        }
        let gammas = group.iter().map(|r| r.gamma.0).collect();
        let betas = group.iter().map(|r| r.beta.0).collect();
        let params = LayerParameters::new(gammas, betas)?;
        let branch = Branch::from_str(&head.branch).map_err(CliError::Input)?;
        records.push(SweepRecord {
            n: head.n,
            p,
            result: OptimizationResult {
                params,
                overlap: OverlapValue::from_scaled(head.n, head.overlap_scaled.0),
                grad_norm: head.grad_norm.0,
                iterations: 0,
                restarts_used: 0,
                total_iterations: 0,
                branch,
            },
            wall_time: 0.0,
        });
        i += p;
    }
    if records.is_empty() {
        return Err(CliError::Input("no records in input".into()));
    }
    Ok(records)
}

#[derive(Serialize)]
struct RecordsDocument<'a, C: Serialize> {
    config: &'a C,
    generated_at_unix: u64,
    records: &'a [RecordRow],
}

#[derive(Deserialize)]
struct RecordsInput {
    records: Vec<RecordRow>,
}

pub fn records_json<C: Serialize>(
    rows: &[RecordRow],
    config: &C,
    timestamp: u64,
) -> Result<String, CliError> {
    let doc = RecordsDocument {
        config,
        generated_at_unix: timestamp,
        records: rows,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

pub fn records_csv<C: Serialize>(
    rows: &[RecordRow],
    config: &C,
    timestamp: u64,
) -> Result<String, CliError> {
    let mut out = format!(
        "# config: {}\n# {TIMESTAMP_KEY}: {timestamp}\n",
        serde_json::to_string(config)?
    );
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        writer.write_record(row.csv_fields())?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Input(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is ASCII"));
    Ok(out)
}

/// Parses either format; JSON is recognized by a leading `{`.
pub fn parse_rows(text: &str) -> Result<Vec<RecordRow>, CliError> {
    if text.trim_start().starts_with('{') {
        let doc: RecordsInput = serde_json::from_str(text)?;
        return Ok(doc.records);
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(CliError::Input(format!(
            "unexpected CSV header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader
        .deserialize()
        .collect::<Result<Vec<RecordRow>, _>>()
        .map_err(CliError::from)
}

pub fn parse_records(text: &str) -> Result<Vec<SweepRecord>, CliError> {
    records_from_rows(&parse_rows(text)?)
}

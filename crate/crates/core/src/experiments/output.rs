//! Tabular output: CSV with `#` metadata lines, or JSON lines.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces every value bit for bit.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::plan::{CheckpointSummary, PlanOutcome, TrialRecord};
use super::rng::PRNG_ID;
use crate::error::{invalid, parse_err, Error, Result};

pub const TOOL: &str = "multapprox";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn build_id() -> &'static str {
    option_env!("MULTAPPROX_BUILD_ID").unwrap_or(concat!("multapprox-", env!("CARGO_PKG_VERSION")))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" | "jsonl" => Ok(OutputFormat::Json),
            _ => Err(parse_err("format", s, "expected csv or json")),
        }
    }
}

/// Ordered key/value pairs describing how a file was produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metadata(pub Vec<(String, String)>);

impl Metadata {
    /// Tool, version, build id and PRNG, followed by `extra`.
    pub fn standard(seed: Option<u64>) -> Self {
        let mut m = Metadata(vec![
            ("tool".into(), TOOL.into()),
            ("version".into(), VERSION.into()),
            ("build_id".into(), build_id().into()),
            ("prng".into(), PRNG_ID.into()),
        ]);
        if let Some(s) = seed {
            m.push("seed", s);
        }
        m
    }

    pub fn push(&mut self, key: &str, value: impl fmt::Display) {
        self.0.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn write_comments(&self, w: &mut dyn Write) -> Result<()> {
        for (k, v) in &self.0 {
            writeln!(w, "# {k}: {}", v.replace('\n', " "))?;
        }
        Ok(())
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.0
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub trial: u64,
    #[serde(rename = "N")]
    pub n: u64,
    /// Hexadecimal raws separated by spaces.
    pub alpha: String,
    pub count: u64,
    pub predictor: f64,
    pub ratio: Option<f64>,
}

pub fn ratio_rows(records: &[TrialRecord]) -> Vec<RatioRow> {
    records
        .iter()
        .flat_map(|r| {
            let alpha = r
                .alpha
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            r.points.iter().map(move |p| RatioRow {
                trial: r.trial,
                n: p.n,
                alpha: alpha.clone(),
                count: p.count,
                predictor: p.predictor,
                ratio: p.ratio,
            })
        })
        .collect()
}

/// Long-form rows `(trial, N, alpha, count, predictor, ratio)`.
pub fn ratio_table(
    records: &[TrialRecord],
    summaries: &[CheckpointSummary],
    meta: &Metadata,
    format: OutputFormat,
    w: &mut dyn Write,
) -> Result<()> {
    if records.is_empty() {
        return Err(invalid("no trial records to write"));
    }
    let rows = ratio_rows(records);
    match format {
        OutputFormat::Csv => {
            meta.write_comments(w)?;
            for s in summaries {
                writeln!(w, "# summary: {}", serde_json::to_string(s)?)?;
            }
            let mut cw = csv::Writer::from_writer(w);
            for r in &rows {
                cw.serialize(r)?;
            }
            cw.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer(&mut *w, &serde_json::json!({ "metadata": meta.to_json() }))?;
            writeln!(w)?;
            for r in &rows {
                serde_json::to_writer(&mut *w, r)?;
                writeln!(w)?;
            }
            for s in summaries {
                serde_json::to_writer(&mut *w, &serde_json::json!({ "summary": s }))?;
                writeln!(w)?;
            }
        }
    }
    Ok(())
}

/// Writes an experiment outcome with plan metadata.
pub fn write_outcome(
    outcome: &PlanOutcome,
    meta: &Metadata,
    format: OutputFormat,
    w: &mut dyn Write,
) -> Result<()> {
    let mut meta = meta.clone();
    meta.push("theorem", outcome.theorem);
    meta.push("k", outcome.k);
    meta.push("predictor", outcome.predictor_kind);
    meta.push(
        "gamma",
        outcome
            .gamma
            .iter()
            .map(|g| g.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    );
    meta.push("hypotheses_hold", outcome.hypotheses.all_hold());
    if let Some(e) = outcome.fibre_exponent_estimate {
        meta.push("fibre_exponent_estimate", e);
    }
    for wmsg in &outcome.warnings {
        meta.push("warning", wmsg);
    }
    ratio_table(&outcome.records, &outcome.summaries, &meta, format, w)
}

/// Reads a CSV written by [`ratio_table`]: metadata pairs and rows.
pub fn read_ratio_csv(r: impl BufRead) -> Result<(Metadata, Vec<RatioRow>)> {
    let mut meta = Metadata::default();
    let mut body = String::new();
    for line in r.lines() {
        let line = line?;
        if let Some(c) = line.strip_prefix("# ") {
            if let Some((k, v)) = c.split_once(": ") {
                meta.0.push((k.to_string(), v.to_string()));
            }
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let rows = rd
        .deserialize()
        .collect::<std::result::Result<Vec<RatioRow>, _>>()?;
    Ok((meta, rows))
}

/// Reads the row records of a JSON-lines file written by [`ratio_table`].
pub fn read_ratio_json(r: impl BufRead) -> Result<Vec<RatioRow>> {
    let mut rows = Vec::new();
    for line in r.lines() {
        let line = line?;
        let v: serde_json::Value = serde_json::from_str(&line)?;
        if v.get("trial").is_some() {
            rows.push(serde_json::from_value(v)?);
        }
    }
    Ok(rows)
}

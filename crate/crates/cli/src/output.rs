//! Distribution and report output: TSV with `# key=value` metadata comments
//! or JSON with the same content.
//!
//! Probabilities print through Rust's shortest round-trip float formatting,
//! so repeated runs produce byte-identical files.

use std::io::Write;

use anyhow::Result;
use serde_json::json;

use paa_core::dist::{Distribution, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Tsv,
    Json,
}

fn value_json(v: &Value) -> serde_json::Value {
    match v {
        Value::Int(x) => json!(x),
        Value::Pair(a, b) => json!([a, b]),
    }
}

/// Write a distribution with ordered metadata.
pub fn write_distribution(
    out: &mut dyn Write,
    format: OutputFormat,
    command: &str,
    params: &[(&str, String)],
    dist: &Distribution,
) -> Result<()> {
    match format {
        OutputFormat::Tsv => {
            writeln!(out, "# command={command}")?;
            for (k, v) in params {
                writeln!(out, "# {k}={v}")?;
            }
            writeln!(out, "# tail={}", dist.tail())?;
            writeln!(out, "# value\tprobability")?;
            for (v, p) in dist.iter() {
                writeln!(out, "{v}\t{p}")?;
            }
        }
        OutputFormat::Json => {
            let support: Vec<serde_json::Value> = dist
                .iter()
                .map(|(v, p)| json!({"value": value_json(v), "probability": p}))
                .collect();
            let params: serde_json::Map<String, serde_json::Value> = params
                .iter()
                .map(|(k, v)| (k.to_string(), json!(v)))
                .collect();
            let doc = json!({
                "command": command,
                "params": params,
                "support": support,
                "tail": dist.tail(),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
    }
    Ok(())
}

/// Write a single scalar result.
pub fn write_scalar(
    out: &mut dyn Write,
    format: OutputFormat,
    command: &str,
    params: &[(&str, String)],
    name: &str,
    value: f64,
) -> Result<()> {
    match format {
        OutputFormat::Tsv => {
            writeln!(out, "# command={command}")?;
            for (k, v) in params {
                writeln!(out, "# {k}={v}")?;
            }
            writeln!(out, "{value}")?;
        }
        OutputFormat::Json => {
            let params: serde_json::Map<String, serde_json::Value> = params
                .iter()
                .map(|(k, v)| (k.to_string(), json!(v)))
                .collect();
            let doc = json!({"command": command, "params": params, name: value});
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
    }
    Ok(())
}

/// Write arbitrary rows (order sweeps and similar).
pub fn write_rows(
    out: &mut dyn Write,
    format: OutputFormat,
    command: &str,
    params: &[(&str, String)],
    header: (&str, &str),
    rows: &[(String, f64)],
) -> Result<()> {
    match format {
        OutputFormat::Tsv => {
            writeln!(out, "# command={command}")?;
            for (k, v) in params {
                writeln!(out, "# {k}={v}")?;
            }
            writeln!(out, "# {}\t{}", header.0, header.1)?;
            for (k, v) in rows {
                writeln!(out, "{k}\t{v}")?;
            }
        }
        OutputFormat::Json => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|(k, v)| json!({header.0: k, header.1: v}))
                .collect();
            let params: serde_json::Map<String, serde_json::Value> = params
                .iter()
                .map(|(k, v)| (k.to_string(), json!(v)))
                .collect();
            let doc = json!({"command": command, "params": params, "rows": items});
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
    }
    Ok(())
}

/// Serialize an oracle report as JSON (the only format for oracle output).
pub fn oracle_report_json(report: &paa_core::oracle::OracleReport) -> serde_json::Value {
    let dist: Vec<serde_json::Value> = report
        .distribution
        .iter()
        .map(|(v, p)| json!({"value": value_json(v), "probability": p}))
        .collect();
    let z: Option<Vec<serde_json::Value>> = report.z_scores.as_ref().map(|scores| {
        scores
            .iter()
            .map(|(v, z)| json!({"value": value_json(v), "z": z}))
            .collect()
    });
    json!({
        "distribution": dist,
        "tail": report.distribution.tail(),
        "samples": report.samples,
        "seed": report.seed,
        "max_abs_deviation": report.max_abs_deviation,
        "z_scores": z,
    })
}

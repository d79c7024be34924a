use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

/// One experiment output row.
#[derive(Debug, Clone, Serialize)]
pub struct MetricRecord {
    pub run_id: String,
    pub step: usize,
    pub wall_time_s: f64,
    pub train_loss: f64,
    pub test_loss: f64,
    /// `F(X_k) - F*` against the run's reference value.
    pub composite_residual: f64,
    pub spectral_norm: f64,
    pub frobenius_norm: f64,
    pub linf_norm: f64,
    pub diverged: bool,
    /// Additional experiment-specific key/value pairs.
    pub extra: BTreeMap<String, f64>,
}

impl MetricRecord {
    pub fn new(run_id: impl Into<String>, step: usize) -> Self {
        Self {
            run_id: run_id.into(),
            step,
            wall_time_s: 0.0,
            train_loss: 0.0,
            test_loss: 0.0,
            composite_residual: 0.0,
            spectral_norm: 0.0,
            frobenius_norm: 0.0,
            linf_norm: 0.0,
            diverged: false,
            extra: BTreeMap::new(),
        }
    }

    fn core_values(&self) -> [f64; 7] {
        [
            self.wall_time_s,
            self.train_loss,
            self.test_loss,
            self.composite_residual,
            self.spectral_norm,
            self.frobenius_norm,
            self.linf_norm,
        ]
    }
}

pub const CSV_HEADER: &str = "run_id,step,wall_time_s,train_loss,test_loss,composite_residual,spectral_norm,frobenius_norm,linf_norm,diverged,extra";

/// 17 significant digits: enough to reproduce any f64 bit pattern.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn extra_field(extra: &BTreeMap<String, f64>) -> String {
    extra
        .iter()
        .map(|(k, v)| format!("{k}={}", fmt_f64(*v)))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn to_csv(records: &[MetricRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let core = r
            .core_values()
            .iter()
            .map(|v| fmt_f64(*v))
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(
            out,
            "{},{},{core},{},{}",
            r.run_id,
            r.step,
            r.diverged,
            extra_field(&r.extra)
        );
    }
    out
}

/// Validates the schema contract: header, parseable rows, non-decreasing
/// step per run, and finite metric values unless the row is flagged
/// diverged.
pub fn validate_csv(text: &str) -> Result<()> {
    let mut lines = text.lines();
    let header = lines.next().context("empty CSV")?;
    if header != CSV_HEADER {
        bail!("bad CSV header: {header}");
    }
    let mut last_step: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(11, ',').collect();
        if fields.len() != 11 {
            bail!("row {}: expected 11 fields, got {}", idx + 2, fields.len());
        }
        let run_id = fields[0].to_string();
        let step: usize = fields[1]
            .parse()
            .with_context(|| format!("row {}: bad step", idx + 2))?;
        if let Some(&prev) = last_step.get(&run_id) {
            if step < prev {
                bail!("row {}: step decreased for run {run_id}", idx + 2);
            }
        }
        last_step.insert(run_id, step);
        let diverged: bool = fields[9]
            .parse()
            .with_context(|| format!("row {}: bad diverged flag", idx + 2))?;
        for f in &fields[2..9] {
            let v: f64 = f
                .parse()
                .with_context(|| format!("row {}: bad float {f}", idx + 2))?;
            if !v.is_finite() && !diverged {
                bail!("row {}: non-finite value without diverged flag", idx + 2);
            }
        }
    }
    Ok(())
}

/// Writes the CSV plus a JSON sidecar holding the resolved config.
pub fn emit_metrics<C: Serialize>(
    records: &[MetricRecord],
    config: &C,
    csv_path: &Path,
) -> Result<()> {
    let csv = to_csv(records);
    validate_csv(&csv)?;
    if let Some(parent) = csv_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(csv_path, &csv)
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    let sidecar = csv_path.with_extension("json");
    let json = serde_json::to_string_pretty(config)?;
    std::fs::write(&sidecar, json)
        .with_context(|| format!("cannot write {}", sidecar.display()))?;
    Ok(())
}

/// Outcome of one named experiment-level assertion.
#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn check(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

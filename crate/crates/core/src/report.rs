//! Canonical session reports and replay verification.
//!
//! A report ties the trace digest, seed and config hash to every derived
//! value of a run: features, label, requested and effective parameters,
//! clamp records, template, both metric sets and both audio digests. Given
//! the referenced trace and config, a replay recomputes all of it and
//! compares field by field on the canonical form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canonical;
use crate::envelope::{config_hash, enforce, reconstruct, ClampRecord, EngineParams, EnvelopeConfig, TuningEvent};
use crate::metrics::{delta_metrics, DeltaMetrics, SignalMetrics};
use crate::pattern::{PatternFeatures, PatternLabel};
use crate::pipeline::{run_session, PipelineError, SessionRun};
use crate::reward::{Engine, TemplateInstance};
use crate::store::{ConfigStore, TraceStore};

pub const REPORT_VERSION: &str = "tempered-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub report_version: String,
    pub trace_id: String,
    pub trace_digest: String,
    #[serde(with = "canonical::seed_string")]
    pub seed: u64,
    pub config_name: String,
    pub config_hash: String,
    pub features: PatternFeatures,
    pub label: PatternLabel,
    pub requested: EngineParams,
    pub effective: EngineParams,
    pub clamp_records: [ClampRecord; 3],
    pub template: TemplateInstance,
    pub metrics_baseline: SignalMetrics,
    pub metrics_constrained: SignalMetrics,
    pub deltas: DeltaMetrics,
    pub audio_digest_baseline: String,
    pub audio_digest_constrained: String,
    pub tuning_events: Vec<TuningEvent>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("inconsistent pipeline outputs: {0}")]
    InconsistentInputs(String),
    #[error("malformed report: {0}")]
    MalformedReport(String),
    #[error("report version {found:?} is not {expected:?}")]
    VersionMismatch { found: String, expected: &'static str },
    #[error("unresolvable reference: {0}")]
    UnresolvableReference(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Assembles a report and checks that its audit fields agree with each other.
pub fn build_report(
    trace_id: &str,
    seed: u64,
    config: &EnvelopeConfig,
    run: &SessionRun,
    tuning_events: Vec<TuningEvent>,
) -> Result<SessionReport, ReportError> {
    let (recomputed, _) = enforce(&run.requested, config).map_err(|e| ReportError::InconsistentInputs(e.to_string()))?;
    if recomputed != run.effective {
        return Err(ReportError::InconsistentInputs(format!(
            "effective {:?} is not the clamp of requested {:?} under {}",
            run.effective, run.requested, config.name
        )));
    }
    if reconstruct(&run.clamp_records) != run.effective {
        return Err(ReportError::InconsistentInputs("clamp records do not reconstruct effective".into()));
    }
    for r in &run.clamp_records {
        if r.requested != run.requested.get(r.parameter) || r.clamped != (r.requested != r.effective) {
            return Err(ReportError::InconsistentInputs(format!("clamp record for {} disagrees", r.parameter)));
        }
    }
    if run.baseline.params != run.requested || run.constrained.params != run.effective {
        return Err(ReportError::InconsistentInputs("renders used other parameters".into()));
    }
    if run.template.family != run.label.label {
        return Err(ReportError::InconsistentInputs("template family differs from label".into()));
    }
    normalize(SessionReport {
        report_version: REPORT_VERSION.to_string(),
        trace_id: trace_id.to_string(),
        trace_digest: run.trace_digest.clone(),
        seed,
        config_name: config.name.clone(),
        config_hash: config_hash(config),
        features: run.features.clone(),
        label: run.label.clone(),
        requested: run.requested,
        effective: run.effective,
        clamp_records: run.clamp_records,
        template: run.template.clone(),
        metrics_baseline: run.baseline.metrics,
        metrics_constrained: run.constrained.metrics,
        deltas: delta_metrics(&run.baseline.metrics, &run.constrained.metrics),
        audio_digest_baseline: run.baseline.audio.digest(),
        audio_digest_constrained: run.constrained.audio.digest(),
        tuning_events,
    })
}

/// Rounds every number to the canonical grid, so a report in memory equals
/// the same report read back from disk.
fn normalize(report: SessionReport) -> Result<SessionReport, ReportError> {
    let bytes = canonical::to_bytes(&report).map_err(|e| ReportError::InconsistentInputs(e.to_string()))?;
    canonical::from_slice(&bytes).map_err(|e| ReportError::InconsistentInputs(e.to_string()))
}

pub fn serialize_report(report: &SessionReport) -> Vec<u8> {
    canonical::to_bytes(report).expect("reports hold only finite numbers")
}

pub fn deserialize_report(bytes: &[u8]) -> Result<SessionReport, ReportError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| ReportError::MalformedReport(e.to_string()))?;
    match value.get("report_version").and_then(Value::as_str) {
        None => return Err(ReportError::MalformedReport("missing report_version".into())),
        Some(v) if v != REPORT_VERSION => {
            return Err(ReportError::VersionMismatch { found: v.to_string(), expected: REPORT_VERSION })
        }
        Some(_) => {}
    }
    serde_json::from_value(value).map_err(|e| ReportError::MalformedReport(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplayStatus {
    ExactMatch,
    Mismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayResult {
    pub status: ReplayStatus,
    pub mismatched_fields: Vec<String>,
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&p, child, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), child, out);
            }
            if items.is_empty() {
                out.insert(prefix.to_string(), "[]".into());
            }
        }
        leaf => {
            out.insert(prefix.to_string(), canonical::value_to_string(leaf).expect("finite"));
        }
    }
}

/// Leaf paths whose canonical text differs between two reports.
pub fn diff_reports(a: &SessionReport, b: &SessionReport) -> Vec<String> {
    let (mut fa, mut fb) = (BTreeMap::new(), BTreeMap::new());
    flatten("", &serde_json::to_value(a).expect("serializable"), &mut fa);
    flatten("", &serde_json::to_value(b).expect("serializable"), &mut fb);
    let keys: std::collections::BTreeSet<&String> = fa.keys().chain(fb.keys()).collect();
    keys.into_iter().filter(|k| fa.get(*k) != fb.get(*k)).cloned().collect()
}

/// Re-runs the pipeline from the report's trace, seed and config and compares
/// every derived field.
pub fn replay_verify(
    report: &SessionReport,
    traces: &TraceStore,
    configs: &ConfigStore,
    engine: &Engine,
) -> Result<ReplayResult, ReportError> {
    let trace = traces
        .get(&report.trace_digest)
        .ok_or_else(|| ReportError::UnresolvableReference(format!("trace digest {}", report.trace_digest)))?;
    let config = configs
        .get(&report.config_hash)
        .ok_or_else(|| ReportError::UnresolvableReference(format!("config hash {}", report.config_hash)))?;
    let run = run_session(trace, config, report.seed, engine)?;
    let fresh = build_report(&report.trace_id, report.seed, config, &run, report.tuning_events.clone())?;
    let mismatched_fields = diff_reports(report, &fresh);
    Ok(ReplayResult {
        status: if mismatched_fields.is_empty() { ReplayStatus::ExactMatch } else { ReplayStatus::Mismatch },
        mismatched_fields,
    })
}

/// Recomputes every clamp decision from the report's own fields, without
/// touching the engine.
pub fn audit_clamps(report: &SessionReport, config: &EnvelopeConfig) -> bool {
    if config_hash(config) != report.config_hash {
        return false;
    }
    match enforce(&report.requested, config) {
        Ok((effective, records)) => effective == report.effective && records == report.clamp_records,
        Err(_) => false,
    }
}

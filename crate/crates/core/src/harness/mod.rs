//! Paired baseline/constrained evaluation over a corpus.

mod artifacts;
mod checks;
mod stats;

pub use artifacts::{emit_artifacts, load_run, write_loudness_series, RunArtifacts};
pub use checks::{
    bound_compliance, clamp_rate_ordering, discriminability_check, monotonicity_check, nesting_dominance,
    Discriminability, Monotonicity,
};
pub use stats::{AggregateStats, ClampCounts, DeltaSummary, Histogram, LabelSummary};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelope::EnvelopeConfig;
use crate::pipeline::run_session;
use crate::report::{build_report, ReportError, SessionReport};
use crate::reward::Engine;
use crate::seed;
use crate::trace::ActionTrace;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("trace {trace_id}: {source}")]
    Stage { trace_id: String, source: ReportError },
    #[error("need at least two pattern labels, found {0}")]
    InsufficientLabels(usize),
    #[error("runs are not comparable: {0}")]
    Incomparable(String),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Artifact(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedResult {
    pub trace_id: String,
    pub config_name: String,
    pub report: SessionReport,
}

/// Per-trace run seed: the run's master seed keyed by trace id, so a trace's
/// seed does not depend on its position in the corpus.
pub fn trace_run_seed(master_seed: u64, trace_id: &str) -> u64 {
    seed::keyed(master_seed, trace_id)
}

/// Runs one trace under baseline and constrained conditions with one seed.
pub fn run_paired(
    trace: &ActionTrace,
    config: &EnvelopeConfig,
    seed: u64,
    engine: &Engine,
) -> Result<PairedResult, HarnessError> {
    let stage = |source: ReportError| HarnessError::Stage { trace_id: trace.trace_id.clone(), source };
    let run = run_session(trace, config, seed, engine).map_err(|e| stage(e.into()))?;
    let report = build_report(&trace.trace_id, seed, config, &run, Vec::new()).map_err(stage)?;
    Ok(PairedResult { trace_id: trace.trace_id.clone(), config_name: config.name.clone(), report })
}

#[derive(Debug, Clone)]
pub struct CorpusRun {
    pub config: EnvelopeConfig,
    pub master_seed: u64,
    /// Sorted by trace id.
    pub results: Vec<PairedResult>,
    pub stats: AggregateStats,
}

/// Runs every trace. Any stage error aborts the run, naming the trace.
pub fn run_corpus(
    corpus: &[ActionTrace],
    config: &EnvelopeConfig,
    master_seed: u64,
    engine: &Engine,
) -> Result<CorpusRun, HarnessError> {
    let mut results: Vec<PairedResult> = corpus
        .par_iter()
        .map(|t| run_paired(t, config, trace_run_seed(master_seed, &t.trace_id), engine))
        .collect::<Result<_, _>>()?;
    results.sort_by(|a, b| a.trace_id.cmp(&b.trace_id));
    let reports: Vec<&SessionReport> = results.iter().map(|r| &r.report).collect();
    let stats = AggregateStats::from_reports(config, &reports);
    Ok(CorpusRun { config: config.clone(), master_seed, results, stats })
}

//! Live sessions and tuning state behind the HTTP interface.
//!
//! Transport-free: the server maps requests onto these calls and serializes
//! the results canonically. Taps are stored exactly as submitted; all
//! clamping, labeling and measurement happens here.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::envelope::{meta_envelope, preset, validate_tuning, EnvelopeConfig, Preset, TuningEvent};
use crate::metrics::{loudness_series, LoudnessSeries};
use crate::pattern::{extract_features, PatternFeatures};
use crate::pipeline::run_session;
use crate::report::{build_report, ReportError, SessionReport};
use crate::reward::{wav, AudioBuffer, Engine};
use crate::seed;
use crate::store::{ConfigStore, TraceStore};
use crate::trace::{ActionTrace, Provenance, TraceEntry, TraceError, DEFAULT_DURATION_MS, LANE_COUNT};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("unknown report {0}")]
    UnknownReport(String),
    #[error("session {0} is already finalized")]
    Finalized(String),
    #[error("session expired: tap at {timestamp_ms} ms is past {duration_ms} ms")]
    Expired { timestamp_ms: u64, duration_ms: u64 },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    Internal(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub duration_ms: u64,
    pub entries: Vec<TraceEntry>,
    pub finalized: bool,
    pub config_name: String,
    pub config_hash: String,
    /// Features of the taps so far; absent before the first tap.
    pub features: Option<PatternFeatures>,
}

#[derive(Debug, Clone)]
struct LiveSession {
    entries: Vec<TraceEntry>,
    /// Index into the service's tuning log when the session started.
    tuning_from: usize,
    finalized: bool,
}

#[derive(Debug, Clone)]
struct Finished {
    report: SessionReport,
    baseline: AudioBuffer,
    constrained: AudioBuffer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub trace_id: String,
    pub config_name: String,
    pub label: String,
    pub clamped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoudnessPair {
    pub baseline: LoudnessSeries,
    pub constrained: LoudnessSeries,
}

pub struct Service {
    engine: Engine,
    master_seed: u64,
    meta: EnvelopeConfig,
    active: EnvelopeConfig,
    traces: TraceStore,
    configs: ConfigStore,
    sessions: BTreeMap<String, LiveSession>,
    finished: BTreeMap<String, Finished>,
    tuning_log: Vec<TuningEvent>,
    next_session: u64,
}

impl Service {
    /// Starts with the Default preset active.
    pub fn new(engine: Engine, master_seed: u64) -> Self {
        Service {
            engine,
            master_seed,
            meta: meta_envelope(),
            active: preset(Preset::Default),
            traces: TraceStore::new(),
            configs: ConfigStore::with_presets(),
            sessions: BTreeMap::new(),
            finished: BTreeMap::new(),
            tuning_log: Vec::new(),
            next_session: 1,
        }
    }

    /// Makes corpus traces available to replay lookups.
    pub fn with_traces(mut self, traces: impl IntoIterator<Item = ActionTrace>) -> Self {
        for t in traces {
            self.traces.insert(t);
        }
        self
    }

    pub fn traces(&self) -> &TraceStore {
        &self.traces
    }

    pub fn configs(&self) -> &ConfigStore {
        &self.configs
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn active_config(&self) -> &EnvelopeConfig {
        &self.active
    }

    pub fn tuning_log(&self) -> &[TuningEvent] {
        &self.tuning_log
    }

    /// Validates a proposal against the meta-envelope and activates it if
    /// accepted. Every proposal is logged.
    pub fn propose_config(&mut self, proposed: &EnvelopeConfig) -> TuningEvent {
        let (outcome, event) = validate_tuning(proposed, &self.meta);
        if let Ok(cfg) = outcome {
            self.configs.insert(cfg.clone());
            self.active = cfg;
        }
        self.tuning_log.push(event.clone());
        event
    }

    pub fn create_session(&mut self) -> SessionState {
        let id = format!("session-{:04}", self.next_session);
        self.next_session += 1;
        self.sessions
            .insert(id.clone(), LiveSession { entries: Vec::new(), tuning_from: self.tuning_log.len(), finalized: false });
        self.session(&id).expect("just inserted")
    }

    pub fn session(&self, id: &str) -> Result<SessionState, ServiceError> {
        let s = self.sessions.get(id).ok_or_else(|| ServiceError::UnknownSession(id.into()))?;
        let features = if s.entries.is_empty() { None } else { Some(extract_features(&self.as_trace(id, s)?)?) };
        Ok(SessionState {
            session_id: id.to_string(),
            duration_ms: DEFAULT_DURATION_MS,
            entries: s.entries.clone(),
            finalized: s.finalized,
            config_name: self.active.name.clone(),
            config_hash: crate::envelope::config_hash(&self.active),
            features,
        })
    }

    fn as_trace(&self, id: &str, s: &LiveSession) -> Result<ActionTrace, TraceError> {
        ActionTrace {
            trace_id: id.to_string(),
            duration_ms: DEFAULT_DURATION_MS,
            entries: s.entries.clone(),
            provenance: Provenance::Live,
            archetype: None,
        }
        .validated()
    }

    /// Appends taps in submission order. The batch is all-or-nothing.
    pub fn append_taps(&mut self, id: &str, taps: Vec<TraceEntry>) -> Result<usize, ServiceError> {
        let s = self.sessions.get_mut(id).ok_or_else(|| ServiceError::UnknownSession(id.into()))?;
        if s.finalized {
            return Err(ServiceError::Finalized(id.into()));
        }
        for t in &taps {
            if t.timestamp_ms > DEFAULT_DURATION_MS {
                return Err(ServiceError::Expired { timestamp_ms: t.timestamp_ms, duration_ms: DEFAULT_DURATION_MS });
            }
            if t.lane >= LANE_COUNT {
                return Err(TraceError::SchemaViolation(format!("lane {} out of range", t.lane)).into());
            }
            if !(0.0..=1.0).contains(&t.intensity) {
                return Err(TraceError::SchemaViolation(format!("intensity {} out of [0,1]", t.intensity)).into());
            }
        }
        s.entries.extend(taps);
        Ok(s.entries.len())
    }

    /// Runs the full pipeline under the active config. The report carries the
    /// tuning proposals made while the session was open.
    pub fn finalize(&mut self, id: &str, seed: Option<u64>) -> Result<SessionReport, ServiceError> {
        let s = self.sessions.get(id).ok_or_else(|| ServiceError::UnknownSession(id.into()))?;
        if s.finalized {
            return Err(ServiceError::Finalized(id.into()));
        }
        let trace = self.as_trace(id, s)?;
        let seed = seed.unwrap_or_else(|| seed::keyed(self.master_seed, id));
        let events = self.tuning_log[s.tuning_from..].to_vec();
        let run = run_session(&trace, &self.active, seed, &self.engine).map_err(ReportError::from)?;
        let report = build_report(id, seed, &self.active, &run, events)?;
        self.traces.insert(trace);
        self.sessions.get_mut(id).expect("checked").finalized = true;
        self.finished.insert(
            id.to_string(),
            Finished { report: report.clone(), baseline: run.baseline.audio, constrained: run.constrained.audio },
        );
        Ok(report)
    }

    pub fn reports(&self) -> Vec<ReportSummary> {
        self.finished
            .values()
            .map(|f| ReportSummary {
                trace_id: f.report.trace_id.clone(),
                config_name: f.report.config_name.clone(),
                label: f.report.label.label.as_str().to_string(),
                clamped: f
                    .report
                    .clamp_records
                    .iter()
                    .filter(|c| c.clamped)
                    .map(|c| c.parameter.as_str().to_string())
                    .collect(),
            })
            .collect()
    }

    fn finished(&self, id: &str) -> Result<&Finished, ServiceError> {
        self.finished.get(id).ok_or_else(|| ServiceError::UnknownReport(id.into()))
    }

    pub fn report(&self, id: &str) -> Result<&SessionReport, ServiceError> {
        Ok(&self.finished(id)?.report)
    }

    /// The constrained render (what the user hears), or the baseline.
    pub fn audio_wav(&self, id: &str, baseline: bool) -> Result<Vec<u8>, ServiceError> {
        let f = self.finished(id)?;
        wav::to_bytes(if baseline { &f.baseline } else { &f.constrained }).map_err(|e| ServiceError::Internal(e.to_string()))
    }

    pub fn loudness(&self, id: &str) -> Result<LoudnessPair, ServiceError> {
        let f = self.finished(id)?;
        let series = |a: &AudioBuffer| loudness_series(a).map_err(|e| ServiceError::Internal(e.to_string()));
        Ok(LoudnessPair { baseline: series(&f.baseline)?, constrained: series(&f.constrained)? })
    }

    /// Canonical bytes of any service response.
    pub fn canonical<T: Serialize>(value: &T) -> Vec<u8> {
        canonical::to_bytes(value).expect("service responses hold finite numbers")
    }
}

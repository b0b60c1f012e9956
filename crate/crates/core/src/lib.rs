//! Constraint-first generative music rewards.
//!
//! A behavioral action trace is reduced to interpretable features and a
//! pattern label; the label routes to a template family and the features
//! request engine parameters (tempo, gain, accent ratio). A declarative
//! envelope clamps those parameters to closed bounds and records every
//! decision, the reward is composed and rendered offline, and the whole run
//! is captured in a canonical, replayable session report.

pub mod calibration;
pub mod canonical;
pub mod corpus;
pub mod envelope;
pub mod harness;
pub mod metrics;
pub mod pattern;
pub mod pipeline;
pub mod report;
pub mod reward;
pub mod seed;
pub mod service;
pub mod store;
pub mod trace;

pub use envelope::{
    config_hash, enforce, meta_envelope, preset, validate_tuning, BoundHit, ClampRecord, EngineParams,
    EnvelopeConfig, EnvelopeError, ParamBounds, Parameter, Preset, TuningEvent, TuningStatus, Unit,
};
pub use pattern::{extract_features, label_pattern, Pattern, PatternFeatures, PatternLabel};
pub use reward::{derive_requested_params, AudioBuffer, Engine, NoteSequence, TemplateInstance};
pub use trace::{trace_digest, validate_trace, ActionTrace, Archetype, Outcome, Provenance, TraceEntry};
pub use report::{build_report, deserialize_report, replay_verify, serialize_report, ReplayStatus, SessionReport};

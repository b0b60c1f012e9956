//! One trace through the full pipeline, baseline and constrained.
//!
//! Both paths share the features, label, template and seed. The baseline
//! composes and renders with the requested parameters; the constrained path
//! does the same with the enforced ones.

use crate::envelope::{enforce, ClampRecord, EngineParams, EnvelopeConfig, EnvelopeError};
use crate::metrics::{measure, MeterError, SignalMetrics};
use crate::pattern::{extract_features, label_pattern, PatternFeatures, PatternLabel};
use crate::reward::{compose, derive_requested_params, render_audio, select_template, AudioBuffer, Engine, NoteSequence, RenderError, TemplateInstance};
use crate::trace::{trace_digest, ActionTrace, TraceError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Meter(#[from] MeterError),
}

/// A composed, rendered and measured reward.
#[derive(Debug, Clone)]
pub struct Rendition {
    pub params: EngineParams,
    pub sequence: NoteSequence,
    pub audio: AudioBuffer,
    pub metrics: SignalMetrics,
}

#[derive(Debug, Clone)]
pub struct SessionRun {
    pub trace_digest: String,
    pub features: PatternFeatures,
    pub label: PatternLabel,
    pub requested: EngineParams,
    pub effective: EngineParams,
    pub clamp_records: [ClampRecord; 3],
    pub template: TemplateInstance,
    pub baseline: Rendition,
    pub constrained: Rendition,
}

fn rendition(
    template: &TemplateInstance,
    params: EngineParams,
    dominant_lane: u8,
    seed: u64,
    engine: &Engine,
) -> Result<Rendition, PipelineError> {
    let sequence = compose(template, &params, dominant_lane, seed, engine);
    let audio = render_audio(&sequence, params.gain_db, engine)?;
    let metrics = measure(&sequence, &audio)?;
    Ok(Rendition { params, sequence, audio, metrics })
}

/// Features, label, parameters and enforcement for a trace, without rendering.
pub fn plan(
    trace: &ActionTrace,
    config: &EnvelopeConfig,
) -> Result<(PatternFeatures, PatternLabel, EngineParams, EngineParams, [ClampRecord; 3]), PipelineError> {
    let features = extract_features(trace)?;
    let label = label_pattern(&features);
    let requested = derive_requested_params(&features);
    let (effective, records) = enforce(&requested, config)?;
    Ok((features, label, requested, effective, records))
}

pub fn run_session(
    trace: &ActionTrace,
    config: &EnvelopeConfig,
    seed: u64,
    engine: &Engine,
) -> Result<SessionRun, PipelineError> {
    config.validate()?;
    let trace_digest = trace_digest(trace)?;
    let (features, label, requested, effective, clamp_records) = plan(trace, config)?;
    let template = select_template(&label, seed, engine);
    let baseline = rendition(&template, requested, features.dominant_lane, seed, engine)?;
    let constrained = if effective == requested {
        baseline.clone()
    } else {
        rendition(&template, effective, features.dominant_lane, seed, engine)?
    };
    Ok(SessionRun {
        trace_digest,
        features,
        label,
        requested,
        effective,
        clamp_records,
        template,
        baseline,
        constrained,
    })
}

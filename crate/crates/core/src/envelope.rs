//! Declarative low-risk envelope over the three engine parameters, and the
//! deterministic clamp enforcer.
//!
//! All intervals are closed. Enforcement is componentwise: each parameter is
//! projected onto its interval independently, and every parameter produces a
//! [`ClampRecord`] whether or not it moved.

use serde::{Deserialize, Serialize};

use crate::canonical;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "BPM")]
    Bpm,
    #[serde(rename = "dB")]
    Db,
    #[serde(rename = "ratio")]
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub lower: f64,
    pub upper: f64,
    pub unit: Unit,
}

impl ParamBounds {
    pub const fn new(lower: f64, upper: f64, unit: Unit) -> Self {
        ParamBounds { lower, upper, unit }
    }

    pub fn is_valid(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite() && self.lower <= self.upper
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn contains_interval(&self, inner: &ParamBounds) -> bool {
        self.lower <= inner.lower && inner.upper <= self.upper
    }

    pub fn clamp(&self, x: f64) -> f64 {
        self.upper.min(self.lower.max(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Tempo,
    Gain,
    AccentRatio,
}

impl Parameter {
    pub const ALL: [Parameter; 3] = [Parameter::Tempo, Parameter::Gain, Parameter::AccentRatio];

    pub fn as_str(self) -> &'static str {
        match self {
            Parameter::Tempo => "tempo",
            Parameter::Gain => "gain",
            Parameter::AccentRatio => "accent_ratio",
        }
    }
}

impl std::fmt::Display for Parameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeConfig {
    pub name: String,
    pub tempo: ParamBounds,
    pub gain: ParamBounds,
    pub accent_ratio: ParamBounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    Relaxed,
    Default,
    Tight,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Relaxed, Preset::Default, Preset::Tight];

    pub fn parse(name: &str) -> Option<Preset> {
        match name.to_ascii_lowercase().as_str() {
            "relaxed" => Some(Preset::Relaxed),
            "default" => Some(Preset::Default),
            "tight" => Some(Preset::Tight),
            _ => None,
        }
    }
}

/// Bounds of a named preset.
pub fn preset(which: Preset) -> EnvelopeConfig {
    use Unit::*;
    let (name, tempo, gain, accent, meta) = match which {
        Preset::Relaxed => ("relaxed", (60.0, 180.0), (-60.0, 0.0), (0.0, 1.0), None),
        Preset::Default => ("default", (120.0, 130.0), (-10.5, -1.9), (0.0, 0.5), Some("relaxed")),
        Preset::Tight => ("tight", (124.0, 126.0), (-6.9, -5.2), (0.0, 0.1), Some("relaxed")),
    };
    EnvelopeConfig {
        name: name.to_string(),
        tempo: ParamBounds::new(tempo.0, tempo.1, Bpm),
        gain: ParamBounds::new(gain.0, gain.1, Db),
        accent_ratio: ParamBounds::new(accent.0, accent.1, Ratio),
        meta: meta.map(str::to_string),
    }
}

/// The outer limit for tuning proposals.
pub fn meta_envelope() -> EnvelopeConfig {
    preset(Preset::Relaxed)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvelopeError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("non-finite requested {0}")]
    NonFiniteParameter(Parameter),
    #[error("proposal exceeds meta-envelope: {}", format_excess(.0))]
    OutOfMetaEnvelope(Vec<Excess>),
}

/// How far a proposed bound reaches outside the meta-envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excess {
    pub parameter: Parameter,
    pub side: BoundHit,
    pub amount: f64,
}

fn format_excess(v: &[Excess]) -> String {
    v.iter()
        .map(|e| format!("{} {} exceeds by {}", e.parameter, e.side.as_str(), canonical::format_decimal(e.amount)))
        .collect::<Vec<_>>()
        .join("; ")
}

impl EnvelopeConfig {
    pub fn bounds(&self, p: Parameter) -> &ParamBounds {
        match p {
            Parameter::Tempo => &self.tempo,
            Parameter::Gain => &self.gain,
            Parameter::AccentRatio => &self.accent_ratio,
        }
    }

    pub fn validate(&self) -> Result<(), EnvelopeError> {
        if self.name.is_empty() {
            return Err(EnvelopeError::InvalidConfig("empty name".into()));
        }
        for (p, unit) in Parameter::ALL.into_iter().zip([Unit::Bpm, Unit::Db, Unit::Ratio]) {
            let b = self.bounds(p);
            if !b.is_valid() {
                return Err(EnvelopeError::InvalidConfig(format!("{p} bounds [{}, {}]", b.lower, b.upper)));
            }
            if b.unit != unit {
                return Err(EnvelopeError::InvalidConfig(format!("{p} has unit {:?}", b.unit)));
            }
        }
        Ok(())
    }

    /// Checks containment in a meta config (the one named by `meta`).
    pub fn validate_within(&self, meta: &EnvelopeConfig) -> Result<(), EnvelopeError> {
        self.validate()?;
        let excess = excess_over(self, meta);
        if excess.is_empty() {
            Ok(())
        } else {
            Err(EnvelopeError::OutOfMetaEnvelope(excess))
        }
    }

    /// Canonical document bytes.
    pub fn to_canonical(&self) -> Vec<u8> {
        canonical::to_bytes(self).expect("configs serialize")
    }

    pub fn from_document(bytes: &[u8]) -> Result<Self, EnvelopeError> {
        let cfg: EnvelopeConfig =
            serde_json::from_slice(bytes).map_err(|e| EnvelopeError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// SHA-256 over the config's canonical bytes.
pub fn config_hash(config: &EnvelopeConfig) -> String {
    canonical::sha256_hex(&config.to_canonical())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineParams {
    pub tempo_bpm: f64,
    pub gain_db: f64,
    pub accent_ratio: f64,
}

impl EngineParams {
    pub fn get(&self, p: Parameter) -> f64 {
        match p {
            Parameter::Tempo => self.tempo_bpm,
            Parameter::Gain => self.gain_db,
            Parameter::AccentRatio => self.accent_ratio,
        }
    }

    fn set(&mut self, p: Parameter, v: f64) {
        match p {
            Parameter::Tempo => self.tempo_bpm = v,
            Parameter::Gain => self.gain_db = v,
            Parameter::AccentRatio => self.accent_ratio = v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundHit {
    None,
    Lower,
    Upper,
}

impl BoundHit {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundHit::None => "none",
            BoundHit::Lower => "lower",
            BoundHit::Upper => "upper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampRecord {
    pub parameter: Parameter,
    pub requested: f64,
    pub effective: f64,
    pub clamped: bool,
    pub bound_hit: BoundHit,
}

impl ClampRecord {
    pub fn distance(&self) -> f64 {
        (self.effective - self.requested).abs()
    }
}

/// Projects each requested parameter onto its closed interval.
pub fn enforce(
    requested: &EngineParams,
    config: &EnvelopeConfig,
) -> Result<(EngineParams, [ClampRecord; 3]), EnvelopeError> {
    for p in Parameter::ALL {
        if !requested.get(p).is_finite() {
            return Err(EnvelopeError::NonFiniteParameter(p));
        }
    }
    let mut effective = *requested;
    let records = Parameter::ALL.map(|p| {
        let b = config.bounds(p);
        let r = requested.get(p);
        let e = b.clamp(r);
        effective.set(p, e);
        let bound_hit = if r < b.lower {
            BoundHit::Lower
        } else if r > b.upper {
            BoundHit::Upper
        } else {
            BoundHit::None
        };
        ClampRecord { parameter: p, requested: r, effective: e, clamped: bound_hit != BoundHit::None, bound_hit }
    });
    Ok((effective, records))
}

/// Rebuilds the effective parameters from audit records alone.
pub fn reconstruct(records: &[ClampRecord; 3]) -> EngineParams {
    let mut p = EngineParams { tempo_bpm: f64::NAN, gain_db: f64::NAN, accent_ratio: f64::NAN };
    for r in records {
        p.set(r.parameter, r.effective);
    }
    p
}

fn excess_over(proposed: &EnvelopeConfig, meta: &EnvelopeConfig) -> Vec<Excess> {
    let mut out = Vec::new();
    for p in Parameter::ALL {
        let (inner, outer) = (proposed.bounds(p), meta.bounds(p));
        if inner.lower < outer.lower {
            out.push(Excess { parameter: p, side: BoundHit::Lower, amount: outer.lower - inner.lower });
        }
        if inner.upper > outer.upper {
            out.push(Excess { parameter: p, side: BoundHit::Upper, amount: inner.upper - outer.upper });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TuningStatus {
    Accepted,
    Rejected,
}

/// Audit entry for one tuning proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningEvent {
    pub status: TuningStatus,
    pub proposed: EnvelopeConfig,
    pub proposed_hash: String,
    pub meta_hash: String,
    pub excess: Vec<Excess>,
}

/// Accepts `proposed` iff every interval lies inside `meta`. Either way the
/// decision is returned as an auditable event.
pub fn validate_tuning(
    proposed: &EnvelopeConfig,
    meta: &EnvelopeConfig,
) -> (Result<EnvelopeConfig, EnvelopeError>, TuningEvent) {
    let outcome = proposed.validate_within(meta).map(|_| proposed.clone());
    let excess = match &outcome {
        Err(EnvelopeError::OutOfMetaEnvelope(e)) => e.clone(),
        _ => Vec::new(),
    };
    let event = TuningEvent {
        status: if outcome.is_ok() { TuningStatus::Accepted } else { TuningStatus::Rejected },
        proposed: proposed.clone(),
        proposed_hash: config_hash(proposed),
        meta_hash: config_hash(meta),
        excess,
    };
    (outcome, event)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(t: f64, g: f64, a: f64) -> EngineParams {
        EngineParams { tempo_bpm: t, gain_db: g, accent_ratio: a }
    }

    #[test]
    fn preset_values() {
        let d = preset(Preset::Default);
        assert_eq!((d.tempo.lower, d.tempo.upper), (120.0, 130.0));
        assert_eq!((d.gain.lower, d.gain.upper), (-10.5, -1.9));
        assert_eq!((d.accent_ratio.lower, d.accent_ratio.upper), (0.0, 0.5));
        let t = preset(Preset::Tight);
        assert_eq!((t.tempo.lower, t.tempo.upper), (124.0, 126.0));
        assert_eq!((t.gain.lower, t.gain.upper), (-6.9, -5.2));
        assert_eq!((t.accent_ratio.lower, t.accent_ratio.upper), (0.0, 0.1));
        let r = preset(Preset::Relaxed);
        assert_eq!((r.tempo.lower, r.tempo.upper), (60.0, 180.0));
        assert_eq!((r.gain.lower, r.gain.upper), (-60.0, 0.0));
        assert_eq!((r.accent_ratio.lower, r.accent_ratio.upper), (0.0, 1.0));
        for p in [Preset::Default, Preset::Tight] {
            preset(p).validate_within(&meta_envelope()).unwrap();
        }
    }

    #[test]
    fn hash_is_canonical() {
        let d = preset(Preset::Default);
        assert_eq!(config_hash(&d), config_hash(&d));
        let doc_a = String::from_utf8(d.to_canonical()).unwrap();
        let doc_b = doc_a.replace("-1.900000", "-1.90");
        assert_ne!(doc_a, doc_b);
        let reparsed = EnvelopeConfig::from_document(doc_b.as_bytes()).unwrap();
        assert_eq!(config_hash(&reparsed), config_hash(&d));
        assert_ne!(config_hash(&d), config_hash(&preset(Preset::Tight)));
    }

    #[test]
    fn enforce_examples() {
        let d = preset(Preset::Default);
        let (e, r) = enforce(&params(160.0, -5.0, 0.2), &d).unwrap();
        assert_eq!(e.tempo_bpm, 130.0);
        assert_eq!(r[0].bound_hit, BoundHit::Upper);
        assert_eq!(e.gain_db, -5.0);
        assert!(!r[1].clamped);
        let (e, r) = enforce(&params(125.0, -6.0, 0.4), &preset(Preset::Tight)).unwrap();
        assert_eq!(e.accent_ratio, 0.1);
        assert_eq!(r[2].bound_hit, BoundHit::Upper);
        assert!(matches!(
            enforce(&params(f64::NAN, 0.0, 0.0), &d),
            Err(EnvelopeError::NonFiniteParameter(Parameter::Tempo))
        ));
        assert!(matches!(
            enforce(&params(120.0, f64::INFINITY, 0.0), &d),
            Err(EnvelopeError::NonFiniteParameter(Parameter::Gain))
        ));
    }

    #[test]
    fn tuning_examples() {
        let meta = meta_envelope();
        let mut proposed = preset(Preset::Default);
        proposed.name = "wider".into();
        proposed.tempo = ParamBounds::new(100.0, 140.0, Unit::Bpm);
        let (ok, ev) = validate_tuning(&proposed, &meta);
        assert!(ok.is_ok());
        assert_eq!(ev.status, TuningStatus::Accepted);

        proposed.gain = ParamBounds::new(-60.0, 3.0, Unit::Db);
        let (err, ev) = validate_tuning(&proposed, &meta);
        assert_eq!(ev.status, TuningStatus::Rejected);
        match err {
            Err(EnvelopeError::OutOfMetaEnvelope(ex)) => {
                assert_eq!(ex.len(), 1);
                assert_eq!(ex[0].parameter, Parameter::Gain);
                assert_eq!(ex[0].side, BoundHit::Upper);
                assert_eq!(ex[0].amount, 3.0);
            }
            other => panic!("unexpected {other:?}"),
        }

        let (same, _) = validate_tuning(&meta, &meta);
        assert!(same.is_ok());
    }

    #[test]
    fn invalid_bounds_rejected() {
        let mut c = preset(Preset::Default);
        c.tempo = ParamBounds::new(140.0, 120.0, Unit::Bpm);
        assert!(matches!(c.validate(), Err(EnvelopeError::InvalidConfig(_))));
        let mut c = preset(Preset::Default);
        c.gain.unit = Unit::Bpm;
        assert!(c.validate().is_err());
    }
}

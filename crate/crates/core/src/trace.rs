//! The action-trace schema: one timestamped record of a tapping session.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canonical;

/// Number of tap lanes (one per pentatonic scale degree).
pub const LANE_COUNT: u8 = 5;

/// Default session length.
pub const DEFAULT_DURATION_MS: u64 = 60_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Hit,
    Miss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Live,
    Synthetic,
}

/// Behavioral archetype a synthetic trace was generated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Archetype {
    Sequential,
    Repetitive,
    Exploratory,
}

impl Archetype {
    pub const ALL: [Archetype; 3] = [Archetype::Sequential, Archetype::Repetitive, Archetype::Exploratory];

    pub fn as_str(self) -> &'static str {
        match self {
            Archetype::Sequential => "sequential",
            Archetype::Repetitive => "repetitive",
            Archetype::Exploratory => "exploratory",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub timestamp_ms: u64,
    pub lane: u8,
    pub intensity: f64,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TraceEntry {
    pub fn new(timestamp_ms: u64, lane: u8, intensity: f64, outcome: Outcome) -> Self {
        TraceEntry { timestamp_ms, lane, intensity, outcome, note: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionTrace {
    pub trace_id: String,
    pub duration_ms: u64,
    pub entries: Vec<TraceEntry>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archetype: Option<Archetype>,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("malformed trace document: {0}")]
    MalformedDocument(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("trace has no entries")]
    EmptyTrace,
}

/// Field layout accepted on input. Lanes are read as signed integers so that
/// negative lanes are reported as domain violations rather than type errors.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    timestamp_ms: u64,
    lane: i64,
    intensity: f64,
    outcome: Outcome,
    #[serde(default)]
    note: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrace {
    trace_id: String,
    #[serde(default = "default_duration")]
    duration_ms: u64,
    entries: Vec<RawEntry>,
    provenance: Provenance,
    #[serde(default)]
    archetype: Option<Archetype>,
}

fn default_duration() -> u64 {
    DEFAULT_DURATION_MS
}

impl ActionTrace {
    /// Checks the structural invariants and sorts entries by timestamp
    /// (stable, so equal timestamps keep their submission order).
    pub fn validated(mut self) -> Result<Self, TraceError> {
        if self.trace_id.is_empty() {
            return Err(TraceError::SchemaViolation("trace_id is empty".into()));
        }
        if self.duration_ms == 0 {
            return Err(TraceError::SchemaViolation("duration_ms must be positive".into()));
        }
        if self.archetype.is_some() && self.provenance != Provenance::Synthetic {
            return Err(TraceError::SchemaViolation("archetype is only valid on synthetic traces".into()));
        }
        for (i, e) in self.entries.iter().enumerate() {
            if e.lane >= LANE_COUNT {
                return Err(TraceError::SchemaViolation(format!("entry {i}: lane {} out of range 0..=4", e.lane)));
            }
            if !(0.0..=1.0).contains(&e.intensity) {
                return Err(TraceError::SchemaViolation(format!(
                    "entry {i}: intensity {} out of range [0,1]",
                    e.intensity
                )));
            }
            if e.timestamp_ms > self.duration_ms {
                return Err(TraceError::SchemaViolation(format!(
                    "entry {i}: timestamp {} ms beyond duration {} ms",
                    e.timestamp_ms, self.duration_ms
                )));
            }
        }
        if self.entries.is_empty() {
            return Err(TraceError::EmptyTrace);
        }
        self.entries.sort_by_key(|e| e.timestamp_ms);
        Ok(self)
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_ms as f64 / 1000.0
    }

    /// Canonical document bytes.
    pub fn to_canonical(&self) -> Vec<u8> {
        canonical::to_bytes(self).expect("validated traces serialize")
    }
}

/// Parses and validates one trace document.
pub fn validate_trace(raw: &[u8]) -> Result<ActionTrace, TraceError> {
    let value: Value = serde_json::from_slice(raw).map_err(|e| TraceError::MalformedDocument(e.to_string()))?;
    let raw: RawTrace = serde_json::from_value(value).map_err(|e| TraceError::SchemaViolation(e.to_string()))?;
    let mut entries = Vec::with_capacity(raw.entries.len());
    for (i, e) in raw.entries.into_iter().enumerate() {
        if !(0..LANE_COUNT as i64).contains(&e.lane) {
            return Err(TraceError::SchemaViolation(format!("entry {i}: lane {} out of range 0..=4", e.lane)));
        }
        entries.push(TraceEntry {
            timestamp_ms: e.timestamp_ms,
            lane: e.lane as u8,
            intensity: e.intensity,
            outcome: e.outcome,
            note: e.note,
        });
    }
    ActionTrace {
        trace_id: raw.trace_id,
        duration_ms: raw.duration_ms,
        entries,
        provenance: raw.provenance,
        archetype: raw.archetype,
    }
    .validated()
}

/// SHA-256 of the trace's canonical serialization.
pub fn trace_digest(trace: &ActionTrace) -> Result<String, TraceError> {
    let trace = trace.clone().validated()?;
    Ok(canonical::sha256_hex(&trace.to_canonical()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(entries: &str) -> String {
        format!(r#"{{"trace_id":"t1","duration_ms":60000,"provenance":"live","entries":[{entries}]}}"#)
    }

    #[test]
    fn valid_document_passes_through() {
        let raw = doc(
            r#"{"timestamp_ms":100,"lane":0,"intensity":0.5,"outcome":"hit"},
               {"timestamp_ms":200,"lane":2,"intensity":0.6,"outcome":"miss"},
               {"timestamp_ms":300,"lane":4,"intensity":0.7,"outcome":"hit","note":"x"}"#,
        );
        let t = validate_trace(raw.as_bytes()).unwrap();
        assert_eq!(t.entries.len(), 3);
        assert_eq!(t.entries.iter().map(|e| e.lane).collect::<Vec<_>>(), vec![0, 2, 4]);
        assert_eq!(t.entries[2].note.as_deref(), Some("x"));
    }

    #[test]
    fn lane_seven_is_rejected() {
        let raw = doc(r#"{"timestamp_ms":100,"lane":7,"intensity":0.5,"outcome":"hit"}"#);
        assert!(matches!(validate_trace(raw.as_bytes()), Err(TraceError::SchemaViolation(_))));
        let raw = doc(r#"{"timestamp_ms":100,"lane":-1,"intensity":0.5,"outcome":"hit"}"#);
        assert!(matches!(validate_trace(raw.as_bytes()), Err(TraceError::SchemaViolation(_))));
    }

    #[test]
    fn out_of_order_entries_are_stably_sorted() {
        let raw = doc(
            r#"{"timestamp_ms":300,"lane":1,"intensity":0.5,"outcome":"hit"},
               {"timestamp_ms":100,"lane":2,"intensity":0.5,"outcome":"hit"},
               {"timestamp_ms":300,"lane":3,"intensity":0.5,"outcome":"hit"}"#,
        );
        let t = validate_trace(raw.as_bytes()).unwrap();
        let lanes: Vec<u8> = t.entries.iter().map(|e| e.lane).collect();
        assert_eq!(lanes, vec![2, 1, 3]);
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(validate_trace(b"{not json"), Err(TraceError::MalformedDocument(_))));
        assert!(matches!(validate_trace(doc("").as_bytes()), Err(TraceError::EmptyTrace)));
        let missing = r#"{"trace_id":"t","provenance":"live","entries":[{"lane":1,"intensity":0.5,"outcome":"hit"}]}"#;
        assert!(matches!(validate_trace(missing.as_bytes()), Err(TraceError::SchemaViolation(_))));
        let late = doc(r#"{"timestamp_ms":60001,"lane":1,"intensity":0.5,"outcome":"hit"}"#);
        assert!(matches!(validate_trace(late.as_bytes()), Err(TraceError::SchemaViolation(_))));
        let loud = doc(r#"{"timestamp_ms":5,"lane":1,"intensity":1.5,"outcome":"hit"}"#);
        assert!(matches!(validate_trace(loud.as_bytes()), Err(TraceError::SchemaViolation(_))));
    }

    #[test]
    fn digest_ignores_key_order_but_not_content() {
        let a = r#"{"trace_id":"t","duration_ms":60000,"provenance":"live","entries":[{"timestamp_ms":10,"lane":1,"intensity":0.25,"outcome":"hit"}]}"#;
        let b = r#"{"entries":[{"outcome":"hit","intensity":0.250,"lane":1,"timestamp_ms":10}],"provenance":"live","duration_ms":60000,"trace_id":"t"}"#;
        let c = r#"{"trace_id":"t","duration_ms":60000,"provenance":"live","entries":[{"timestamp_ms":11,"lane":1,"intensity":0.25,"outcome":"hit"}]}"#;
        let da = trace_digest(&validate_trace(a.as_bytes()).unwrap()).unwrap();
        let db = trace_digest(&validate_trace(b.as_bytes()).unwrap()).unwrap();
        let dc = trace_digest(&validate_trace(c.as_bytes()).unwrap()).unwrap();
        assert_eq!(da, db);
        assert_ne!(da, dc);
        assert_eq!(da.len(), 64);
    }

    #[test]
    fn digest_of_empty_trace_errors() {
        let t = ActionTrace {
            trace_id: "e".into(),
            duration_ms: 1000,
            entries: vec![],
            provenance: Provenance::Live,
            archetype: None,
        };
        assert!(matches!(trace_digest(&t), Err(TraceError::EmptyTrace)));
    }
}

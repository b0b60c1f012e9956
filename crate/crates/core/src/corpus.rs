//! Seeded synthetic trace corpus.
//!
//! Each trace is generated from an archetype (sequential sweep, single-lane
//! repetition, or unconstrained exploration) mixed with uniform lane noise.
//! Per-trace tap rate is uniform over a configured range. Tap intensities
//! follow a two-level beta model: each trace draws a vigor level from a
//! mixture of a body component and a vigorous tail, and each tap draws its
//! intensity from a beta distribution centred on that level. The shape
//! parameters are pinned by [`crate::calibration`].

use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::{self, quantize};
use crate::seed;
use crate::trace::{
    trace_digest, validate_trace, ActionTrace, Archetype, Outcome, Provenance, TraceEntry, TraceError,
    DEFAULT_DURATION_MS, LANE_COUNT,
};

/// Lane order walked by the sequential archetype: a back-and-forth sweep.
pub const SWEEP: [u8; 8] = [0, 1, 2, 3, 4, 3, 2, 1];

pub const INTENSITY_FAMILY: &str = "beta-vigor-mixture";

/// Two-level beta model for tap intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityModel {
    pub family: String,
    /// Probability that a trace draws its vigor from the vigorous component.
    pub vigorous_fraction: f64,
    pub body_alpha: f64,
    pub body_beta: f64,
    pub vigorous_alpha: f64,
    pub vigorous_beta: f64,
    /// Concentration of the per-tap beta around the trace's vigor level.
    pub tap_concentration: f64,
}

impl IntensityModel {
    /// Values chosen by the calibration grid search (see `calibration`).
    pub fn calibrated() -> Self {
        IntensityModel {
            family: INTENSITY_FAMILY.to_string(),
            vigorous_fraction: 0.05,
            body_alpha: 32.0,
            body_beta: 12.0,
            vigorous_alpha: 30.0,
            vigorous_beta: 2.5,
            tap_concentration: 1.5,
        }
    }

    fn validate(&self) -> Result<(), CorpusError> {
        if self.family != INTENSITY_FAMILY {
            return Err(CorpusError::InvalidSpec(format!("unknown intensity family {:?}", self.family)));
        }
        if !(0.0..=1.0).contains(&self.vigorous_fraction) {
            return Err(CorpusError::InvalidSpec("vigorous_fraction must lie in [0,1]".into()));
        }
        let shapes = [
            self.body_alpha,
            self.body_beta,
            self.vigorous_alpha,
            self.vigorous_beta,
            self.tap_concentration,
        ];
        if shapes.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(CorpusError::InvalidSpec("beta shape parameters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub total_count: usize,
    pub per_archetype_count: usize,
    #[serde(with = "canonical::seed_string")]
    pub master_seed: u64,
    pub duration_ms: u64,
    pub rate_range_taps_per_s: [f64; 2],
    pub intensity: IntensityModel,
    pub hit_rate_range: [f64; 2],
    pub noise_level_range: [f64; 2],
}

impl CorpusSpec {
    /// The calibrated 660-trace corpus (3 archetypes x 220).
    pub fn new(master_seed: u64) -> Self {
        CorpusSpec {
            total_count: 660,
            per_archetype_count: 220,
            master_seed,
            duration_ms: DEFAULT_DURATION_MS,
            rate_range_taps_per_s: [1.5, 5.0],
            intensity: IntensityModel::calibrated(),
            hit_rate_range: [0.9, 1.0],
            noise_level_range: [0.0, 0.25],
        }
    }

    /// Same corpus shape with `per_archetype_count` traces per archetype.
    pub fn with_per_archetype(mut self, per: usize) -> Self {
        self.per_archetype_count = per;
        self.total_count = 3 * per;
        self
    }

    /// Zero-noise variant: every trace is a pure archetype realization.
    pub fn noiseless(mut self) -> Self {
        self.noise_level_range = [0.0, 0.0];
        self
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.total_count != 3 * self.per_archetype_count {
            return Err(CorpusError::InvalidSpec(format!(
                "total_count {} must equal 3 x per_archetype_count {}",
                self.total_count, self.per_archetype_count
            )));
        }
        if self.duration_ms == 0 {
            return Err(CorpusError::InvalidSpec("duration_ms must be positive".into()));
        }
        let check = |name: &str, r: [f64; 2], lo: f64, hi: f64| {
            if !(r[0].is_finite() && r[1].is_finite() && lo <= r[0] && r[0] <= r[1] && r[1] <= hi) {
                Err(CorpusError::InvalidSpec(format!("{name} range {r:?} invalid")))
            } else {
                Ok(())
            }
        };
        check("rate", self.rate_range_taps_per_s, f64::MIN_POSITIVE, 1000.0)?;
        check("hit rate", self.hit_rate_range, 0.0, 1.0)?;
        check("noise level", self.noise_level_range, 0.0, 1.0)?;
        self.intensity.validate()
    }

    pub fn archetype_of(&self, index: usize) -> Archetype {
        Archetype::ALL[index % 3]
    }

    pub fn trace_id(&self, index: usize) -> String {
        let width = self.total_count.saturating_sub(1).to_string().len().max(4);
        format!("trace-{index:0width$}")
    }

    pub fn trace_seed(&self, index: usize) -> u64 {
        seed::split(self.master_seed, index as u64)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("manifest mismatch: {0}")]
    Manifest(String),
}

fn uniform(rng: &mut impl Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..r[1])
    }
}

fn beta(a: f64, b: f64) -> Beta<f64> {
    Beta::new(a, b).expect("validated beta shapes")
}

/// Generates one trace of the corpus.
pub fn generate_trace(spec: &CorpusSpec, index: usize) -> ActionTrace {
    let archetype = spec.archetype_of(index);
    let mut rng = seed::rng(spec.trace_seed(index));
    let duration_s = spec.duration_ms as f64 / 1000.0;

    let rate = uniform(&mut rng, spec.rate_range_taps_per_s);
    let count = ((rate * duration_s).round() as usize).max(1);
    let noise = uniform(&mut rng, spec.noise_level_range);
    let hit_rate = uniform(&mut rng, spec.hit_rate_range);
    let m = &spec.intensity;
    let vigor = if rng.random::<f64>() < m.vigorous_fraction {
        beta(m.vigorous_alpha, m.vigorous_beta).sample(&mut rng)
    } else {
        beta(m.body_alpha, m.body_beta).sample(&mut rng)
    };
    let vigor = vigor.clamp(1e-6, 1.0 - 1e-6);
    let tap = beta(vigor * m.tap_concentration, (1.0 - vigor) * m.tap_concentration);
    let home = rng.random_range(0..LANE_COUNT);

    let slot_ms = spec.duration_ms as f64 / count as f64;
    let entries = (0..count)
        .map(|k| {
            let jitter: f64 = rng.random();
            let timestamp_ms = (((k as f64 + jitter) * slot_ms).floor() as u64).min(spec.duration_ms);
            let lane = if rng.random::<f64>() < noise {
                rng.random_range(0..LANE_COUNT)
            } else {
                match archetype {
                    Archetype::Sequential => SWEEP[k % SWEEP.len()],
                    Archetype::Repetitive => home,
                    Archetype::Exploratory => rng.random_range(0..LANE_COUNT),
                }
            };
            let intensity = quantize(tap.sample(&mut rng)).clamp(0.0, 1.0);
            let outcome = if rng.random::<f64>() < hit_rate { Outcome::Hit } else { Outcome::Miss };
            TraceEntry::new(timestamp_ms, lane, intensity, outcome)
        })
        .collect();

    ActionTrace {
        trace_id: spec.trace_id(index),
        duration_ms: spec.duration_ms,
        entries,
        provenance: Provenance::Synthetic,
        archetype: Some(archetype),
    }
}

/// Generates the full corpus. Output order is trace index order.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Vec<ActionTrace>, CorpusError> {
    spec.validate()?;
    (0..spec.total_count)
        .into_par_iter()
        .map(|i| generate_trace(spec, i).validated().map_err(CorpusError::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub trace_id: String,
    pub archetype: Archetype,
    #[serde(with = "canonical::seed_string")]
    pub seed: u64,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub composition: String,
    pub spec: CorpusSpec,
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn build(spec: &CorpusSpec, traces: &[ActionTrace]) -> Result<Self, CorpusError> {
        let entries = traces
            .iter()
            .enumerate()
            .map(|(i, t)| {
                Ok(ManifestEntry {
                    trace_id: t.trace_id.clone(),
                    archetype: t.archetype.unwrap_or(spec.archetype_of(i)),
                    seed: spec.trace_seed(i),
                    digest: trace_digest(t)?,
                })
            })
            .collect::<Result<_, TraceError>>()?;
        Ok(CorpusManifest {
            composition: format!("balanced {}x{}", 3, spec.per_archetype_count),
            spec: spec.clone(),
            entries,
        })
    }
}

fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.display().to_string(), source }
}

/// Writes `manifest.json` and `traces/<trace_id>.json` under `dir`.
pub fn write_corpus(dir: &std::path::Path, spec: &CorpusSpec, traces: &[ActionTrace]) -> Result<CorpusManifest, CorpusError> {
    let manifest = CorpusManifest::build(spec, traces)?;
    let trace_dir = dir.join("traces");
    std::fs::create_dir_all(&trace_dir).map_err(io_err(&trace_dir))?;
    for t in traces {
        let path = trace_dir.join(format!("{}.json", t.trace_id));
        std::fs::write(&path, t.to_canonical()).map_err(io_err(&path))?;
    }
    let path = dir.join("manifest.json");
    let bytes = canonical::to_bytes(&manifest).expect("manifest serializes");
    std::fs::write(&path, bytes).map_err(io_err(&path))?;
    Ok(manifest)
}

/// Reads a corpus directory, validating every trace against its manifest digest.
pub fn read_corpus(dir: &std::path::Path) -> Result<(CorpusManifest, Vec<ActionTrace>), CorpusError> {
    let path = dir.join("manifest.json");
    let bytes = std::fs::read(&path).map_err(io_err(&path))?;
    let manifest: CorpusManifest =
        serde_json::from_slice(&bytes).map_err(|e| CorpusError::Manifest(e.to_string()))?;
    let mut traces = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let path = dir.join("traces").join(format!("{}.json", entry.trace_id));
        let bytes = std::fs::read(&path).map_err(io_err(&path))?;
        let trace = validate_trace(&bytes)?;
        let digest = trace_digest(&trace)?;
        if digest != entry.digest {
            return Err(CorpusError::Manifest(format!("digest mismatch for {}", entry.trace_id)));
        }
        traces.push(trace);
    }
    Ok((manifest, traces))
}

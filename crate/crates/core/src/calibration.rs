//! One-time grid search that pins the corpus intensity model.
//!
//! Only clamp decisions matter here, so candidates are scored with the
//! planning stage alone (features, requested parameters, enforcement) and
//! nothing is rendered. The candidate closest to the target clamp rates wins;
//! ties keep the earlier grid point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{generate_corpus, CorpusError, CorpusSpec, IntensityModel};
use crate::envelope::{preset, EnvelopeConfig, Parameter, Preset};
use crate::pipeline::plan;

/// Master seed the pinned model was calibrated with.
pub const CALIBRATION_SEED: u64 = 660;

/// Target clamp rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    pub relaxed_gain: f64,
    pub default_tempo: f64,
    pub default_gain: f64,
    pub default_accent_ratio: f64,
    pub default_any: f64,
}

impl Default for Targets {
    fn default() -> Self {
        Targets {
            relaxed_gain: 0.089,
            default_tempo: 0.915,
            default_gain: 0.180,
            default_accent_ratio: 0.856,
            default_any: 0.989,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub vigorous_fraction: Vec<f64>,
    pub body_alpha: Vec<f64>,
    pub body_beta: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            vigorous_fraction: vec![0.05, 0.07, 0.09, 0.11, 0.13],
            body_alpha: vec![32.0, 36.0, 40.0, 44.0, 48.0],
            body_beta: vec![12.0, 14.0, 16.0, 18.0, 20.0],
        }
    }
}

impl Grid {
    /// Candidates in row-major order over (vigorous_fraction, alpha, beta).
    pub fn candidates(&self, base: &IntensityModel) -> Vec<IntensityModel> {
        let mut out = Vec::new();
        for &f in &self.vigorous_fraction {
            for &a in &self.body_alpha {
                for &b in &self.body_beta {
                    out.push(IntensityModel { vigorous_fraction: f, body_alpha: a, body_beta: b, ..base.clone() });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClampRates {
    pub relaxed_gain: f64,
    pub relaxed_any: f64,
    pub default_tempo: f64,
    pub default_gain: f64,
    pub default_accent_ratio: f64,
    pub default_any: f64,
}

impl ClampRates {
    /// Sum of absolute errors against the gain and any-clamp targets. Tempo
    /// does not depend on intensity, so it is verified but not scored.
    pub fn error(&self, t: &Targets) -> f64 {
        (self.relaxed_gain - t.relaxed_gain).abs()
            + (self.default_gain - t.default_gain).abs()
            + (self.default_accent_ratio - t.default_accent_ratio).abs()
            + (self.default_any - t.default_any).abs()
    }
}

fn rates(spec: &CorpusSpec) -> Result<ClampRates, CorpusError> {
    let corpus = generate_corpus(spec)?;
    let n = corpus.len() as f64;
    let count = |cfg: &EnvelopeConfig| -> Result<[usize; 4], CorpusError> {
        let mut c = [0usize; 4];
        for t in &corpus {
            let (.., records) = plan(t, cfg).map_err(|e| CorpusError::InvalidSpec(e.to_string()))?;
            for (i, r) in records.iter().enumerate() {
                c[i] += r.clamped as usize;
            }
            c[3] += records.iter().any(|r| r.clamped) as usize;
        }
        Ok(c)
    };
    let relaxed = count(&preset(Preset::Relaxed))?;
    let default = count(&preset(Preset::Default))?;
    let idx = |p: Parameter| Parameter::ALL.iter().position(|q| *q == p).unwrap();
    Ok(ClampRates {
        relaxed_gain: relaxed[idx(Parameter::Gain)] as f64 / n,
        relaxed_any: relaxed[3] as f64 / n,
        default_tempo: default[idx(Parameter::Tempo)] as f64 / n,
        default_gain: default[idx(Parameter::Gain)] as f64 / n,
        default_accent_ratio: default[idx(Parameter::AccentRatio)] as f64 / n,
        default_any: default[3] as f64 / n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub model: IntensityModel,
    pub rates: ClampRates,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub seed: u64,
    pub targets: Targets,
    pub best: Candidate,
    pub candidates: Vec<Candidate>,
}

/// Scores every grid point on a corpus generated from `base` with `seed`.
pub fn calibrate(base: &CorpusSpec, grid: &Grid, targets: &Targets) -> Result<Calibration, CorpusError> {
    let candidates: Vec<Candidate> = grid
        .candidates(&base.intensity)
        .into_par_iter()
        .map(|model| {
            let spec = CorpusSpec { intensity: model.clone(), ..base.clone() };
            let rates = rates(&spec)?;
            Ok(Candidate { error: rates.error(targets), model, rates })
        })
        .collect::<Result<_, CorpusError>>()?;
    let best = candidates
        .iter()
        .fold(None::<&Candidate>, |best, c| match best {
            Some(b) if b.error <= c.error => Some(b),
            _ => Some(c),
        })
        .ok_or_else(|| CorpusError::InvalidSpec("empty calibration grid".into()))?
        .clone();
    Ok(Calibration { seed: base.master_seed, targets: *targets, best, candidates })
}

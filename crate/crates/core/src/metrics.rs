//! Measured-only signal diagnostics: integrated loudness, loudness range,
//! onset density and maximum level slope.
//!
//! Loudness follows the K-weighted, gated mean-square scheme: a high-shelf
//! and a high-pass biquad (designed for the buffer's own sample rate by the
//! bilinear transform), mean square over 100 ms sub-blocks, and windows built
//! from those sub-blocks:
//!
//! * integrated: 400 ms blocks, 75 % overlap, absolute gate -70 LUFS, relative
//!   gate 10 LU under the absolute-gated mean;
//! * short-term (for loudness range): 3 s windows hopped at 1 s, absolute gate
//!   -70 LUFS, relative gate 20 LU under the absolute-gated mean, range is the
//!   95th minus the 10th percentile (linear interpolation between ranks);
//! * momentary (for level slope): 400 ms windows hopped at 100 ms, ungated,
//!   floored at -90 LUFS.
//!
//! None of these values is ever enforced; they are evidence only.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::reward::{AudioBuffer, NoteSequence};

pub const ABSOLUTE_GATE_LUFS: f64 = -70.0;
pub const INTEGRATED_RELATIVE_GATE_LU: f64 = -10.0;
pub const RANGE_RELATIVE_GATE_LU: f64 = -20.0;
pub const SLOPE_FLOOR_LUFS: f64 = -90.0;
/// Sub-block length; every window is a whole number of sub-blocks.
pub const SUB_BLOCK_S: f64 = 0.1;

const MOMENTARY_SUB_BLOCKS: usize = 4;
const SHORT_TERM_SUB_BLOCKS: usize = 30;
const SHORT_TERM_HOP_SUB_BLOCKS: usize = 10;
const SLOPE_MIN_SUB_BLOCKS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum MeterError {
    #[error("audio too short: need {needed_s} s")]
    TooShort { needed_s: f64 },
    #[error("every window is below the gate")]
    AllBelowGate,
    #[error("unsupported sample rate {0} Hz")]
    UnsupportedSampleRate(u32),
    #[error("delta unavailable: a side is below gate or too short")]
    Unavailable,
}

/// Second-order IIR section, a0 normalized to 1.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    /// High-shelf stage modelling the acoustic effect of the head.
    fn high_shelf(sample_rate: f64) -> Self {
        let gain_db = 3.999_843_853_97;
        let q = 0.707_175_236_955_419_3;
        let f0 = 1_681.974_450_955_532;
        let k = (PI * f0 / sample_rate).tan();
        let vh = 10f64.powf(gain_db / 20.0);
        let vb = vh.powf(0.499_666_774_155);
        let a0 = 1.0 + k / q + k * k;
        Biquad {
            b: [(vh + vb * k / q + k * k) / a0, 2.0 * (k * k - vh) / a0, (vh - vb * k / q + k * k) / a0],
            a: [2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0],
        }
    }

    /// Revised low-frequency B-curve high-pass.
    fn high_pass(sample_rate: f64) -> Self {
        let q = 0.500_327_037_325_395_3;
        let f0 = 38.135_470_876_139_82;
        let k = (PI * f0 / sample_rate).tan();
        let a0 = 1.0 + k / q + k * k;
        Biquad { b: [1.0, -2.0, 1.0], a: [2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0] }
    }

    fn state(self) -> BiquadState {
        BiquadState { f: self, x: [0.0; 2], y: [0.0; 2] }
    }
}

/// Direct form I filter memory.
struct BiquadState {
    f: Biquad,
    x: [f64; 2],
    y: [f64; 2],
}

impl BiquadState {
    #[inline]
    fn step(&mut self, x0: f64) -> f64 {
        let (b, a) = (&self.f.b, &self.f.a);
        let y0 = b[0] * x0 + b[1] * self.x[0] + b[2] * self.x[1] - a[0] * self.y[0] - a[1] * self.y[1];
        self.x = [x0, self.x[0]];
        self.y = [y0, self.y[0]];
        y0
    }
}

fn power_to_lufs(power: f64) -> f64 {
    -0.691 + 10.0 * power.log10()
}

/// K-weighted mean square of each complete 100 ms sub-block.
fn sub_block_powers(audio: &AudioBuffer) -> Result<Vec<f64>, MeterError> {
    let sr = audio.sample_rate_hz;
    if sr < 8_000 || sr % 10 != 0 {
        return Err(MeterError::UnsupportedSampleRate(sr));
    }
    let fs = sr as f64;
    let (mut shelf, mut hp) = (Biquad::high_shelf(fs).state(), Biquad::high_pass(fs).state());
    let per = (sr / 10) as usize;
    Ok(audio
        .samples
        .chunks_exact(per)
        .map(|c| c.iter().map(|&x| hp.step(shelf.step(x)).powi(2)).sum::<f64>() / per as f64)
        .collect())
}

/// Mean power of windows of `len` sub-blocks starting every `hop` sub-blocks.
fn window_powers(sub: &[f64], len: usize, hop: usize) -> Vec<f64> {
    if sub.len() < len {
        return Vec::new();
    }
    (0..=(sub.len() - len))
        .step_by(hop)
        .map(|s| sub[s..s + len].iter().sum::<f64>() / len as f64)
        .collect()
}

/// Powers surviving the absolute gate and a relative gate `relative_lu`
/// under the absolute-gated mean.
fn gate(powers: &[f64], relative_lu: f64) -> Vec<f64> {
    let above: Vec<f64> = powers.iter().copied().filter(|&p| power_to_lufs(p) > ABSOLUTE_GATE_LUFS).collect();
    if above.is_empty() {
        return above;
    }
    let mean = above.iter().sum::<f64>() / above.len() as f64;
    let threshold = power_to_lufs(mean) + relative_lu;
    above.into_iter().filter(|&p| power_to_lufs(p) > threshold).collect()
}

/// Integrated loudness, or `Unavailable::BelowGate` for silence-like input.
pub fn integrated_loudness(audio: &AudioBuffer) -> Result<Level, MeterError> {
    integrated_loudness_from(&sub_block_powers(audio)?)
}

fn integrated_loudness_from(sub: &[f64]) -> Result<Level, MeterError> {
    if sub.len() < MOMENTARY_SUB_BLOCKS {
        return Err(MeterError::TooShort { needed_s: 0.4 });
    }
    let gated = gate(&window_powers(sub, MOMENTARY_SUB_BLOCKS, 1), INTEGRATED_RELATIVE_GATE_LU);
    if gated.is_empty() {
        return Ok(Level::Unavailable(Unavailable::BelowGate));
    }
    Ok(Level::Value(power_to_lufs(gated.iter().sum::<f64>() / gated.len() as f64)))
}

/// Percentile by linear interpolation between closest ranks of sorted data.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Short-term loudness series (3 s windows, 1 s hop), ungated, floored.
pub fn short_term_series(audio: &AudioBuffer) -> Result<Vec<f64>, MeterError> {
    short_term_series_from(&sub_block_powers(audio)?)
}

fn short_term_series_from(sub: &[f64]) -> Result<Vec<f64>, MeterError> {
    if sub.len() < SHORT_TERM_SUB_BLOCKS {
        return Err(MeterError::TooShort { needed_s: 3.0 });
    }
    Ok(window_powers(sub, SHORT_TERM_SUB_BLOCKS, SHORT_TERM_HOP_SUB_BLOCKS)
        .into_iter()
        .map(|p| power_to_lufs(p).max(SLOPE_FLOOR_LUFS))
        .collect())
}

/// Momentary loudness series (400 ms windows, 100 ms hop), ungated, floored.
pub fn momentary_series(audio: &AudioBuffer) -> Result<Vec<f64>, MeterError> {
    momentary_series_from(&sub_block_powers(audio)?)
}

fn momentary_series_from(sub: &[f64]) -> Result<Vec<f64>, MeterError> {
    if sub.len() < MOMENTARY_SUB_BLOCKS {
        return Err(MeterError::TooShort { needed_s: 0.4 });
    }
    Ok(window_powers(sub, MOMENTARY_SUB_BLOCKS, 1)
        .into_iter()
        .map(|p| power_to_lufs(p).max(SLOPE_FLOOR_LUFS))
        .collect())
}

/// Loudness range in LU.
pub fn loudness_range(audio: &AudioBuffer) -> Result<f64, MeterError> {
    loudness_range_from(&sub_block_powers(audio)?)
}

fn loudness_range_from(sub: &[f64]) -> Result<f64, MeterError> {
    if sub.len() < SHORT_TERM_SUB_BLOCKS {
        return Err(MeterError::TooShort { needed_s: 3.0 });
    }
    let powers = window_powers(sub, SHORT_TERM_SUB_BLOCKS, SHORT_TERM_HOP_SUB_BLOCKS);
    let mut levels: Vec<f64> = gate(&powers, RANGE_RELATIVE_GATE_LU).into_iter().map(power_to_lufs).collect();
    if levels.is_empty() {
        return Err(MeterError::AllBelowGate);
    }
    levels.sort_by(f64::total_cmp);
    Ok((percentile(&levels, 0.95) - percentile(&levels, 0.10)).max(0.0))
}

/// Largest absolute change between consecutive momentary values, per second.
pub fn max_level_slope(audio: &AudioBuffer) -> Result<f64, MeterError> {
    max_level_slope_from(&sub_block_powers(audio)?)
}

fn max_level_slope_from(sub: &[f64]) -> Result<f64, MeterError> {
    if sub.len() < SLOPE_MIN_SUB_BLOCKS {
        return Err(MeterError::TooShort { needed_s: 0.8 });
    }
    let series: Vec<f64> = window_powers(sub, MOMENTARY_SUB_BLOCKS, 1)
        .into_iter()
        .map(|p| power_to_lufs(p).max(SLOPE_FLOOR_LUFS))
        .collect();
    Ok(series.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max) / SUB_BLOCK_S)
}

/// Sounding events per second, from the symbolic sequence.
pub fn onset_density(seq: &NoteSequence) -> f64 {
    if seq.total_duration_s <= 0.0 {
        return 0.0;
    }
    seq.events.len() as f64 / seq.total_duration_s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unavailable {
    BelowGate,
    TooShort,
}

/// A measured level, or the reason it could not be measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Level {
    Value(f64),
    Unavailable(Unavailable),
}

impl Level {
    pub fn value(self) -> Option<f64> {
        match self {
            Level::Value(v) => Some(v),
            Level::Unavailable(_) => None,
        }
    }

    fn from_result(r: Result<f64, MeterError>) -> Result<Level, MeterError> {
        match r {
            Ok(v) => Ok(Level::Value(v)),
            Err(MeterError::TooShort { .. }) => Ok(Level::Unavailable(Unavailable::TooShort)),
            Err(MeterError::AllBelowGate) => Ok(Level::Unavailable(Unavailable::BelowGate)),
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalMetrics {
    pub integrated_lufs: Level,
    pub loudness_range_lu: Level,
    pub onset_density_ev_s: f64,
    pub max_level_slope_db_s: Level,
}

/// All four diagnostics for one render.
pub fn measure(seq: &NoteSequence, audio: &AudioBuffer) -> Result<SignalMetrics, MeterError> {
    let sub = sub_block_powers(audio)?;
    let integrated = match integrated_loudness_from(&sub) {
        Err(MeterError::TooShort { .. }) => Level::Unavailable(Unavailable::TooShort),
        other => other?,
    };
    Ok(SignalMetrics {
        integrated_lufs: integrated,
        loudness_range_lu: Level::from_result(loudness_range_from(&sub))?,
        onset_density_ev_s: onset_density(seq),
        max_level_slope_db_s: Level::from_result(max_level_slope_from(&sub))?,
    })
}

/// Constrained minus baseline. Loudness deltas are `None` when either side
/// could not be measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaMetrics {
    pub d_onset_density: f64,
    pub d_lufs: Option<f64>,
    pub d_lra: Option<f64>,
}

impl DeltaMetrics {
    pub fn complete(&self) -> Result<[f64; 3], MeterError> {
        match (self.d_lufs, self.d_lra) {
            (Some(l), Some(r)) => Ok([self.d_onset_density, l, r]),
            _ => Err(MeterError::Unavailable),
        }
    }
}

pub fn delta_metrics(baseline: &SignalMetrics, constrained: &SignalMetrics) -> DeltaMetrics {
    let diff = |a: Level, b: Level| Some(b.value()? - a.value()?);
    DeltaMetrics {
        d_onset_density: constrained.onset_density_ev_s - baseline.onset_density_ev_s,
        d_lufs: diff(baseline.integrated_lufs, constrained.integrated_lufs),
        d_lra: diff(baseline.loudness_range_lu, constrained.loudness_range_lu),
    }
}

/// Momentary and short-term loudness contours for display. A series the
/// signal is too short for is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoudnessSeries {
    pub momentary_window_s: f64,
    pub momentary_hop_s: f64,
    pub momentary_lufs: Vec<f64>,
    pub short_term_window_s: f64,
    pub short_term_hop_s: f64,
    pub short_term_lufs: Vec<f64>,
}

impl LoudnessSeries {
    /// `(window end time, level)` pairs.
    pub fn momentary_points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (w, h) = (self.momentary_window_s, self.momentary_hop_s);
        self.momentary_lufs.iter().enumerate().map(move |(i, &v)| (w + h * i as f64, v))
    }

    pub fn short_term_points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (w, h) = (self.short_term_window_s, self.short_term_hop_s);
        self.short_term_lufs.iter().enumerate().map(move |(i, &v)| (w + h * i as f64, v))
    }
}

pub fn loudness_series(audio: &AudioBuffer) -> Result<LoudnessSeries, MeterError> {
    let sub = sub_block_powers(audio)?;
    let or_empty = |r: Result<Vec<f64>, MeterError>| match r {
        Err(MeterError::TooShort { .. }) => Ok(Vec::new()),
        other => other,
    };
    Ok(LoudnessSeries {
        momentary_window_s: MOMENTARY_SUB_BLOCKS as f64 * SUB_BLOCK_S,
        momentary_hop_s: SUB_BLOCK_S,
        momentary_lufs: or_empty(momentary_series_from(&sub))?,
        short_term_window_s: SHORT_TERM_SUB_BLOCKS as f64 * SUB_BLOCK_S,
        short_term_hop_s: SHORT_TERM_HOP_SUB_BLOCKS as f64 * SUB_BLOCK_S,
        short_term_lufs: or_empty(short_term_series_from(&sub))?,
    })
}

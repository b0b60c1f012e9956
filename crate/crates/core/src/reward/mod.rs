//! Reward generation: parameter derivation, template routing, composition on
//! the C-major pentatonic lanes, and offline rendering.

mod compose;
mod render;
mod template;
pub mod wav;

pub use compose::{compose, NoteEvent, NoteSequence};
pub use render::{render_audio, AudioBuffer, RenderError};
pub use template::{select_template, Direction, SequentialVariant, TemplateInstance, VariantPool};

use serde::{Deserialize, Serialize};

use crate::canonical::quantize;
use crate::envelope::EngineParams;
use crate::pattern::PatternFeatures;

/// Lane pitches in Hz: C4 D4 E4 G4 A4.
pub const PENTATONIC_HZ: [f64; 5] = [261.63, 293.66, 329.63, 392.00, 440.00];

pub const SAMPLE_RATE_HZ: u32 = 44_100;

/// Tempo at zero taps per second.
pub const TEMPO_BASE_BPM: f64 = 60.0;
/// Tempo added per tap per second.
pub const TEMPO_PER_TAP_RATE: f64 = 24.0;
/// Gain at zero mean intensity.
pub const GAIN_BASE_DB: f64 = -30.0;
/// Gain span across the intensity range [0, 1].
pub const GAIN_SPAN_DB: f64 = 35.0;

/// Maps aggregate features to requested engine parameters. Only the tap
/// rate, mean intensity and accent fraction are consulted.
///
/// Requests are expressed on the report's six-decimal grid, so a report's
/// requested values reproduce every clamp decision exactly.
pub fn derive_requested_params(features: &PatternFeatures) -> EngineParams {
    EngineParams {
        tempo_bpm: quantize(TEMPO_BASE_BPM + TEMPO_PER_TAP_RATE * features.tap_rate),
        gain_db: quantize(GAIN_BASE_DB + GAIN_SPAN_DB * features.mean_intensity),
        accent_ratio: quantize(features.accent_fraction),
    }
}

/// Synthesis voice shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Voice {
    /// Peak amplitude of an unaccented note before master gain.
    pub peak: f64,
    pub attack_s: f64,
    /// Time constant of the exponential amplitude decay.
    pub decay_s: f64,
    /// Linear fade appended after the note's nominal duration.
    pub release_s: f64,
    /// Velocity boost applied to accented notes.
    pub accent_db: f64,
}

impl Default for Voice {
    fn default() -> Self {
        // Worst case: an accented note at +5 dB master gain overlapping the
        // release of an equally loud predecessor stays below full scale:
        // 2 * 0.14 * 10^(6/20) * 10^(5/20) = 0.993.
        Voice { peak: 0.14, attack_s: 0.003, decay_s: 0.25, release_s: 0.06, accent_db: 6.0 }
    }
}

/// Everything that shapes the reward besides the per-session inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Engine {
    pub sample_rate_hz: u32,
    pub bar_count: u32,
    pub steps_per_bar: u32,
    pub voice: Voice,
    pub pool: VariantPool,
}

impl Default for Engine {
    fn default() -> Self {
        Engine {
            sample_rate_hz: SAMPLE_RATE_HZ,
            bar_count: 4,
            steps_per_bar: 8,
            voice: Voice::default(),
            pool: VariantPool::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(rate: f64, intensity: f64, accents: f64) -> PatternFeatures {
        PatternFeatures {
            lane_diversity: 0.5,
            dominant_lane_ratio: 0.5,
            sequential_coverage: 0.5,
            tap_rate: rate,
            mean_intensity: intensity,
            accent_fraction: accents,
            dominant_lane: 0,
        }
    }

    #[test]
    fn linear_maps() {
        let p = derive_requested_params(&features(2.5, 0.6, 0.2));
        assert!((p.tempo_bpm - 120.0).abs() < 1e-12);
        assert!((p.gain_db - -9.0).abs() < 1e-12);
        assert_eq!(p.accent_ratio, 0.2);
        assert_eq!(derive_requested_params(&features(175.0 / 60.0, 0.5, 0.0)).tempo_bpm, 130.0);
        assert_eq!(derive_requested_params(&features(0.0, 0.0, 0.0)).tempo_bpm, 60.0);
        assert!((derive_requested_params(&features(1.0, 1.0, 0.0)).gain_db - 5.0).abs() < 1e-12);
    }

    #[test]
    fn only_aggregate_features_matter() {
        let mut a = features(3.0, 0.7, 0.4);
        let p = derive_requested_params(&a);
        a.lane_diversity = 0.9;
        a.sequential_coverage = 0.0;
        a.dominant_lane = 3;
        assert_eq!(derive_requested_params(&a), p);
    }
}

use std::f64::consts::PI;

use super::{Engine, NoteSequence, PENTATONIC_HZ};

/// Mono floating-point audio, nominally within [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub sample_rate_hz: u32,
    pub samples: Vec<f64>,
}

impl AudioBuffer {
    pub fn new(sample_rate_hz: u32, samples: Vec<f64>) -> Self {
        AudioBuffer { sample_rate_hz, samples }
    }

    pub fn silence(sample_rate_hz: u32, duration_s: f64) -> Self {
        let n = (duration_s * sample_rate_hz as f64).round() as usize;
        AudioBuffer { sample_rate_hz, samples: vec![0.0; n] }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// 16-bit little-endian PCM, as written to wave files.
    pub fn pcm16(&self) -> Vec<i16> {
        self.samples.iter().map(|&x| (x * 32767.0).round().clamp(-32768.0, 32767.0) as i16).collect()
    }

    pub fn pcm16_bytes(&self) -> Vec<u8> {
        self.pcm16().iter().flat_map(|s| s.to_le_bytes()).collect()
    }

    /// SHA-256 of the 16-bit PCM byte stream.
    pub fn digest(&self) -> String {
        crate::canonical::sha256_hex(&self.pcm16_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("sample {index} reached {value:.4}; synthesis headroom is mis-calibrated")]
    ClippingDetected { index: usize, value: f64 },
    #[error("non-finite master gain")]
    NonFiniteGain,
}

/// Renders each note as a decaying sine at its lane pitch, sums overlapping
/// tails and applies the master gain. No normalization or limiting.
pub fn render_audio(seq: &NoteSequence, gain_db: f64, engine: &Engine) -> Result<AudioBuffer, RenderError> {
    if !gain_db.is_finite() {
        return Err(RenderError::NonFiniteGain);
    }
    let sr = engine.sample_rate_hz as f64;
    let v = &engine.voice;
    let mut buf = AudioBuffer::silence(engine.sample_rate_hz, seq.total_duration_s);
    let len = buf.samples.len();
    let accent_gain = 10f64.powf(v.accent_db / 20.0);

    for note in &seq.events {
        let start = (note.onset_s * sr).round() as usize;
        if start >= len {
            continue;
        }
        let amp = if note.accented { v.peak * accent_gain } else { v.peak };
        let w = 2.0 * PI * PENTATONIC_HZ[note.lane as usize];
        let span = ((note.duration_s + v.release_s) * sr).ceil() as usize;
        let end = (start + span).min(len);
        for (j, out) in buf.samples[start..end].iter_mut().enumerate() {
            let t = j as f64 / sr;
            let attack = (t / v.attack_s).min(1.0);
            let release = if t > note.duration_s { (1.0 - (t - note.duration_s) / v.release_s).max(0.0) } else { 1.0 };
            *out += amp * attack * release * (-t / v.decay_s).exp() * (w * t).sin();
        }
    }

    let g = 10f64.powf(gain_db / 20.0);
    for (index, x) in buf.samples.iter_mut().enumerate() {
        *x *= g;
        if x.abs() > 1.0 {
            return Err(RenderError::ClippingDetected { index, value: *x });
        }
    }
    Ok(buf)
}

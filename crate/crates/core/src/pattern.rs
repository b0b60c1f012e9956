//! Behavioral features and pattern routing labels.

use serde::{Deserialize, Serialize};

use crate::trace::{ActionTrace, Outcome, TraceError, LANE_COUNT};

/// Scores within this margin of the best score count as tied.
pub const TIE_MARGIN: f64 = 0.05;

/// Intensity above which a hit counts as accented.
pub const ACCENT_INTENSITY: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternFeatures {
    pub lane_diversity: f64,
    pub dominant_lane_ratio: f64,
    pub sequential_coverage: f64,
    pub tap_rate: f64,
    pub mean_intensity: f64,
    pub accent_fraction: f64,
    /// Most frequent lane, lowest index on ties.
    pub dominant_lane: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pattern {
    Sequential,
    Repetitive,
    Exploratory,
}

impl Pattern {
    /// Tie-break priority order, highest first.
    pub const PRIORITY: [Pattern; 3] = [Pattern::Sequential, Pattern::Repetitive, Pattern::Exploratory];

    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::Sequential => "Sequential",
            Pattern::Repetitive => "Repetitive",
            Pattern::Exploratory => "Exploratory",
        }
    }
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternLabel {
    pub label: Pattern,
    /// Scores in priority order: sequential, repetitive, exploratory.
    pub scores: [f64; 3],
    pub tie_break_applied: bool,
}

pub fn extract_features(trace: &ActionTrace) -> Result<PatternFeatures, TraceError> {
    let entries = &trace.entries;
    if entries.is_empty() {
        return Err(TraceError::EmptyTrace);
    }
    let n = entries.len() as f64;

    let mut counts = [0usize; LANE_COUNT as usize];
    for e in entries {
        counts[e.lane as usize] += 1;
    }
    let entropy: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    let lane_diversity = (entropy / (LANE_COUNT as f64).ln()).clamp(0.0, 1.0);

    let (dominant_lane, max_count) = counts
        .iter()
        .enumerate()
        .fold((0usize, 0usize), |best, (lane, &c)| if c > best.1 { (lane, c) } else { best });

    let sequential_coverage = if entries.len() < 2 {
        0.0
    } else {
        let steps = entries
            .windows(2)
            .filter(|w| (w[0].lane as i16 - w[1].lane as i16).abs() == 1)
            .count();
        steps as f64 / (n - 1.0)
    };

    let mean_intensity = entries.iter().map(|e| e.intensity).sum::<f64>() / n;
    let accents = entries
        .iter()
        .filter(|e| e.intensity > ACCENT_INTENSITY && e.outcome == Outcome::Hit)
        .count();

    Ok(PatternFeatures {
        lane_diversity,
        dominant_lane_ratio: max_count as f64 / n,
        sequential_coverage,
        tap_rate: n / trace.duration_s(),
        mean_intensity,
        accent_fraction: accents as f64 / n,
        dominant_lane: dominant_lane as u8,
    })
}

/// Labels a score triple `(sequential, repetitive, exploratory)`.
///
/// Every pattern whose score is within [`TIE_MARGIN`] of the maximum is in the
/// tied set; the highest-priority member of that set wins.
pub fn label_scores(scores: [f64; 3]) -> PatternLabel {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // A gap of exactly 0.05 between decimal scores is a tie; the slack absorbs
    // binary rounding of the subtraction.
    let within = |s: f64| max - s <= TIE_MARGIN + 1e-9;
    let tied: Vec<usize> = (0..3).filter(|&i| within(scores[i])).collect();
    let winner = tied[0];
    PatternLabel {
        label: Pattern::PRIORITY[winner],
        scores,
        tie_break_applied: tied.len() > 1,
    }
}

pub fn label_pattern(features: &PatternFeatures) -> PatternLabel {
    label_scores([features.sequential_coverage, features.dominant_lane_ratio, features.lane_diversity])
}

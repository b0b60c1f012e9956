use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::envelope::{config_hash, EnvelopeConfig, Parameter};
use crate::metrics::percentile;
use crate::report::SessionReport;

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClampCounts {
    pub tempo: usize,
    pub gain: usize,
    pub accent_ratio: usize,
    pub any: usize,
}

impl ClampCounts {
    pub fn get(&self, p: Parameter) -> usize {
        match p {
            Parameter::Tempo => self.tempo,
            Parameter::Gain => self.gain,
            Parameter::AccentRatio => self.accent_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lower: f64,
    pub upper: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins spanning the data; the last bin is closed.
    pub fn of(values: &[f64], bins: usize) -> Self {
        if values.is_empty() {
            return Histogram { lower: 0.0, upper: 0.0, counts: Vec::new() };
        }
        let lower = values.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lower == upper {
            return Histogram { lower, upper, counts: vec![values.len()] };
        }
        let width = (upper - lower) / bins as f64;
        let mut counts = vec![0; bins];
        for &v in values {
            let i = (((v - lower) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Histogram { lower, upper, counts }
    }

    pub fn edges(&self) -> Vec<(f64, f64)> {
        let n = self.counts.len();
        if n == 0 {
            return Vec::new();
        }
        let width = (self.upper - self.lower) / n as f64;
        (0..n).map(|i| (self.lower + width * i as f64, if i + 1 == n { self.upper } else { self.lower + width * (i + 1) as f64 })).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    /// Number of traces where the delta was available.
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub mean_abs: f64,
    pub min: f64,
    pub p05: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
    pub max: f64,
    pub histogram: Histogram,
}

impl DeltaSummary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return DeltaSummary {
                n,
                mean: 0.0,
                sd: 0.0,
                mean_abs: 0.0,
                min: 0.0,
                p05: 0.0,
                p25: 0.0,
                p50: 0.0,
                p75: 0.0,
                p95: 0.0,
                max: 0.0,
                histogram: Histogram::of(values, HISTOGRAM_BINS),
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        DeltaSummary {
            n,
            mean,
            sd: var.sqrt(),
            mean_abs: values.iter().map(|v| v.abs()).sum::<f64>() / n as f64,
            min: sorted[0],
            p05: percentile(&sorted, 0.05),
            p25: percentile(&sorted, 0.25),
            p50: percentile(&sorted, 0.50),
            p75: percentile(&sorted, 0.75),
            p95: percentile(&sorted, 0.95),
            max: sorted[n - 1],
            histogram: Histogram::of(values, HISTOGRAM_BINS),
        }
    }
}

/// Constrained onset density for one pattern label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub n: usize,
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl LabelSummary {
    pub fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        LabelSummary {
            n: sorted.len(),
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            q1: percentile(&sorted, 0.25),
            median: percentile(&sorted, 0.5),
            q3: percentile(&sorted, 0.75),
        }
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub config_name: String,
    pub config_hash: String,
    pub n: usize,
    pub clamp_counts: ClampCounts,
    pub clamp_rate_tempo: f64,
    pub clamp_rate_gain: f64,
    pub clamp_rate_accent_ratio: f64,
    pub any_clamp_rate: f64,
    /// Effective values outside their bounds; zero by construction.
    pub bound_violations: usize,
    pub d_onset_density: DeltaSummary,
    pub d_lufs: DeltaSummary,
    pub d_lra: DeltaSummary,
    /// Keyed by label name.
    pub onset_density_by_label: BTreeMap<String, LabelSummary>,
}

impl AggregateStats {
    pub fn from_reports(config: &EnvelopeConfig, reports: &[&SessionReport]) -> Self {
        let n = reports.len();
        let mut counts = ClampCounts::default();
        let mut violations = 0;
        for r in reports {
            let clamped = |p: Parameter| r.clamp_records.iter().any(|c| c.parameter == p && c.clamped);
            counts.tempo += clamped(Parameter::Tempo) as usize;
            counts.gain += clamped(Parameter::Gain) as usize;
            counts.accent_ratio += clamped(Parameter::AccentRatio) as usize;
            counts.any += r.clamp_records.iter().any(|c| c.clamped) as usize;
            violations += Parameter::ALL
                .iter()
                .filter(|&&p| !config.bounds(p).contains(r.effective.get(p)))
                .count();
        }
        let rate = |c: usize| if n == 0 { 0.0 } else { c as f64 / n as f64 };

        let collect = |f: &dyn Fn(&SessionReport) -> Option<f64>| reports.iter().filter_map(|r| f(r)).collect::<Vec<f64>>();
        let mut by_label: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in reports {
            by_label
                .entry(r.label.label.as_str().to_string())
                .or_default()
                .push(r.metrics_constrained.onset_density_ev_s);
        }

        AggregateStats {
            config_name: config.name.clone(),
            config_hash: config_hash(config),
            n,
            clamp_rate_tempo: rate(counts.tempo),
            clamp_rate_gain: rate(counts.gain),
            clamp_rate_accent_ratio: rate(counts.accent_ratio),
            any_clamp_rate: rate(counts.any),
            clamp_counts: counts,
            bound_violations: violations,
            d_onset_density: DeltaSummary::of(&collect(&|r| Some(r.deltas.d_onset_density))),
            d_lufs: DeltaSummary::of(&collect(&|r| r.deltas.d_lufs)),
            d_lra: DeltaSummary::of(&collect(&|r| r.deltas.d_lra)),
            onset_density_by_label: by_label.into_iter().map(|(k, v)| (k, LabelSummary::of(&v))).collect(),
        }
    }

    pub fn clamp_rate(&self, p: Parameter) -> f64 {
        match p {
            Parameter::Tempo => self.clamp_rate_tempo,
            Parameter::Gain => self.clamp_rate_gain,
            Parameter::AccentRatio => self.clamp_rate_accent_ratio,
        }
    }

    /// Mean absolute delta for the three monitored metrics, in the order
    /// onset density, integrated loudness, loudness range.
    pub fn mean_abs_deltas(&self) -> [f64; 3] {
        [self.d_onset_density.mean_abs, self.d_lufs.mean_abs, self.d_lra.mean_abs]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_everything() {
        let v: Vec<f64> = (0..100).map(|i| i as f64 / 10.0).collect();
        let h = Histogram::of(&v, 20);
        assert_eq!(h.counts.iter().sum::<usize>(), 100);
        assert_eq!(h.counts.len(), 20);
        assert_eq!(h.edges().last().unwrap().1, 9.9);
        let flat = Histogram::of(&[1.0, 1.0], 20);
        assert_eq!(flat.counts, vec![2]);
    }

    #[test]
    fn summary_values() {
        let s = DeltaSummary::of(&[-2.0, 0.0, 2.0]);
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.mean_abs, 4.0 / 3.0);
        assert_eq!(s.sd, 2.0);
        assert_eq!(s.p50, 0.0);
        let empty = DeltaSummary::of(&[]);
        assert_eq!(empty.n, 0);
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::{AggregateStats, LabelSummary};
use super::{HarnessError, PairedResult};
use crate::envelope::{EnvelopeConfig, Parameter};

pub const METRIC_NAMES: [&str; 3] = ["onset_density", "lufs", "lra"];

/// Share of the pooled IQR that two label medians must be apart.
pub const DISCRIMINABILITY_IQR_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monotonicity {
    pub passed: bool,
    /// Mean |delta| per metric, as [relaxed, default, tight].
    pub mean_abs: BTreeMap<String, [f64; 3]>,
    /// Metrics whose ordering was violated.
    pub violations: Vec<String>,
}

/// Mean |delta| must not decrease from the loosest config to the tightest.
/// All three aggregates must cover the same number of traces.
pub fn monotonicity_check(
    relaxed: &AggregateStats,
    default: &AggregateStats,
    tight: &AggregateStats,
) -> Result<Monotonicity, HarnessError> {
    if relaxed.n != default.n || default.n != tight.n {
        return Err(HarnessError::Incomparable(format!(
            "corpus sizes differ: {} / {} / {}",
            relaxed.n, default.n, tight.n
        )));
    }
    let (r, d, t) = (relaxed.mean_abs_deltas(), default.mean_abs_deltas(), tight.mean_abs_deltas());
    let mut mean_abs = BTreeMap::new();
    let mut violations = Vec::new();
    for (i, name) in METRIC_NAMES.iter().enumerate() {
        mean_abs.insert(name.to_string(), [r[i], d[i], t[i]]);
        if !(r[i] <= d[i] && d[i] <= t[i]) {
            violations.push(name.to_string());
        }
    }
    Ok(Monotonicity { passed: violations.is_empty(), mean_abs, violations })
}

/// Parameters whose clamp rate decreases somewhere along loose → tight.
pub fn clamp_rate_ordering(relaxed: &AggregateStats, default: &AggregateStats, tight: &AggregateStats) -> Vec<Parameter> {
    Parameter::ALL
        .into_iter()
        .filter(|&p| !(relaxed.clamp_rate(p) <= default.clamp_rate(p) && default.clamp_rate(p) <= tight.clamp_rate(p)))
        .collect()
}

/// Traces where some parameter's clamp distance shrinks from a looser to a
/// tighter config. Runs are given loosest first and matched by trace id.
pub fn nesting_dominance(runs: &[&[PairedResult]]) -> Result<Vec<String>, HarnessError> {
    let Some(first) = runs.first() else { return Ok(Vec::new()) };
    for r in runs {
        if r.len() != first.len() {
            return Err(HarnessError::Incomparable("runs cover different traces".into()));
        }
    }
    let mut offenders = Vec::new();
    for (i, base) in first.iter().enumerate() {
        let mut prev = [0.0; 3];
        let mut ok = true;
        for run in runs {
            let row = &run[i];
            if row.trace_id != base.trace_id || row.report.trace_digest != base.report.trace_digest {
                return Err(HarnessError::Incomparable(format!("row {i} is {} vs {}", row.trace_id, base.trace_id)));
            }
            let dist = row.report.clamp_records.map(|c| c.distance());
            ok &= dist.iter().zip(prev).all(|(d, p)| *d >= p);
            prev = dist;
        }
        if !ok {
            offenders.push(base.trace_id.clone());
        }
    }
    Ok(offenders)
}

/// Effective parameter values outside the config's bounds, as
/// `trace_id:parameter`.
pub fn bound_compliance(results: &[PairedResult], config: &EnvelopeConfig) -> Vec<String> {
    results
        .iter()
        .flat_map(|r| {
            Parameter::ALL
                .into_iter()
                .filter(|&p| !config.bounds(p).contains(r.report.effective.get(p)))
                .map(move |p| format!("{}:{}", r.trace_id, p.as_str()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discriminability {
    pub passed: bool,
    pub labels: BTreeMap<String, LabelSummary>,
    /// Mean of the per-label interquartile ranges.
    pub pooled_iqr: f64,
    pub threshold: f64,
    /// Smallest absolute difference between two label medians.
    pub min_median_gap: f64,
    /// Label pairs whose medians are within the threshold.
    pub failing_pairs: Vec<(String, String)>,
}

/// Constrained onset density per label: every pair of medians must differ by
/// more than a quarter of the pooled IQR.
pub fn discriminability_check(results: &[PairedResult]) -> Result<Discriminability, HarnessError> {
    let mut by_label: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in results {
        by_label
            .entry(r.report.label.label.as_str().to_string())
            .or_default()
            .push(r.report.metrics_constrained.onset_density_ev_s);
    }
    if by_label.len() < 2 {
        return Err(HarnessError::InsufficientLabels(by_label.len()));
    }
    let labels: BTreeMap<String, LabelSummary> =
        by_label.into_iter().map(|(k, v)| (k, LabelSummary::of(&v))).collect();
    let pooled_iqr = labels.values().map(LabelSummary::iqr).sum::<f64>() / labels.len() as f64;
    let threshold = DISCRIMINABILITY_IQR_FRACTION * pooled_iqr;
    let names: Vec<&String> = labels.keys().collect();
    let mut min_gap = f64::INFINITY;
    let mut failing_pairs = Vec::new();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            let gap = (labels[names[i]].median - labels[names[j]].median).abs();
            min_gap = min_gap.min(gap);
            if gap <= threshold {
                failing_pairs.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    Ok(Discriminability {
        passed: failing_pairs.is_empty(),
        labels,
        pooled_iqr,
        threshold,
        min_median_gap: min_gap,
        failing_pairs,
    })
}

mod common;

use proptest::prelude::*;
use tempered::corpus::{generate_trace, CorpusSpec};
use tempered::pattern::{label_scores, TIE_MARGIN};
use tempered::trace::LANE_COUNT;
use tempered::{extract_features, label_pattern, ActionTrace, Archetype, Outcome, Pattern, Provenance, TraceEntry};

fn trace(entries: Vec<(u8, f64, bool)>) -> ActionTrace {
    ActionTrace {
        trace_id: "p".into(),
        duration_ms: 60_000,
        entries: entries
            .into_iter()
            .enumerate()
            .map(|(k, (lane, i, hit))| {
                TraceEntry::new(k as u64 * 100, lane, i, if hit { Outcome::Hit } else { Outcome::Miss })
            })
            .collect(),
        provenance: Provenance::Live,
        archetype: None,
    }
}

fn entries() -> impl Strategy<Value = Vec<(u8, f64, bool)>> {
    prop::collection::vec((0..LANE_COUNT, 0.0f64..=1.0, any::<bool>()), 1..400)
}

/// Oracle for the tie rule: walk the priority order and take the first
/// pattern whose score is within the margin of the best.
fn oracle_label(s: [f64; 3]) -> (Pattern, bool) {
    let best = s.iter().cloned().fold(f64::MIN, f64::max);
    let tied: Vec<usize> = (0..3).filter(|&i| best - s[i] <= TIE_MARGIN + 1e-9).collect();
    let order = [Pattern::Sequential, Pattern::Repetitive, Pattern::Exploratory];
    (order[tied[0]], tied.len() >= 2)
}

#[test]
fn tie_break_fixtures_match_the_rule() {
    let bad = common::tie_break_mismatches();
    assert!(bad.is_empty(), "{bad:#?}");
    for &(scores, label, tie) in common::TIE_FIXTURES {
        assert_eq!(oracle_label(scores), (label, tie), "{scores:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn generated_entries_satisfy_invariants(seed in any::<u64>(), index in 0usize..30) {
        let spec = CorpusSpec::new(seed).with_per_archetype(10);
        let t = generate_trace(&spec, index);
        prop_assert!(!t.entries.is_empty());
        prop_assert!(t.entries.windows(2).all(|w| w[0].timestamp_ms <= w[1].timestamp_ms));
        for e in &t.entries {
            prop_assert!(e.timestamp_ms <= t.duration_ms);
            prop_assert!(e.lane < LANE_COUNT);
            prop_assert!((0.0..=1.0).contains(&e.intensity));
        }
        prop_assert_eq!(t.clone().validated().unwrap(), t.clone());
        prop_assert_eq!(generate_trace(&spec, index), t);
    }

    #[test]
    fn zero_noise_archetypes_label_as_built(seed in any::<u64>(), k in 0usize..10) {
        let spec = CorpusSpec::new(seed).with_per_archetype(10).noiseless();
        for index in [3 * k, 3 * k + 1] {
            let t = generate_trace(&spec, index);
            let label = label_pattern(&extract_features(&t).unwrap()).label;
            match t.archetype.unwrap() {
                Archetype::Sequential => prop_assert_eq!(label, Pattern::Sequential),
                Archetype::Repetitive => {
                    prop_assert_eq!(label, Pattern::Repetitive);
                    prop_assert!(t.entries.iter().all(|e| e.lane == t.entries[0].lane));
                }
                Archetype::Exploratory => unreachable!(),
            }
        }
    }

    #[test]
    fn features_are_in_range(e in entries()) {
        let f = extract_features(&trace(e)).unwrap();
        for v in [f.lane_diversity, f.dominant_lane_ratio, f.sequential_coverage, f.mean_intensity, f.accent_fraction] {
            prop_assert!(v.is_finite() && (0.0..=1.0).contains(&v));
        }
        prop_assert!(f.dominant_lane_ratio >= 1.0 / 5.0);
        prop_assert!(f.tap_rate >= 0.0);
    }

    #[test]
    fn lane_relabeling_keeps_diversity_and_dominance(e in entries(), perm in Just([0u8, 1, 2, 3, 4]).prop_shuffle()) {
        let a = extract_features(&trace(e.clone())).unwrap();
        let b = extract_features(&trace(e.into_iter().map(|(l, i, h)| (perm[l as usize], i, h)).collect())).unwrap();
        prop_assert!((a.lane_diversity - b.lane_diversity).abs() < 1e-12);
        prop_assert_eq!(a.dominant_lane_ratio, b.dominant_lane_ratio);
    }

    #[test]
    fn labels_follow_the_tie_rule(s in [0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0]) {
        let got = label_scores(s);
        prop_assert_eq!((got.label, got.tie_break_applied), oracle_label(s));
        prop_assert_eq!(label_scores(s), got);
    }
}

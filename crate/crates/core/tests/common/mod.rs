//! Shared property checks and fixtures for the envelope and tie-break tests.
//! Used by the focused property suites and by the acceptance target.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use tempered::envelope::{enforce, reconstruct, validate_tuning, EngineParams, EnvelopeConfig, ParamBounds, Parameter, Unit};
use tempered::pattern::label_scores;
use tempered::Pattern;

pub const UNITS: [Unit; 3] = [Unit::Bpm, Unit::Db, Unit::Ratio];

pub fn bounds() -> impl Strategy<Value = (f64, f64)> {
    (-300.0f64..300.0, 0.0f64..200.0).prop_map(|(lo, w)| (lo, lo + w))
}

pub fn config_of(name: &str, b: [(f64, f64); 3]) -> EnvelopeConfig {
    EnvelopeConfig {
        name: name.into(),
        tempo: ParamBounds::new(b[0].0, b[0].1, UNITS[0]),
        gain: ParamBounds::new(b[1].0, b[1].1, UNITS[1]),
        accent_ratio: ParamBounds::new(b[2].0, b[2].1, UNITS[2]),
        meta: None,
    }
}

pub fn config() -> impl Strategy<Value = EnvelopeConfig> {
    [bounds(), bounds(), bounds()].prop_map(|b| config_of("random", b))
}

/// An outer config and an inner config whose intervals it contains.
pub fn nested() -> impl Strategy<Value = (EnvelopeConfig, EnvelopeConfig)> {
    let pair = || {
        (bounds(), 0.0f64..=1.0, 0.0f64..=1.0).prop_map(|((lo, hi), a, b)| {
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            let at = |t: f64| (lo + t * (hi - lo)).clamp(lo, hi);
            ((lo, hi), (at(a), at(b)))
        })
    };
    [pair(), pair(), pair()].prop_map(|p| {
        (config_of("outer", [p[0].0, p[1].0, p[2].0]), config_of("inner", [p[0].1, p[1].1, p[2].1]))
    })
}

pub fn value() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, -400.0f64..400.0, Just(0.0), Just(-0.0), Just(f64::MAX), Just(f64::MIN)]
}

pub fn params() -> impl Strategy<Value = EngineParams> {
    (value(), value(), value()).prop_map(|(t, g, a)| EngineParams { tempo_bpm: t, gain_db: g, accent_ratio: a })
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

pub fn bound_compliance(p: &EngineParams, cfg: &EnvelopeConfig) -> Result<(), TestCaseError> {
    let (eff, _) = enforce(p, cfg).unwrap();
    for q in Parameter::ALL {
        check(cfg.bounds(q).contains(eff.get(q)), || format!("{q} {} outside {:?}", eff.get(q), cfg.bounds(q)))?;
    }
    Ok(())
}

pub fn idempotence(p: &EngineParams, cfg: &EnvelopeConfig) -> Result<(), TestCaseError> {
    let (once, _) = enforce(p, cfg).unwrap();
    let (twice, records) = enforce(&once, cfg).unwrap();
    check(once == twice, || format!("{once:?} != {twice:?}"))?;
    check(records.iter().all(|r| !r.clamped), || "second pass clamped".into())
}

/// Requested values drawn inside the bounds pass through untouched.
pub fn in_bounds_identity(cfg: &EnvelopeConfig, f: [f64; 3]) -> Result<(), TestCaseError> {
    let at = |q: Parameter, t: f64| {
        let b = cfg.bounds(q);
        b.clamp(b.lower + t * (b.upper - b.lower))
    };
    let p = EngineParams {
        tempo_bpm: at(Parameter::Tempo, f[0]),
        gain_db: at(Parameter::Gain, f[1]),
        accent_ratio: at(Parameter::AccentRatio, f[2]),
    };
    let (eff, records) = enforce(&p, cfg).unwrap();
    check(eff == p, || format!("{eff:?} != {p:?}"))?;
    check(records.iter().all(|r| !r.clamped && r.distance() == 0.0), || "in-bounds value clamped".into())
}

pub fn nesting_dominance(p: &EngineParams, outer: &EnvelopeConfig, inner: &EnvelopeConfig) -> Result<(), TestCaseError> {
    let (_, a) = enforce(p, inner).unwrap();
    let (_, b) = enforce(p, outer).unwrap();
    for (ra, rb) in a.iter().zip(&b) {
        check(ra.distance() >= rb.distance(), || {
            format!("{}: inner distance {} < outer {}", ra.parameter, ra.distance(), rb.distance())
        })?;
    }
    Ok(())
}

pub fn reconstruction(p: &EngineParams, cfg: &EnvelopeConfig) -> Result<(), TestCaseError> {
    let (eff, records) = enforce(p, cfg).unwrap();
    check(records.len() == 3, || "record count".into())?;
    check(records.map(|r| r.parameter) == Parameter::ALL, || "record order".into())?;
    check(reconstruct(&records) == eff, || "reconstruction differs".into())?;
    for r in &records {
        check(r.requested == p.get(r.parameter), || format!("{} requested not logged", r.parameter))?;
        check(r.clamped == (r.requested != r.effective), || format!("{} clamp flag", r.parameter))?;
    }
    Ok(())
}

pub fn tuning(proposed: &EnvelopeConfig, meta: &EnvelopeConfig) -> Result<(), TestCaseError> {
    let contained = Parameter::ALL.iter().all(|&q| meta.bounds(q).contains_interval(proposed.bounds(q)));
    let (outcome, event) = validate_tuning(proposed, meta);
    check(outcome.is_ok() == contained, || format!("accepted={} contained={contained}", outcome.is_ok()))?;
    check(event.excess.is_empty() == contained, || "excess list disagrees".into())?;
    for e in &event.excess {
        check(e.amount > 0.0, || "non-positive excess".into())?;
    }
    Ok(())
}

fn fmt<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| format!("{e}"))
}

/// Runs every envelope property for `cases` random cases each. Returns the
/// first failure per property.
pub fn run_envelope_properties(cases: u32) -> Vec<(&'static str, Result<(), String>)> {
    let runner = || TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    vec![
        ("bound compliance", fmt(runner().run(&(params(), config()), |(p, c)| bound_compliance(&p, &c)))),
        ("idempotence", fmt(runner().run(&(params(), config()), |(p, c)| idempotence(&p, &c)))),
        (
            "in-bounds identity",
            fmt(runner().run(&(config(), [0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0]), |(c, f)| in_bounds_identity(&c, f))),
        ),
        ("nesting dominance", fmt(runner().run(&(params(), nested()), |(p, (o, i))| nesting_dominance(&p, &o, &i)))),
        ("audit reconstruction", fmt(runner().run(&(params(), config()), |(p, c)| reconstruction(&p, &c)))),
        (
            "tuning containment",
            fmt(runner().run(&prop_oneof![nested().prop_map(|(o, i)| (i, o)), (config(), config())], |(p, m)| tuning(&p, &m))),
        ),
    ]
}

/// Labeled tie-break fixtures: scores (sequential, repetitive, exploratory),
/// expected label, expected tie flag.
pub const TIE_FIXTURES: &[([f64; 3], Pattern, bool)] = &[
    // clear argmax
    ([0.9, 0.3, 0.5], Pattern::Sequential, false),
    ([0.2, 0.8, 0.5], Pattern::Repetitive, false),
    ([0.1, 0.3, 0.9], Pattern::Exploratory, false),
    ([0.49, 0.55, 0.10], Pattern::Repetitive, false),
    // pairwise ties, including gaps of exactly 0.05
    ([0.52, 0.55, 0.10], Pattern::Sequential, true),
    ([0.50, 0.55, 0.10], Pattern::Sequential, true),
    ([0.55, 0.10, 0.60], Pattern::Sequential, true),
    ([0.10, 0.62, 0.60], Pattern::Repetitive, true),
    ([0.10, 0.55, 0.60], Pattern::Repetitive, true),
    ([0.70, 0.70, 0.10], Pattern::Sequential, true),
    // three-way ties
    ([0.50, 0.50, 0.50], Pattern::Sequential, true),
    ([0.50, 0.52, 0.55], Pattern::Sequential, true),
    ([0.95, 1.00, 0.97], Pattern::Sequential, true),
    // the tied set is measured from the maximum, not chained
    ([0.45, 0.50, 0.55], Pattern::Repetitive, true),
    ([0.40, 0.45, 0.50], Pattern::Repetitive, true),
    ([0.0, 0.0, 0.0], Pattern::Sequential, true),
];

/// Fixtures whose label disagrees with the rule, as readable strings.
pub fn tie_break_mismatches() -> Vec<String> {
    TIE_FIXTURES
        .iter()
        .filter_map(|&(scores, label, tie)| {
            let got = label_scores(scores);
            (got.label != label || got.tie_break_applied != tie).then(|| {
                format!("{scores:?}: got {} tie={} want {label} tie={tie}", got.label, got.tie_break_applied)
            })
        })
        .collect()
}

//! Benchmarks live in `benches/`. Shared fixtures are here.

use tempered::corpus::{generate_trace, CorpusSpec};
use tempered::ActionTrace;

/// One trace per archetype from the calibrated corpus.
pub fn fixture_traces() -> Vec<ActionTrace> {
    let spec = CorpusSpec::new(660);
    (0..3).map(|i| generate_trace(&spec, i)).collect()
}

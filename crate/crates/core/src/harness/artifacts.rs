//! On-disk run artifacts. Everything written here is a pure function of the
//! run, so re-running produces byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stats::{AggregateStats, DeltaSummary};
use super::{CorpusRun, HarnessError, PairedResult};
use crate::canonical::{self, format_decimal};
use crate::envelope::{config_hash, EnvelopeConfig, Parameter};
use crate::metrics::{loudness_series, Level, LoudnessSeries, Unavailable};
use crate::pipeline::run_session;
use crate::report::{deserialize_report, serialize_report, SessionReport};
use crate::reward::{wav, Engine};
use crate::trace::ActionTrace;

pub const RUN_MANIFEST: &str = "run.json";

/// Identity of a run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub config_name: String,
    pub config_hash: String,
    #[serde(with = "canonical::seed_string")]
    pub master_seed: u64,
    pub n: usize,
    /// Relative paths of every file written, sorted.
    pub files: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

fn write_file(root: &Path, rel: &str, bytes: &[u8], files: &mut Vec<String>) -> Result<(), HarnessError> {
    let path = root.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(&path, bytes).map_err(io_err(&path))?;
    files.push(rel.to_string());
    Ok(())
}

fn level_cell(l: Level) -> String {
    match l {
        Level::Value(v) => format_decimal(v),
        Level::Unavailable(Unavailable::BelowGate) => "below_gate".into(),
        Level::Unavailable(Unavailable::TooShort) => "too_short".into(),
    }
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(format_decimal).unwrap_or_default()
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let err = |e: csv::Error| HarnessError::Artifact(e.to_string());
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.into_inner().map_err(|e| HarnessError::Artifact(e.to_string()))
}

pub const RESULTS_HEADER: [&str; 25] = [
    "trace_id",
    "label",
    "tie_break_applied",
    "seed",
    "requested_tempo_bpm",
    "effective_tempo_bpm",
    "clamped_tempo",
    "requested_gain_db",
    "effective_gain_db",
    "clamped_gain",
    "requested_accent_ratio",
    "effective_accent_ratio",
    "clamped_accent_ratio",
    "baseline_lufs",
    "baseline_lra_lu",
    "baseline_onset_density",
    "baseline_max_slope_db_s",
    "constrained_lufs",
    "constrained_lra_lu",
    "constrained_onset_density",
    "constrained_max_slope_db_s",
    "d_onset_density",
    "d_lufs",
    "d_lra",
    "template_variant",
];

fn results_row(r: &SessionReport) -> Vec<String> {
    let mut row = vec![
        r.trace_id.clone(),
        r.label.label.as_str().to_string(),
        r.label.tie_break_applied.to_string(),
        r.seed.to_string(),
    ];
    for c in &r.clamp_records {
        row.push(format_decimal(c.requested));
        row.push(format_decimal(c.effective));
        row.push(c.clamped.to_string());
    }
    for m in [&r.metrics_baseline, &r.metrics_constrained] {
        row.push(level_cell(m.integrated_lufs));
        row.push(level_cell(m.loudness_range_lu));
        row.push(format_decimal(m.onset_density_ev_s));
        row.push(level_cell(m.max_level_slope_db_s));
    }
    row.push(format_decimal(r.deltas.d_onset_density));
    row.push(opt_cell(r.deltas.d_lufs));
    row.push(opt_cell(r.deltas.d_lra));
    row.push(r.template.variant_index.to_string());
    row
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn summary_text(stats: &AggregateStats, master_seed: u64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "config: {} ({})", stats.config_name, stats.config_hash);
    let _ = writeln!(s, "master seed: {master_seed}");
    let _ = writeln!(s, "traces: {}", stats.n);
    let _ = writeln!(s, "bound violations: {}", stats.bound_violations);
    let _ = writeln!(s);
    let _ = writeln!(s, "clamp rates");
    for p in Parameter::ALL {
        let _ = writeln!(s, "  {:<13} {:>6}  ({}/{})", p.as_str(), pct(stats.clamp_rate(p)), stats.clamp_counts.get(p), stats.n);
    }
    let _ = writeln!(s, "  {:<13} {:>6}  ({}/{})", "any", pct(stats.any_clamp_rate), stats.clamp_counts.any, stats.n);
    let _ = writeln!(s);
    let _ = writeln!(s, "deltas (constrained - baseline)");
    let _ = writeln!(s, "  {:<16} {:>5} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "metric", "n", "mean", "sd", "mean|d|", "p05", "p50", "p95");
    for (name, d) in delta_rows(stats) {
        let _ = writeln!(
            s,
            "  {:<16} {:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            name, d.n, d.mean, d.sd, d.mean_abs, d.p05, d.p50, d.p95
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "constrained onset density by label (events/s)");
    for (label, l) in &stats.onset_density_by_label {
        let _ = writeln!(s, "  {:<12} n={:<4} q1={:.4} median={:.4} q3={:.4}", label, l.n, l.q1, l.median, l.q3);
    }
    s
}

fn delta_rows(stats: &AggregateStats) -> [(&'static str, &DeltaSummary); 3] {
    [("d_onset_density", &stats.d_onset_density), ("d_lufs", &stats.d_lufs), ("d_lra", &stats.d_lra)]
}

/// Writes the per-trace CSV, summary, stats, scatter and histogram files,
/// the config, and one canonical report per trace.
pub fn emit_artifacts(run: &CorpusRun, out_dir: &Path) -> Result<RunArtifacts, HarnessError> {
    let mut files = Vec::new();
    let reports: Vec<&SessionReport> = run.results.iter().map(|r| &r.report).collect();

    write_file(out_dir, "results.csv", &csv_bytes(&RESULTS_HEADER, reports.iter().map(|r| results_row(r)))?, &mut files)?;
    write_file(out_dir, "summary.txt", summary_text(&run.stats, run.master_seed).as_bytes(), &mut files)?;
    let stats = canonical::to_bytes(&run.stats).map_err(|e| HarnessError::Artifact(e.to_string()))?;
    write_file(out_dir, "stats.json", &stats, &mut files)?;
    write_file(out_dir, "config.json", &run.config.to_canonical(), &mut files)?;

    for (i, p) in Parameter::ALL.into_iter().enumerate() {
        let rows = reports.iter().map(|r| {
            let c = &r.clamp_records[i];
            vec![r.trace_id.clone(), format_decimal(c.requested), format_decimal(c.effective), c.clamped.to_string()]
        });
        let bytes = csv_bytes(&["trace_id", "requested", "effective", "clamped"], rows)?;
        write_file(out_dir, &format!("scatter_{}.csv", p.as_str()), &bytes, &mut files)?;
    }
    for (name, d) in delta_rows(&run.stats) {
        let rows = d
            .histogram
            .edges()
            .into_iter()
            .zip(&d.histogram.counts)
            .map(|((lo, hi), c)| vec![format_decimal(lo), format_decimal(hi), c.to_string()]);
        let bytes = csv_bytes(&["lower", "upper", "count"], rows)?;
        write_file(out_dir, &format!("hist_{name}.csv"), &bytes, &mut files)?;
    }
    for r in &reports {
        write_file(out_dir, &format!("reports/{}.json", r.trace_id), &serialize_report(r), &mut files)?;
    }

    files.push(RUN_MANIFEST.to_string());
    files.sort();
    let manifest = RunArtifacts {
        config_name: run.config.name.clone(),
        config_hash: config_hash(&run.config),
        master_seed: run.master_seed,
        n: run.stats.n,
        files,
    };
    let bytes = canonical::to_bytes(&manifest).map_err(|e| HarnessError::Artifact(e.to_string()))?;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let path = out_dir.join(RUN_MANIFEST);
    std::fs::write(&path, bytes).map_err(io_err(&path))?;
    Ok(manifest)
}

fn series_csv(baseline: &LoudnessSeries, constrained: &LoudnessSeries, short_term: bool) -> Result<Vec<u8>, HarnessError> {
    let mut rows = Vec::new();
    for (cond, s) in [("baseline", baseline), ("constrained", constrained)] {
        let points: Vec<(f64, f64)> = if short_term { s.short_term_points().collect() } else { s.momentary_points().collect() };
        rows.extend(points.into_iter().map(|(t, v)| vec![cond.to_string(), format_decimal(t), format_decimal(v)]));
    }
    csv_bytes(&["condition", "time_s", "lufs"], rows)
}

/// Re-renders one trace and writes its momentary and short-term loudness
/// contours, plus both WAVs when `audio` is set.
pub fn write_loudness_series(
    trace: &ActionTrace,
    config: &EnvelopeConfig,
    seed: u64,
    engine: &Engine,
    out_dir: &Path,
    audio: bool,
) -> Result<Vec<PathBuf>, HarnessError> {
    let stage = |e: String| HarnessError::Artifact(format!("{}: {e}", trace.trace_id));
    let run = run_session(trace, config, seed, engine).map_err(|e| stage(e.to_string()))?;
    let b = loudness_series(&run.baseline.audio).map_err(|e| stage(e.to_string()))?;
    let c = loudness_series(&run.constrained.audio).map_err(|e| stage(e.to_string()))?;
    let mut files = Vec::new();
    let id = &trace.trace_id;
    write_file(out_dir, &format!("loudness/{id}_momentary.csv"), &series_csv(&b, &c, false)?, &mut files)?;
    write_file(out_dir, &format!("loudness/{id}_short_term.csv"), &series_csv(&b, &c, true)?, &mut files)?;
    if audio {
        for (cond, a) in [("baseline", &run.baseline.audio), ("constrained", &run.constrained.audio)] {
            let bytes = wav::to_bytes(a).map_err(|e| stage(e.to_string()))?;
            write_file(out_dir, &format!("wav/{id}_{cond}.wav"), &bytes, &mut files)?;
        }
    }
    Ok(files.into_iter().map(|f| out_dir.join(f)).collect())
}

/// Reads a run directory back: its config, manifest and reports, with the
/// aggregates recomputed from the reports.
pub fn load_run(dir: &Path) -> Result<(EnvelopeConfig, RunArtifacts, Vec<PairedResult>, AggregateStats), HarnessError> {
    let read = |p: PathBuf| std::fs::read(&p).map_err(|source| HarnessError::Io { path: p.display().to_string(), source });
    let bad = |what: &str, e: String| HarnessError::Artifact(format!("{}: {what}: {e}", dir.display()));
    let config = EnvelopeConfig::from_document(&read(dir.join("config.json"))?).map_err(|e| bad("config.json", e.to_string()))?;
    let manifest: RunArtifacts =
        serde_json::from_slice(&read(dir.join(RUN_MANIFEST))?).map_err(|e| bad(RUN_MANIFEST, e.to_string()))?;
    if manifest.config_hash != config_hash(&config) {
        return Err(bad("config.json", "hash differs from run manifest".into()));
    }
    let mut results = Vec::new();
    for rel in manifest.files.iter().filter(|f| f.starts_with("reports/")) {
        let report = deserialize_report(&read(dir.join(rel))?).map_err(|e| bad(rel, e.to_string()))?;
        if report.config_hash != manifest.config_hash {
            return Err(bad(rel, "report config differs from run config".into()));
        }
        results.push(PairedResult { trace_id: report.trace_id.clone(), config_name: config.name.clone(), report });
    }
    results.sort_by(|a, b| a.trace_id.cmp(&b.trace_id));
    if results.len() != manifest.n {
        return Err(bad("reports", format!("expected {} reports, found {}", manifest.n, results.len())));
    }
    let reports: Vec<&SessionReport> = results.iter().map(|r| &r.report).collect();
    let stats = AggregateStats::from_reports(&config, &reports);
    Ok((config, manifest, results, stats))
}

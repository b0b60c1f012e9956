//! Subcommand bodies. Each returns whether all of its checks passed.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::json;

use tempered::calibration::{calibrate, Grid, Targets};
use tempered::canonical;
use tempered::corpus::{read_corpus, write_corpus, CorpusSpec, IntensityModel};
use tempered::envelope::{preset, EnvelopeConfig, Preset};
use tempered::harness::{
    bound_compliance, clamp_rate_ordering, discriminability_check, emit_artifacts, load_run, monotonicity_check,
    nesting_dominance, run_corpus, trace_run_seed, write_loudness_series, AggregateStats, PairedResult,
};
use tempered::metrics::{integrated_loudness, loudness_range, max_level_slope};
use tempered::report::{deserialize_report, replay_verify, ReplayStatus};
use tempered::reward::{wav, Engine};
use tempered::store::{ConfigStore, TraceStore};

pub fn gen_corpus(seed: u64, out: &Path, total: usize) -> Result<bool> {
    if total == 0 || total % 3 != 0 {
        bail!("--total must be a positive multiple of 3 (one third per archetype), got {total}");
    }
    let spec = CorpusSpec::new(seed).with_per_archetype(total / 3);
    let traces = tempered::corpus::generate_corpus(&spec)?;
    let manifest = write_corpus(out, &spec, &traces)?;
    println!("wrote {} traces to {}", manifest.entries.len(), out.display());
    Ok(true)
}

/// A preset name or a path to a config document.
pub fn resolve_config(arg: &str) -> Result<EnvelopeConfig> {
    if let Some(p) = Preset::parse(arg) {
        return Ok(preset(p));
    }
    let bytes = std::fs::read(arg).with_context(|| format!("{arg:?} is neither a preset nor a readable file"))?;
    Ok(EnvelopeConfig::from_document(&bytes)?)
}

pub fn run(corpus_dir: &Path, config: &str, seed: u64, out: &Path, audio: bool, series: &[String]) -> Result<bool> {
    let config = resolve_config(config)?;
    let (_, traces) = read_corpus(corpus_dir)?;
    let engine = Engine::default();
    let run = run_corpus(&traces, &config, seed, &engine)?;
    let manifest = emit_artifacts(&run, out)?;
    for t in &traces {
        if audio || series.contains(&t.trace_id) {
            write_loudness_series(t, &config, trace_run_seed(seed, &t.trace_id), &engine, out, audio)?;
        }
    }
    for id in series {
        if !traces.iter().any(|t| &t.trace_id == id) {
            bail!("--series {id}: no such trace in the corpus");
        }
    }
    print!("{}", std::fs::read_to_string(out.join("summary.txt"))?);
    let violations = bound_compliance(&run.results, &config);
    println!("wrote {} files to {}", manifest.files.len(), out.display());
    if !violations.is_empty() {
        println!("FAIL bound compliance: {}", violations.join(", "));
    }
    Ok(violations.is_empty())
}

fn status(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Orders runs loosest first: by preset when all three presets are present,
/// otherwise in the order given.
fn order_runs(mut runs: Vec<LoadedRun>) -> Vec<LoadedRun> {
    let rank = |r: &LoadedRun| Preset::ALL.iter().position(|&p| preset(p) == r.config);
    if runs.iter().all(|r| rank(r).is_some()) {
        runs.sort_by_key(|r| rank(r));
    }
    runs
}

struct LoadedRun {
    dir: PathBuf,
    config: EnvelopeConfig,
    results: Vec<PairedResult>,
    stats: AggregateStats,
}

pub fn evaluate(dirs: &[PathBuf], out: Option<&Path>) -> Result<bool> {
    let mut runs = Vec::new();
    for dir in dirs {
        let (config, _, results, stats) = load_run(dir)?;
        runs.push(LoadedRun { dir: dir.clone(), config, results, stats });
    }
    let runs = order_runs(runs);
    let mut ok = true;
    let mut evidence = serde_json::Map::new();

    for r in &runs {
        let violations = bound_compliance(&r.results, &r.config);
        ok &= violations.is_empty();
        println!("{} bound compliance [{}]: {} violations", status(violations.is_empty()), r.config.name, violations.len());
        let d = discriminability_check(&r.results)?;
        ok &= d.passed;
        println!(
            "{} discriminability [{}]: min median gap {:.4} vs threshold {:.4}",
            status(d.passed),
            r.config.name,
            d.min_median_gap,
            d.threshold
        );
        evidence.insert(format!("{}:discriminability", r.config.name), serde_json::to_value(&d)?);
        evidence.insert(format!("{}:stats", r.config.name), serde_json::to_value(&r.stats)?);
        println!(
            "     clamp rates [{}]: tempo {:.3} gain {:.3} accent {:.3} any {:.3} (n={}, {})",
            r.config.name,
            r.stats.clamp_rate_tempo,
            r.stats.clamp_rate_gain,
            r.stats.clamp_rate_accent_ratio,
            r.stats.any_clamp_rate,
            r.stats.n,
            r.dir.display()
        );
    }

    if runs.len() == 3 {
        let (a, b, c) = (&runs[0].stats, &runs[1].stats, &runs[2].stats);
        let m = monotonicity_check(a, b, c)?;
        ok &= m.passed;
        for (name, v) in &m.mean_abs {
            println!("     mean |d {name}|: {:.4} <= {:.4} <= {:.4}", v[0], v[1], v[2]);
        }
        println!("{} monotonicity{}", status(m.passed), if m.passed { String::new() } else { format!(": {}", m.violations.join(", ")) });
        let order = clamp_rate_ordering(a, b, c);
        ok &= order.is_empty();
        println!("{} clamp-rate ordering", status(order.is_empty()));
        let slices: Vec<&[PairedResult]> = runs.iter().map(|r| r.results.as_slice()).collect();
        let offenders = nesting_dominance(&slices)?;
        ok &= offenders.is_empty();
        println!("{} nesting dominance: {} traces violate", status(offenders.is_empty()), offenders.len());
        evidence.insert("monotonicity".into(), serde_json::to_value(&m)?);
    } else {
        println!("     monotonicity needs exactly three runs (loose to tight); got {}", runs.len());
        ok &= runs.len() < 3;
    }

    if let Some(path) = out {
        let doc = json!({ "passed": ok, "evidence": evidence });
        std::fs::write(path, canonical::to_bytes(&doc)?).with_context(|| path.display().to_string())?;
    }
    println!("{}", if ok { "all checks passed" } else { "some checks failed" });
    Ok(ok)
}

pub fn replay(report_path: &Path, corpus_dir: &Path, configs_dir: Option<&Path>) -> Result<bool> {
    let bytes = std::fs::read(report_path).with_context(|| report_path.display().to_string())?;
    let report = deserialize_report(&bytes)?;
    let traces = TraceStore::from_dir(corpus_dir)?;
    let mut configs = ConfigStore::with_presets();
    if let Some(dir) = configs_dir {
        for cfg in collect_configs(dir)? {
            configs.insert(cfg);
        }
    }
    let result = replay_verify(&report, &traces, &configs, &Engine::default())?;
    println!("{}", canonical::to_string(&result)?);
    Ok(result.status == ReplayStatus::ExactMatch)
}

/// Config documents in `dir`, or `dir` itself when it is a file. Run
/// directories are recognized by their `config.json`.
fn collect_configs(dir: &Path) -> Result<Vec<EnvelopeConfig>> {
    if dir.is_file() {
        return Ok(vec![EnvelopeConfig::from_document(&std::fs::read(dir)?)?]);
    }
    ConfigStore::from_dir(dir).map(|s| s.into_configs()).or_else(|_| {
        let cfg = dir.join("config.json");
        Ok(vec![EnvelopeConfig::from_document(&std::fs::read(&cfg).with_context(|| cfg.display().to_string())?)?])
    })
}

pub fn meter(path: &Path) -> Result<bool> {
    let audio = wav::read(path)?;
    let level = |r: Result<f64, tempered::metrics::MeterError>| match r {
        Ok(v) => json!(v),
        Err(e) => json!(e.to_string()),
    };
    let doc = json!({
        "file": path.display().to_string(),
        "sample_rate_hz": audio.sample_rate_hz,
        "duration_s": audio.duration_s(),
        "integrated_lufs": serde_json::to_value(integrated_loudness(&audio)?)?,
        "loudness_range_lu": level(loudness_range(&audio)),
        "max_level_slope_db_s": level(max_level_slope(&audio)),
    });
    println!("{}", canonical::to_string(&doc)?);
    Ok(true)
}

pub fn calibrate_cmd(seed: u64, out: Option<&Path>) -> Result<bool> {
    let c = calibrate(&CorpusSpec::new(seed), &Grid::default(), &Targets::default())?;
    let b = &c.best;
    println!(
        "best: vigorous_fraction {} body Beta({}, {}) error {:.4}",
        b.model.vigorous_fraction, b.model.body_alpha, b.model.body_beta, b.error
    );
    println!("{}", canonical::to_string(&b.rates)?);
    if let Some(path) = out {
        std::fs::write(path, canonical::to_bytes(&c)?).with_context(|| path.display().to_string())?;
    }
    let pinned = b.model == IntensityModel::calibrated();
    println!("{} best candidate matches the pinned model", status(pinned));
    Ok(pinned)
}

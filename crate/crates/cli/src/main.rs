use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use tempered::calibration::CALIBRATION_SEED;
use tempered::corpus::read_corpus;
use tempered::reward::Engine;
use tempered::service::Service;
use tempered_cli::{commands, server};

#[derive(Parser)]
#[command(name = "tempered", version, about = "Constraint-first generative music rewards")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic trace corpus.
    GenCorpus {
        #[arg(long, default_value_t = CALIBRATION_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 660)]
        total: usize,
    },
    /// Paired baseline/constrained run over a corpus.
    Run {
        #[arg(long)]
        corpus: PathBuf,
        /// relaxed, default, tight, or a path to a config document.
        #[arg(long)]
        config: String,
        #[arg(long, default_value_t = CALIBRATION_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write baseline/constrained WAVs and loudness series for every trace.
        #[arg(long)]
        audio: bool,
        /// Write loudness series for this trace (repeatable).
        #[arg(long = "series", value_name = "TRACE_ID")]
        series: Vec<String>,
    },
    /// Aggregate runs and check monotonicity, ordering and discriminability.
    Evaluate {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        /// Write the evidence as canonical JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute a report from its trace, seed and config and compare.
    Replay {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Directory of config documents (or a run directory); presets are always known.
        #[arg(long)]
        configs: Option<PathBuf>,
    },
    /// Loudness metrics of a WAV file.
    Meter {
        #[arg(long)]
        wav: PathBuf,
    },
    /// Serve the HTTP interface.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = CALIBRATION_SEED)]
        seed: u64,
    },
    /// Re-run the generator calibration grid search.
    Calibrate {
        #[arg(long, default_value_t = CALIBRATION_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn serve(port: u16, corpus: Option<PathBuf>, seed: u64) -> Result<bool> {
    let mut service = Service::new(Engine::default(), seed);
    if let Some(dir) = corpus {
        let (_, traces) = read_corpus(&dir)?;
        service = service.with_traces(traces);
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await.with_context(|| format!("bind port {port}"))?;
        println!("listening on {}", listener.local_addr()?);
        axum::serve(listener, server::router(service)).await?;
        Ok(true)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::GenCorpus { seed, out, total } => commands::gen_corpus(seed, &out, total),
        Command::Run { corpus, config, seed, out, audio, series } => {
            commands::run(&corpus, &config, seed, &out, audio, &series)
        }
        Command::Evaluate { runs, out } => commands::evaluate(&runs, out.as_deref()),
        Command::Replay { report, corpus, configs } => commands::replay(&report, &corpus, configs.as_deref()),
        Command::Meter { wav } => commands::meter(&wav),
        Command::Serve { port, corpus, seed } => serve(port, corpus, seed),
        Command::Calibrate { seed, out } => commands::calibrate_cmd(seed, out.as_deref()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

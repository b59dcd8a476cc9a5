//! `bgsfuse`: experiments on pixelwise fusion of background-subtraction masks.

mod commands;
mod config;
mod data;
mod error;
mod lock;
mod svg;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::search::SearchArgs;
use crate::commands::synth::SynthArgs;
use crate::config::{ConfigFile, Overrides, ReferencePoint, RunConfig};
use crate::error::CliError;
use crate::lock::OutputLock;

#[derive(Parser)]
#[command(
    name = "bgsfuse",
    version,
    about = "Pixelwise combination of background-subtraction algorithms"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Corpus root containing `corpus.json`.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Largest selection size.
    #[arg(long = "k-max", global = true)]
    k_max: Option<usize>,
    /// Strategies, comma separated or repeated: majority-vote, prop-fg, averaged-bayes, bks.
    #[arg(long, global = true, value_delimiter = ',')]
    strategy: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Build or refresh the per-video histogram caches.
    Ingest,
    /// Score a combiner file and write a metrics report.
    Evaluate {
        #[arg(long)]
        combiner: PathBuf,
    },
    /// Plot individual points and achievable regions in the weighted ROC plane.
    Roc {
        /// Extra reference point `NAME:FPR:TPR[:F1]`; repeatable.
        #[arg(long = "reference")]
        references: Vec<String>,
    },
    /// Exhaustive search for the best selection per strategy and size.
    Search {
        /// Evaluate only this selection (algorithm names joined by '+').
        #[arg(long)]
        selection: Option<String>,
        /// Threshold for `--selection`; the best threshold is used otherwise.
        #[arg(long)]
        tau: Option<f64>,
        /// Stop after this many selections per strategy; rerun to resume.
        #[arg(long)]
        budget: Option<u64>,
        /// Emit JSON-lines progress events on stderr.
        #[arg(long)]
        progress: bool,
    },
    /// Generate a synthetic corpus into the output directory.
    Synth {
        #[arg(long, default_value_t = 4)]
        algorithms: usize,
        #[arg(long, default_value_t = 2)]
        categories: usize,
        #[arg(long, default_value_t = 2)]
        videos: usize,
        #[arg(long, default_value_t = 2)]
        frames: usize,
        /// Frame width and height in pixels.
        #[arg(long, default_value_t = 48)]
        size: usize,
        #[arg(long, default_value_t = 0.2)]
        correlation: f64,
        #[arg(long = "fg-prior", default_value_t = 0.2)]
        fg_prior: f64,
    },
    /// Print selection and combiner counts.
    Count {
        /// Number of algorithms; read from the corpus manifest when `--corpus` is given.
        #[arg(long)]
        algorithms: Option<usize>,
    },
}

fn resolve(global: GlobalArgs) -> Result<RunConfig, CliError> {
    let file = match &global.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let flags = Overrides {
        corpus: global.corpus,
        out: global.out,
        strategies: global.strategy,
        k_max: global.k_max,
        workers: global.workers,
        seed: global.seed,
    };
    RunConfig::resolve(file, flags)
}

fn check_out_dir(cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(corpus) = &cfg.corpus {
        let same = match (corpus.canonicalize(), cfg.out.canonicalize()) {
            (Ok(a), Ok(b)) => a == b,
            _ => corpus == &cfg.out,
        };
        if same {
            return Err(CliError::config(
                "the output directory must differ from the corpus root",
            ));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<String, CliError> {
    let cfg = resolve(cli.global)?;
    if let Command::Count { algorithms } = &cli.command {
        let n = match (algorithms, &cfg.corpus) {
            (Some(n), _) => *n,
            (None, Some(root)) => bgsfuse::corpus::read_manifest(root)?.algorithms.len(),
            (None, None) => 26,
        };
        let k_max = cfg.k_max.unwrap_or(n.min(9));
        let mut out = Vec::new();
        commands::count::run(n, k_max, &mut out)?;
        return Ok(String::from_utf8(out).expect("ascii output"));
    }
    if !matches!(cli.command, Command::Synth { .. }) {
        check_out_dir(&cfg)?;
    }
    let _lock = OutputLock::acquire(&cfg.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Data(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Ingest => commands::ingest::run(&cfg),
        Command::Evaluate { combiner } => commands::evaluate::run(&cfg, &combiner),
        Command::Roc { references } => {
            let refs = references
                .iter()
                .map(|r| ReferencePoint::parse(r))
                .collect::<Result<Vec<_>, _>>()?;
            commands::roc::run(&cfg, &refs)
        }
        Command::Search {
            selection,
            tau,
            budget,
            progress,
        } => commands::search::run(
            &cfg,
            &SearchArgs {
                selection,
                tau,
                budget,
                progress,
            },
        ),
        Command::Synth {
            algorithms,
            categories,
            videos,
            frames,
            size,
            correlation,
            fg_prior,
        } => commands::synth::run(
            &cfg,
            &SynthArgs {
                algorithms,
                categories,
                videos,
                frames,
                size,
                correlation,
                fg_prior,
            },
        ),
        Command::Count { .. } => unreachable!("handled above"),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bgsfuse: {e}");
            e.exit_code()
        }
    }
}

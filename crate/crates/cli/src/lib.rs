//! Command-line front end for the `pfkit` pipeline.

pub mod commands;
pub mod config;
pub mod error;
pub mod logging;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pfkit::synthetic::{generate, SyntheticParams};

use crate::config::{Overrides, RunConfig};
use crate::error::{exit, CliError, CliResult};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage error (bad flags or arguments)
  3  configuration error (missing key, unknown preset, missing input file)
  4  missing upstream artifact (run the earlier stage first)
  5  schema violation in an input or artifact (line number reported)
  6  validation error (data unusable, e.g. a class with no training users)
  7  I/O error

Failures print one JSON line {\"level\",\"kind\",\"code\",\"message\"} to stderr.
Environment: PF_CONFIG, PF_SEED, PF_WORKERS, PF_OUT, PF_LOG.";

#[derive(Debug, Parser)]
#[command(
    name = "pfkit",
    version,
    about = "Personality-class detection pipeline for labeled microblog corpora",
    after_help = EXIT_CODES
)]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, env = "PF_CONFIG")]
    pub config: Option<PathBuf>,

    /// Master seed; overrides the config file.
    #[arg(long, global = true, env = "PF_SEED")]
    pub seed: Option<u64>,

    /// Worker threads for per-user and per-tree parallelism (default: all cores).
    #[arg(long, global = true, env = "PF_WORKERS")]
    pub workers: Option<usize>,

    /// Output directory; overrides `paths.output`.
    #[arg(long, global = true, env = "PF_OUT")]
    pub out: Option<PathBuf>,

    /// Log level for the JSON log lines on stderr.
    #[arg(long, global = true, env = "PF_LOG", default_value = "info")]
    pub log: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read the corpus, resolve labels, filter users and draw the split.
    Ingest,
    /// Compute per-user features for every eligible user.
    Featurize,
    /// Train the URL, hashtag and mention embedders on the training split.
    EmbedTrain,
    /// Train one model per configured preset and classifier.
    Train,
    /// Run every stage and evaluate the full preset grid.
    Ablate,
    /// Compute the per-class analysis tables.
    Analyze,
    /// Render tables, plot data and report.md from earlier stages.
    Report,
    /// Write a synthetic corpus, word vectors and a matching config.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Destination directory.
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub users_per_class: usize,
    #[arg(long, default_value_t = 30)]
    pub tweets_per_user: usize,
    #[arg(long, default_value_t = 16)]
    pub vector_dim: usize,
}

fn run_synth(args: &SynthArgs, seed: Option<u64>) -> CliResult<()> {
    let params = SyntheticParams {
        users_per_class: args.users_per_class,
        tweets_per_user: args.tweets_per_user,
        vector_dim: args.vector_dim,
        seed: seed.unwrap_or(SyntheticParams::default().seed),
        ..SyntheticParams::default()
    };
    let corpus = generate(&params)?;
    corpus.write(&args.dir)?;
    let train = args.users_per_class * 4 / 5;
    let config = format!(
        "seed = {}\n\n[paths]\ncorpus = \"corpus.jsonl\"\nword_vectors = \"vectors.txt\"\noutput = \"out\"\n\n\
         [sampling]\ntrain_per_class = {train}\ntest_per_class = {}\n\n\
         [thresholds]\nmin_english_tweets = {}\n",
        params.seed,
        args.users_per_class - train,
        args.tweets_per_user * 2 / 3,
    );
    let path = args.dir.join("config.toml");
    std::fs::write(&path, config).map_err(|e| pfkit::Error::io(&path, e))?;
    log::info!("synth: {} users written to {}", corpus.users.len(), args.dir.display());
    Ok(())
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    if let Command::Synth(args) = &cli.command {
        return run_synth(args, cli.seed);
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("no config file; pass --config or set PF_CONFIG"))?;
    let overrides = Overrides {
        seed: cli.seed,
        output: cli.out.clone(),
    };
    let cfg = RunConfig::load(path, &overrides)?;
    log::info!("seed {} output {}", cfg.seed, cfg.paths.output.display());
    match cli.command {
        Command::Ingest => commands::ingest(&cfg).map(drop),
        Command::Featurize => commands::stage::featurize(&cfg),
        Command::EmbedTrain => commands::stage::embed_train(&cfg),
        Command::Train => commands::stage::train(&cfg),
        Command::Ablate => commands::ablate(&cfg).map(drop),
        Command::Analyze => commands::stage::analyze(&cfg),
        Command::Report => commands::stage::report(&cfg),
        Command::Synth(_) => unreachable!("handled above"),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    logging::init(Some(&cli.log));
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("{}", CliError::config("--workers must be at least 1").to_json_line());
            return exit::CONFIG;
        }
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already initialized; --workers ignored");
        }
    }
    match dispatch(&cli) {
        Ok(()) => exit::OK,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("{}", e.to_json_line());
            e.exit_code()
        }
    }
}

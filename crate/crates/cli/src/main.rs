//! `relcur` — the end-to-end pipeline driver.
//!
//! Commands compose through files in the output directory:
//!
//! ```text
//! generate  -> train.jsonl, train.latent.jsonl, test.jsonl, test.latent.jsonl
//! annotate  -> <dataset>.annotations.jsonl        (synthetic or remote oracle)
//! partition -> <dataset>.split.json               (accepted/rejected + histogram)
//! train     -> model-<regime>.json, train-report-<regime>.json
//! evaluate  -> <checkpoint>.eval.json             (+ rendered table on stdout)
//! sweep     -> sweep-report.json
//! ```
//!
//! Every artifact embeds (directly or via its `.meta.json` sidecar) the hash
//! of the pipeline configuration that produced it; commands warn when input
//! hashes disagree with the active configuration.

mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use relcur_core::{Error, Regime};

use pipeline::{LabelChoice, PipelineConfig};

/// Environment variable naming the remote annotator endpoint; when unset
/// (and no endpoint is configured) the built-in synthetic oracle is used.
const ENDPOINT_ENV: &str = "RELCUR_ANNOTATOR_URL";

#[derive(Parser)]
#[command(
    name = "relcur",
    version,
    about = "Reliability-guided training pipeline for ordinal labels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Pipeline configuration file (JSON); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override every stage seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for pipeline artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate blind train/test datasets with label noise and latent sidecars.
    Generate,
    /// Annotate a dataset with the oracle; resumes from the cache file.
    Annotate {
        /// Dataset to annotate; defaults to `<out>/train.jsonl`.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Split an annotated dataset by oracle/label agreement.
    Partition {
        /// Dataset to split; defaults to `<out>/train.jsonl`.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Annotations; defaults to `<dataset>.annotations.jsonl`.
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
    /// Train one regime (or all three) and write checkpoints plus reports.
    Train {
        /// Training dataset; defaults to `<out>/train.jsonl`.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Annotations; defaults to `<dataset>.annotations.jsonl`.
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Regime to run; defaults to the configured one.
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
        /// Train at alpha in {0.5, 0.6, 0.7, 0.8, 0.9} and tabulate.
        #[arg(long)]
        sweep_alpha: bool,
    },
    /// Score a checkpoint on a dataset with an accepted/rejected split.
    Evaluate {
        /// Checkpoint file; defaults to `<out>/model-two_stage.json`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Evaluation dataset; defaults to `<out>/test.jsonl`.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Split file; defaults to `<dataset>.split.json`.
        #[arg(long)]
        split: Option<PathBuf>,
        /// Which labels to score against. `auto` uses pristine sidecar
        /// labels when present, observed labels otherwise.
        #[arg(long, value_enum, default_value_t = LabelChoiceArg::Auto)]
        labels: LabelChoiceArg,
    },
    /// Sweep the ambiguous-sample weight and tabulate outcomes.
    Sweep {
        /// Training dataset; defaults to `<out>/train.jsonl`.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Annotations; defaults to `<dataset>.annotations.jsonl`.
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    Baseline,
    OneStage,
    TwoStage,
    All,
}

impl RegimeArg {
    fn regimes(self) -> Vec<Regime> {
        match self {
            RegimeArg::Baseline => vec![Regime::Baseline],
            RegimeArg::OneStage => vec![Regime::OneStage],
            RegimeArg::TwoStage => vec![Regime::TwoStage],
            RegimeArg::All => vec![Regime::Baseline, Regime::OneStage, Regime::TwoStage],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LabelChoiceArg {
    Auto,
    Pristine,
    Observed,
}

impl From<LabelChoiceArg> for LabelChoice {
    fn from(arg: LabelChoiceArg) -> Self {
        match arg {
            LabelChoiceArg::Auto => LabelChoice::Auto,
            LabelChoiceArg::Pristine => LabelChoice::Pristine,
            LabelChoiceArg::Observed => LabelChoice::Observed,
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) => 2,
        Error::DataIntegrity(_) => 3,
        Error::TrainingDiverged { .. } => 4,
        Error::AnnotationUnavailable(_) | Error::Protocol { .. } => 5,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.override_seed(seed);
    }
    config.validate()?;
    std::fs::create_dir_all(&cli.out)?;

    let endpoint_url = std::env::var(ENDPOINT_ENV)
        .ok()
        .filter(|v| !v.is_empty())
        .or_else(|| config.annotator.endpoint.clone());

    let ctx = pipeline::Context::new(config, cli.out, endpoint_url)?;
    match cli.command {
        Command::Generate => ctx.generate(),
        Command::Annotate { dataset } => ctx.annotate(dataset),
        Command::Partition {
            dataset,
            annotations,
        } => ctx.partition(dataset, annotations),
        Command::Train {
            dataset,
            annotations,
            regime,
            sweep_alpha,
        } => {
            let regimes = regime
                .map(RegimeArg::regimes)
                .unwrap_or_else(|| vec![ctx.config.train.regime]);
            ctx.train(dataset, annotations, &regimes, sweep_alpha)
        }
        Command::Evaluate {
            checkpoint,
            dataset,
            split,
            labels,
        } => ctx.evaluate(checkpoint, dataset, split, labels.into()),
        Command::Sweep {
            dataset,
            annotations,
        } => ctx.sweep(dataset, annotations),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

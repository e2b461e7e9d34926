//! `callsum` — the earnings-call summarization pipeline as subcommands
//! over line-delimited artifacts. Exit codes: 0 success, 2 usage error,
//! 3 missing input, 4 config or record parse failure, 1 anything else.

mod config;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use stages::StageError;

#[derive(Debug, Parser)]
#[command(name = "callsum", version, about = "Earnings-call summarization pipeline")]
struct Cli {
    /// Cap the worker thread pool (results never depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON config file supplying defaults; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args, Default)]
struct ConfigOverrides {
    /// Random seed for splits, init, and batch order.
    #[arg(long)]
    seed: Option<u64>,
    /// Sentence encoder: `lexical` or `precomputed:<path>`.
    #[arg(long)]
    encoder: Option<String>,
    /// Bucket count for the hashed lexical encoder.
    #[arg(long)]
    hash_size: Option<usize>,
    /// Project lexical vectors down to this dimension (0 = off).
    #[arg(long)]
    embed_dim: Option<usize>,
    /// Word budget for summary selection.
    #[arg(long)]
    budget: Option<usize>,
    /// Cap on articles merged into one summary (0 = unlimited).
    #[arg(long)]
    max_merge: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Early-stop patience in epochs (0 = train to the end).
    #[arg(long)]
    patience: Option<usize>,
    /// Rewrite backend: `identity`, `rules`, or `subprocess:<cmd>`.
    #[arg(long)]
    backend: Option<String>,
}

impl ConfigOverrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.encoder {
            cfg.encoder = v.clone();
        }
        if let Some(v) = self.hash_size {
            cfg.hash_size = v;
        }
        if let Some(v) = self.embed_dim {
            cfg.embed_dim = v;
        }
        if let Some(v) = self.budget {
            cfg.word_budget = v;
        }
        if let Some(v) = self.max_merge {
            cfg.max_merge = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.patience {
            cfg.patience = v;
        }
        if let Some(v) = &self.backend {
            cfg.backend = v.clone();
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean raw transcripts and articles.
    Ingest {
        #[arg(long)]
        transcripts: PathBuf,
        #[arg(long)]
        articles: PathBuf,
        #[arg(long)]
        out_transcripts: PathBuf,
        #[arg(long)]
        out_articles: PathBuf,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Pair transcripts with same-window articles.
    Pair {
        #[arg(long)]
        transcripts: PathBuf,
        #[arg(long)]
        articles: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Seeded 70/10/20 corpus split.
    Split {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Corpus statistics report.
    Stats {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        table: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Oracle extractive labels and paraphrase pairs.
    Labels {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out_labels: PathBuf,
        #[arg(long)]
        out_paraphrase: PathBuf,
        /// Also export the rewrite-backend training set here.
        #[arg(long)]
        out_rewrite_training: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Train the extractive model.
    Train {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        out_model: PathBuf,
        #[arg(long)]
        out_log: PathBuf,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Extractive summaries from a trained model.
    Summarize {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        subset: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Rewrite extractive predictions into telegram-style bullets.
    Paraphrase {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Unsupervised and oracle reference summarizers.
    Baseline {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        method: String,
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        subset: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Score predictions against references.
    Evaluate {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        subset: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        table: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Run every stage end to end into a working directory.
    Pipeline {
        #[arg(long)]
        transcripts: PathBuf,
        #[arg(long)]
        articles: PathBuf,
        #[arg(long)]
        workdir: PathBuf,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, StageError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|_| StageError::MissingInput(path.clone()))?;
            serde_json::from_str(&text)
                .map_err(|e| StageError::Config(format!("{}: {e}", path.display())))
        }
    }
}

fn run(cli: Cli) -> Result<(), StageError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| StageError::Config(e.to_string()))?;
    }
    let base = load_config(cli.config.as_ref())?;

    let with_overrides = |overrides: &ConfigOverrides| {
        let mut cfg = base.clone();
        overrides.apply(&mut cfg);
        cfg
    };

    match &cli.command {
        Command::Ingest {
            transcripts,
            articles,
            out_transcripts,
            out_articles,
            overrides,
        } => {
            let cfg = with_overrides(overrides);
            let report =
                stages::ingest(transcripts, articles, out_transcripts, out_articles, &cfg)?;
            println!(
                "ingested {} transcripts ({} rejected), {} articles",
                report.transcripts, report.rejected, report.articles
            );
        }
        Command::Pair {
            transcripts,
            articles,
            out,
            overrides,
        } => {
            let cfg = with_overrides(overrides);
            let n = stages::pair(transcripts, articles, out, &cfg)?;
            println!("paired {n} documents");
        }
        Command::Split {
            pairs,
            out,
            overrides,
        } => {
            let cfg = with_overrides(overrides);
            stages::split(pairs, out, &cfg)?;
            println!("split written to {}", out.display());
        }
        Command::Stats {
            pairs,
            out,
            table,
            overrides,
        } => {
            let cfg = with_overrides(overrides);
            let rendered = stages::stats(pairs, out, table.as_deref(), &cfg)?;
            print!("{rendered}");
        }
        Command::Labels {
            pairs,
            out_labels,
            out_paraphrase,
            out_rewrite_training,
            overrides,
        } => {
            let cfg = with_overrides(overrides);
            let report = stages::labels_stage(
                pairs,
                out_labels,
                out_paraphrase,
                out_rewrite_training.as_deref(),
                &cfg,
            )?;
            println!(
                "labeled {} pairs, {} paraphrase pairs ({} dropped for key containment)",
                report.pairs, report.paraphrase_pairs, report.containment_drops
            );
        }
        Command::Train {
            pairs,
            labels,
            split,
            out_model,
            out_log,
            overrides,
        } => {
            let cfg = with_overrides(overrides);
            let epochs = stages::train_stage(pairs, labels, split, out_model, out_log, &cfg)?;
            println!(
                "trained for {epochs} epochs, model at {}",
                out_model.display()
            );
        }
        Command::Summarize {
            pairs,
            model,
            split,
            subset,
            out,
            overrides,
        } => {
            let cfg = with_overrides(overrides);
            let n = stages::summarize(pairs, model, split.as_deref(), subset, out, &cfg)?;
            println!("summarized {n} documents");
        }
        Command::Paraphrase {
            pairs,
            predictions,
            out,
            overrides,
        } => {
            let cfg = with_overrides(overrides);
            let report = stages::paraphrase_stage(pairs, predictions, out, &cfg)?;
            println!(
                "paraphrased {} predictions into {} bullets ({} value losses)",
                report.predictions, report.bullets, report.value_losses
            );
        }
        Command::Baseline {
            pairs,
            method,
            split,
            subset,
            out,
            overrides,
        } => {
            let cfg = with_overrides(overrides);
            let n = stages::baseline(pairs, method, split.as_deref(), subset, out, &cfg)?;
            println!("{method} baseline over {n} documents");
        }
        Command::Evaluate {
            pairs,
            predictions,
            split,
            subset,
            out,
            table,
            overrides,
        } => {
            let cfg = with_overrides(overrides);
            let report = stages::evaluate_stage(
                pairs,
                predictions,
                split.as_deref(),
                subset,
                out,
                table.as_deref(),
                &cfg,
            )?;
            print!("{}", report.render_table());
        }
        Command::Pipeline {
            transcripts,
            articles,
            workdir,
            overrides,
        } => {
            let cfg = with_overrides(overrides);
            let summary = stages::pipeline(transcripts, articles, workdir, &cfg)?;
            println!("pipeline complete over {} pairs", summary.pairs);
            print!("{}", summary.report.render_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let record = serde_json::json!({
                "error": err.kind(),
                "message": err.to_string(),
            });
            eprintln!("{record}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

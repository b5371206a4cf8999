use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "webglm", version, about = "Web-enhanced question answering pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every sampling step; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML settings file; environment variables and flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args, Default)]
pub struct BackendArgs {
    /// Search provider: stub, fixture:<path> or http[:<url>].
    #[arg(long)]
    pub search: Option<String>,
    /// Page source: http, stub or fixture:<path>.
    #[arg(long)]
    pub fetch: Option<String>,
    /// Paragraph ranker: bm25, tfidf or dense:<encoder path>.
    #[arg(long)]
    pub ranker: Option<String>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub fetch_timeout_ms: Option<u64>,
    #[arg(long)]
    pub max_parallel: Option<usize>,
    /// Generator: stub[:quote|echo|prose|miscite|timeout|ratelimit] or a model name.
    #[arg(long)]
    pub llm: Option<String>,
    /// Answer scorer: stub or linear:<path>.
    #[arg(long)]
    pub scorer: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct CorrectionArgs {
    /// Citation correction metric: rouge1 or rougeL.
    #[arg(long)]
    pub metric: Option<String>,
    /// Correction threshold; defaults to the metric's own.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Classification,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Loss {
    Logistic,
    Margin,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search, fetch, extract and rank references for questions.
    Retrieve {
        #[arg(long, required_unless_present = "input")]
        question: Vec<String>,
        /// Questions, one per line, or JSON lines with a "question" field.
        #[arg(long = "in", value_name = "PATH")]
        input: Option<PathBuf>,
        /// JSON lines {question, references, timings}.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        backends: BackendArgs,
    },
    /// Generate, correct and filter a cited QA corpus.
    Bootstrap {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the report JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        correction: CorrectionArgs,
        #[command(flatten)]
        backends: BackendArgs,
    },
    /// Correct and filter already-generated triples.
    Filter {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        correction: CorrectionArgs,
    },
    /// Turn forum answers with thumb-ups into comparison pairs.
    BuildPrefData {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// JSON lines {question_id, question, better, worse}.
        #[arg(long)]
        out: PathBuf,
        /// Also build pointwise baseline labels.
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        #[arg(long, requires = "baseline")]
        baseline_out: Option<PathBuf>,
    },
    /// Train the dense paragraph encoder on a triple corpus.
    TrainRetriever {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dimension: Option<usize>,
        #[arg(long)]
        feature_space: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Train and calibrate the pairwise answer scorer.
    TrainScorer {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Loss::Logistic)]
        loss: Loss,
        #[arg(long)]
        feature_space: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Accuracy, Spearman, NDCG and n-NDCG over ranking cases.
    EvalRanking {
        /// JSON lines {predicted_scores, true_labels}.
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
    },
    /// Per-query latency of an action-emitting browsing agent.
    EvalEfficiency {
        /// builtin:webgpt175b, builtin:webgpt13b or a profile JSON path.
        #[arg(long)]
        profile: String,
    },
    /// Aggregate a human evaluation sheet.
    EvalHuman {
        /// CSV with an item id column and one column per metric.
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
    },
    /// Pairwise win rates from ranked ballots.
    Winrates {
        /// JSON lines {question_id, ranking}.
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
    },
    /// Serve POST /ask and GET /health.
    Serve {
        #[arg(long)]
        bind: Option<String>,
        /// Query log path (JSON lines).
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        candidates: Option<usize>,
        /// Report zero stage times so responses are reproducible.
        #[arg(long)]
        frozen_clock: bool,
        #[command(flatten)]
        backends: BackendArgs,
    },
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ptd", version, about = "Sentence-level paraphrased text-span detection pipelines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split texts into sentences.
    Segment(SegmentArgs),
    /// Align paraphrased sentences to original spans.
    Align(AlignArgs),
    /// Build sentence labels and export training targets.
    Label(LabelArgs),
    /// Score sentences with a baseline scorer.
    Score(ScoreArgs),
    /// Evaluate sentence scores against labels.
    Eval(EvalArgs),
    /// Corpus statistics: word-distribution KL or boundary perplexity profile.
    Stats(StatsArgs),
    /// Two-stage defense: score threshold first, detector verdict otherwise.
    Defend(DefendArgs),
    /// Produce minor-perturbation fixtures from original texts.
    Perturb(PerturbArgs),
    /// Fraction of perturbed sentences left unflagged.
    Robust(RobustArgs),
}

#[derive(Debug, Args)]
pub struct InOut {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Similarity {
    /// Similarity-matrix JSONL file; the lexical provider covers records it lacks.
    #[arg(long)]
    pub similarities: Option<PathBuf>,
    /// Fail (exit 3) instead of falling back when a matrix is missing.
    #[arg(long)]
    pub require_embeddings: bool,
    /// Alignment threshold on mean window similarity.
    #[arg(long, default_value_t = ptd_core::align::DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub io: InOut,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[command(flatten)]
    pub io: InOut,
    #[command(flatten)]
    pub similarity: Similarity,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExportModeArg {
    Classification,
    RegressionLexical,
    RegressionGrammatical,
    RegressionSyntactic,
    RegressionAggregateVector,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[command(flatten)]
    pub io: InOut,
    #[command(flatten)]
    pub similarity: Similarity,
    /// Annotation sidecar JSONL; required for regression modes.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ExportModeArg::Classification)]
    pub mode: ExportModeArg,
    /// Also write the full per-record labels here.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScorerArg {
    Oracle,
    Random,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub io: InOut,
    #[command(flatten)]
    pub similarity: Similarity,
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scorer: ScorerArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PoolArg {
    Paraphrased,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Score JSONL for the evaluated split.
    #[arg(long)]
    pub input: PathBuf,
    /// Labels JSONL (as written by `label --labels-out`) for the evaluated split.
    #[arg(long)]
    pub labels: PathBuf,
    /// Scores used to calibrate the decision threshold.
    #[arg(long)]
    pub validation_scores: PathBuf,
    #[arg(long)]
    pub validation_labels: PathBuf,
    #[arg(long, default_value_t = ptd_core::eval::DEFAULT_FPR)]
    pub fpr: f64,
    /// Sentences entering the degree correlations.
    #[arg(long, value_enum, default_value_t = PoolArg::Paraphrased)]
    pub pool: PoolArg,
    /// Row name in the summary table; defaults to the scorer recorded in the score file.
    #[arg(long)]
    pub name: Option<String>,
    /// JSON report path; the table always goes to standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LevelArg {
    Span,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KlModeArg {
    Paired,
    Halves,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("statistic").required(true).args(["kl", "profile"]))]
pub struct StatsArgs {
    #[command(flatten)]
    pub io: InOut,
    /// Original-vs-paraphrased word-distribution KL divergence.
    #[arg(long)]
    pub kl: bool,
    /// Perplexity profile around paraphrased-span boundaries; needs --logprobs.
    #[arg(long)]
    pub profile: bool,
    #[arg(long, value_enum, default_value_t = LevelArg::Span)]
    pub level: LevelArg,
    #[arg(long, value_enum, default_value_t = KlModeArg::Paired)]
    pub mode: KlModeArg,
    #[arg(long, default_value_t = 100)]
    pub top_k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub smoothing: f64,
    /// First of the five consecutive seeds.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Token log-probability JSONL for the paraphrased texts.
    #[arg(long)]
    pub logprobs: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub window: usize,
}

#[derive(Debug, Args)]
pub struct DefendArgs {
    /// Sentence score JSONL; a text's score is the mean of its sentence scores.
    #[arg(long)]
    pub input: PathBuf,
    /// Detector verdicts, one `{record_id, verdict}` line per text.
    #[arg(long)]
    pub verdicts: PathBuf,
    /// Ground truth, one `{record_id, label}` line per text.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub threshold: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PerturbKindArg {
    Reorder,
    Replace,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub io: InOut,
    #[arg(long, value_enum)]
    pub kind: PerturbKindArg,
    /// Substitution lexicon TSV; required for `replace`.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = ptd_core::perturb::DEFAULT_BLEU_FLOOR)]
    pub bleu_floor: f64,
}

#[derive(Debug, Args)]
pub struct RobustArgs {
    /// Perturbation JSONL from `perturb`.
    #[arg(long)]
    pub input: PathBuf,
    /// Decision threshold; sentences scoring above it count as flagged.
    #[arg(long)]
    pub threshold: f64,
    #[arg(long, default_value_t = ptd_core::align::DEFAULT_THRESHOLD)]
    pub align_threshold: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

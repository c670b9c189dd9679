use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "cstk", version, about = "Toolkit for Arabic-English code-switched text")]
pub struct Cli {
    /// Worker threads for parallel stages (0 uses every core)
    #[arg(long, global = true, env = "CSTK_THREADS", default_value_t = 1)]
    pub threads: usize,

    /// File of `key = value` lines used as defaults for the subcommand's flags
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// More log output on stderr (repeatable)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Normalize Arabic text line by line
    Normalize(NormalizeArgs),
    /// Corpus statistics
    Stats(StatsArgs),
    /// k-means clusters over an embedding table
    Cluster(ClusterArgs),
    /// Train a CRF named-entity tagger
    TrainNer(TrainNerArgs),
    /// Tag sentences with a CRF model
    TagNer(TagNerArgs),
    /// Tag with one CRF per script
    RouteTag(RouteTagArgs),
    /// Train a segmentation + language identification model
    TrainLid(TrainLidArgs),
    /// Segment and language-tag tokens
    TagLid(TagLidArgs),
    /// Augment a labeled corpus
    Augment(AugmentArgs),
    /// Score NER predictions against gold
    EvalNer(EvalNerArgs),
    /// Score segmentation predictions against gold
    EvalLid(EvalLidArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Normalize(_) => "normalize",
            Command::Stats(_) => "stats",
            Command::Cluster(_) => "cluster",
            Command::TrainNer(_) => "train-ner",
            Command::TagNer(_) => "tag-ner",
            Command::RouteTag(_) => "route-tag",
            Command::TrainLid(_) => "train-lid",
            Command::TagLid(_) => "tag-lid",
            Command::Augment(_) => "augment",
            Command::EvalNer(_) => "eval-ner",
            Command::EvalLid(_) => "eval-lid",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Kv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TextFormat {
    /// CoNLL columns; tags are ignored on input
    Conll,
    /// One whitespace-tokenized sentence per line
    Text,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum LidInput {
    /// One whitespace-tokenized sentence per line
    Text,
    /// First column of a CoNLL file
    Conll,
    /// Tokens of a `|||` corpus; the gold labels are ignored
    Seglid,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusKind {
    Auto,
    Conll,
    Seglid,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerArg {
    Lbfgs,
    Gd,
    Sgd,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum LidMethod {
    Seglid,
    Nb,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AugmentMethod {
    Eda,
    Analogy,
    FullWe,
    /// Back-translation through French
    Bt,
    /// Back-translation through French and German
    Bt2l,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScriptArg {
    Arabic,
    Latin,
}

#[derive(Args, Debug)]
pub struct Output {
    /// Write results here instead of stdout
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct NormalizeArgs {
    /// Input file, `-` for stdin
    #[arg(default_value = "-")]
    pub input: PathBuf,
    #[command(flatten)]
    pub output: Output,
    /// Only normalize the first column of CoNLL lines
    #[arg(long)]
    pub conll: bool,
    #[arg(long)]
    pub keep_alef: bool,
    #[arg(long)]
    pub keep_ya: bool,
    #[arg(long)]
    pub keep_diacritics: bool,
    #[arg(long)]
    pub keep_tatweel: bool,
    #[arg(long)]
    pub strip_punct: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct StatsArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub kind: CorpusKind,
    #[arg(long, value_enum, default_value = "table")]
    pub format: ReportFormat,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct ClusterArgs {
    /// Embedding table (`word v1 v2 ...` per line)
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Cluster model to write
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, short)]
    pub k: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct TrainNerArgs {
    /// Training corpus in CoNLL format
    pub train: PathBuf,
    /// Model file to write
    #[arg(long)]
    pub model: PathBuf,
    /// Embedding table used to build fine and coarse cluster features
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Clusters for the fine feature (0 disables)
    #[arg(long, default_value_t = 500)]
    pub fine_k: usize,
    /// Clusters for the coarse feature (0 disables)
    #[arg(long, default_value_t = 50)]
    pub coarse_k: usize,
    /// Precomputed cluster model as NAME=FILE (repeatable)
    #[arg(long = "clusters", value_name = "NAME=FILE")]
    pub clusters: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub window_prev: usize,
    #[arg(long, default_value_t = 0)]
    pub window_next: usize,
    #[arg(long)]
    pub stem: bool,
    #[arg(long)]
    pub first_char: bool,
    #[arg(long)]
    pub last_char: bool,
    /// Use the POS column
    #[arg(long)]
    pub pos: bool,
    /// Gaussian prior width of the L2 penalty
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value = "lbfgs")]
    pub optimizer: OptimizerArg,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 200)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct TagNerArgs {
    /// Input file, `-` for stdin
    #[arg(default_value = "-")]
    pub input: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "conll")]
    pub input_format: TextFormat,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct RouteTagArgs {
    #[arg(default_value = "-")]
    pub input: PathBuf,
    /// Model for Arabic-script tokens
    #[arg(long)]
    pub ar_model: Option<PathBuf>,
    /// Model for Latin-script tokens
    #[arg(long)]
    pub en_model: Option<PathBuf>,
    /// Model used for tokens of any other script
    #[arg(long, value_enum)]
    pub default: Option<ScriptArg>,
    #[arg(long, value_enum, default_value = "conll")]
    pub input_format: TextFormat,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct TrainLidArgs {
    /// Training corpus in `token ||| LABEL:len` format
    pub train: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "seglid")]
    pub method: LidMethod,
    /// Longest segment the decoder considers
    #[arg(long, default_value_t = 20)]
    pub max_seg_len: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Features from the neighbouring tokens
    #[arg(long)]
    pub context: bool,
    /// Collapse NE labels to their coarse form before training
    #[arg(long)]
    pub coarse_ne: bool,
    /// Affix table (`prefix` / `suffix` lines)
    #[arg(long)]
    pub affixes: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub ngram_min: usize,
    #[arg(long, default_value_t = 3)]
    pub ngram_max: usize,
    /// Additive smoothing of the Naive Bayes model
    #[arg(long, default_value_t = 1.0)]
    pub smoothing: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct TagLidArgs {
    #[arg(default_value = "-")]
    pub input: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub input_format: LidInput,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct AugmentArgs {
    /// Labeled corpus in CoNLL format
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub method: AugmentMethod,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also emit the original sentences, before the variants
    #[arg(long)]
    pub keep_original: bool,
    /// Fraction of words changed by each EDA operation
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// EDA variants per sentence
    #[arg(long, default_value_t = 4)]
    pub num_aug: usize,
    /// EDA operations, comma separated
    #[arg(long, value_delimiter = ',', default_value = "SR,RI,RS,RD")]
    pub ops: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    pub rd_prob: f64,
    /// Synonym lexicon for EDA
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Embedding table for ranking synonyms and for substitution
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Neighbour rank used by full substitution
    #[arg(long, default_value_t = 5)]
    pub rank: usize,
    /// HTTP translation service
    #[arg(long)]
    pub mt_endpoint: Option<String>,
    /// Offline translation dictionary
    #[arg(long)]
    pub mt_dict: Option<PathBuf>,
    /// Trigger table (`form weight [prefix]`)
    #[arg(long)]
    pub triggers: Option<PathBuf>,
    /// CRF model that labels words not found in the original sentence
    #[arg(long)]
    pub fallback_model: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct EvalNerArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    pub format: ReportFormat,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct EvalLidArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    pub format: ReportFormat,
    #[command(flatten)]
    pub output: Output,
}

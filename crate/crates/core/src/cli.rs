//! The `ctrlsimp` command line. Each subcommand reads files, calls one
//! library operation and writes files; settings come from a TOML config
//! with flags taking precedence.

use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{ConfigError, PipelineConfig, API_KEY_ENV};
use crate::corpus::{self, AdapterRegistry, AlignmentLevel, CorpusError, CorpusMeta, FlatPair, HarmonizedEntry, Split};
use crate::divergence::{self, DivergenceError};
use crate::evaluation::{self, EvalError, PairScore};
use crate::inference::{
    self, BackendError, ChatBackend, HttpBackend, InferenceError, MockModel, MultiRunOptions, PromptSource,
};
use crate::jsonl::{self, JsonlError};
use crate::partition::{self, PartitionError, SamplingMode, StratVariable, StratificationStrategy};
use crate::promptgen::{self, PromptBuilder, PromptError, TemplateSet, TokenRounding};
use crate::textmetrics::{AttributeKind, FamiliarWordList, TextError, TextMetrics};

/// Failure classes, each with its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    MissingInput,
    Endpoint,
    Io,
    Data,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Config => "config",
            ErrorKind::MissingInput => "missing_input",
            ErrorKind::Endpoint => "endpoint",
            ErrorKind::Io => "io",
            ErrorKind::Data => "data",
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::MissingInput => 3,
            ErrorKind::Endpoint => 4,
            ErrorKind::Io | ErrorKind::Data => 1,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    fn new(kind: ErrorKind, message: impl fmt::Display) -> Self {
        Self {
            kind,
            message: message.to_string(),
        }
    }

    fn config(message: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Config, message)
    }

    fn data(message: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Data, message)
    }
}

/// One line: `error[<kind>]: <message>`.
impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flat: String = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "error[{}]: {flat}", self.kind.name())
    }
}

impl std::error::Error for CliError {}

type CliResult<T = ()> = Result<T, CliError>;

fn io_kind(e: &std::io::Error) -> ErrorKind {
    if e.kind() == std::io::ErrorKind::NotFound {
        ErrorKind::MissingInput
    } else {
        ErrorKind::Io
    }
}

impl From<JsonlError> for CliError {
    fn from(e: JsonlError) -> Self {
        let kind = match &e {
            JsonlError::Io { source, .. } => io_kind(source),
            JsonlError::Parse { .. } => ErrorKind::Data,
            _ => ErrorKind::Io,
        };
        Self::new(kind, e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        let kind = match &e {
            ConfigError::Read { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                ErrorKind::MissingInput
            }
            _ => ErrorKind::Config,
        };
        Self::new(kind, e)
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        let kind = match &e {
            CorpusError::Io { source, .. } => io_kind(source),
            _ => ErrorKind::Config,
        };
        Self::new(kind, e)
    }
}

impl From<TextError> for CliError {
    fn from(e: TextError) -> Self {
        let kind = match &e {
            TextError::WordList { source, .. } => io_kind(source),
            TextError::UnknownAttribute(_) => ErrorKind::Config,
            _ => ErrorKind::Data,
        };
        Self::new(kind, e)
    }
}

impl From<PartitionError> for CliError {
    fn from(e: PartitionError) -> Self {
        let kind = match &e {
            PartitionError::InvalidFractions(_)
            | PartitionError::InvalidBins
            | PartitionError::InvalidPercentiles { .. }
            | PartitionError::EmptyGrid
            | PartitionError::InvalidSizes(_) => ErrorKind::Config,
            _ => ErrorKind::Data,
        };
        Self::new(kind, e)
    }
}

impl From<PromptError> for CliError {
    fn from(e: PromptError) -> Self {
        match e {
            PromptError::Jsonl(j) => j.into(),
            PromptError::Template { ref source, .. } => Self::new(io_kind(source), e),
            PromptError::UnknownRounding(_) | PromptError::MissingPlaceholder { .. } => Self::config(e),
            PromptError::NonFinite(_) => Self::data(e),
        }
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::Jsonl(j) => j.into(),
            InferenceError::Auth(_) => Self::new(ErrorKind::Endpoint, e),
            InferenceError::Config(_) | InferenceError::NoSeeds => Self::config(e),
            InferenceError::Digest { ref source, .. } => Self::new(io_kind(source), e),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Inference(i) => i.into(),
            EvalError::Csv(_) => Self::new(ErrorKind::Io, e),
            _ => Self::data(e),
        }
    }
}

impl From<DivergenceError> for CliError {
    fn from(e: DivergenceError) -> Self {
        Self::data(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::new(ErrorKind::Io, e)
    }
}

/// Corpus preparation, prompting and controllability evaluation for
/// controllable text simplification.
#[derive(Debug, Parser)]
#[command(name = "ctrlsimp", version, propagate_version = true)]
pub struct Cli {
    /// TOML config file; built-in defaults when omitted.
    #[arg(long, short = 'c', global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(long, short = 'v', global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a raw parallel corpus into harmonized JSONL.
    Harmonize(HarmonizeArgs),
    /// Expand harmonized entries into one pair per simplification.
    Flatten(InOut),
    /// Drop pairs outside a percentile band of the source attributes.
    FilterOutliers(FilterOutliersArgs),
    /// Keep pairs whose reference is strictly simpler on every readability metric.
    FilterMono(FilterMonoArgs),
    /// Merge two subsets of one corpus, keeping one side per shared source.
    Merge(MergeArgs),
    /// Stratified train/dev/test split, optionally picking the strategy by search.
    Split(SplitArgs),
    /// Divergence of stratified subsamples from the full set across sizes.
    Sample(SampleArgs),
    /// Render chat prompts with control tokens for one attribute.
    BuildPrompts(BuildPromptsArgs),
    /// Run a prompt file through a model once per seed.
    Infer(InferArgs),
    /// Score every run of a run directory.
    Evaluate(EvaluateArgs),
    /// Aggregate scores into CSV and text reports.
    Report(ReportArgs),
    /// Histograms of source, reference and delta values per attribute.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct InOut {
    /// Input JSONL file.
    #[arg(long, short = 'i', value_name = "FILE")]
    pub input: PathBuf,
    /// Output JSONL file.
    #[arg(long, short = 'o', value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct HarmonizeArgs {
    /// Raw corpus file.
    #[arg(long, short = 'i', value_name = "FILE")]
    pub input: PathBuf,
    /// Input format: tsv (source, then one simplification per column) or jsonl.
    #[arg(long, default_value = "tsv")]
    pub adapter: String,
    /// Dataset name stamped on every entry; also the instance id prefix.
    #[arg(long)]
    pub dataset: String,
    /// Domain label.
    #[arg(long, default_value = "general")]
    pub domain: String,
    /// BCP-47 language tag.
    #[arg(long, default_value = "en")]
    pub language: String,
    /// How the simplifications were produced.
    #[arg(long, default_value = "human")]
    pub annotation_type: String,
    /// sentence or document.
    #[arg(long, default_value = "sentence")]
    pub alignment: AlignmentLevel,
    /// Native split for records that do not carry one.
    #[arg(long)]
    pub native_split: Option<Split>,
    /// Output JSONL file.
    #[arg(long, short = 'o', value_name = "FILE")]
    pub output: PathBuf,
    /// Also write the rejected rows here, one JSON object per line.
    #[arg(long, value_name = "FILE")]
    pub rejections: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterOutliersArgs {
    #[command(flatten)]
    pub io: InOut,
    /// Lower percentile bound.
    #[arg(long)]
    pub lower: Option<f64>,
    /// Upper percentile bound.
    #[arg(long)]
    pub upper: Option<f64>,
    /// Comma-separated source attributes to filter on.
    #[arg(long, value_delimiter = ',')]
    pub attributes: Option<Vec<StratVariable>>,
    /// Write removal statistics as JSON here.
    #[arg(long, value_name = "FILE")]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterMonoArgs {
    #[command(flatten)]
    pub io: InOut,
    /// Write per-dataset removal statistics as JSON here.
    #[arg(long, value_name = "FILE")]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    /// First subset (flat pairs).
    #[arg(long, value_name = "FILE")]
    pub a: PathBuf,
    /// Second subset (flat pairs).
    #[arg(long, value_name = "FILE")]
    pub b: PathBuf,
    /// Output JSONL file.
    #[arg(long, short = 'o', value_name = "FILE")]
    pub output: PathBuf,
    /// Coin-flip seed; defaults to seeds.merge from the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Flat pair file.
    #[arg(long, short = 'i', value_name = "FILE")]
    pub input: PathBuf,
    /// Output directory; defaults to <work_dir>/split.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Search variables x bins x partitioning seeds and keep the best split.
    #[arg(long)]
    pub strategy_search: bool,
    /// Stratification variable without a search.
    #[arg(long)]
    pub variable: Option<StratVariable>,
    /// Number of strata without a search.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Seed without a search; defaults to the first partitioning seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Flat pair file; split-wise mode needs native splits on every pair.
    #[arg(long, short = 'i', value_name = "FILE")]
    pub input: PathBuf,
    /// Output directory; defaults to <reports>/sampling.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Comma-separated sampling modes: global, splitwise.
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<SamplingMode>>,
    /// Subset sizes as start:end:step (end inclusive) or a comma list.
    #[arg(long)]
    pub sizes: Option<String>,
    /// "default" for the configured downsampling seeds, or a comma list.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Variable the subsamples are stratified on.
    #[arg(long)]
    pub variable: Option<StratVariable>,
}

#[derive(Debug, Args)]
pub struct BuildPromptsArgs {
    /// Flat pair file.
    #[arg(long, short = 'i', value_name = "FILE")]
    pub input: PathBuf,
    /// Output prompt JSONL file.
    #[arg(long, short = 'o', value_name = "FILE")]
    pub output: PathBuf,
    /// Control attribute: FKGL, ARI, DALE-CHALL, CHAR_COMPRESSION or WORD_COMPRESSION.
    #[arg(long, short = 'a')]
    pub attribute: AttributeKind,
    /// Only pairs assigned to this split.
    #[arg(long)]
    pub split: Option<Split>,
    /// Template directory overriding the bundled templates.
    #[arg(long, value_name = "DIR")]
    pub templates: Option<PathBuf>,
    /// Token rounding: one_decimal or integer.
    #[arg(long)]
    pub rounding: Option<TokenRounding>,
    /// Seed for the system-prompt variant choice.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Prompt JSONL file.
    #[arg(long, short = 'p', value_name = "FILE")]
    pub prompts: PathBuf,
    /// Run directory; defaults to <work_dir>/runs.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Offline model: oracle, echo, truncate_p:<p> or degenerate.
    #[arg(long)]
    pub mock: Option<MockModel>,
    /// "default" for the configured evaluation seeds, or a comma list.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Endpoint base URL; requests go to <base_url>/chat/completions.
    #[arg(long)]
    pub base_url: Option<String>,
    /// Model name sent with each request.
    #[arg(long)]
    pub model: Option<String>,
    /// Per-request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Retries after a transient failure.
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// Requests in flight at once.
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    /// Sampling temperature.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Completion length limit.
    #[arg(long)]
    pub max_tokens: Option<u32>,
    /// Environment variable holding the API key.
    #[arg(long, default_value = API_KEY_ENV)]
    pub api_key_env: String,
    /// Run all seeds concurrently.
    #[arg(long)]
    pub parallel_runs: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Prompt JSONL file the runs were made from.
    #[arg(long, short = 'p', value_name = "FILE")]
    pub prompts: PathBuf,
    /// Run directory written by infer.
    #[arg(long, value_name = "DIR")]
    pub runs: PathBuf,
    /// Output score JSONL file.
    #[arg(long, short = 'o', value_name = "FILE")]
    pub output: PathBuf,
    /// Model label; defaults to the backend recorded in the run manifest.
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Score files written by evaluate.
    #[arg(long, short = 's', value_name = "FILE", num_args = 1.., required = true)]
    pub scores: Vec<PathBuf>,
    /// Output directory; defaults to <reports>.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Flat pair file.
    #[arg(long, short = 'i', value_name = "FILE")]
    pub input: PathBuf,
    /// Output directory; defaults to <reports>/analyze.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Comma-separated attributes; all five when omitted.
    #[arg(long, value_delimiter = ',')]
    pub attributes: Option<Vec<AttributeKind>>,
    /// Histogram bins.
    #[arg(long, default_value_t = divergence::DEFAULT_BINS)]
    pub bins: usize,
}

/// Parses arguments, runs the command and maps failures to exit codes.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.kind.exit_code())
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
}

/// Runs `args` (program name first) without touching the process exit code.
pub fn run_from<I, T>(args: I) -> CliResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(CliError::config)?;
    run(cli)
}

pub fn run(cli: Cli) -> CliResult {
    let config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::Harmonize(a) => harmonize(&config, a),
        Command::Flatten(a) => flatten(a),
        Command::FilterOutliers(a) => filter_outliers(&config, a),
        Command::FilterMono(a) => filter_mono(a),
        Command::Merge(a) => merge(&config, a),
        Command::Split(a) => split(&config, a),
        Command::Sample(a) => sample(&config, a),
        Command::BuildPrompts(a) => build_prompts(&config, a),
        Command::Infer(a) => infer(&config, a),
        Command::Evaluate(a) => evaluate(&config, a),
        Command::Report(a) => report(&config, a),
        Command::Analyze(a) => analyze(&config, a),
    }
}

fn require_input(path: &Path) -> CliResult {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::new(ErrorKind::MissingInput, format!("{} does not exist", path.display())))
    }
}

fn create_dir(dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::new(ErrorKind::Io, format!("creating {}: {e}", dir.display())))
}

fn create_file(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::new(ErrorKind::Io, format!("creating {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::data)?;
    text.push('\n');
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    std::fs::write(path, text).map_err(|e| CliError::new(ErrorKind::Io, format!("writing {}: {e}", path.display())))
}

fn metrics(config: &PipelineConfig) -> CliResult<TextMetrics> {
    Ok(match &config.paths.familiar_words {
        Some(path) => TextMetrics::new(FamiliarWordList::from_path(path)?),
        None => TextMetrics::default(),
    })
}

fn read_pairs(path: &Path) -> CliResult<Vec<FlatPair>> {
    require_input(path)?;
    Ok(jsonl::read_jsonl(path)?)
}

/// `default` or an empty value means `fallback`.
pub fn parse_seeds(spec: Option<&str>, fallback: &[u64]) -> CliResult<Vec<u64>> {
    match spec.map(str::trim) {
        None | Some("") | Some("default") => Ok(fallback.to_vec()),
        Some(list) => {
            let seeds = list
                .split(',')
                .map(|s| s.trim().parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError::config(format!("invalid seed list {list:?}")))?;
            if seeds.is_empty() {
                return Err(CliError::config("seed list is empty"));
            }
            Ok(seeds)
        }
    }
}

fn harmonize(config: &PipelineConfig, a: HarmonizeArgs) -> CliResult {
    require_input(&a.input)?;
    let meta = CorpusMeta {
        dataset_name: a.dataset,
        domain: a.domain,
        language: a.language,
        annotation_type: a.annotation_type,
        alignment_level: a.alignment,
        native_split: a.native_split,
    };
    let registry = AdapterRegistry::with_defaults();
    let outcome = corpus::harmonize(&a.input, &a.adapter, &registry, &meta, &metrics(config)?)?;
    jsonl::write_jsonl_file(&a.output, &outcome.entries)?;
    if let Some(path) = &a.rejections {
        jsonl::write_jsonl_file(path, &outcome.rejections)?;
    }
    eprintln!(
        "harmonized {} entries into {} ({} rows skipped)",
        outcome.entries.len(),
        a.output.display(),
        outcome.skipped()
    );
    Ok(())
}

fn flatten(a: InOut) -> CliResult {
    require_input(&a.input)?;
    let entries: Vec<HarmonizedEntry> = jsonl::read_jsonl(&a.input)?;
    let pairs = corpus::flatten(&entries);
    jsonl::write_jsonl_file(&a.output, &pairs)?;
    eprintln!("flattened {} entries into {} pairs", entries.len(), pairs.len());
    Ok(())
}

fn filter_outliers(config: &PipelineConfig, a: FilterOutliersArgs) -> CliResult {
    let pairs = read_pairs(&a.io.input)?;
    let lo = a.lower.unwrap_or(config.filter.lower_percentile);
    let hi = a.upper.unwrap_or(config.filter.upper_percentile);
    let attributes = a.attributes.unwrap_or_else(|| config.filter.attributes.clone());
    let (kept, stats) = partition::percentile_filter(pairs, lo, hi, &attributes)?;
    jsonl::write_jsonl_file(&a.io.output, &kept)?;
    if let Some(path) = &a.stats {
        write_json(path, &stats)?;
    }
    eprintln!("kept {} of {} pairs", kept.len(), stats.input);
    Ok(())
}

fn filter_mono(a: FilterMonoArgs) -> CliResult {
    let pairs = read_pairs(&a.io.input)?;
    let (kept, stats) = partition::mono_filter(pairs);
    jsonl::write_jsonl_file(&a.io.output, &kept)?;
    if let Some(path) = &a.stats {
        write_json(path, &stats)?;
    }
    for (name, d) in &stats.per_dataset {
        eprintln!(
            "{name}: removed {} of {} pairs ({:.1}%)",
            d.removed,
            d.input,
            100.0 * d.removal_rate()
        );
    }
    Ok(())
}

fn merge(config: &PipelineConfig, a: MergeArgs) -> CliResult {
    let first = read_pairs(&a.a)?;
    let second = read_pairs(&a.b)?;
    let (merged, stats) = corpus::merge_dual_subsets(&first, &second, a.seed.unwrap_or(config.seeds.merge));
    jsonl::write_jsonl_file(&a.output, &merged)?;
    eprintln!(
        "merged into {} pairs; {} shared sources, {} kept from the first subset",
        stats.output_pairs, stats.overlapping_sources, stats.overlaps_kept_from_a
    );
    Ok(())
}

/// Files written by `split`.
pub const SPLIT_RESULT_FILE: &str = "split_result.json";
pub const STRATEGY_SCORES_FILE: &str = "strategy_scores.csv";
pub const SCORE_TABLE_FILE: &str = "score_table.csv";

fn split(config: &PipelineConfig, a: SplitArgs) -> CliResult {
    let mut pairs = read_pairs(&a.input)?;
    let out_dir = a.out_dir.unwrap_or_else(|| config.paths.work_dir.join("split"));
    create_dir(&out_dir)?;
    let result = if a.strategy_search {
        if a.variable.is_some() || a.bins.is_some() || a.seed.is_some() {
            return Err(CliError::config("--variable, --bins and --seed do not apply with --strategy-search"));
        }
        let outcome = partition::select_strategy(&pairs, &config.strategy_search())?;
        let mut w = csv::Writer::from_writer(create_file(&out_dir.join(STRATEGY_SCORES_FILE))?);
        for s in &outcome.scores {
            w.serialize(s)?;
        }
        w.flush().map_err(|e| CliError::new(ErrorKind::Io, e))?;
        partition::write_score_table_csv(&outcome.table, create_file(&out_dir.join(SCORE_TABLE_FILE))?)?;
        outcome.best
    } else {
        let strategy = StratificationStrategy {
            variable: a.variable.unwrap_or(config.strategy.variable),
            bins: a.bins.unwrap_or(config.strategy.default_bins),
            seed: a.seed.unwrap_or(config.seeds.partitioning[0]),
        };
        partition::stratified_split(&pairs, strategy, config.split)?
    };
    result.apply(&mut pairs);
    write_json(&out_dir.join(SPLIT_RESULT_FILE), &result)?;
    jsonl::write_jsonl_file(&out_dir.join("pairs.jsonl"), &pairs)?;
    for s in Split::ALL {
        let part: Vec<&FlatPair> = pairs.iter().filter(|p| p.split == Some(s)).collect();
        jsonl::write_jsonl_file(&out_dir.join(format!("{s}.jsonl")), part)?;
    }
    eprintln!(
        "split {} pairs by {} in {} strata (seed {}): train {}, dev {}, test {}; mean KS {:.4}",
        pairs.len(),
        result.strategy.variable,
        result.strategy.bins,
        result.strategy.seed,
        result.count(Split::Train),
        result.count(Split::Dev),
        result.count(Split::Test),
        result.score()
    );
    Ok(())
}

/// File name of the curve CSV for `mode`.
pub fn curve_file_name(mode: SamplingMode) -> String {
    format!("sampling_{}.csv", mode.name())
}

fn sample(config: &PipelineConfig, a: SampleArgs) -> CliResult {
    let pairs = read_pairs(&a.input)?;
    let out_dir = a.out_dir.unwrap_or_else(|| config.paths.reports.join("sampling"));
    let modes = a.modes.unwrap_or_else(|| config.sampling.modes.clone());
    if modes.is_empty() {
        return Err(CliError::config("no sampling modes given"));
    }
    let mut sizes = partition::parse_sizes(a.sizes.as_deref().unwrap_or(&config.sampling.sizes))?;
    let before = sizes.len();
    sizes.retain(|&k| k <= pairs.len());
    if sizes.len() < before {
        log::warn!(
            "dropped {} sizes above the {} available pairs",
            before - sizes.len(),
            pairs.len()
        );
    }
    if sizes.is_empty() {
        return Err(CliError::data(format!("every subset size exceeds the {} available pairs", pairs.len())));
    }
    let seeds = parse_seeds(a.seeds.as_deref(), &config.seeds.downsampling)?;
    let variable = a.variable.unwrap_or(config.sampling.variable);
    let curves =
        partition::sampling_experiment(&pairs, variable, &sizes, &seeds, &modes, &config.sampling_options())?;
    create_dir(&out_dir)?;
    for curve in &curves {
        let path = out_dir.join(curve_file_name(curve.mode));
        partition::write_curves_csv(std::slice::from_ref(curve), create_file(&path)?)?;
        let ks = curve.mean_ks();
        let mean = ks.iter().sum::<f64>() / ks.len() as f64;
        eprintln!("{}: {} sizes, mean KS {mean:.4} -> {}", curve.mode, ks.len(), path.display());
    }
    Ok(())
}

fn build_prompts(config: &PipelineConfig, a: BuildPromptsArgs) -> CliResult {
    let mut pairs = read_pairs(&a.input)?;
    if let Some(s) = a.split {
        pairs.retain(|p| p.split == Some(s));
        if pairs.is_empty() {
            return Err(CliError::data(format!("no pairs assigned to {s}")));
        }
    }
    let owned;
    let templates = match a.templates.as_ref().or(config.paths.templates.as_ref()) {
        Some(dir) => {
            require_input(dir)?;
            owned = TemplateSet::from_dir(dir)?;
            &owned
        }
        None => TemplateSet::bundled(),
    };
    let builder = PromptBuilder::new(templates, a.rounding.unwrap_or(config.prompts.rounding));
    let n = promptgen::emit_prompt_file(&pairs, a.attribute, a.seed.unwrap_or(config.seeds.prompts), &a.output, &builder)?;
    eprintln!("wrote {n} {} prompts to {}", a.attribute, a.output.display());
    Ok(())
}

fn infer(config: &PipelineConfig, a: InferArgs) -> CliResult {
    require_input(&a.prompts)?;
    let prompts = promptgen::read_prompt_file(&a.prompts)?;
    let source = PromptSource::from_file(&a.prompts)?;
    let out_dir = a.out_dir.unwrap_or_else(|| config.paths.work_dir.join("runs"));
    let seeds = parse_seeds(a.seeds.as_deref(), &config.seeds.evaluation)?;

    let mut endpoint = config.endpoint.clone();
    if let Some(v) = a.base_url {
        endpoint.base_url = v;
    }
    if let Some(v) = a.model {
        endpoint.model_name = v;
    }
    if let Some(v) = a.timeout {
        endpoint.timeout = v;
    }
    if let Some(v) = a.max_retries {
        endpoint.max_retries = v;
    }
    if let Some(v) = a.max_in_flight {
        endpoint.max_in_flight = v;
    }
    if let Some(v) = a.temperature {
        endpoint.temperature = v;
    }
    if let Some(v) = a.max_tokens {
        endpoint.max_tokens = v;
    }
    if let Ok(key) = std::env::var(&a.api_key_env) {
        if !key.is_empty() {
            endpoint.api_key = Some(key);
        }
    }
    endpoint.validate()?;

    let mock = match a.mock {
        Some(m) => Some(m),
        None => config
            .inference
            .mock
            .as_deref()
            .map(str::parse::<MockModel>)
            .transpose()
            .map_err(CliError::config)?,
    };
    let http;
    let backend: &dyn ChatBackend = match &mock {
        Some(m) => m,
        None => {
            http = HttpBackend::new(endpoint.clone()).map_err(|e| match e {
                BackendError::Fatal(m) | BackendError::Transient(m) | BackendError::Auth(m) => {
                    CliError::new(ErrorKind::Endpoint, m)
                }
            })?;
            &http
        }
    };
    let options = MultiRunOptions {
        parallel_runs: a.parallel_runs || config.inference.parallel_runs,
    };
    let manifest = inference::multi_run_blocking(
        &prompts,
        &source,
        backend,
        &endpoint,
        &config.inference.degenerate,
        &seeds,
        &out_dir,
        options,
    )?;
    for run in &manifest.runs {
        eprintln!(
            "seed {}: {} ok, {} degenerate, {} errors{}",
            run.seed,
            run.ok,
            run.degenerate,
            run.errors,
            run.failure.as_deref().map(|f| format!(" ({f})")).unwrap_or_default()
        );
    }
    let answered: usize = manifest.runs.iter().map(|r| r.ok + r.degenerate).sum();
    if mock.is_none() && answered == 0 && !prompts.is_empty() {
        return Err(CliError::new(
            ErrorKind::Endpoint,
            format!("no request to {} succeeded", endpoint.base_url),
        ));
    }
    Ok(())
}

fn evaluate(config: &PipelineConfig, a: EvaluateArgs) -> CliResult {
    require_input(&a.prompts)?;
    require_input(&a.runs)?;
    let prompts = promptgen::read_prompt_file(&a.prompts)?;
    let scores = evaluation::score_run_dir(&metrics(config)?, &prompts, &a.runs, a.model.as_deref())?;
    jsonl::write_jsonl_file(&a.output, &scores)?;
    let valid = scores.iter().filter(|s| s.valid).count();
    eprintln!("scored {} outputs ({valid} valid) into {}", scores.len(), a.output.display());
    Ok(())
}

/// Files written by `report`.
pub const REPORT_CSV_FILE: &str = "report.csv";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const REPORT_JSON_FILE: &str = "report.json";

fn report(config: &PipelineConfig, a: ReportArgs) -> CliResult {
    let mut scores: Vec<PairScore> = Vec::new();
    for path in &a.scores {
        require_input(path)?;
        scores.extend(jsonl::read_jsonl::<PairScore>(path)?);
    }
    let out_dir = a.out_dir.unwrap_or_else(|| config.paths.reports.clone());
    let report = evaluation::aggregate(&scores);
    let (csv_text, table) = evaluation::render_report(&report);
    create_dir(&out_dir)?;
    for (name, text) in [(REPORT_CSV_FILE, &csv_text), (REPORT_TEXT_FILE, &table)] {
        let path = out_dir.join(name);
        std::fs::write(&path, text)
            .map_err(|e| CliError::new(ErrorKind::Io, format!("writing {}: {e}", path.display())))?;
    }
    write_json(&out_dir.join(REPORT_JSON_FILE), &report)?;
    print!("{table}");
    Ok(())
}

/// File name of one analyze histogram; `series` is source, reference or delta.
pub fn histogram_file_name(kind: AttributeKind, series: &str) -> String {
    format!("{}_{series}.csv", kind.name())
}

fn analyze(config: &PipelineConfig, a: AnalyzeArgs) -> CliResult {
    let pairs = read_pairs(&a.input)?;
    if pairs.is_empty() {
        return Err(CliError::data(format!("{} has no pairs", a.input.display())));
    }
    let out_dir = a.out_dir.unwrap_or_else(|| config.paths.reports.join("analyze"));
    create_dir(&out_dir)?;
    let kinds = a.attributes.unwrap_or_else(|| AttributeKind::ALL.to_vec());
    for kind in kinds {
        let source: Vec<f64> = pairs.iter().map(|p| p.source_value(kind)).collect();
        let reference: Vec<f64> = pairs.iter().map(|p| p.control_value(kind)).collect();
        let delta: Vec<f64> = source.iter().zip(&reference).map(|(s, r)| s - r).collect();
        for (series, values) in [("source", &source), ("reference", &reference), ("delta", &delta)] {
            let h = divergence::histogram(values, a.bins, None)?;
            h.write_csv(create_file(&out_dir.join(histogram_file_name(kind, series)))?)?;
        }
    }
    eprintln!("wrote histograms for {} pairs to {}", pairs.len(), out_dir.display());
    Ok(())
}

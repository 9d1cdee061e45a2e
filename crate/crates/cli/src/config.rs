//! Command-line flags and the flat JSON run configuration they override.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use flatm::corpus::CorpusFormat;
use flatm::eval::{EvalConfig, ScoringVocabulary, SplitPlan, SynthConfig};
use flatm::weighting::IdfVariant;
use flatm::{CascadeSchedule, GtwMethod, TokenizerConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// `self` keeps its value unless `over` sets one.
macro_rules! merge_fields {
    ($self:ident, $over:ident; $($field:ident),* $(,)?) => {
        Self { $($field: $over.$field.or($self.$field)),* }
    };
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct InputArgs {
    /// Corpus file or directory
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// dir-of-txt, labeled-tsv or lines (default: guessed from the path)
    #[arg(long)]
    pub format: Option<String>,
    /// Accept documents with empty text
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub allow_empty: Option<bool>,
}

impl InputArgs {
    fn merge(self, over: Self) -> Self {
        merge_fields!(self, over; input, format, allow_empty)
    }

    pub fn input(&self) -> Result<&Path, CliError> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::Usage("--input is required".into()))
    }

    pub fn format(&self) -> Result<CorpusFormat, CliError> {
        let input = self.input()?;
        match &self.format {
            Some(f) => f.parse().map_err(CliError::from),
            None if input.is_dir() => Ok(CorpusFormat::DirOfTxt),
            None if input.extension().is_some_and(|e| e == "tsv") => Ok(CorpusFormat::LabeledTsv),
            None => Ok(CorpusFormat::Lines),
        }
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainArgs {
    /// Global term weighting: entropy, idf, probidf, normal, gfidf or none
    #[arg(long)]
    pub gtw: Option<String>,
    /// Number of topics
    #[arg(long)]
    pub topics: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated cluster counts of the reduction cascade
    #[arg(long, value_delimiter = ',')]
    pub cascade: Option<Vec<usize>>,
    /// Cluster words directly in document space
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_cascade: Option<bool>,
    #[arg(long)]
    pub fuzzifier: Option<f64>,
    /// Convergence bound on the largest membership change
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Floor for non-positive global weights
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// total-frequency or document-frequency
    #[arg(long)]
    pub idf_variant: Option<String>,
    /// Drop terms found in fewer documents
    #[arg(long)]
    pub min_df: Option<usize>,
    /// Stop-word file replacing the bundled list
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub min_token_length: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub keep_numeric: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_lowercase: Option<bool>,
}

impl TrainArgs {
    fn merge(self, over: Self) -> Self {
        merge_fields!(self, over;
            gtw, topics, seed, cascade, no_cascade, fuzzifier, threshold, max_iterations,
            epsilon, idf_variant, min_df, stopwords, min_token_length, keep_numeric, no_lowercase)
    }

    pub fn to_train_config(&self) -> Result<TrainConfig, CliError> {
        let defaults = TrainConfig::default();
        let mut tokenizer = TokenizerConfig::default();
        if let Some(path) = &self.stopwords {
            tokenizer = tokenizer.with_stopword_file(path)?;
        }
        if let Some(n) = self.min_token_length {
            tokenizer.min_token_length = n;
        }
        if self.keep_numeric == Some(true) {
            tokenizer.drop_numeric_tokens = false;
        }
        if self.no_lowercase == Some(true) {
            tokenizer.lowercase = false;
        }
        let gtw = match &self.gtw {
            Some(name) => name.parse::<GtwMethod>()?,
            None => defaults.gtw,
        };
        let idf_variant = match self.idf_variant.as_deref() {
            None | Some("total-frequency") => IdfVariant::TotalFrequency,
            Some("document-frequency") => IdfVariant::DocumentFrequency,
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "unknown idf variant {other:?} (expected total-frequency or document-frequency)"
                )))
            }
        };
        let cascade = match (self.no_cascade, &self.cascade) {
            (Some(true), Some(_)) => {
                return Err(CliError::Usage(
                    "--cascade and --no-cascade are mutually exclusive".into(),
                ))
            }
            (Some(true), None) => None,
            (_, Some(counts)) => Some(CascadeSchedule::new(counts.clone())?),
            (_, None) => defaults.cascade,
        };
        Ok(TrainConfig {
            tokenizer,
            min_df: self.min_df.unwrap_or(defaults.min_df),
            gtw,
            idf_variant,
            epsilon: self.epsilon.unwrap_or(defaults.epsilon),
            topics: self.topics.unwrap_or(defaults.topics),
            cascade,
            fuzzifier: self.fuzzifier.unwrap_or(defaults.fuzzifier),
            threshold: self.threshold.unwrap_or(defaults.threshold),
            max_iterations: self.max_iterations.unwrap_or(defaults.max_iterations),
            seed: self.seed.unwrap_or(defaults.seed),
        })
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PlanArgs {
    /// Number of cross-validation folds; 1 means a single holdout split
    #[arg(long)]
    pub folds: Option<usize>,
    /// Training share of a single holdout split
    #[arg(long)]
    pub train_frac: Option<f64>,
    /// Seed of the document split (default: the training seed)
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_stratify: Option<bool>,
    /// Smoothing added to every token probability
    #[arg(long)]
    pub delta: Option<f64>,
    /// Score classes only on tokens some class model knows
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub shared_vocabulary: Option<bool>,
}

impl PlanArgs {
    fn merge(self, over: Self) -> Self {
        merge_fields!(self, over; folds, train_frac, split_seed, no_stratify, delta, shared_vocabulary)
    }

    pub fn to_eval_config(
        &self,
        train: TrainConfig,
        default_folds: usize,
        default_frac: f64,
    ) -> EvalConfig {
        let plan = SplitPlan {
            seed: self.split_seed.unwrap_or(train.seed),
            train_fraction: self.train_frac.unwrap_or(default_frac),
            folds: self.folds.unwrap_or(default_folds),
            stratified: self.no_stratify != Some(true),
        };
        let mut config = EvalConfig::new(train, plan);
        if let Some(delta) = self.delta {
            config.delta = delta;
        }
        if self.shared_vocabulary == Some(true) {
            config.scoring_vocabulary = ScoringVocabulary::Shared;
        }
        config
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SynthArgs {
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub vocab_per_class: Option<usize>,
    #[arg(long)]
    pub docs_per_class: Option<usize>,
    #[arg(long)]
    pub doc_length: Option<usize>,
    /// Size of the shared term pool relative to a class pool
    #[arg(long)]
    pub overlap: Option<f64>,
}

impl SynthArgs {
    fn merge(self, over: Self) -> Self {
        merge_fields!(self, over; classes, vocab_per_class, docs_per_class, doc_length, overlap)
    }

    pub fn to_synth_config(&self, seed: Option<u64>) -> SynthConfig {
        let d = SynthConfig::default();
        SynthConfig {
            seed: seed.unwrap_or(d.seed),
            classes: self.classes.unwrap_or(d.classes),
            vocab_per_class: self.vocab_per_class.unwrap_or(d.vocab_per_class),
            docs_per_class: self.docs_per_class.unwrap_or(d.docs_per_class),
            doc_length: self.doc_length.unwrap_or(d.doc_length),
            overlap_fraction: self.overlap.unwrap_or(d.overlap_fraction),
        }
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct OutputArgs {
    /// Output file (default: standard output)
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl OutputArgs {
    fn merge(self, over: Self) -> Self {
        merge_fields!(self, over; output)
    }
}

/// Every knob, as read from a `--config` file. Keys are the long flag names.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub input: InputArgs,
    #[serde(flatten)]
    pub output: OutputArgs,
    #[serde(flatten)]
    pub train: TrainArgs,
    #[serde(flatten)]
    pub plan: PlanArgs,
    #[serde(flatten)]
    pub synth: SynthArgs,
    #[serde(flatten)]
    pub paths: PathArgs,
    #[serde(flatten, skip_serializing)]
    pub(crate) unknown: BTreeMap<String, serde_json::Value>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PathArgs {
    /// Model file
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Also write the global weights as TSV
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
    /// Also write per-fold detail as CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

impl PathArgs {
    fn merge(self, over: Self) -> Self {
        merge_fields!(self, over; model, weights_out, csv)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if let Some(key) = config.unknown.keys().next() {
            return Err(CliError::Usage(format!(
                "{}: unknown config key {key:?}",
                path.display()
            )));
        }
        Ok(config)
    }

    /// Overlays the flags given on the command line.
    pub fn merge(self, over: Self) -> Self {
        Self {
            input: self.input.merge(over.input),
            output: self.output.merge(over.output),
            train: self.train.merge(over.train),
            plan: self.plan.merge(over.plan),
            synth: self.synth.merge(over.synth),
            paths: self.paths.merge(over.paths),
            unknown: BTreeMap::new(),
        }
    }

    /// The keys that are set, as one JSON line.
    pub fn to_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("run config serializes");
        if let Some(map) = value.as_object_mut() {
            map.retain(|_, v| !v.is_null());
        }
        value.to_string()
    }
}

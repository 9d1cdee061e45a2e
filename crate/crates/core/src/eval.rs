//! Evaluation protocols: likelihood-based classification under
//! cross-validation, held-out log-likelihood, and a seeded synthetic corpus
//! generator.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, RawDocument};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::model::{self, TopicModel, TrainConfig};
use crate::par;

/// Probability floor added to every per-token mixture probability.
pub const DEFAULT_DELTA: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SplitPlan {
    pub seed: u64,
    /// Used only when `folds == 1`; k-fold splits imply `1 - 1/k`.
    pub train_fraction: f64,
    pub folds: usize,
    pub stratified: bool,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self {
            seed: 0,
            train_fraction: 0.8,
            folds: 5,
            stratified: true,
        }
    }
}

impl SplitPlan {
    fn validate(&self) -> Result<()> {
        if self.folds == 0 {
            return Err(Error::Config("folds must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Document indices grouped by label (documents without labels share one
/// group), in label order.
fn groups(docs: &[RawDocument], stratified: bool) -> Vec<Vec<usize>> {
    if !stratified {
        return vec![(0..docs.len()).collect()];
    }
    let mut by_label: BTreeMap<Option<&str>, Vec<usize>> = BTreeMap::new();
    for (i, d) in docs.iter().enumerate() {
        by_label.entry(d.label.as_deref()).or_default().push(i);
    }
    by_label.into_values().collect()
}

/// Train/test splits: `folds >= 2` gives k-fold cross-validation (test
/// parts partition the corpus); `folds == 1` gives one random hold-out split
/// at `train_fraction`. Stratified plans split each label separately.
pub fn make_splits(docs: &[RawDocument], plan: &SplitPlan) -> Result<Vec<Split>> {
    plan.validate()?;
    if docs.len() < 2 {
        return Err(Error::EmptyCorpus(
            "need at least 2 documents to split".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut groups = groups(docs, plan.stratified);
    for g in &mut groups {
        g.shuffle(&mut rng);
    }

    if plan.folds == 1 {
        let mut split = Split {
            train: Vec::new(),
            test: Vec::new(),
        };
        for g in &groups {
            let n_train = ((g.len() as f64) * plan.train_fraction).round() as usize;
            let n_train = n_train.min(g.len());
            split.train.extend_from_slice(&g[..n_train]);
            split.test.extend_from_slice(&g[n_train..]);
        }
        if split.test.is_empty() {
            // every group too small to yield a test document; move one over
            let moved = split.train.pop().expect("at least two documents");
            split.test.push(moved);
        }
        if split.train.is_empty() {
            return Err(Error::EmptyCorpus(
                "train fraction leaves no training documents".into(),
            ));
        }
        split.train.sort_unstable();
        split.test.sort_unstable();
        return Ok(vec![split]);
    }

    if docs.len() < plan.folds {
        return Err(Error::EmptyCorpus(format!(
            "{} documents cannot fill {} folds",
            docs.len(),
            plan.folds
        )));
    }
    let mut fold_of = vec![0usize; docs.len()];
    let mut next = 0usize;
    for g in &groups {
        for &i in g {
            fold_of[i] = next % plan.folds;
            next += 1;
        }
    }
    Ok((0..plan.folds)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..docs.len()).partition(|&i| fold_of[i] == f);
            Split { train, test }
        })
        .collect())
}

/// Log-likelihood of one document under a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DocLikelihood {
    pub loglik: f64,
    pub tokens: usize,
    pub oov_tokens: usize,
}

/// `Σ_w f_w · log(δ + Σ_k P(w|T_k)·P(T_k|d))` with `P(T|d)` from fold-in.
/// Out-of-vocabulary tokens contribute `log δ` each; a document with no
/// known tokens scores `log δ` per token.
pub fn doc_log_likelihood(model: &TopicModel, tokens: &[String], delta: f64) -> DocLikelihood {
    let (counts, oov) = model.vocabulary().count_tokens(tokens);
    let floor = delta.ln();
    let mut loglik = oov as f64 * floor;
    match model.fold_in_counts(&counts) {
        Ok(theta) => {
            for &(i, c) in &counts {
                loglik += f64::from(c) * (delta + model.word_prob_in_doc(&theta, i)).ln();
            }
        }
        Err(_) => {
            let known: u32 = counts.iter().map(|&(_, c)| c).sum();
            loglik += f64::from(known) * floor;
        }
    }
    DocLikelihood {
        loglik,
        tokens: tokens.len(),
        oov_tokens: oov,
    }
}

/// Same quantity under the one-topic reference `P(w|d) := P(w)`.
pub fn doc_unigram_log_likelihood(model: &TopicModel, tokens: &[String], delta: f64) -> f64 {
    let (counts, oov) = model.vocabulary().count_tokens(tokens);
    let pw = model.word_prob();
    oov as f64 * delta.ln()
        + counts
            .iter()
            .map(|&(i, c)| f64::from(c) * (delta + pw[i]).ln())
            .sum::<f64>()
}

/// Totals over a set of test documents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeldoutScore {
    pub loglik: f64,
    pub baseline_loglik: f64,
    pub docs: usize,
    pub tokens: usize,
    pub oov_tokens: usize,
    /// Documents with no in-vocabulary token.
    pub oov_docs: usize,
}

pub fn score_documents(
    model: &TopicModel,
    docs: &[RawDocument],
    delta: f64,
) -> Result<HeldoutScore> {
    let tokenizer = &model.config().tokenizer;
    let per_doc = par::map(docs, |d| {
        let tokens = corpus::tokenize(&d.text, tokenizer);
        let lik = doc_log_likelihood(model, &tokens, delta);
        let base = doc_unigram_log_likelihood(model, &tokens, delta);
        (lik, base)
    });
    let mut score = HeldoutScore {
        loglik: 0.0,
        baseline_loglik: 0.0,
        docs: docs.len(),
        tokens: 0,
        oov_tokens: 0,
        oov_docs: 0,
    };
    for (lik, base) in per_doc {
        score.loglik += lik.loglik;
        score.baseline_loglik += base;
        score.tokens += lik.tokens;
        score.oov_tokens += lik.oov_tokens;
        if lik.oov_tokens == lik.tokens {
            score.oov_docs += 1;
        }
    }
    if score.oov_docs == score.docs {
        return Err(Error::OutOfVocabulary);
    }
    Ok(score)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Classification,
    Loglikelihood,
}

/// Which tokens count when comparing class likelihoods.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoringVocabulary {
    /// Every token counts; tokens unknown to a class model score `log δ`.
    #[default]
    PerClass,
    /// Tokens unseen by every class model in the fold are dropped.
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvalConfig {
    pub train: TrainConfig,
    pub plan: SplitPlan,
    pub delta: f64,
    pub scoring_vocabulary: ScoringVocabulary,
}

impl EvalConfig {
    pub fn new(train: TrainConfig, plan: SplitPlan) -> Self {
        Self {
            train,
            plan,
            delta: DEFAULT_DELTA,
            scoring_vocabulary: ScoringVocabulary::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_docs: usize,
    pub test_docs: usize,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correct: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tokens: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oov_tokens: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub metric: String,
    pub per_fold: Vec<f64>,
    pub mean: f64,
    pub stdev: f64,
    pub folds: Vec<FoldResult>,
    pub config: EvalConfig,
}

impl EvalReport {
    fn new(protocol: Protocol, metric: &str, folds: Vec<FoldResult>, config: EvalConfig) -> Self {
        let per_fold: Vec<f64> = folds.iter().map(|f| f.value).collect();
        let n = per_fold.len() as f64;
        let mean = per_fold.iter().sum::<f64>() / n;
        let stdev = if per_fold.len() > 1 {
            (per_fold.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            protocol,
            metric: metric.to_owned(),
            per_fold,
            mean,
            stdev,
            folds,
            config,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `fold,metric,value` rows, one per recorded quantity.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,metric,value\n");
        for f in &self.folds {
            let _ = writeln!(out, "{},{},{}", f.fold, self.metric, f.value);
            let extra = [
                ("correct", f.correct.map(|v| v as f64)),
                ("test_docs", Some(f.test_docs as f64)),
                ("baseline_loglik", f.baseline),
                ("tokens", f.tokens.map(|v| v as f64)),
                ("oov_tokens", f.oov_tokens.map(|v| v as f64)),
            ];
            for (name, value) in extra {
                if let Some(v) = value {
                    let _ = writeln!(out, "{},{name},{v}", f.fold);
                }
            }
        }
        out
    }

    /// Aligned plain-text summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "protocol  {:?}", self.protocol);
        let _ = writeln!(out, "gtw       {}", self.config.train.gtw);
        let _ = writeln!(out, "topics    {}", self.config.train.topics);
        let _ = writeln!(out, "seed      {}", self.config.train.seed);
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:>4}  {:>6}  {:>6}  {:>18}  {:>18}",
            "fold", "train", "test", self.metric, "baseline"
        );
        for f in &self.folds {
            let baseline = f
                .baseline
                .map_or_else(|| "-".to_owned(), |b| format!("{b:.6}"));
            let _ = writeln!(
                out,
                "{:>4}  {:>6}  {:>6}  {:>18.6}  {:>18}",
                f.fold, f.train_docs, f.test_docs, f.value, baseline
            );
        }
        let _ = writeln!(
            out,
            "{:>4}  {:>6}  {:>6}  {:>18.6}",
            "mean", "", "", self.mean
        );
        let _ = writeln!(
            out,
            "{:>4}  {:>6}  {:>6}  {:>18.6}",
            "sd", "", "", self.stdev
        );
        out
    }
}

fn pick(docs: &[RawDocument], idx: &[usize]) -> Vec<RawDocument> {
    idx.iter().map(|&i| docs[i].clone()).collect()
}

/// Trains one model per label on each fold's training part and labels each
/// test document with the class of highest likelihood (ties go to the
/// lexicographically smallest label).
pub fn classify(docs: &[RawDocument], config: &EvalConfig) -> Result<EvalReport> {
    let mut labels: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        let label = d
            .label
            .as_deref()
            .ok_or_else(|| Error::Config(format!("document {:?} has no label", d.id)))?;
        *labels.entry(label).or_insert(0) += 1;
    }
    let min_per_class = config.plan.folds.max(2);
    if let Some((label, count)) = labels.iter().find(|&(_, &c)| c < min_per_class) {
        return Err(Error::Config(format!(
            "class {label:?} has {count} documents, needs at least {min_per_class}"
        )));
    }
    let labels: Vec<&str> = labels.into_keys().collect();
    let splits = make_splits(docs, &config.plan)?;

    let folds = par::map_range(splits.len(), |f| -> Result<FoldResult> {
        let split = &splits[f];
        let fold_seed = derive_seed(config.train.seed, f as u64);
        let models = par::map_range(labels.len(), |c| {
            let train_docs: Vec<RawDocument> = split
                .train
                .iter()
                .map(|&i| &docs[i])
                .filter(|d| d.label.as_deref() == Some(labels[c]))
                .cloned()
                .collect();
            let cfg = TrainConfig {
                seed: derive_seed(fold_seed, c as u64),
                ..config.train.clone()
            };
            model::train(&train_docs, &cfg).map_err(|e| match e {
                Error::Numerical(msg) => {
                    Error::Numerical(format!("class {:?}, fold {f}: {msg}", labels[c]))
                }
                other => other,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        let shared: Option<HashSet<&str>> =
            (config.scoring_vocabulary == ScoringVocabulary::Shared).then(|| {
                models
                    .iter()
                    .flat_map(|m| m.vocabulary().terms().iter().map(String::as_str))
                    .collect()
            });

        let tokenizer = &config.train.tokenizer;
        let predictions = par::map(&split.test, |&i| {
            let mut tokens = corpus::tokenize(&docs[i].text, tokenizer);
            if let Some(shared) = &shared {
                tokens.retain(|t| shared.contains(t.as_str()));
            }
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (c, m) in models.iter().enumerate() {
                let score = doc_log_likelihood(m, &tokens, config.delta).loglik;
                if score > best_score {
                    best = c;
                    best_score = score;
                }
            }
            best
        });
        let correct = split
            .test
            .iter()
            .zip(&predictions)
            .filter(|&(&i, &c)| docs[i].label.as_deref() == Some(labels[c]))
            .count();
        Ok(FoldResult {
            fold: f,
            train_docs: split.train.len(),
            test_docs: split.test.len(),
            value: correct as f64 / split.test.len() as f64,
            correct: Some(correct),
            baseline: None,
            tokens: None,
            oov_tokens: None,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    Ok(EvalReport::new(
        Protocol::Classification,
        "accuracy",
        folds,
        config.clone(),
    ))
}

/// Trains on the large part of each split and reports the summed
/// log-likelihood of the held-out documents.
pub fn heldout_loglik(docs: &[RawDocument], config: &EvalConfig) -> Result<EvalReport> {
    let splits = make_splits(docs, &config.plan)?;
    let folds = par::map_range(splits.len(), |f| -> Result<FoldResult> {
        let split = &splits[f];
        let cfg = TrainConfig {
            seed: derive_seed(config.train.seed, f as u64),
            ..config.train.clone()
        };
        let model = model::train(&pick(docs, &split.train), &cfg)?;
        let score = score_documents(&model, &pick(docs, &split.test), config.delta)?;
        Ok(FoldResult {
            fold: f,
            train_docs: split.train.len(),
            test_docs: split.test.len(),
            value: score.loglik,
            correct: None,
            baseline: Some(score.baseline_loglik),
            tokens: Some(score.tokens),
            oov_tokens: Some(score.oov_tokens),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    Ok(EvalReport::new(
        Protocol::Loglikelihood,
        "loglik",
        folds,
        config.clone(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SynthConfig {
    pub seed: u64,
    pub classes: usize,
    pub vocab_per_class: usize,
    pub docs_per_class: usize,
    pub doc_length: usize,
    pub overlap_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            classes: 3,
            vocab_per_class: 100,
            docs_per_class: 100,
            doc_length: 50,
            overlap_fraction: 0.0,
        }
    }
}

/// Term `t` of class `c`'s private pool.
pub fn class_term(class: usize, t: usize) -> String {
    format!("c{class}w{t}")
}

/// Term `t` of the pool shared by all classes.
pub fn shared_term(t: usize) -> String {
    format!("sw{t}")
}

pub fn class_label(class: usize) -> String {
    format!("class{class}")
}

/// Labeled corpus where every document draws its tokens uniformly from its
/// class pool plus a shared pool of `overlap_fraction × vocab_per_class`
/// terms. Documents are ordered by class.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Vec<RawDocument>> {
    if config.classes == 0
        || config.vocab_per_class == 0
        || config.docs_per_class == 0
        || config.doc_length == 0
    {
        return Err(Error::Config(
            "synthetic corpus sizes must be positive".into(),
        ));
    }
    if !(0.0..1.0).contains(&config.overlap_fraction) {
        return Err(Error::Config(format!(
            "overlap fraction must lie in [0, 1), got {}",
            config.overlap_fraction
        )));
    }
    let shared_size = (config.overlap_fraction * config.vocab_per_class as f64).round() as usize;
    let shared: Vec<String> = (0..shared_size).map(shared_term).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut docs = Vec::with_capacity(config.classes * config.docs_per_class);
    for c in 0..config.classes {
        let mut pool: Vec<String> = (0..config.vocab_per_class)
            .map(|t| class_term(c, t))
            .collect();
        pool.extend(shared.iter().cloned());
        let label = class_label(c);
        for d in 0..config.docs_per_class {
            let words: Vec<&str> = (0..config.doc_length)
                .map(|_| pool[rng.random_range(0..pool.len())].as_str())
                .collect();
            docs.push(RawDocument::labeled(
                format!("{label}-{d}"),
                label.clone(),
                words.join(" "),
            ));
        }
    }
    Ok(docs)
}

/// Writes documents as `label<TAB>text` lines.
pub fn to_labeled_tsv(docs: &[RawDocument]) -> String {
    let mut out = String::new();
    for d in docs {
        let _ = writeln!(out, "{}\t{}", d.label.as_deref().unwrap_or(""), d.text);
    }
    out
}

//! Training pipeline and the trained topic model.
//!
//! Training weights the count matrix, compresses every word's document
//! profile to two dimensions with a cascade of fuzzy c-means runs of
//! decreasing cluster count, and clusters the compressed words into `K`
//! topics. The final memberships are `P(T|W)`. Word, topic and document
//! probabilities are then assembled from `P(T|W)` and the weighted counts.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::corpus::{self, RawDocument, TermDocMatrix, TokenizerConfig, Vocabulary};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::fcm::{self, FcmConfig, IterationState};
use crate::json;
use crate::par;
use crate::weighting::{
    self, GlobalWeightVector, GtwMethod, IdfVariant, WeightedMatrix, DEFAULT_EPSILON,
};

pub const MODEL_VERSION: u32 = 1;

/// Cluster counts of the successive dimension-reduction runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CascadeSchedule(Vec<usize>);

impl Default for CascadeSchedule {
    fn default() -> Self {
        Self((2..=10).rev().collect())
    }
}

impl CascadeSchedule {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        let schedule = Self(counts);
        schedule.check_shape()?;
        Ok(schedule)
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }

    fn check_shape(&self) -> Result<()> {
        let counts = &self.0;
        if counts.is_empty() {
            return Err(Error::Config("cascade schedule is empty".into()));
        }
        if counts.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Config(format!(
                "cascade schedule must be strictly descending, got {counts:?}"
            )));
        }
        if *counts.last().unwrap() < 2 {
            return Err(Error::Config(format!(
                "cascade schedule must end at 2 or more clusters, got {counts:?}"
            )));
        }
        Ok(())
    }

    /// Checks the schedule against the number of words to be clustered.
    pub fn validate(&self, n_words: usize) -> Result<()> {
        self.check_shape()?;
        if self.0[0] >= n_words {
            return Err(Error::Numerical(format!(
                "cascade starts at {} clusters but the vocabulary has only {n_words} words",
                self.0[0]
            )));
        }
        Ok(())
    }
}

/// Every knob of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrainConfig {
    pub tokenizer: TokenizerConfig,
    pub min_df: usize,
    pub gtw: GtwMethod,
    pub idf_variant: IdfVariant,
    pub epsilon: f64,
    pub topics: usize,
    /// `None` clusters words directly in document space.
    pub cascade: Option<CascadeSchedule>,
    pub fuzzifier: f64,
    pub threshold: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let fcm = FcmConfig::default();
        Self {
            tokenizer: TokenizerConfig::default(),
            min_df: 1,
            gtw: GtwMethod::Entropy,
            idf_variant: IdfVariant::default(),
            epsilon: DEFAULT_EPSILON,
            topics: 50,
            cascade: Some(CascadeSchedule::default()),
            fuzzifier: fcm.fuzzifier,
            threshold: fcm.threshold,
            max_iterations: fcm.max_iterations,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Solver settings for one stage; stage seeds derive from the master seed.
    pub fn fcm_config(&self, clusters: usize, stage: usize) -> FcmConfig {
        FcmConfig {
            clusters,
            fuzzifier: self.fuzzifier,
            threshold: self.threshold,
            max_iterations: self.max_iterations,
            seed: derive_seed(self.seed, stage as u64),
        }
    }
}

/// Outcome of one fuzzy c-means run inside the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub clusters: usize,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
}

impl StageReport {
    fn from_result(clusters: usize, res: &fcm::FcmResult) -> Self {
        Self {
            clusters,
            iterations: res.iterations,
            converged: res.converged,
            objective: res.objective_trace.last().copied().unwrap_or(0.0),
        }
    }
}

/// Repeatedly clusters the words, feeding each run's membership matrix to
/// the next, and returns the last (`m × last-count`) membership matrix.
pub fn cascade_reduce(
    a: &WeightedMatrix,
    schedule: &CascadeSchedule,
    config: &TrainConfig,
) -> Result<(Array2<f64>, Vec<StageReport>)> {
    cascade_reduce_observed(a, schedule, config, &mut |_, _| {})
}

/// As [`cascade_reduce`], reporting every solver iteration with its stage.
pub fn cascade_reduce_observed(
    a: &WeightedMatrix,
    schedule: &CascadeSchedule,
    config: &TrainConfig,
    observer: &mut dyn FnMut(usize, &IterationState<'_>),
) -> Result<(Array2<f64>, Vec<StageReport>)> {
    schedule.validate(a.n_terms())?;
    let mut current = a.a.to_dense();
    let mut reports = Vec::with_capacity(schedule.counts().len());
    for (stage, &clusters) in schedule.counts().iter().enumerate() {
        let res =
            fcm::fcm_run_observed(current.view(), &config.fcm_config(clusters, stage), |s| {
                observer(stage, s)
            })?;
        reports.push(StageReport::from_result(clusters, &res));
        if !res.converged {
            log::warn!(
                "cascade stage {stage} ({clusters} clusters) stopped after {} iterations without converging",
                res.iterations
            );
        }
        current = res.membership;
    }
    Ok((current, reports))
}

/// Clusters the reduced word rows into `topics` clusters; the memberships
/// are `P(T_k|W_i)` (words × topics).
pub fn topic_memberships(
    reduced: ArrayView2<f64>,
    topics: usize,
    config: &TrainConfig,
    stage: usize,
) -> Result<(Array2<f64>, StageReport)> {
    topic_memberships_observed(reduced, topics, config, stage, &mut |_, _| {})
}

fn topic_memberships_observed(
    reduced: ArrayView2<f64>,
    topics: usize,
    config: &TrainConfig,
    stage: usize,
    observer: &mut dyn FnMut(usize, &IterationState<'_>),
) -> Result<(Array2<f64>, StageReport)> {
    let m = reduced.nrows();
    if topics < 2 {
        return Err(Error::Config(format!(
            "need at least 2 topics, got {topics}"
        )));
    }
    if topics >= m {
        return Err(Error::Numerical(format!(
            "{topics} topics requested but the vocabulary has only {m} words"
        )));
    }
    let res = fcm::fcm_run_observed(reduced, &config.fcm_config(topics, stage), |s| {
        observer(stage, s)
    })?;
    if !res.converged {
        log::warn!(
            "topic clustering stopped after {} iterations without converging",
            res.iterations
        );
    }
    let report = StageReport::from_result(topics, &res);
    Ok((res.membership, report))
}

/// `P(W_i) = Σ_j a_ij / Σ_i Σ_j a_ij`.
pub fn word_probabilities(a: &WeightedMatrix) -> Result<Vec<f64>> {
    let rows = a.a.row_sums();
    let total: f64 = rows.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Numerical(format!(
            "weighted matrix has total mass {total}"
        )));
    }
    Ok(rows.into_iter().map(|r| r / total).collect())
}

/// `P(W_i|T_k)` (topics × words): the joint `P(T_k|W_i)·P(W_i)` normalized
/// within each topic.
pub fn word_given_topic(ptw: ArrayView2<f64>, pw: &[f64]) -> Result<Array2<f64>> {
    let (m, k) = ptw.dim();
    if pw.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} word probabilities for {m} words",
            pw.len()
        )));
    }
    let mut out = Array2::zeros((k, m));
    for t in 0..k {
        let mut row = out.row_mut(t);
        for i in 0..m {
            row[i] = ptw[[i, t]] * pw[i];
        }
        let mass: f64 = row.sum();
        if !(mass > 0.0) {
            return Err(Error::Numerical(format!("empty topic {t}")));
        }
        row /= mass;
    }
    Ok(out)
}

/// `P(W_i|D_j)` (words × documents): each weighted column normalized.
pub fn word_given_doc(a: &WeightedMatrix, doc_ids: &[String]) -> Result<Array2<f64>> {
    let sums = a.a.col_sums();
    if let Some(j) = sums.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::EmptyDocument(doc_name(doc_ids, j)));
    }
    let mut out = a.a.to_dense();
    for (j, s) in sums.into_iter().enumerate() {
        out.column_mut(j).mapv_inplace(|v| v / s);
    }
    Ok(out)
}

fn doc_name(doc_ids: &[String], j: usize) -> String {
    doc_ids.get(j).cloned().unwrap_or_else(|| format!("#{j}"))
}

/// `P(T_k|D_j) = Σ_i P(T_k|W_i)·P(W_i|D_j)` (topics × documents).
pub fn topic_given_doc(ptw: ArrayView2<f64>, pwd: ArrayView2<f64>) -> Result<Array2<f64>> {
    if ptw.nrows() != pwd.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "P(T|W) has {} words, P(W|D) has {}",
            ptw.nrows(),
            pwd.nrows()
        )));
    }
    Ok(ptw.t().dot(&pwd))
}

/// Topic mixture of one document from its `(term, weighted mass)` entries
/// in ascending term order. The same arithmetic serves training documents
/// and folded-in documents.
fn mix_topics(ptw: ArrayView2<f64>, entries: &[(usize, f64)]) -> Option<Vec<f64>> {
    let total: f64 = entries.iter().map(|&(_, w)| w).sum();
    if !(total > 0.0) {
        return None;
    }
    let mut theta = vec![0.0; ptw.ncols()];
    for &(i, w) in entries {
        let p = w / total;
        for (t, acc) in theta.iter_mut().enumerate() {
            *acc += ptw[[i, t]] * p;
        }
    }
    Some(theta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    config: TrainConfig,
    vocabulary: Vocabulary,
    word_prob: Vec<f64>,
    /// words × topics
    topic_given_word: Array2<f64>,
    /// topics × words
    word_given_topic: Array2<f64>,
    /// topics × training documents
    topic_given_doc: Array2<f64>,
    doc_ids: Vec<String>,
    global_weights: GlobalWeightVector,
    stages: Vec<StageReport>,
}

/// Topic distribution of a folded-in document.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldIn {
    pub topics: Vec<f64>,
    /// In-vocabulary `(term, count)` pairs in term order.
    pub counts: Vec<(usize, u32)>,
    pub oov_tokens: usize,
}

/// Runs the whole pipeline on raw documents.
pub fn train(docs: &[RawDocument], config: &TrainConfig) -> Result<TopicModel> {
    train_observed(docs, config, &mut |_, _| {})
}

/// As [`train`], calling `observer(stage, state)` after every clustering
/// iteration. Cascade stages are numbered from 0; the topic run comes last.
pub fn train_observed(
    docs: &[RawDocument],
    config: &TrainConfig,
    observer: &mut dyn FnMut(usize, &IterationState<'_>),
) -> Result<TopicModel> {
    let (vocab, f) = corpus::build_matrix_with_min_df(docs, &config.tokenizer, config.min_df)?;
    let ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
    train_matrix_observed(vocab, &f, ids, config, observer)
}

/// Runs the pipeline on an already built count matrix.
pub fn train_matrix(
    vocabulary: Vocabulary,
    f: &TermDocMatrix,
    doc_ids: Vec<String>,
    config: &TrainConfig,
) -> Result<TopicModel> {
    train_matrix_observed(vocabulary, f, doc_ids, config, &mut |_, _| {})
}

fn train_matrix_observed(
    vocabulary: Vocabulary,
    f: &TermDocMatrix,
    doc_ids: Vec<String>,
    config: &TrainConfig,
    observer: &mut dyn FnMut(usize, &IterationState<'_>),
) -> Result<TopicModel> {
    if vocabulary.len() != f.n_terms() || doc_ids.len() != f.n_docs() {
        return Err(Error::DimensionMismatch(format!(
            "{} terms / {} ids for a {}×{} matrix",
            vocabulary.len(),
            doc_ids.len(),
            f.n_terms(),
            f.n_docs()
        )));
    }
    let m = f.n_terms();
    if config.topics < 2 || config.topics >= m {
        return Err(Error::Numerical(format!(
            "topic count must be in [2, {m}) for a {m}-word vocabulary, got {}",
            config.topics
        )));
    }
    if let Some(schedule) = &config.cascade {
        schedule.validate(m)?;
    }

    let global_weights =
        weighting::global_weights(f, config.gtw, config.idf_variant, config.epsilon)?;
    let clamped = global_weights.clamped_count();
    if clamped > 0 {
        log::warn!(
            "{clamped} of {m} global weights clamped to {}",
            config.epsilon
        );
    }
    let a = weighting::apply_gtw(f, &global_weights)?;
    let col_sums = a.a.col_sums();
    if let Some(j) = col_sums.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::EmptyDocument(doc_name(&doc_ids, j)));
    }

    let (reduced, mut stages) = match &config.cascade {
        Some(schedule) => cascade_reduce_observed(&a, schedule, config, observer)?,
        None => (a.a.to_dense(), Vec::new()),
    };
    let (ptw, topic_stage) = topic_memberships_observed(
        reduced.view(),
        config.topics,
        config,
        stages.len(),
        observer,
    )?;
    stages.push(topic_stage);

    let word_prob = word_probabilities(&a)?;
    let pwt = word_given_topic(ptw.view(), &word_prob)?;

    let mut per_doc: Vec<Vec<(usize, f64)>> = vec![Vec::new(); f.n_docs()];
    for i in 0..m {
        let (docs, vals) = a.a.row(i);
        for (&j, &v) in docs.iter().zip(vals) {
            per_doc[j].push((i, v));
        }
    }
    let mixtures = par::map(&per_doc, |entries| mix_topics(ptw.view(), entries));
    let mut ptd = Array2::zeros((config.topics, f.n_docs()));
    for (j, theta) in mixtures.into_iter().enumerate() {
        let theta = theta.ok_or_else(|| Error::EmptyDocument(doc_name(&doc_ids, j)))?;
        for (t, p) in theta.into_iter().enumerate() {
            ptd[[t, j]] = p;
        }
    }

    Ok(TopicModel {
        config: config.clone(),
        vocabulary,
        word_prob,
        topic_given_word: ptw,
        word_given_topic: pwt,
        topic_given_doc: ptd,
        doc_ids,
        global_weights,
        stages,
    })
}

impl TopicModel {
    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn topics(&self) -> usize {
        self.topic_given_word.ncols()
    }

    pub fn gtw(&self) -> GtwMethod {
        self.config.gtw
    }

    /// `P(W)`
    pub fn word_prob(&self) -> &[f64] {
        &self.word_prob
    }

    /// `P(T|W)`, words × topics.
    pub fn topic_given_word(&self) -> &Array2<f64> {
        &self.topic_given_word
    }

    /// `P(W|T)`, topics × words.
    pub fn word_given_topic(&self) -> &Array2<f64> {
        &self.word_given_topic
    }

    /// `P(T|D)` of the training documents, topics × documents.
    pub fn topic_given_doc(&self) -> &Array2<f64> {
        &self.topic_given_doc
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn global_weights(&self) -> &GlobalWeightVector {
        &self.global_weights
    }

    /// One report per clustering run: the cascade stages, then the topic run.
    pub fn stages(&self) -> &[StageReport] {
        &self.stages
    }

    /// Joint mass `Σ_i P(T_k|W_i)·P(W_i)` of each topic.
    pub fn topic_mass(&self) -> Vec<f64> {
        (0..self.topics())
            .map(|t| {
                self.word_prob
                    .iter()
                    .enumerate()
                    .map(|(i, p)| self.topic_given_word[[i, t]] * p)
                    .sum()
            })
            .collect()
    }

    /// Infers `P(T|d)` for a new document from its in-vocabulary tokens.
    pub fn fold_in(&self, doc: &RawDocument) -> Result<Vec<f64>> {
        Ok(self.fold_in_detailed(doc)?.topics)
    }

    pub fn fold_in_detailed(&self, doc: &RawDocument) -> Result<FoldIn> {
        let tokens = corpus::tokenize(&doc.text, &self.config.tokenizer);
        let (counts, oov_tokens) = self.vocabulary.count_tokens(&tokens);
        let topics = self.fold_in_counts(&counts)?;
        Ok(FoldIn {
            topics,
            counts,
            oov_tokens,
        })
    }

    /// Fold-in from `(term, count)` pairs sorted by term.
    pub fn fold_in_counts(&self, counts: &[(usize, u32)]) -> Result<Vec<f64>> {
        let weights = &self.global_weights;
        let entries: Vec<(usize, f64)> = counts
            .iter()
            .map(|&(i, c)| {
                let w = if weights.method == GtwMethod::None {
                    f64::from(c)
                } else {
                    weights.clamped[i] * f64::from(c)
                };
                (i, w)
            })
            .collect();
        mix_topics(self.topic_given_word.view(), &entries).ok_or(Error::OutOfVocabulary)
    }

    /// `P(w|d) = Σ_k P(w|T_k)·P(T_k|d)` for term index `term`.
    pub fn word_prob_in_doc(&self, theta: &[f64], term: usize) -> f64 {
        theta
            .iter()
            .enumerate()
            .map(|(t, p)| self.word_given_topic[[t, term]] * p)
            .sum()
    }

    /// Highest-probability words of a topic; ties go to the
    /// lexicographically smaller term.
    pub fn top_words(&self, topic: usize, count: usize) -> Result<Vec<(&str, f64)>> {
        if topic >= self.topics() {
            return Err(Error::Config(format!(
                "topic {topic} out of range (model has {} topics)",
                self.topics()
            )));
        }
        let row = self.word_given_topic.row(topic);
        let mut order: Vec<usize> = (0..row.len()).collect();
        // vocabulary is sorted, so index order is lexicographic order
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        Ok(order
            .into_iter()
            .take(count)
            .map(|i| (self.vocabulary.term(i), row[i]))
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(json::to_string_exact(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = std::io::BufWriter::new(file);
        json::to_writer_exact(&mut writer, &ModelFile::from(self))?;
        writer
            .write_all(b"\n")
            .and_then(|_| writer.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    config: TrainConfig,
    vocabulary: Vec<String>,
    word_prob: Vec<f64>,
    topic_given_word: Vec<Vec<f64>>,
    word_given_topic: Vec<Vec<f64>>,
    topic_given_doc: DocTopics,
    global_weights: WeightsFile,
    stages: Vec<StageReport>,
}

#[derive(Serialize, Deserialize)]
struct DocTopics {
    doc_ids: Vec<String>,
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct WeightsFile {
    method: GtwMethod,
    epsilon: f64,
    #[serde(with = "crate::json::floats_or_null")]
    raw: Vec<f64>,
    clamped: Vec<f64>,
}

fn rows_of(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_rows(name: &str, rows: Vec<Vec<f64>>, shape: (usize, usize)) -> Result<Array2<f64>> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        return Err(Error::DimensionMismatch(format!(
            "{name} should be {}×{}",
            shape.0, shape.1
        )));
    }
    Ok(Array2::from_shape_vec(shape, rows.into_iter().flatten().collect()).expect("shape checked"))
}

impl From<&TopicModel> for ModelFile {
    fn from(m: &TopicModel) -> Self {
        Self {
            version: MODEL_VERSION,
            config: m.config.clone(),
            vocabulary: m.vocabulary.terms().to_vec(),
            word_prob: m.word_prob.clone(),
            topic_given_word: rows_of(&m.topic_given_word),
            word_given_topic: rows_of(&m.word_given_topic),
            topic_given_doc: DocTopics {
                doc_ids: m.doc_ids.clone(),
                rows: rows_of(&m.topic_given_doc),
            },
            global_weights: WeightsFile {
                method: m.global_weights.method,
                epsilon: m.global_weights.epsilon,
                raw: m.global_weights.raw.clone(),
                clamped: m.global_weights.clamped.clone(),
            },
            stages: m.stages.clone(),
        }
    }
}

impl TryFrom<ModelFile> for TopicModel {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        if file.version != MODEL_VERSION {
            return Err(Error::Config(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                file.version
            )));
        }
        let m = file.vocabulary.len();
        let k = file.config.topics;
        let n = file.topic_given_doc.doc_ids.len();
        if file.word_prob.len() != m
            || file.global_weights.raw.len() != m
            || file.global_weights.clamped.len() != m
        {
            return Err(Error::DimensionMismatch(
                "per-word vectors do not match vocabulary".into(),
            ));
        }
        Ok(Self {
            topic_given_word: from_rows("topic_given_word", file.topic_given_word, (m, k))?,
            word_given_topic: from_rows("word_given_topic", file.word_given_topic, (k, m))?,
            topic_given_doc: from_rows("topic_given_doc", file.topic_given_doc.rows, (k, n))?,
            doc_ids: file.topic_given_doc.doc_ids,
            vocabulary: Vocabulary::from(file.vocabulary),
            word_prob: file.word_prob,
            global_weights: GlobalWeightVector {
                method: file.global_weights.method,
                raw: file.global_weights.raw,
                clamped: file.global_weights.clamped,
                epsilon: file.global_weights.epsilon,
            },
            config: file.config,
            stages: file.stages,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn weighted(rows: &[&[f64]]) -> WeightedMatrix {
        let n = rows[0].len();
        let sparse = rows
            .iter()
            .map(|r| {
                r.iter()
                    .copied()
                    .enumerate()
                    .filter(|&(_, v)| v > 0.0)
                    .collect()
            })
            .collect();
        WeightedMatrix {
            a: crate::sparse::CsrMatrix::from_rows(n, sparse, |v: f64| v > 0.0).unwrap(),
            method: GtwMethod::None,
        }
    }

    #[test]
    fn schedule_rules() {
        assert_eq!(
            CascadeSchedule::default().counts(),
            [10, 9, 8, 7, 6, 5, 4, 3, 2]
        );
        assert!(CascadeSchedule::new(vec![5, 5, 2]).is_err());
        assert!(CascadeSchedule::new(vec![3, 1]).is_err());
        assert!(CascadeSchedule::new(vec![]).is_err());
        assert!(CascadeSchedule::default().validate(10).is_err());
        assert!(CascadeSchedule::default().validate(11).is_ok());
    }

    #[test]
    fn word_probability_examples() {
        let p = word_probabilities(&weighted(&[&[1.0, 0.0], &[1.0, 2.0]])).unwrap();
        assert_eq!(p, [0.25, 0.75]);
        let p = word_probabilities(&weighted(&[&[2.0, 2.0], &[2.0, 2.0], &[2.0, 2.0]])).unwrap();
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(word_probabilities(&weighted(&[&[0.5]])).unwrap(), [1.0]);
    }

    #[test]
    fn word_given_topic_examples() {
        let ptw = array![[1.0, 0.0], [0.0, 1.0]];
        let pwt = word_given_topic(ptw.view(), &[0.5, 0.5]).unwrap();
        assert_eq!(pwt, array![[1.0, 0.0], [0.0, 1.0]]);

        let single = array![[1.0], [1.0], [1.0]];
        let pwt = word_given_topic(single.view(), &[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(pwt.row(0).to_vec(), [0.2, 0.3, 0.5]);

        let dead = array![[1.0, 0.0], [1.0, 0.0]];
        assert!(word_given_topic(dead.view(), &[0.5, 0.5])
            .unwrap_err()
            .to_string()
            .contains("empty topic"));
    }

    #[test]
    fn word_given_doc_examples() {
        let ids = vec!["a".to_string(), "b".to_string()];
        let pwd = word_given_doc(&weighted(&[&[1.0, 0.0], &[3.0, 2.0]]), &ids).unwrap();
        assert_eq!(pwd.column(0).to_vec(), [0.25, 0.75]);
        assert_eq!(pwd.column(1).to_vec(), [0.0, 1.0]);

        let err = word_given_doc(&weighted(&[&[1.0, 0.0]]), &ids).unwrap_err();
        assert!(err.to_string().contains("\"b\""));
    }

    #[test]
    fn topic_given_doc_examples() {
        let ptw = array![[1.0, 0.0], [0.0, 1.0]];
        let pwd = array![[0.25], [0.75]];
        assert_eq!(
            topic_given_doc(ptw.view(), pwd.view()).unwrap(),
            array![[0.25], [0.75]]
        );

        let same = array![[0.7, 0.3], [0.7, 0.3], [0.7, 0.3]];
        let pwd = array![[0.2, 1.0], [0.3, 0.0], [0.5, 0.0]];
        let ptd = topic_given_doc(same.view(), pwd.view()).unwrap();
        for j in 0..2 {
            assert!((ptd[[0, j]] - 0.7).abs() < 1e-15 && (ptd[[1, j]] - 0.3).abs() < 1e-15);
        }

        let one = array![[1.0], [1.0], [1.0]];
        assert!(topic_given_doc(one.view(), pwd.view())
            .unwrap()
            .iter()
            .all(|&p| (p - 1.0).abs() < 1e-15));
    }

    #[test]
    fn topic_relabeling_permutes_outputs() {
        let ptw = array![
            [0.6, 0.3, 0.1],
            [0.2, 0.2, 0.6],
            [0.1, 0.8, 0.1],
            [0.5, 0.25, 0.25]
        ];
        let pw = [0.1, 0.2, 0.3, 0.4];
        let pwd = array![[0.5, 0.0], [0.5, 0.1], [0.0, 0.4], [0.0, 0.5]];
        let perm = [2, 0, 1];
        let permuted = Array2::from_shape_fn((4, 3), |(i, t)| ptw[[i, perm[t]]]);

        let a = word_given_topic(ptw.view(), &pw).unwrap();
        let b = word_given_topic(permuted.view(), &pw).unwrap();
        let c = topic_given_doc(ptw.view(), pwd.view()).unwrap();
        let d = topic_given_doc(permuted.view(), pwd.view()).unwrap();
        for (t, &p) in perm.iter().enumerate() {
            assert_eq!(b.row(t), a.row(p));
            assert_eq!(d.row(t), c.row(p));
        }
    }

    #[test]
    fn topic_membership_preconditions() {
        let reduced = Array2::from_shape_fn((5, 2), |(i, j)| (i + j) as f64);
        let cfg = TrainConfig::default();
        assert!(topic_memberships(reduced.view(), 1, &cfg, 0).is_err());
        assert!(topic_memberships(reduced.view(), 5, &cfg, 0).is_err());
        let (ptw, _) = topic_memberships(reduced.view(), 2, &cfg, 0).unwrap();
        for row in ptw.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_stage_cascade_gives_two_columns() {
        let a = weighted(&[
            &[3.0, 0.0, 1.0, 0.0],
            &[2.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 4.0, 1.0],
            &[0.0, 1.0, 0.0, 5.0],
            &[1.0, 1.0, 1.0, 1.0],
        ]);
        let (reduced, reports) = cascade_reduce(
            &a,
            &CascadeSchedule::new(vec![2]).unwrap(),
            &TrainConfig::default(),
        )
        .unwrap();
        assert_eq!(reduced.dim(), (5, 2));
        assert_eq!(reports.len(), 1);
        for row in reduced.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn top_words_order_and_bounds() {
        let docs = [
            RawDocument::new("a", "apple banana cherry apple"),
            RawDocument::new("b", "banana cherry date elder"),
            RawDocument::new("c", "fig grape apple date"),
            RawDocument::new("d", "grape fig elder banana"),
        ];
        let cfg = TrainConfig {
            gtw: GtwMethod::None,
            topics: 2,
            cascade: Some(CascadeSchedule::new(vec![3]).unwrap()),
            ..TrainConfig::default()
        };
        let model = train(&docs, &cfg).unwrap();
        let all = model.top_words(0, 100).unwrap();
        assert_eq!(all.len(), model.vocabulary().len());
        assert!(all.windows(2).all(|w| w[0].1 >= w[1].1));
        assert!(model.top_words(2, 5).is_err());
    }
}

//! Document loading, tokenization and the term-document count matrix.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::sparse::CsrMatrix;

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub text: String,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: None,
            text: text.into(),
        }
    }

    pub fn labeled(
        id: impl Into<String>,
        label: impl Into<String>,
        text: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            label: Some(label.into()),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub min_token_length: usize,
    pub drop_numeric_tokens: bool,
    pub stopwords: BTreeSet<String>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            min_token_length: 2,
            drop_numeric_tokens: true,
            stopwords: parse_stopwords(BUNDLED_STOPWORDS),
        }
    }
}

impl TokenizerConfig {
    /// Replaces the stop-word list with the contents of a file (one word per
    /// line, `#` starts a comment).
    pub fn with_stopword_file(mut self, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.stopwords = parse_stopwords(&text);
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.min_token_length == 0 {
            return Err(Error::Config("min-token-length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Parses a stop-word list: one word per line, `#` comments, blank lines
/// ignored. Words are stored as written; lowercase them in the file when the
/// tokenizer lowercases.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Splits on runs of non-alphanumeric characters and applies the filters in
/// `config`. Tokens are returned in document order.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|raw| !raw.is_empty())
        .filter_map(|raw| {
            let token = if config.lowercase {
                raw.to_lowercase()
            } else {
                raw.to_owned()
            };
            if token.chars().count() < config.min_token_length {
                return None;
            }
            if config.drop_numeric_tokens && token.chars().all(char::is_numeric) {
                return None;
            }
            if config.stopwords.contains(&token) {
                return None;
            }
            Some(token)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    /// Every `*.txt` file below a directory; id is the file stem.
    DirOfTxt,
    /// `label<TAB>text`, one document per line.
    LabeledTsv,
    /// One unlabeled document per line.
    Lines,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dir-of-txt" | "dir" => Ok(Self::DirOfTxt),
            "labeled-tsv" | "tsv" => Ok(Self::LabeledTsv),
            "lines" => Ok(Self::Lines),
            other => Err(Error::Config(format!(
                "unknown corpus format {other:?} (expected dir-of-txt, labeled-tsv or lines)"
            ))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::DirOfTxt => "dir-of-txt",
            Self::LabeledTsv => "labeled-tsv",
            Self::Lines => "lines",
        })
    }
}

/// Loads documents from `path`. Documents with empty text are rejected
/// unless `allow_empty` is set. Line-based formats use the 1-based line
/// number as the document id.
pub fn load_corpus(
    path: &Path,
    format: CorpusFormat,
    allow_empty: bool,
) -> Result<Vec<RawDocument>> {
    let docs = match format {
        CorpusFormat::DirOfTxt => load_dir(path, allow_empty)?,
        CorpusFormat::LabeledTsv | CorpusFormat::Lines => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_lines(path, &text, format == CorpusFormat::LabeledTsv, allow_empty)?
        }
    };
    Ok(docs)
}

fn load_dir(root: &Path, allow_empty: bool) -> Result<Vec<RawDocument>> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        let path = entry.path();
        if entry.file_type().is_file() && path.extension().is_some_and(|ext| ext == "txt") {
            files.push(path.to_path_buf());
        }
    }

    let mut seen = HashSet::new();
    let mut docs = Vec::with_capacity(files.len());
    for path in files {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { path, id });
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        if !allow_empty && text.trim().is_empty() {
            return Err(Error::Malformed {
                path,
                line: 1,
                reason: "empty document".into(),
            });
        }
        docs.push(RawDocument::new(id, text));
    }
    Ok(docs)
}

fn parse_lines(
    path: &Path,
    text: &str,
    labeled: bool,
    allow_empty: bool,
) -> Result<Vec<RawDocument>> {
    let mut docs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let malformed = |reason: &str| Error::Malformed {
            path: path.to_path_buf(),
            line: lineno,
            reason: reason.into(),
        };
        let (label, body) = if labeled {
            let (label, body) = line
                .split_once('\t')
                .ok_or_else(|| malformed("expected label<TAB>text"))?;
            if label.trim().is_empty() {
                return Err(malformed("empty label"));
            }
            (Some(label.trim().to_owned()), body)
        } else {
            (None, line)
        };
        if !allow_empty && body.trim().is_empty() {
            return Err(malformed("empty document"));
        }
        docs.push(RawDocument {
            id: lineno.to_string(),
            label,
            text: body.to_owned(),
        });
    }
    Ok(docs)
}

/// Ordered list of unique terms with its inverse index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from terms, sorting them lexicographically and
    /// removing duplicates.
    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sorted: BTreeSet<String> = terms.into_iter().map(Into::into).collect();
        Self::from(sorted.into_iter().collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// Counts in-vocabulary tokens. Returns `(term index, count)` pairs
    /// sorted by index together with the number of out-of-vocabulary tokens.
    pub fn count_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> (Vec<(usize, u32)>, usize) {
        let mut counts = BTreeMap::new();
        let mut oov = 0;
        for token in tokens {
            match self.index_of(token.as_ref()) {
                Some(i) => *counts.entry(i).or_insert(0u32) += 1,
                None => oov += 1,
            }
        }
        (counts.into_iter().collect(), oov)
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(terms: Vec<String>) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { terms, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.terms
    }
}

/// Term-by-document counts `f_ij`: rows are terms, columns are documents.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDocMatrix {
    counts: CsrMatrix<u32>,
}

impl TermDocMatrix {
    /// Builds a matrix from per-term `(document, count)` lists sorted by
    /// document. Zero counts are dropped.
    pub fn from_rows(n_docs: usize, rows: Vec<Vec<(usize, u32)>>) -> Result<Self> {
        Ok(Self {
            counts: CsrMatrix::from_rows(n_docs, rows, |c| c > 0)?,
        })
    }

    /// Builds a matrix from dense term rows.
    pub fn from_dense(rows: &[Vec<u32>]) -> Result<Self> {
        let n_docs = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_docs) {
            return Err(Error::DimensionMismatch("ragged dense rows".into()));
        }
        let sparse = rows
            .iter()
            .map(|r| {
                r.iter()
                    .copied()
                    .enumerate()
                    .filter(|&(_, c)| c > 0)
                    .collect()
            })
            .collect();
        Self::from_rows(n_docs, sparse)
    }

    pub fn n_terms(&self) -> usize {
        self.counts.n_rows()
    }

    pub fn n_docs(&self) -> usize {
        self.counts.n_cols()
    }

    pub fn count(&self, term: usize, doc: usize) -> u32 {
        self.counts.get(term, doc).unwrap_or(0)
    }

    /// Documents and counts of one term.
    pub fn row(&self, term: usize) -> (&[usize], &[u32]) {
        self.counts.row(term)
    }

    pub fn counts(&self) -> &CsrMatrix<u32> {
        &self.counts
    }

    /// Tokens per document after filtering.
    pub fn doc_lengths(&self) -> Vec<u64> {
        self.counts
            .col_sums()
            .into_iter()
            .map(|s| s as u64)
            .collect()
    }
}

/// Tokenizes every document and assembles the vocabulary and count matrix.
/// The vocabulary is sorted lexicographically.
pub fn build_matrix(
    docs: &[RawDocument],
    config: &TokenizerConfig,
) -> Result<(Vocabulary, TermDocMatrix)> {
    build_matrix_with_min_df(docs, config, 1)
}

/// As [`build_matrix`], keeping only terms that occur in at least `min_df`
/// documents.
pub fn build_matrix_with_min_df(
    docs: &[RawDocument],
    config: &TokenizerConfig,
    min_df: usize,
) -> Result<(Vocabulary, TermDocMatrix)> {
    config.validate()?;
    if docs.is_empty() {
        return Err(Error::EmptyCorpus("no documents".into()));
    }
    let tokenized = par::map(docs, |d| tokenize(&d.text, config));

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for tokens in &tokenized {
        let unique: BTreeSet<&str> = tokens.iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let vocab = Vocabulary::from(
        df.into_iter()
            .filter(|&(_, n)| n >= min_df.max(1))
            .map(|(t, _)| t.to_owned())
            .collect::<Vec<_>>(),
    );
    if vocab.is_empty() {
        return Err(Error::EmptyCorpus(
            "every document tokenizes to nothing (all tokens filtered)".into(),
        ));
    }

    let mut rows: Vec<Vec<(usize, u32)>> = vec![Vec::new(); vocab.len()];
    for (j, tokens) in tokenized.iter().enumerate() {
        let (counts, _) = vocab.count_tokens(tokens);
        for (i, c) in counts {
            rows[i].push((j, c));
        }
    }
    let matrix = TermDocMatrix::from_rows(docs.len(), rows)?;
    Ok((vocab, matrix))
}

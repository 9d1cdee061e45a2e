//! Local term weights and the five global term weighting (GTW) schemes.
//!
//! Every scheme produces one scalar per term. Raw values are kept exactly as
//! the formula evaluates them; a clamped copy floored at a small positive
//! epsilon is what scales the count matrix, since downstream probabilities
//! are built from the weighted mass and must stay positive.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{TermDocMatrix, Vocabulary};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Binary occurrence `b(f_ij)` and per-term normalized frequency `p_ij`,
/// both sharing the sparsity pattern of the count matrix.
#[derive(Debug, Clone)]
pub struct LocalWeights {
    pub b: CsrMatrix<u8>,
    pub p: CsrMatrix<f64>,
    n_docs: usize,
}

impl LocalWeights {
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    /// Number of documents containing each term.
    pub fn doc_frequency(&self) -> Vec<usize> {
        (0..self.b.n_rows())
            .map(|i| self.b.row(i).0.len())
            .collect()
    }
}

pub fn local_weights(f: &TermDocMatrix) -> Result<LocalWeights> {
    let totals = f.counts().row_sums();
    if let Some(i) = totals.iter().position(|&t| t <= 0.0) {
        return Err(Error::Numerical(format!("term {i} never occurs")));
    }
    Ok(LocalWeights {
        b: f.counts().map_rows(|_, _| 1u8),
        p: f.counts().map_rows(|i, c| f64::from(c) / totals[i]),
        n_docs: f.n_docs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GtwMethod {
    Entropy,
    Idf,
    ProbIdf,
    Normal,
    Gfidf,
    /// Raw counts, no global weighting.
    None,
}

impl GtwMethod {
    pub const ALL: [GtwMethod; 6] = [
        GtwMethod::Entropy,
        GtwMethod::Idf,
        GtwMethod::ProbIdf,
        GtwMethod::Normal,
        GtwMethod::Gfidf,
        GtwMethod::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GtwMethod::Entropy => "entropy",
            GtwMethod::Idf => "idf",
            GtwMethod::ProbIdf => "probidf",
            GtwMethod::Normal => "normal",
            GtwMethod::Gfidf => "gfidf",
            GtwMethod::None => "none",
        }
    }
}

impl fmt::Display for GtwMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GtwMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        GtwMethod::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown GTW method {s:?} (expected entropy, idf, probidf, normal, gfidf or none)"
                ))
            })
    }
}

/// Denominator used by the IDF scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdfVariant {
    /// `log2(n / Σ_j f_ij)`, total term frequency.
    #[default]
    TotalFrequency,
    /// `log2(n / df_i)`, the conventional document-frequency form.
    DocumentFrequency,
}

impl FromStr for IdfVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "total-frequency" => Ok(Self::TotalFrequency),
            "document-frequency" => Ok(Self::DocumentFrequency),
            other => Err(Error::Config(format!("unknown idf variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalWeightVector {
    pub method: GtwMethod,
    /// Formula output per term. `-inf` marks ProbIDF terms present in every
    /// document.
    #[serde(with = "crate::json::floats_or_null")]
    pub raw: Vec<f64>,
    pub clamped: Vec<f64>,
    pub epsilon: f64,
}

impl GlobalWeightVector {
    pub fn new(method: GtwMethod, raw: Vec<f64>, epsilon: f64) -> Self {
        let clamped = if method == GtwMethod::None {
            raw.clone()
        } else {
            raw.iter()
                .map(|&r| if r > epsilon { r } else { epsilon })
                .collect()
        };
        Self {
            method,
            raw,
            clamped,
            epsilon,
        }
    }

    /// Re-clamps the raw weights with a different floor.
    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self::new(self.method, self.raw, epsilon)
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Terms whose raw weight was raised to the floor.
    pub fn clamped_count(&self) -> usize {
        if self.method == GtwMethod::None {
            return 0;
        }
        self.raw.iter().filter(|&&r| !(r > self.epsilon)).count()
    }

    /// Writes a header and one `term<TAB>raw<TAB>clamped` line per term.
    pub fn write_tsv<W: Write>(&self, vocab: &Vocabulary, mut out: W) -> std::io::Result<()> {
        writeln!(out, "term\traw\tclamped")?;
        for (i, term) in vocab.terms().iter().enumerate() {
            writeln!(out, "{term}\t{}\t{}", self.raw[i], self.clamped[i])?;
        }
        Ok(())
    }
}

/// `1 + Σ_j p_ij log2(p_ij) / log2 n`, with `0 log 0 = 0`.
pub fn entropy_weights(lw: &LocalWeights, n: usize) -> Result<GlobalWeightVector> {
    if n < 2 {
        return Err(Error::Numerical(
            "entropy undefined for single-document corpus".into(),
        ));
    }
    let log_n = (n as f64).log2();
    let raw = (0..lw.p.n_rows())
        .map(|i| {
            let plogp: f64 =
                lw.p.row(i)
                    .1
                    .iter()
                    .filter(|&&p| p > 0.0)
                    .map(|&p| p * p.log2())
                    .sum();
            1.0 + plogp / log_n
        })
        .collect();
    Ok(GlobalWeightVector::new(
        GtwMethod::Entropy,
        raw,
        DEFAULT_EPSILON,
    ))
}

/// `log2(n / Σ_j f_ij)`.
pub fn idf_weights(f: &TermDocMatrix, n: usize) -> GlobalWeightVector {
    let raw = f
        .counts()
        .row_sums()
        .into_iter()
        .map(|total| (n as f64 / total).log2())
        .collect();
    GlobalWeightVector::new(GtwMethod::Idf, raw, DEFAULT_EPSILON)
}

/// `log2(n / df_i)`; selected by [`IdfVariant::DocumentFrequency`].
pub fn idf_document_frequency_weights(b: &CsrMatrix<u8>, n: usize) -> GlobalWeightVector {
    let raw = b
        .row_sums()
        .into_iter()
        .map(|df| (n as f64 / df).log2())
        .collect();
    GlobalWeightVector::new(GtwMethod::Idf, raw, DEFAULT_EPSILON)
}

/// `log2((n - df_i) / df_i)`. A term in every document evaluates to `-inf`.
pub fn probidf_weights(b: &CsrMatrix<u8>, n: usize) -> GlobalWeightVector {
    let raw = b
        .row_sums()
        .into_iter()
        .map(|df| ((n as f64 - df) / df).log2())
        .collect();
    GlobalWeightVector::new(GtwMethod::ProbIdf, raw, DEFAULT_EPSILON)
}

/// `1 / sqrt(Σ_j f_ij²)`.
pub fn normal_weights(f: &TermDocMatrix) -> GlobalWeightVector {
    let raw = (0..f.n_terms())
        .map(|i| {
            let sq: f64 = f
                .row(i)
                .1
                .iter()
                .map(|&c| f64::from(c) * f64::from(c))
                .sum();
            1.0 / sq.sqrt()
        })
        .collect();
    GlobalWeightVector::new(GtwMethod::Normal, raw, DEFAULT_EPSILON)
}

/// `Σ_j f_ij / Σ_j b(f_ij)`.
pub fn gfidf_weights(f: &TermDocMatrix, b: &CsrMatrix<u8>) -> GlobalWeightVector {
    let raw = f
        .counts()
        .row_sums()
        .into_iter()
        .zip(b.row_sums())
        .map(|(total, df)| total / df)
        .collect();
    GlobalWeightVector::new(GtwMethod::Gfidf, raw, DEFAULT_EPSILON)
}

/// Computes the chosen scheme's weights for every term of `f`.
pub fn global_weights(
    f: &TermDocMatrix,
    method: GtwMethod,
    idf_variant: IdfVariant,
    epsilon: f64,
) -> Result<GlobalWeightVector> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let n = f.n_docs();
    let lw = local_weights(f)?;
    let g = match method {
        GtwMethod::Entropy => entropy_weights(&lw, n)?,
        GtwMethod::Idf => match idf_variant {
            IdfVariant::TotalFrequency => idf_weights(f, n),
            IdfVariant::DocumentFrequency => idf_document_frequency_weights(&lw.b, n),
        },
        GtwMethod::ProbIdf => probidf_weights(&lw.b, n),
        GtwMethod::Normal => normal_weights(f),
        GtwMethod::Gfidf => gfidf_weights(f, &lw.b),
        GtwMethod::None => {
            GlobalWeightVector::new(GtwMethod::None, vec![1.0; f.n_terms()], epsilon)
        }
    };
    Ok(g.with_epsilon(epsilon))
}

/// Globally weighted counts `a_ij = g_i · f_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMatrix {
    pub a: CsrMatrix<f64>,
    pub method: GtwMethod,
}

impl WeightedMatrix {
    pub fn n_terms(&self) -> usize {
        self.a.n_rows()
    }

    pub fn n_docs(&self) -> usize {
        self.a.n_cols()
    }
}

pub fn apply_gtw(f: &TermDocMatrix, g: &GlobalWeightVector) -> Result<WeightedMatrix> {
    if g.len() != f.n_terms() {
        return Err(Error::DimensionMismatch(format!(
            "{} global weights for {} terms",
            g.len(),
            f.n_terms()
        )));
    }
    let a = if g.method == GtwMethod::None {
        f.counts().map_rows(|_, c| f64::from(c))
    } else {
        f.counts().map_rows(|i, c| g.clamped[i] * f64::from(c))
    };
    Ok(WeightedMatrix {
        a,
        method: g.method,
    })
}

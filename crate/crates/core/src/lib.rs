//! Fuzzy latent topic modeling.
//!
//! A corpus is turned into a term-document count matrix, scaled by one of
//! five global term weighting schemes, and its words are clustered with
//! fuzzy c-means. The word memberships are read as topic probabilities and
//! combined with word and document probabilities into a [`TopicModel`].
//!
//! ```no_run
//! use flatm::{corpus, GtwMethod, TrainConfig};
//!
//! let docs = corpus::load_corpus("abstracts.tsv".as_ref(), corpus::CorpusFormat::LabeledTsv, false)?;
//! let config = TrainConfig { gtw: GtwMethod::Entropy, topics: 50, ..TrainConfig::default() };
//! let model = flatm::train(&docs, &config)?;
//! for (term, p) in model.top_words(0, 10)? {
//!     println!("{term}\t{p}");
//! }
//! # Ok::<(), flatm::Error>(())
//! ```

pub mod corpus;
pub mod error;
pub mod eval;
pub mod fcm;
pub mod model;
pub mod sparse;
pub mod weighting;

mod json;
mod par;

pub use corpus::{RawDocument, TermDocMatrix, TokenizerConfig, Vocabulary};
pub use error::{Error, ErrorKind, Result};
pub use fcm::{FcmConfig, FcmResult};
pub use model::{train, train_observed, CascadeSchedule, TopicModel, TrainConfig};
pub use weighting::{GlobalWeightVector, GtwMethod, WeightedMatrix};

/// Derives an independent, reproducible seed for a numbered sub-task.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the combined input
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

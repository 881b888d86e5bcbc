//! Sentence realization: restricted beam search over a pluggable scorer.

mod beam;
mod lexicon;
mod ngram;
mod scorer;

pub use beam::{allowed_continuations, beam_realize, Hypothesis, RealizationResult};
pub use lexicon::{feats_key, FormCandidate, FormLexicon, KEY_FEATURES};
pub use ngram::{NGramModel, NgramError, BOS, UNK};
pub use scorer::{uncovered_nodes, Continuation, OracleScorer, Scorer, ORACLE_PENALTY};

use thiserror::Error;

pub const DEFAULT_BEAM: usize = 10;
pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_LAMBDA: f64 = 0.7;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RealizeError {
    #[error("beam size must be at least 1")]
    ZeroBeam,
    #[error("oracle scorer needs an aligned sentence")]
    MissingAlignment,
    #[error("sentence has no reference forms")]
    MissingReference,
}

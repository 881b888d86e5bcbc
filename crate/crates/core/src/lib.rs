//! Toolkit for the shallow surface-realization task: turn dependency trees
//! with shuffled, lemmatized nodes back into sentences.
//!
//! - [`conllu`]: CoNLL-U reading and writing with byte-exact round trips.
//! - [`deptree`]: trees and the shuffle-and-lemmatize transform.
//! - [`linearize`]: depth-first linearization and seq2seq training pairs.
//! - [`synth`]: synthetic datasets from parsed unlabeled text.
//! - [`realize`]: restricted beam search, n-gram and oracle scorers, the
//!   inflection lexicon.
//! - [`eval`]: BLEU-4, detokenization, error categories, length buckets.
//! - [`cli`]: the `sr` command line.

pub mod cli;
pub mod conllu;
pub mod deptree;
pub mod eval;
pub mod linearize;
pub mod realize;
pub mod synth;

pub use conllu::{parse_conllu, serialize_conllu, ConlluError, UdSentence, UdToken};
pub use deptree::{build_tree, shallow_transform, DepTree, ShallowSentence};
pub use eval::{bleu4, classify_output, detokenize, evaluate, ErrorCategory, EvalMode, EvalReport};
pub use linearize::{append_form_list, emit_training_pairs, linearize, LinearSeq, PairOptions};
pub use realize::{beam_realize, FormLexicon, NGramModel, OracleScorer, RealizationResult, Scorer};
pub use synth::{build_synthetic_dataset, build_vocab, filter_sentence, FilterPolicy, SynthStats, Vocabulary};

//! Synthetic shallow-task data from parsed unlabeled text.
//!
//! Parser output comes in as CoNLL-U. Each sentence is checked against a
//! length window and a vocabulary-overlap threshold, and every survivor goes
//! through the same shallow transform as gold data.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::ops::AddAssign;

use rayon::prelude::*;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::conllu::{parse_block, BlockReader, ConlluError, UdSentence};
use crate::deptree::{shallow_transform, ShallowSentence};

pub const DEFAULT_MIN_LEN: usize = 5;
pub const DEFAULT_MAX_LEN: usize = 50;
pub const DEFAULT_OVERLAP: f64 = 0.8;
pub const DEFAULT_MIN_COUNT: u64 = 10;

/// Blocks handed to the worker pool at a time.
const CHUNK: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("min_len must be positive and not above max_len (got {min}..{max})")]
    LengthWindow { min: usize, max: usize },
    #[error("overlap threshold must be within [0, 1], got {0}")]
    Overlap(f64),
    #[error("min_count must be at least 1")]
    MinCount,
    #[error("cannot read corpus: {0}")]
    Read(String),
}

/// Surface-form counts with a frequency cut-off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    counts: BTreeMap<String, u64>,
    lowered: BTreeMap<String, u64>,
    min_count: u64,
}

impl Vocabulary {
    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.count(token) >= self.min_count
    }

    /// Membership after lowercasing both sides; counts of case variants add up.
    pub fn contains_caseless(&self, token: &str) -> bool {
        self.lowered.get(&token.to_lowercase()).copied().unwrap_or(0) >= self.min_count
    }

    /// Member tokens in sorted order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.counts
            .iter()
            .filter(|(_, &c)| c >= self.min_count)
            .map(|(t, _)| t.as_str())
    }

    pub fn len(&self) -> usize {
        self.tokens().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn build_vocab<I, J, S>(sentences: I, min_count: u64) -> Result<Vocabulary, SynthError>
where
    I: IntoIterator<Item = J>,
    J: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if min_count < 1 {
        return Err(SynthError::MinCount);
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for sentence in sentences {
        for tok in sentence {
            *counts.entry(tok.as_ref().to_string()).or_default() += 1;
        }
    }
    let mut lowered: BTreeMap<String, u64> = BTreeMap::new();
    for (tok, &c) in &counts {
        *lowered.entry(tok.to_lowercase()).or_default() += c;
    }
    Ok(Vocabulary {
        counts,
        lowered,
        min_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterPolicy {
    pub min_len: usize,
    pub max_len: usize,
    pub overlap_threshold: f64,
    /// Compare surface forms exactly (default) or after lowercasing.
    pub case_sensitive: bool,
    /// Count punctuation tokens in the overlap ratio (default) or skip them.
    pub count_punct: bool,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            min_len: DEFAULT_MIN_LEN,
            max_len: DEFAULT_MAX_LEN,
            overlap_threshold: DEFAULT_OVERLAP,
            case_sensitive: true,
            count_punct: true,
        }
    }
}

impl FilterPolicy {
    pub fn new(min_len: usize, max_len: usize, overlap_threshold: f64) -> Result<Self, SynthError> {
        let policy = FilterPolicy {
            min_len,
            max_len,
            overlap_threshold,
            ..FilterPolicy::default()
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(SynthError::LengthWindow {
                min: self.min_len,
                max: self.max_len,
            });
        }
        if !(0.0..=1.0).contains(&self.overlap_threshold) {
            return Err(SynthError::Overlap(self.overlap_threshold));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    Length,
    Overlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Keep,
    Reject(RejectReason),
}

fn is_punct(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric())
}

/// Fraction of token instances found in the vocabulary.
pub fn overlap_ratio<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, policy: &FilterPolicy) -> f64 {
    let mut total = 0usize;
    let mut known = 0usize;
    for tok in tokens {
        let tok = tok.as_ref();
        if !policy.count_punct && is_punct(tok) {
            continue;
        }
        total += 1;
        let member = if policy.case_sensitive {
            vocab.contains(tok)
        } else {
            vocab.contains_caseless(tok)
        };
        if member {
            known += 1;
        }
    }
    if total == 0 {
        return 1.0;
    }
    known as f64 / total as f64
}

/// Length is tested first, then overlap. Both bounds are inclusive.
pub fn filter_sentence<S: AsRef<str>>(
    tokens: &[S],
    vocab: &Vocabulary,
    policy: &FilterPolicy,
) -> FilterDecision {
    let n = tokens.len();
    if n < policy.min_len || n > policy.max_len {
        return FilterDecision::Reject(RejectReason::Length);
    }
    // Allow for rounding at exact boundaries such as 8/10 against 0.8.
    if overlap_ratio(tokens, vocab, policy) + 1e-12 < policy.overlap_threshold {
        return FilterDecision::Reject(RejectReason::Overlap);
    }
    FilterDecision::Keep
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SynthStats {
    pub input_count: usize,
    pub kept_count: usize,
    pub rejected_by_length: usize,
    pub rejected_by_overlap: usize,
    pub rejected_malformed: usize,
}

impl SynthStats {
    pub fn reconciles(&self) -> bool {
        self.input_count
            == self.kept_count
                + self.rejected_by_length
                + self.rejected_by_overlap
                + self.rejected_malformed
    }
}

impl AddAssign for SynthStats {
    fn add_assign(&mut self, other: Self) {
        self.input_count += other.input_count;
        self.kept_count += other.kept_count;
        self.rejected_by_length += other.rejected_by_length;
        self.rejected_by_overlap += other.rejected_by_overlap;
        self.rejected_malformed += other.rejected_malformed;
    }
}

/// Flat `key=value` report.
impl fmt::Display for SynthStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input_count={}", self.input_count)?;
        writeln!(f, "kept_count={}", self.kept_count)?;
        writeln!(f, "rejected_by_length={}", self.rejected_by_length)?;
        writeln!(f, "rejected_by_overlap={}", self.rejected_by_overlap)?;
        writeln!(f, "rejected_malformed={}", self.rejected_malformed)
    }
}

/// NFC-normalizes forms and lemmas.
pub fn normalize_sentence(sentence: &mut UdSentence) {
    for tok in &mut sentence.tokens {
        tok.form = tok.form.nfc().collect();
        tok.lemma = tok.lemma.nfc().collect();
    }
}

enum Outcome {
    Kept(Box<ShallowSentence>),
    Rejected(RejectReason),
    Malformed,
}

fn process_block(
    block: &str,
    first_line: usize,
    seed: u64,
    vocab: &Vocabulary,
    policy: &FilterPolicy,
) -> Outcome {
    let Ok(mut sentence) = parse_block(block, first_line, true) else {
        return Outcome::Malformed;
    };
    normalize_sentence(&mut sentence);
    let forms = sentence.forms();
    match filter_sentence(&forms, vocab, policy) {
        FilterDecision::Reject(reason) => Outcome::Rejected(reason),
        FilterDecision::Keep => match shallow_transform(&sentence, seed) {
            Ok(shallow) => Outcome::Kept(Box::new(shallow)),
            Err(_) => Outcome::Malformed,
        },
    }
}

/// Filters and shuffles a parsed corpus.
///
/// Sentence `i` of the input (counting malformed blocks) is shuffled with
/// seed `seed + i`. Output keeps input order. Work is spread over the
/// current rayon pool in fixed-size chunks.
pub fn build_synthetic_dataset<R: BufRead>(
    parsed_corpus: R,
    vocab: &Vocabulary,
    policy: &FilterPolicy,
    seed: u64,
) -> Result<(Vec<ShallowSentence>, SynthStats), SynthError> {
    policy.validate()?;
    let mut dataset = Vec::new();
    let mut stats = SynthStats::default();
    let mut reader = BlockReader::new(parsed_corpus);
    let mut index = 0u64;
    loop {
        let mut chunk = Vec::with_capacity(CHUNK);
        for item in reader.by_ref().take(CHUNK) {
            let (line, block) = item.map_err(|e: ConlluError| SynthError::Read(e.to_string()))?;
            chunk.push((index, line, block));
            index += 1;
        }
        if chunk.is_empty() {
            break;
        }
        let outcomes: Vec<Outcome> = chunk
            .par_iter()
            .map(|(i, line, block)| process_block(block, *line, seed.wrapping_add(*i), vocab, policy))
            .collect();
        for outcome in outcomes {
            stats.input_count += 1;
            match outcome {
                Outcome::Kept(s) => {
                    stats.kept_count += 1;
                    dataset.push(*s);
                }
                Outcome::Rejected(RejectReason::Length) => stats.rejected_by_length += 1,
                Outcome::Rejected(RejectReason::Overlap) => stats.rejected_by_overlap += 1,
                Outcome::Malformed => stats.rejected_malformed += 1,
            }
        }
    }
    Ok((dataset, stats))
}

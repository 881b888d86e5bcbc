//! Evaluation: corpus BLEU-4, sentence-length buckets and a coarse error
//! taxonomy (exact match, punctuation-only, inflection-only, other).

mod bleu;
mod detok;

pub use bleu::{bleu4, corpus_stats, BleuStats, MAX_ORDER};
pub use detok::{detokenize, retokenize};

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use thiserror::Error;

use crate::conllu::UdSentence;
use crate::realize::FormLexicon;

pub const DEFAULT_BUCKETS: [usize; 6] = [10, 20, 30, 40, 50, 60];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("{hyps} hypotheses for {refs} references")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("bucket boundaries must be strictly increasing")]
    Boundaries,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorCategory {
    ExactMatch,
    PunctuationOnly,
    InflectionOnly,
    Other,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 4] = [
        ErrorCategory::ExactMatch,
        ErrorCategory::PunctuationOnly,
        ErrorCategory::InflectionOnly,
        ErrorCategory::Other,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ErrorCategory::ExactMatch => "exact_match",
            ErrorCategory::PunctuationOnly => "punctuation_only",
            ErrorCategory::InflectionOnly => "inflection_only",
            ErrorCategory::Other => "other",
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Assigns a hypothesis to the first matching category:
///
/// 1. identical to the reference forms;
/// 2. identical once reference punctuation is removed from both sides
///    (hypothesis tokens count as punctuation when they equal the form of a
///    `PUNCT` reference token);
/// 3. same length and every differing position is a form of the reference
///    lemma there;
/// 4. anything else, mostly linearization errors.
///
/// For step 3 a hypothesis form is mapped to lemmas through the reference
/// sentence itself and, when given, through `lexicon`; a form with no known
/// lemma stands for itself. Comparison is on lowercased lemmas.
pub fn classify_output<S: AsRef<str>>(
    hyp: &[S],
    reference: &UdSentence,
    lexicon: Option<&FormLexicon>,
) -> ErrorCategory {
    let ref_forms: Vec<&str> = reference.tokens.iter().map(|t| t.form.as_str()).collect();
    let hyp: Vec<&str> = hyp.iter().map(|s| s.as_ref()).collect();
    if hyp == ref_forms {
        return ErrorCategory::ExactMatch;
    }

    let punct: Vec<&str> = reference
        .tokens
        .iter()
        .filter(|t| t.upos == "PUNCT")
        .map(|t| t.form.as_str())
        .collect();
    let hyp_words: Vec<&str> = hyp.iter().copied().filter(|h| !punct.contains(h)).collect();
    let ref_words: Vec<&str> = reference
        .tokens
        .iter()
        .filter(|t| t.upos != "PUNCT")
        .map(|t| t.form.as_str())
        .collect();
    if hyp_words == ref_words {
        return ErrorCategory::PunctuationOnly;
    }

    if hyp.len() == ref_forms.len() {
        let mut table: HashMap<&str, String> = HashMap::new();
        for tok in &reference.tokens {
            table.entry(tok.form.as_str()).or_insert_with(|| tok.lemma.to_lowercase());
        }
        let same_lemma = |form: &str, lemma: &str| {
            table.get(form).is_some_and(|l| l == lemma)
                || lexicon
                    .and_then(|lex| lex.lemmas_of(form))
                    .is_some_and(|ls| ls.contains(lemma))
                || (!table.contains_key(form) && form.to_lowercase() == lemma)
        };
        let inflection_only = hyp.iter().zip(&reference.tokens).all(|(&h, r)| {
            h == r.form || same_lemma(h, &r.lemma.to_lowercase())
        });
        if inflection_only {
            return ErrorCategory::InflectionOnly;
        }
    }
    ErrorCategory::Other
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    /// Inclusive lower bound on reference length.
    pub lo: usize,
    /// Exclusive upper bound; `None` for the last bucket.
    pub hi: Option<usize>,
    pub count: usize,
    pub stats: BleuStats,
    /// Omitted for empty buckets.
    pub bleu: Option<f64>,
}

impl Bucket {
    pub fn label(&self) -> String {
        match (self.lo, self.hi) {
            (0, Some(hi)) => format!("<{hi}"),
            (lo, Some(hi)) => format!("{lo}-{hi}"),
            (lo, None) => format!(">={lo}"),
        }
    }

    fn contains(&self, len: usize) -> bool {
        len >= self.lo && self.hi.is_none_or(|hi| len < hi)
    }
}

/// Corpus BLEU per reference-length bucket. `boundaries` `[b1, .., bk]`
/// produce `k + 1` buckets: `< b1`, `[b1, b2)`, ..., `>= bk`.
pub fn bucket_report<H: AsRef<str> + Sync, R: AsRef<str> + Sync>(
    hypotheses: &[Vec<H>],
    references: &[Vec<R>],
    boundaries: &[usize],
) -> Result<Vec<Bucket>, EvalError> {
    if hypotheses.len() != references.len() {
        return Err(EvalError::LengthMismatch {
            hyps: hypotheses.len(),
            refs: references.len(),
        });
    }
    if boundaries.windows(2).any(|w| w[0] >= w[1]) || boundaries.first() == Some(&0) {
        return Err(EvalError::Boundaries);
    }
    let mut buckets: Vec<Bucket> = std::iter::once(0)
        .chain(boundaries.iter().copied())
        .zip(boundaries.iter().map(|&b| Some(b)).chain(std::iter::once(None)))
        .map(|(lo, hi)| Bucket {
            lo,
            hi,
            count: 0,
            stats: BleuStats::default(),
            bleu: None,
        })
        .collect();
    let per_pair: Vec<BleuStats> = hypotheses
        .par_iter()
        .zip(references)
        .map(|(h, r)| BleuStats::from_pair(h, r))
        .collect();
    for (stats, reference) in per_pair.into_iter().zip(references) {
        let bucket = buckets
            .iter_mut()
            .find(|b| b.contains(reference.len()))
            .expect("buckets cover every length");
        bucket.count += 1;
        bucket.stats += stats;
    }
    for bucket in &mut buckets {
        if bucket.count > 0 {
            bucket.bleu = Some(bucket.stats.score());
        }
    }
    Ok(buckets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Tokenized,
    Detokenized,
}

impl EvalMode {
    pub fn key(self) -> &'static str {
        match self {
            EvalMode::Tokenized => "tokenized",
            EvalMode::Detokenized => "detokenized",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub corpus_bleu: f64,
    pub stats: BleuStats,
    pub bucket_bleu: Vec<Bucket>,
    /// Counts in [`ErrorCategory::ALL`] order.
    pub error_counts: [usize; 4],
    pub categories: Vec<ErrorCategory>,
    pub total: usize,
}

impl EvalReport {
    pub fn count(&self, category: ErrorCategory) -> usize {
        self.error_counts[category as usize]
    }

    /// Exact matches plus the single-error categories.
    pub fn relatively_error_free(&self) -> usize {
        self.count(ErrorCategory::ExactMatch)
            + self.count(ErrorCategory::PunctuationOnly)
            + self.count(ErrorCategory::InflectionOnly)
    }

    /// Flat `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mode={}", self.mode.key());
        let _ = writeln!(out, "total={}", self.total);
        let _ = writeln!(out, "corpus_bleu={:.4}", self.corpus_bleu);
        for n in 0..MAX_ORDER {
            let _ = writeln!(out, "ngram{}_matches={}", n + 1, self.stats.matches[n]);
            let _ = writeln!(out, "ngram{}_total={}", n + 1, self.stats.totals[n]);
        }
        let _ = writeln!(out, "hyp_len={}", self.stats.hyp_len);
        let _ = writeln!(out, "ref_len={}", self.stats.ref_len);
        for cat in ErrorCategory::ALL {
            let _ = writeln!(out, "errors.{}={}", cat.key(), self.count(cat));
        }
        let _ = writeln!(out, "errors.relatively_error_free={}", self.relatively_error_free());
        for b in &self.bucket_bleu {
            let label = b.label();
            let _ = writeln!(out, "bucket.{label}.count={}", b.count);
            if let Some(bleu) = b.bleu {
                let _ = writeln!(out, "bucket.{label}.bleu={bleu:.4}");
            }
        }
        out
    }

    /// Aligned-column summary for terminals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "BLEU-4 ({}): {:.2}", self.mode.key(), self.corpus_bleu);
        let _ = writeln!(out, "sentences: {}", self.total);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<34}{:>8}", "category", "count");
        let rows = [
            ("Exact match", self.count(ErrorCategory::ExactMatch)),
            ("+ Punctuation error only", self.count(ErrorCategory::PunctuationOnly)),
            ("+ Inflection error only", self.count(ErrorCategory::InflectionOnly)),
            ("Total (relatively error free)", self.relatively_error_free()),
            ("Remaining errors", self.count(ErrorCategory::Other)),
        ];
        for (name, count) in rows {
            let _ = writeln!(out, "{name:<34}{count:>8}");
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<10}{:>8}{:>10}", "length", "count", "BLEU");
        for b in &self.bucket_bleu {
            let bleu = b.bleu.map_or("-".to_string(), |s| format!("{s:.2}"));
            let _ = writeln!(out, "{:<10}{:>8}{:>10}", b.label(), b.count, bleu);
        }
        out
    }

    /// One row per sentence; the last column is left blank for a manual
    /// breaking / non-breaking judgement of linearization errors.
    pub fn categories_tsv(&self) -> String {
        let mut out = String::from("index\tcategory\tlinearization_judgement\n");
        for (i, cat) in self.categories.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}\t", i + 1, cat.key());
        }
        out
    }
}

/// Full evaluation of hypotheses against gold sentences.
///
/// BLEU follows `mode`: tokenized compares token lists directly, while
/// detokenized runs [`detokenize`] on both sides and splits on whitespace.
/// Error categories and length buckets always use tokenized text.
pub fn evaluate<S: AsRef<str> + Sync>(
    hypotheses: &[Vec<S>],
    references: &[UdSentence],
    mode: EvalMode,
    lexicon: Option<&FormLexicon>,
) -> Result<EvalReport, EvalError> {
    if hypotheses.len() != references.len() {
        return Err(EvalError::LengthMismatch {
            hyps: hypotheses.len(),
            refs: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(EvalError::Empty);
    }
    let ref_tokens: Vec<Vec<&str>> = references
        .iter()
        .map(|s| s.tokens.iter().map(|t| t.form.as_str()).collect())
        .collect();
    let stats = match mode {
        EvalMode::Tokenized => hypotheses
            .par_iter()
            .zip(&ref_tokens)
            .map(|(h, r)| BleuStats::from_pair(h, r))
            .reduce(BleuStats::default, |a, b| a + b),
        EvalMode::Detokenized => hypotheses
            .par_iter()
            .zip(&ref_tokens)
            .map(|(h, r)| {
                let h = detokenize(h);
                let r = detokenize(r);
                let h: Vec<&str> = h.split_whitespace().collect();
                let r: Vec<&str> = r.split_whitespace().collect();
                BleuStats::from_pair(&h, &r)
            })
            .reduce(BleuStats::default, |a, b| a + b),
    };
    let categories: Vec<ErrorCategory> = hypotheses
        .par_iter()
        .zip(references)
        .map(|(h, r)| classify_output(h, r, lexicon))
        .collect();
    let mut error_counts = [0usize; 4];
    for &cat in &categories {
        error_counts[cat as usize] += 1;
    }
    let bucket_bleu = bucket_report(hypotheses, &ref_tokens, &DEFAULT_BUCKETS)?;
    Ok(EvalReport {
        mode,
        corpus_bleu: stats.score(),
        stats,
        bucket_bleu,
        error_counts,
        categories,
        total: hypotheses.len(),
    })
}

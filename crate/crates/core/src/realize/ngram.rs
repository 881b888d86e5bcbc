//! Interpolated n-gram language model (Jelinek-Mercer smoothing).
//!
//! `P_k(w | h) = λ·ML_k(w | h) + (1 − λ)·P_{k−1}(w | h')` where `h'` drops the
//! oldest context token, and `P_0` is uniform over the vocabulary plus the
//! unknown token. A context never seen in training contributes no ML term
//! and passes the lower-order distribution through unchanged, so every
//! conditional distribution sums to one.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

/// Sentence-start padding token.
pub const BOS: &str = "<s>";
/// Stands in for every token outside the vocabulary.
pub const UNK: &str = "<unk>";

const HEADER: &str = "#srtk-ngram";

#[derive(Debug, Error, PartialEq)]
pub enum NgramError {
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error("order must be at least 1, got {0}")]
    BadOrder(usize),
    #[error("interpolation weight must lie strictly between 0 and 1, got {0}")]
    BadLambda(f64),
    #[error("model file line {line}: {msg}")]
    Format { line: usize, msg: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
struct ContextCounts {
    next: HashMap<String, u64>,
    total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    lambda: f64,
    /// `tables[k - 1]` maps a space-joined context of `k - 1` tokens to the
    /// counts of the tokens that followed it.
    tables: Vec<HashMap<String, ContextCounts>>,
    vocab: BTreeSet<String>,
}

fn validate(order: usize, lambda: f64) -> Result<(), NgramError> {
    if order < 1 {
        return Err(NgramError::BadOrder(order));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(NgramError::BadLambda(lambda));
    }
    Ok(())
}

impl NGramModel {
    pub fn train<S: AsRef<str>>(
        references: &[Vec<S>],
        order: usize,
        lambda: f64,
    ) -> Result<Self, NgramError> {
        validate(order, lambda)?;
        let mut model = NGramModel {
            order,
            lambda,
            tables: vec![HashMap::new(); order],
            vocab: BTreeSet::new(),
        };
        for sentence in references {
            let mut padded: Vec<&str> = vec![BOS; order - 1];
            padded.extend(sentence.iter().map(|t| t.as_ref()));
            for i in order - 1..padded.len() {
                let token = padded[i];
                model.vocab.insert(token.to_string());
                for k in 1..=order {
                    let context = padded[i + 1 - k..i].join(" ");
                    model.add_count(k, context, token, 1);
                }
            }
        }
        if model.vocab.is_empty() {
            return Err(NgramError::EmptyCorpus);
        }
        Ok(model)
    }

    fn add_count(&mut self, k: usize, context: String, token: &str, count: u64) {
        let entry = self.tables[k - 1].entry(context).or_default();
        *entry.next.entry(token.to_string()).or_default() += count;
        entry.total += count;
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Training vocabulary, without the unknown token.
    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vocab.contains(token)
    }

    /// `P(token | history)`. Only the last `order − 1` history tokens are
    /// used; shorter histories are left-padded with [`BOS`]. Tokens outside
    /// the vocabulary get the probability of [`UNK`].
    pub fn prob<S: AsRef<str>>(&self, token: &str, history: &[S]) -> f64 {
        let width = self.order - 1;
        let mut context: Vec<&str> = Vec::with_capacity(width);
        let take = history.len().min(width);
        context.extend(std::iter::repeat_n(BOS, width - take));
        context.extend(history[history.len() - take..].iter().map(|s| s.as_ref()));

        let mut p = 1.0 / (self.vocab.len() as f64 + 1.0);
        for k in 1..=self.order {
            let ctx = context[width + 1 - k..].join(" ");
            if let Some(counts) = self.tables[k - 1].get(&ctx) {
                let c = counts.next.get(token).copied().unwrap_or(0);
                let ml = c as f64 / counts.total as f64;
                p = self.lambda * ml + (1.0 - self.lambda) * p;
            }
        }
        p
    }

    pub fn log_prob<S: AsRef<str>>(&self, token: &str, history: &[S]) -> f64 {
        self.prob(token, history).ln()
    }

    /// Plain-text count file: a header with order, λ and vocabulary size,
    /// then `k<TAB>context<TAB>token<TAB>count` lines in sorted order.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{HEADER}\torder={}\tlambda={}\tvocab={}\n",
            self.order,
            self.lambda,
            self.vocab.len()
        );
        for (k, table) in self.tables.iter().enumerate() {
            let mut rows: Vec<(&str, &str, u64)> = table
                .iter()
                .flat_map(|(ctx, counts)| {
                    counts
                        .next
                        .iter()
                        .map(move |(tok, &c)| (ctx.as_str(), tok.as_str(), c))
                })
                .collect();
            rows.sort_unstable();
            for (ctx, tok, c) in rows {
                let _ = writeln!(out, "{}\t{ctx}\t{tok}\t{c}", k + 1);
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, NgramError> {
        let err = |line: usize, msg: &str| NgramError::Format {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| err(1, "missing header"))?;
        let mut fields = header.split('\t');
        if fields.next() != Some(HEADER) {
            return Err(err(1, "not an srtk n-gram file"));
        }
        let mut order = None;
        let mut lambda = None;
        let mut vocab_size = None;
        for field in fields {
            match field.split_once('=') {
                Some(("order", v)) => order = v.parse::<usize>().ok(),
                Some(("lambda", v)) => lambda = v.parse::<f64>().ok(),
                Some(("vocab", v)) => vocab_size = v.parse::<usize>().ok(),
                _ => return Err(err(1, "unknown header field")),
            }
        }
        let (order, lambda, vocab_size) = match (order, lambda, vocab_size) {
            (Some(o), Some(l), Some(v)) => (o, l, v),
            _ => return Err(err(1, "header needs order, lambda and vocab")),
        };
        validate(order, lambda)?;
        let mut model = NGramModel {
            order,
            lambda,
            tables: vec![HashMap::new(); order],
            vocab: BTreeSet::new(),
        };
        for (idx, line) in lines {
            let lineno = idx + 1;
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(err(lineno, "expected 4 columns"));
            }
            let k: usize = cols[0].parse().map_err(|_| err(lineno, "bad order column"))?;
            if k < 1 || k > order {
                return Err(err(lineno, "order column out of range"));
            }
            let context_len = if cols[1].is_empty() { 0 } else { cols[1].split(' ').count() };
            if context_len != k - 1 {
                return Err(err(lineno, "context length does not match order column"));
            }
            let count: u64 = cols[3].parse().map_err(|_| err(lineno, "bad count"))?;
            if k == 1 {
                model.vocab.insert(cols[2].to_string());
            }
            model.add_count(k, cols[1].to_string(), cols[2], count);
        }
        if model.vocab.len() != vocab_size {
            return Err(err(1, "vocabulary size does not match header"));
        }
        if model.vocab.is_empty() {
            return Err(NgramError::EmptyCorpus);
        }
        Ok(model)
    }
}

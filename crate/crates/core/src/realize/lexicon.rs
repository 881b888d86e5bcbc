//! Lemma to surface-form lexicon learned from gold treebanks.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::conllu::{Attrs, UdSentence};
use crate::deptree::NodePayload;

/// Morphological features that take part in lexicon keys. Everything else
/// (lexical features such as `PronType`, rare ones such as `Foreign`) is
/// dropped so keys generalize.
pub const KEY_FEATURES: [&str; 7] = ["Number", "Person", "Tense", "VerbForm", "Mood", "Degree", "Case"];

pub fn feats_key(feats: &Attrs) -> String {
    let mut key = String::new();
    for (k, v) in feats.iter() {
        if KEY_FEATURES.contains(&k) {
            if !key.is_empty() {
                key.push('|');
            }
            key.push_str(k);
            key.push('=');
            key.push_str(v.unwrap_or(""));
        }
    }
    key
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormCandidate {
    pub form: String,
    /// Observed frequency; 0 for the bare-lemma fallback.
    pub count: u64,
}

type Counts = BTreeMap<String, u64>;

#[derive(Debug, Clone, Default)]
pub struct FormLexicon {
    by_feats: HashMap<(String, String, String), Counts>,
    by_upos: HashMap<(String, String), Counts>,
    by_lemma: HashMap<String, Counts>,
    lemmas_of_form: HashMap<String, BTreeSet<String>>,
}

fn sorted(counts: &Counts) -> Vec<FormCandidate> {
    let mut out: Vec<FormCandidate> = counts
        .iter()
        .map(|(form, &count)| FormCandidate {
            form: form.clone(),
            count,
        })
        .collect();
    // BTreeMap order is already lexicographic, so a stable sort on count
    // gives count-descending with lexicographic ties.
    out.sort_by_key(|c| std::cmp::Reverse(c.count));
    out
}

impl FormLexicon {
    pub fn build<'a>(gold: impl IntoIterator<Item = &'a UdSentence>) -> Self {
        let mut lex = FormLexicon::default();
        for sentence in gold {
            for tok in &sentence.tokens {
                if !tok.has_form() {
                    continue;
                }
                lex.add(&tok.lemma, &tok.upos, &tok.feats, &tok.form);
            }
        }
        lex
    }

    pub fn add(&mut self, lemma: &str, upos: &str, feats: &Attrs, form: &str) {
        let lemma = lemma.to_lowercase();
        let form = form.to_string();
        *self
            .by_feats
            .entry((lemma.clone(), upos.to_string(), feats_key(feats)))
            .or_default()
            .entry(form.clone())
            .or_default() += 1;
        *self
            .by_upos
            .entry((lemma.clone(), upos.to_string()))
            .or_default()
            .entry(form.clone())
            .or_default() += 1;
        *self
            .by_lemma
            .entry(lemma.clone())
            .or_default()
            .entry(form.clone())
            .or_default() += 1;
        self.lemmas_of_form.entry(form).or_default().insert(lemma);
    }

    /// Candidate forms, most frequent first. Falls back from the full key to
    /// `(lemma, upos)`, then to the lemma alone, then to the lemma string.
    pub fn candidates(&self, lemma: &str, upos: &str, feats: &Attrs) -> Vec<FormCandidate> {
        let lc = lemma.to_lowercase();
        let found = self
            .by_feats
            .get(&(lc.clone(), upos.to_string(), feats_key(feats)))
            .or_else(|| self.by_upos.get(&(lc.clone(), upos.to_string())))
            .or_else(|| self.by_lemma.get(&lc));
        match found {
            Some(counts) => sorted(counts),
            None => vec![FormCandidate {
                form: lemma.to_string(),
                count: 0,
            }],
        }
    }

    pub fn candidates_for(&self, payload: &NodePayload) -> Vec<FormCandidate> {
        self.candidates(&payload.lemma, &payload.upos, &payload.feats)
    }

    /// A node is relevant for form lists when it has more than one candidate.
    pub fn is_relevant(&self, payload: &NodePayload) -> bool {
        self.candidates_for(payload).len() > 1
    }

    /// Lowercased lemmas this surface form was observed with.
    pub fn lemmas_of(&self, form: &str) -> Option<&BTreeSet<String>> {
        self.lemmas_of_form.get(form)
    }

    pub fn is_empty(&self) -> bool {
        self.by_lemma.is_empty()
    }

    pub fn lemma_count(&self) -> usize {
        self.by_lemma.len()
    }
}

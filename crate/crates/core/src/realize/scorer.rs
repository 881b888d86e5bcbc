use crate::deptree::{NodePayload, ShallowSentence};

use super::lexicon::FormLexicon;
use super::ngram::NGramModel;
use super::RealizeError;

/// Score given by [`OracleScorer`] to every wrong continuation.
pub const ORACLE_PENALTY: f64 = -1e9;

/// One candidate next step: emit `form` for tree node `node`.
#[derive(Debug, Clone, Copy)]
pub struct Continuation<'a> {
    pub node: usize,
    pub form: &'a str,
    pub payload: &'a NodePayload,
}

/// Next-token scoring contract used by the beam search.
///
/// Implementations return a natural-log probability (at most 0) and must be
/// read-only after construction.
pub trait Scorer: Sync {
    fn score_next(&self, history: &[&str], next: &Continuation<'_>) -> f64;
}

impl Scorer for NGramModel {
    fn score_next(&self, history: &[&str], next: &Continuation<'_>) -> f64 {
        self.log_prob(next.form, history)
    }
}

/// Scores the reference continuation 0 and everything else
/// [`ORACLE_PENALTY`]. A test instrument for the decoder.
#[derive(Debug, Clone)]
pub struct OracleScorer {
    expected: Vec<(usize, String)>,
}

impl OracleScorer {
    pub fn new(reference: &ShallowSentence) -> Result<Self, RealizeError> {
        let order = reference
            .nodes_in_reference_order()
            .ok_or(RealizeError::MissingAlignment)?;
        if reference.reference_forms.len() != order.len() {
            return Err(RealizeError::MissingReference);
        }
        Ok(OracleScorer {
            expected: order
                .into_iter()
                .zip(reference.reference_forms.iter().cloned())
                .collect(),
        })
    }
}

impl Scorer for OracleScorer {
    fn score_next(&self, history: &[&str], next: &Continuation<'_>) -> f64 {
        match self.expected.get(history.len()) {
            Some((node, form)) if *node == next.node && form == next.form => 0.0,
            _ => ORACLE_PENALTY,
        }
    }
}

/// Nodes whose reference form is not among their lexicon candidates. The
/// oracle cannot reproduce a sentence with any such node.
pub fn uncovered_nodes(sentence: &ShallowSentence, lexicon: &FormLexicon) -> Vec<usize> {
    let Some(alignment) = &sentence.alignment else {
        return Vec::new();
    };
    sentence
        .tree
        .node_ids()
        .filter(|&id| {
            let Some(form) = sentence.reference_forms.get(alignment[id - 1] - 1) else {
                return true;
            };
            !lexicon
                .candidates_for(sentence.tree.payload(id))
                .iter()
                .any(|c| &c.form == form)
        })
        .collect()
}

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::deptree::ShallowSentence;

use super::lexicon::{FormCandidate, FormLexicon};
use super::scorer::{Continuation, Scorer};
use super::RealizeError;

/// A partial realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub emitted: Vec<(usize, String)>,
    pub remaining: BTreeSet<usize>,
    pub score: f64,
}

impl Hypothesis {
    pub fn start(sentence: &ShallowSentence) -> Self {
        Hypothesis {
            emitted: Vec::new(),
            remaining: sentence.tree.node_ids().collect(),
            score: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationResult {
    pub tokens: Vec<String>,
    pub node_order: Vec<usize>,
    pub score: f64,
    pub beam_size: usize,
}

/// Every `(node, form)` the hypothesis may emit next: unused nodes only, and
/// only their lexicon candidates. Ordered by node id, then by candidate rank
/// (count descending, form ascending).
pub fn allowed_continuations(
    hyp: &Hypothesis,
    sentence: &ShallowSentence,
    lexicon: &FormLexicon,
) -> Vec<(usize, String)> {
    hyp.remaining
        .iter()
        .flat_map(|&node| {
            lexicon
                .candidates_for(sentence.tree.payload(node))
                .into_iter()
                .map(move |c| (node, c.form))
        })
        .collect()
}

/// Internal hypothesis: choices are `(node, candidate rank)` pairs, which
/// also serve as the tie-break key.
#[derive(Clone)]
struct Partial {
    choices: Vec<(usize, usize)>,
    used: Vec<bool>,
    score: f64,
}

fn rank(a: &Partial, b: &Partial) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.choices.cmp(&b.choices))
}

/// Restricted beam search of exactly `n` steps for an `n`-node tree.
///
/// Each step keeps the `beam_size` best hypotheses; equal scores are ordered
/// by their choice sequences compared lexicographically, so the search is
/// deterministic. Scores are summed without length normalization.
pub fn beam_realize(
    sentence: &ShallowSentence,
    scorer: &dyn Scorer,
    beam_size: usize,
    lexicon: &FormLexicon,
) -> Result<RealizationResult, RealizeError> {
    if beam_size == 0 {
        return Err(RealizeError::ZeroBeam);
    }
    let tree = &sentence.tree;
    let n = tree.node_count();
    let candidates: Vec<Vec<FormCandidate>> =
        tree.node_ids().map(|id| lexicon.candidates_for(tree.payload(id))).collect();

    let mut beam = vec![Partial {
        choices: Vec::new(),
        used: vec![false; n],
        score: 0.0,
    }];
    for _ in 0..n {
        let mut pool = Vec::new();
        for hyp in &beam {
            let history: Vec<&str> = hyp
                .choices
                .iter()
                .map(|&(node, r)| candidates[node - 1][r].form.as_str())
                .collect();
            for node in (1..=n).filter(|&id| !hyp.used[id - 1]) {
                for (r, cand) in candidates[node - 1].iter().enumerate() {
                    let step = scorer.score_next(
                        &history,
                        &Continuation {
                            node,
                            form: &cand.form,
                            payload: tree.payload(node),
                        },
                    );
                    let mut next = hyp.clone();
                    next.choices.push((node, r));
                    next.used[node - 1] = true;
                    next.score += step;
                    pool.push(next);
                }
            }
        }
        if pool.len() > beam_size {
            pool.select_nth_unstable_by(beam_size - 1, rank);
            pool.truncate(beam_size);
        }
        pool.sort_by(rank);
        beam = pool;
    }

    let best = beam.into_iter().next().expect("a non-empty tree always yields a hypothesis");
    Ok(RealizationResult {
        tokens: best
            .choices
            .iter()
            .map(|&(node, r)| candidates[node - 1][r].form.clone())
            .collect(),
        node_order: best.choices.iter().map(|&(node, _)| node).collect(),
        score: best.score,
        beam_size,
    })
}

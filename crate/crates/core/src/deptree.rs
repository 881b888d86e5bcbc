//! Dependency trees and the shallow-task transform.
//!
//! The transform destroys word order by renumbering the nodes with a seeded
//! uniform permutation and drops the surface forms. The original sentence is
//! kept outside the tree as `reference_forms`, and the permutation can be
//! kept as an alignment for debugging or removed for distribution.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::conllu::{Attrs, ConlluError, UdSentence, UdToken, EMPTY};

/// MISC key carrying the original position of a shuffled node.
pub const ORIGINAL_ID: &str = "original_id";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error(transparent)]
    Invalid(#[from] ConlluError),
    #[error("reference has {found} tokens but the tree has {expected} nodes")]
    ReferenceLength { expected: usize, found: usize },
    #[error("alignment is not a permutation of 1..{0}")]
    BadAlignment(usize),
}

/// The per-node data a realizer may look at.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePayload {
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: Attrs,
    pub deprel: String,
}

impl NodePayload {
    fn from_token(tok: &UdToken) -> Self {
        NodePayload {
            lemma: tok.lemma.clone(),
            upos: tok.upos.clone(),
            xpos: tok.xpos.clone(),
            feats: tok.feats.clone(),
            deprel: tok.deprel.clone(),
        }
    }
}

/// A rooted tree over node ids `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepTree {
    payloads: Vec<NodePayload>,
    heads: Vec<usize>,
    children: Vec<Vec<usize>>,
    root: usize,
}

impl DepTree {
    pub fn node_count(&self) -> usize {
        self.payloads.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn payload(&self, id: usize) -> &NodePayload {
        &self.payloads[id - 1]
    }

    /// Head of `id`, 0 for the root.
    pub fn head(&self, id: usize) -> usize {
        self.heads[id - 1]
    }

    /// Children of `id` in ascending id order.
    pub fn children(&self, id: usize) -> &[usize] {
        &self.children[id - 1]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = usize> {
        1..=self.node_count()
    }

    /// Depth of `id`, the root having depth 0.
    pub fn depth_of(&self, id: usize) -> usize {
        let mut depth = 0;
        let mut cur = self.head(id);
        while cur != 0 {
            depth += 1;
            cur = self.head(cur);
        }
        depth
    }

    pub fn depth(&self) -> usize {
        self.node_ids().map(|id| self.depth_of(id)).max().unwrap_or(0)
    }

    /// `(head, dependent)` pairs; the root's head is 0.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.node_ids().map(|id| (self.head(id), id))
    }
}

pub fn build_tree(sentence: &UdSentence) -> Result<DepTree, TreeError> {
    sentence.validate(0)?;
    let n = sentence.len();
    let mut children = vec![Vec::new(); n];
    let mut root = 0;
    for tok in &sentence.tokens {
        if tok.head == 0 {
            root = tok.id;
        } else {
            children[tok.head - 1].push(tok.id);
        }
    }
    Ok(DepTree {
        payloads: sentence.tokens.iter().map(NodePayload::from_token).collect(),
        heads: sentence.tokens.iter().map(|t| t.head).collect(),
        children,
        root,
    })
}

/// A shallow-task input: shuffled, form-free tree plus the reference sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShallowSentence {
    /// Shuffled rows with `_` forms. MISC holds no order information.
    pub conllu: UdSentence,
    pub tree: DepTree,
    /// Tokenized reference sentence in original order. Empty when unknown.
    pub reference_forms: Vec<String>,
    /// `alignment[id - 1]` is the 1-based reference position of node `id`.
    pub alignment: Option<Vec<usize>>,
}

fn check_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    perm.iter().all(|&p| {
        p >= 1 && p <= perm.len() && !std::mem::replace(&mut seen[p - 1], true)
    })
}

/// Seeded uniform permutation: `perm[old - 1]` is the new id of `old`.
pub fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (1..=n).collect();
    perm.shuffle(&mut rng);
    perm
}

/// Renumbers `rows` with `perm` and sorts them by their new id.
fn renumber(rows: &[UdToken], perm: &[usize]) -> Vec<UdToken> {
    let mut out: Vec<UdToken> = rows
        .iter()
        .map(|tok| UdToken {
            id: perm[tok.id - 1],
            head: if tok.head == 0 { 0 } else { perm[tok.head - 1] },
            ..tok.clone()
        })
        .collect();
    out.sort_by_key(|t| t.id);
    out
}

/// Comments that do not reveal word order. `# text` does, so it is dropped.
fn order_free_comments(comments: &[String]) -> Vec<String> {
    comments
        .iter()
        .filter(|c| {
            let body = c.trim_start_matches('#').trim_start();
            !(body.starts_with("text ") || body.starts_with("text="))
        })
        .cloned()
        .collect()
}

/// Shuffles node ids with a seeded uniform permutation and removes forms.
///
/// The shuffled rows keep lemma, UPOS, XPOS, FEATS and DEPREL. DEPS refers
/// to old ids and MISC may encode spacing, so both are cleared; multiword
/// ranges and empty nodes are dropped.
pub fn shallow_transform(sentence: &UdSentence, seed: u64) -> Result<ShallowSentence, TreeError> {
    sentence.validate(0)?;
    let perm = random_permutation(sentence.len(), seed);
    let stripped: Vec<UdToken> = sentence
        .tokens
        .iter()
        .map(|tok| UdToken {
            form: EMPTY.to_string(),
            deps: EMPTY.to_string(),
            misc: Attrs::new(),
            ..tok.clone()
        })
        .collect();
    let rows = renumber(&stripped, &perm);
    let mut alignment = vec![0; perm.len()];
    for (old, &new) in perm.iter().enumerate() {
        alignment[new - 1] = old + 1;
    }
    let conllu = UdSentence {
        tokens: rows,
        comments: order_free_comments(&sentence.comments),
        ignored_lines: Vec::new(),
    };
    let tree = build_tree(&conllu)?;
    Ok(ShallowSentence {
        conllu,
        tree,
        reference_forms: sentence.forms(),
        alignment: Some(alignment),
    })
}

impl ShallowSentence {
    /// Rebuilds a shallow sentence from shuffled CoNLL-U rows. An alignment
    /// is recovered from `original_id` MISC entries when every row has one.
    pub fn from_conllu(
        sentence: UdSentence,
        reference_forms: Option<Vec<String>>,
    ) -> Result<Self, TreeError> {
        let tree = build_tree(&sentence)?;
        let n = tree.node_count();
        let reference_forms = reference_forms.unwrap_or_default();
        if !reference_forms.is_empty() && reference_forms.len() != n {
            return Err(TreeError::ReferenceLength {
                expected: n,
                found: reference_forms.len(),
            });
        }
        let parsed: Option<Vec<usize>> = sentence
            .tokens
            .iter()
            .map(|t| t.misc.get(ORIGINAL_ID).and_then(|v| v.parse().ok()))
            .collect();
        let alignment = match parsed {
            Some(a) if check_permutation(&a) => Some(a),
            Some(_) => return Err(TreeError::BadAlignment(n)),
            None => None,
        };
        let mut conllu = sentence;
        for tok in &mut conllu.tokens {
            tok.misc.remove(ORIGINAL_ID);
        }
        Ok(ShallowSentence {
            conllu,
            tree,
            reference_forms,
            alignment,
        })
    }

    /// CoNLL-U rows for writing; `original_id` is added when aligned.
    pub fn to_conllu(&self) -> UdSentence {
        let mut out = self.conllu.clone();
        if let Some(alignment) = &self.alignment {
            for (tok, pos) in out.tokens.iter_mut().zip(alignment) {
                tok.misc.set(ORIGINAL_ID, pos.to_string());
            }
        }
        out
    }

    pub fn strip_alignment(mut self) -> Self {
        self.alignment = None;
        self
    }

    /// Applies another seeded permutation on top of the current one. An
    /// existing alignment is composed so it still points at the reference.
    pub fn reshuffle(&self, seed: u64) -> Self {
        let perm = random_permutation(self.tree.node_count(), seed);
        let tokens = renumber(&self.conllu.tokens, &perm);
        let alignment = self.alignment.as_ref().map(|old| {
            let mut composed = vec![0; old.len()];
            for (prev, &new) in perm.iter().enumerate() {
                composed[new - 1] = old[prev];
            }
            composed
        });
        let conllu = UdSentence {
            tokens,
            ..self.conllu.clone()
        };
        let tree = build_tree(&conllu).expect("renumbering preserves tree validity");
        ShallowSentence {
            conllu,
            tree,
            reference_forms: self.reference_forms.clone(),
            alignment,
        }
    }

    /// Node id aligned to each reference position (inverse alignment).
    pub fn nodes_in_reference_order(&self) -> Option<Vec<usize>> {
        let alignment = self.alignment.as_ref()?;
        let mut order = vec![0; alignment.len()];
        for (idx, &pos) in alignment.iter().enumerate() {
            order[pos - 1] = idx + 1;
        }
        Some(order)
    }
}

/// Writes one tokenized sentence per line.
pub fn references_to_text(sentences: &[ShallowSentence]) -> String {
    sentences
        .iter()
        .map(|s| s.reference_forms.join(" ") + "\n")
        .collect()
}

/// Reads a reference sidecar back into token lists.
pub fn references_from_text(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect()
}

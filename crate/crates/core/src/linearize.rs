//! Tree linearization for sequence-to-sequence models.
//!
//! A tree becomes a pre-order sequence of lemmas: each node is emitted before
//! its children, and the children of every node are visited in an order
//! drawn uniformly at random from a seeded generator. Optionally the
//! children of a node are wrapped in scope markers, and a list of candidate
//! forms for ambiguous lemmas is appended after a separator.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::deptree::{DepTree, ShallowSentence};
use crate::realize::FormLexicon;

pub const SCOPE_OPEN: &str = "(";
pub const SCOPE_CLOSE: &str = ")";
/// Starts the form-list segment.
pub const FORMS_SEP: &str = "<forms>";
const FORM_ASSIGN: &str = "=";
const FORM_ALT: &str = "|";

/// Keeps literal brackets apart from the scope markers.
pub fn escape_token(token: &str) -> String {
    match token {
        "(" => "-lrb-".to_string(),
        ")" => "-rrb-".to_string(),
        _ => token.to_string(),
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinearizeError {
    #[error("sentence {0} has no reference forms")]
    MissingReference(usize),
    #[error("at least one linearization per sentence is required")]
    ZeroLinearizations,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSeq {
    pub tokens: Vec<String>,
    /// Tree node behind each token; `None` for markers and the form list.
    pub node_of: Vec<Option<usize>>,
}

impl LinearSeq {
    fn push(&mut self, token: String, node: Option<usize>) {
        self.tokens.push(token);
        self.node_of.push(node);
    }

    /// Node ids in the order their lemmas appear.
    pub fn node_order(&self) -> Vec<usize> {
        self.node_of.iter().flatten().copied().collect()
    }

    pub fn to_line(&self) -> String {
        self.tokens.join(" ")
    }
}

fn visit(tree: &DepTree, node: usize, scoped: bool, rng: &mut ChaCha8Rng, out: &mut LinearSeq) {
    out.push(escape_token(&tree.payload(node).lemma), Some(node));
    let mut children = tree.children(node).to_vec();
    if children.is_empty() {
        return;
    }
    children.shuffle(rng);
    if scoped {
        out.push(SCOPE_OPEN.to_string(), None);
    }
    for child in children {
        visit(tree, child, scoped, rng, out);
    }
    if scoped {
        out.push(SCOPE_CLOSE.to_string(), None);
    }
}

pub fn linearize_tree(tree: &DepTree, seed: u64, scoped: bool) -> LinearSeq {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = LinearSeq {
        tokens: Vec::with_capacity(tree.node_count()),
        node_of: Vec::with_capacity(tree.node_count()),
    };
    visit(tree, tree.root(), scoped, &mut rng, &mut out);
    out
}

pub fn linearize(sentence: &ShallowSentence, seed: u64, scoped: bool) -> LinearSeq {
    linearize_tree(&sentence.tree, seed, scoped)
}

/// Appends `<forms> lemma = f1 | f2 ...` segments, one per node with more
/// than one candidate form, in the order the nodes appear in `seq`.
pub fn append_form_list(seq: &LinearSeq, lexicon: &FormLexicon, tree: &DepTree) -> LinearSeq {
    let mut out = seq.clone();
    let mut started = false;
    for node in seq.node_order() {
        let payload = tree.payload(node);
        let candidates = lexicon.candidates_for(payload);
        if candidates.len() < 2 {
            continue;
        }
        if !started {
            out.push(FORMS_SEP.to_string(), None);
            started = true;
        }
        out.push(escape_token(&payload.lemma), None);
        out.push(FORM_ASSIGN.to_string(), None);
        for (i, cand) in candidates.iter().enumerate() {
            if i > 0 {
                out.push(FORM_ALT.to_string(), None);
            }
            out.push(escape_token(&cand.form), None);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairOptions {
    pub linearizations: usize,
    pub scoped: bool,
    pub with_forms: bool,
    pub seed: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for linearization `epoch` of sentence `index`. Distinct
/// `(epoch, index)` pairs map to distinct seeds.
pub fn derived_seed(base: u64, epoch: usize, index: usize, dataset_len: usize) -> u64 {
    let slot = (epoch as u64)
        .wrapping_mul(dataset_len as u64)
        .wrapping_add(index as u64);
    splitmix64(base.wrapping_add(slot))
}

/// Source/target training pairs: `linearizations` blocks, each holding
/// every sentence once in dataset order, each with its own derived seed.
pub fn emit_training_pairs(
    dataset: &[ShallowSentence],
    opts: PairOptions,
    lexicon: Option<&FormLexicon>,
) -> Result<Vec<TrainingPair>, LinearizeError> {
    if opts.linearizations == 0 {
        return Err(LinearizeError::ZeroLinearizations);
    }
    if let Some(i) = dataset
        .iter()
        .position(|s| s.reference_forms.len() != s.tree.node_count())
    {
        return Err(LinearizeError::MissingReference(i));
    }
    let mut pairs = Vec::with_capacity(dataset.len() * opts.linearizations);
    for epoch in 0..opts.linearizations {
        for (i, sentence) in dataset.iter().enumerate() {
            let seed = derived_seed(opts.seed, epoch, i, dataset.len());
            let mut seq = linearize(sentence, seed, opts.scoped);
            if let (true, Some(lex)) = (opts.with_forms, lexicon) {
                seq = append_form_list(&seq, lex, &sentence.tree);
            }
            pairs.push(TrainingPair {
                source: seq.to_line(),
                target: sentence.reference_forms.join(" "),
            });
        }
    }
    Ok(pairs)
}

/// Writes pairs as parallel `.src` / `.tgt` streams, one example per line.
pub fn write_pairs<W: Write>(pairs: &[TrainingPair], src: &mut W, tgt: &mut W) -> io::Result<()> {
    for pair in pairs {
        writeln!(src, "{}", pair.source)?;
        writeln!(tgt, "{}", pair.target)?;
    }
    Ok(())
}

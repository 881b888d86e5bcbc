//! Test support: a seeded toy English treebank generator, random trees, and
//! independent oracles (exhaustive search, brute-force BLEU, isomorphism).

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use srtk::conllu::{Attrs, IgnoredLine, UdSentence, UdToken};
use srtk::deptree::{build_tree, NodePayload, ShallowSentence};
use srtk::realize::{Continuation, FormLexicon, Scorer};

// ---------------------------------------------------------------------------
// Toy grammar
// ---------------------------------------------------------------------------

struct Noun {
    lemma: &'static str,
    plural: &'static str,
}

const NOUNS: &[Noun] = &[
    Noun { lemma: "dog", plural: "dogs" },
    Noun { lemma: "cat", plural: "cats" },
    Noun { lemma: "story", plural: "stories" },
    Noun { lemma: "man", plural: "men" },
    Noun { lemma: "woman", plural: "women" },
    Noun { lemma: "child", plural: "children" },
    Noun { lemma: "report", plural: "reports" },
    Noun { lemma: "city", plural: "cities" },
    Noun { lemma: "car", plural: "cars" },
    Noun { lemma: "house", plural: "houses" },
    Noun { lemma: "book", plural: "books" },
    Noun { lemma: "teacher", plural: "teachers" },
    Noun { lemma: "student", plural: "students" },
    Noun { lemma: "company", plural: "companies" },
    Noun { lemma: "market", plural: "markets" },
    Noun { lemma: "game", plural: "games" },
    Noun { lemma: "team", plural: "teams" },
    Noun { lemma: "letter", plural: "letters" },
    Noun { lemma: "item", plural: "items" },
    Noun { lemma: "friend", plural: "friends" },
    Noun { lemma: "school", plural: "schools" },
    Noun { lemma: "window", plural: "windows" },
    Noun { lemma: "idea", plural: "ideas" },
    Noun { lemma: "phone", plural: "phones" },
];

const PROPER: &[&str] = &["AP", "John", "Mary", "London", "Google", "Paris", "Internet"];
const ADJS: &[&str] = &["big", "small", "old", "new", "red", "happy", "good", "late", "quiet", "strange"];
const ADPS: &[&str] = &["from", "in", "on", "with", "to", "about", "across", "at"];
const ADVS: &[&str] = &["quickly", "today", "often", "again", "also", "here"];

struct Verb {
    lemma: &'static str,
    third: &'static str,
    past: &'static str,
    gerund: &'static str,
    transitive: bool,
}

const VERBS: &[Verb] = &[
    Verb { lemma: "see", third: "sees", past: "saw", gerund: "seeing", transitive: true },
    Verb { lemma: "find", third: "finds", past: "found", gerund: "finding", transitive: true },
    Verb { lemma: "read", third: "reads", past: "read", gerund: "reading", transitive: true },
    Verb { lemma: "write", third: "writes", past: "wrote", gerund: "writing", transitive: true },
    Verb { lemma: "like", third: "likes", past: "liked", gerund: "liking", transitive: true },
    Verb { lemma: "want", third: "wants", past: "wanted", gerund: "wanting", transitive: true },
    Verb { lemma: "take", third: "takes", past: "took", gerund: "taking", transitive: true },
    Verb { lemma: "buy", third: "buys", past: "bought", gerund: "buying", transitive: true },
    Verb { lemma: "visit", third: "visits", past: "visited", gerund: "visiting", transitive: true },
    Verb { lemma: "run", third: "runs", past: "ran", gerund: "running", transitive: false },
    Verb { lemma: "come", third: "comes", past: "came", gerund: "coming", transitive: false },
    Verb { lemma: "sleep", third: "sleeps", past: "slept", gerund: "sleeping", transitive: false },
    Verb { lemma: "wait", third: "waits", past: "waited", gerund: "waiting", transitive: false },
    Verb { lemma: "work", third: "works", past: "worked", gerund: "working", transitive: false },
];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Subj,
    Obj,
    Pobj,
}

#[derive(Clone, Copy)]
struct Agr {
    person: u8,
    plural: bool,
    pronoun: bool,
}

#[derive(Clone)]
struct Tok {
    form: String,
    lemma: String,
    upos: &'static str,
    xpos: &'static str,
    feats: String,
    /// Local index of the head inside the phrase; `None` for the phrase head.
    head: Option<usize>,
    deprel: &'static str,
    space_after: bool,
}

fn tok(form: &str, lemma: &str, upos: &'static str, xpos: &'static str, feats: &str, deprel: &'static str) -> Tok {
    Tok {
        form: form.to_string(),
        lemma: lemma.to_string(),
        upos,
        xpos,
        feats: feats.to_string(),
        head: None,
        deprel,
        space_after: true,
    }
}

/// A phrase: tokens in surface order; `head` is the index of its head token.
struct Phrase {
    toks: Vec<Tok>,
    head: usize,
    /// `(first token index, surface)` of multiword ranges.
    ranges: Vec<(usize, String)>,
}

impl Phrase {
    fn single(t: Tok) -> Self {
        Phrase { toks: vec![t], head: 0, ranges: Vec::new() }
    }

    /// Appends `dep` and attaches its head to this phrase's head.
    fn attach(&mut self, mut dep: Phrase, deprel: &'static str, before: bool) {
        dep.toks[dep.head].deprel = deprel;
        if before {
            let shift = dep.toks.len();
            for t in &mut self.toks {
                t.head = t.head.map(|h| h + shift);
            }
            for r in &mut self.ranges {
                r.0 += shift;
            }
            let new_head = self.head + shift;
            for (i, t) in dep.toks.iter_mut().enumerate() {
                if i == dep.head {
                    t.head = Some(new_head);
                }
            }
            let mut toks = dep.toks;
            toks.append(&mut self.toks);
            let mut ranges = dep.ranges;
            ranges.append(&mut self.ranges);
            self.toks = toks;
            self.ranges = ranges;
            self.head = new_head;
        } else {
            let shift = self.toks.len();
            for (i, t) in dep.toks.iter_mut().enumerate() {
                t.head = if i == dep.head { Some(self.head) } else { t.head.map(|h| h + shift) };
            }
            for r in &mut dep.ranges {
                r.0 += shift;
            }
            self.toks.append(&mut dep.toks);
            self.ranges.append(&mut dep.ranges);
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ToyConfig {
    /// Chance that a sentence has invented out-of-vocabulary words.
    pub oov_sentence_rate: f64,
    /// Chance of a short two- or three-token sentence.
    pub short_rate: f64,
    /// Chance of a long, heavily coordinated sentence.
    pub long_rate: f64,
    /// Write `don't`-style multiword range lines.
    pub multiword: bool,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig { oov_sentence_rate: 0.0, short_rate: 0.03, long_rate: 0.02, multiword: true }
    }
}

pub struct ToyTreebank {
    rng: ChaCha8Rng,
    config: ToyConfig,
    oov_mode: bool,
    prefix: String,
    count: usize,
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

impl ToyTreebank {
    pub fn new(seed: u64, prefix: &str, config: ToyConfig) -> Self {
        ToyTreebank { rng: ChaCha8Rng::seed_from_u64(seed), config, oov_mode: false, prefix: prefix.to_string(), count: 0 }
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn invented(&mut self) -> String {
        const SYL: &[&str] = &["bla", "zor", "quin", "tep", "vor", "mik", "dru", "sel", "phon", "gat"];
        let n = self.rng.random_range(2..=3);
        (0..n).map(|_| *SYL.choose(&mut self.rng).unwrap()).collect()
    }

    fn noun_phrase(&mut self, role: Role) -> (Phrase, Agr) {
        let roll: f64 = self.rng.random();
        if roll < 0.25 {
            // Pronoun.
            let (subj, obj, lemma, person, plural) = *[
                ("I", "me", "I", 1, false),
                ("you", "you", "you", 2, false),
                ("he", "him", "he", 3, false),
                ("she", "her", "she", 3, false),
                ("it", "it", "it", 3, false),
                ("we", "us", "we", 1, true),
                ("they", "them", "they", 3, true),
            ]
            .choose(&mut self.rng)
            .unwrap();
            let (form, case) = if role == Role::Subj { (subj, "Nom") } else { (obj, "Acc") };
            let number = if plural { "Plur" } else { "Sing" };
            let feats = format!("Case={case}|Number={number}|Person={person}|PronType=Prs");
            let p = Phrase::single(tok(form, lemma, "PRON", "PRP", &feats, "dep"));
            return (p, Agr { person, plural, pronoun: true });
        }
        if roll < 0.35 {
            let name = if self.oov_mode && self.chance(0.5) {
                capitalize(&self.invented())
            } else {
                PROPER.choose(&mut self.rng).unwrap().to_string()
            };
            let mut p = Phrase::single(tok(&name, &name, "PROPN", "NNP", "Number=Sing", "dep"));
            if name == "AP" || name == "Internet" {
                p.attach(Phrase::single(tok("the", "the", "DET", "DT", "Definite=Def|PronType=Art", "det")), "det", true);
            }
            return (p, Agr { person: 3, plural: false, pronoun: false });
        }
        let plural = self.chance(0.3);
        let (lemma, form) = if self.oov_mode && self.chance(0.6) {
            let w = self.invented();
            (w.clone(), if plural { format!("{w}s") } else { w })
        } else {
            let n = NOUNS.choose(&mut self.rng).unwrap();
            (n.lemma.to_string(), if plural { n.plural.to_string() } else { n.lemma.to_string() })
        };
        let number = if plural { "Plur" } else { "Sing" };
        let xpos = if plural { "NNS" } else { "NN" };
        let mut p = Phrase::single(tok(&form, &lemma, "NOUN", xpos, &format!("Number={number}"), "dep"));
        if self.chance(0.35) {
            let adj = *ADJS.choose(&mut self.rng).unwrap();
            p.attach(Phrase::single(tok(adj, adj, "ADJ", "JJ", "Degree=Pos", "amod")), "amod", true);
        }
        let det = if plural {
            *["the", "these", "those", "some"].choose(&mut self.rng).unwrap()
        } else {
            *["the", "the", "a", "this", "that", "every"].choose(&mut self.rng).unwrap()
        };
        let (det_lemma, det_feats) = match det {
            "the" => ("the", "Definite=Def|PronType=Art".to_string()),
            "a" => ("a", "Definite=Ind|PronType=Art".to_string()),
            "these" => ("this", "Number=Plur|PronType=Dem".to_string()),
            "those" => ("that", "Number=Plur|PronType=Dem".to_string()),
            "this" | "that" => (det, "Number=Sing|PronType=Dem".to_string()),
            _ => (det, String::new()),
        };
        let feats = if det_feats.is_empty() { "_".to_string() } else { det_feats };
        p.attach(Phrase::single(tok(det, det_lemma, "DET", "DT", &feats, "det")), "det", true);
        if role != Role::Pobj && self.chance(0.12) {
            let pp = self.prep_phrase();
            p.attach(pp, "nmod", false);
        }
        (p, Agr { person: 3, plural, pronoun: false })
    }

    fn prep_phrase(&mut self) -> Phrase {
        let adp = *ADPS.choose(&mut self.rng).unwrap();
        let (mut np, _) = self.noun_phrase(Role::Pobj);
        np.attach(Phrase::single(tok(adp, adp, "ADP", "IN", "_", "case")), "case", true);
        np
    }

    fn be_form(&mut self, agr: Agr, past: bool) -> (String, String) {
        let number = if agr.plural { "Plur" } else { "Sing" };
        let tense = if past { "Past" } else { "Pres" };
        let feats = format!("Mood=Ind|Number={number}|Person={}|Tense={tense}|VerbForm=Fin", agr.person);
        let form = match (past, agr.person, agr.plural) {
            (true, 1 | 3, false) => "was",
            (true, _, _) => "were",
            (false, 1, false) => {
                if agr.pronoun && self.chance(0.3) { "'m" } else { "am" }
            }
            (false, 3, false) => {
                if agr.pronoun && self.chance(0.25) { "'s" } else { "is" }
            }
            (false, _, _) => {
                if agr.pronoun && self.chance(0.2) { "'re" } else { "are" }
            }
        };
        (form.to_string(), feats)
    }

    fn clause(&mut self) -> Phrase {
        let (subj, agr) = self.noun_phrase(Role::Subj);
        let past = self.chance(0.4);
        let kind: f64 = self.rng.random();
        let mut clause;
        if kind < 0.2 {
            // Copular: subject be adjective.
            let adj = *ADJS.choose(&mut self.rng).unwrap();
            clause = Phrase::single(tok(adj, adj, "ADJ", "JJ", "Degree=Pos", "root"));
            let (be, feats) = self.be_form(agr, past);
            let contracted = be.starts_with('\'');
            clause.attach(Phrase::single(tok(&be, "be", "AUX", "VBZ", &feats, "cop")), "cop", true);
            let mut subj = subj;
            if contracted {
                let last = subj.toks.len() - 1;
                subj.toks[last].space_after = false;
            }
            clause.attach(subj, "nsubj", true);
            if self.chance(0.3) {
                let pp = self.prep_phrase();
                clause.attach(pp, "obl", false);
            }
            return clause;
        }
        let verb = &VERBS[self.rng.random_range(0..VERBS.len())];
        let progressive = kind < 0.35;
        let aux_roll: f64 = self.rng.random();
        let mut pre: Vec<Tok> = Vec::new();
        let mut range = None;
        let verb_tok = if progressive {
            let (be, feats) = self.be_form(agr, past);
            pre.push(tok(&be, "be", "AUX", "VBP", &feats, "aux"));
            tok(verb.gerund, verb.lemma, "VERB", "VBG", "Tense=Pres|VerbForm=Part", "root")
        } else if aux_roll < 0.15 {
            let (form, feats) = if past {
                ("did", "Mood=Ind|Tense=Past|VerbForm=Fin")
            } else if agr.person == 3 && !agr.plural {
                ("does", "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin")
            } else {
                ("do", "Mood=Ind|Tense=Pres|VerbForm=Fin")
            };
            let mut d = tok(form, "do", "AUX", "VBP", feats, "aux");
            d.space_after = false;
            pre.push(d);
            pre.push(tok("n't", "not", "PART", "RB", "_", "advmod"));
            range = Some(format!("{form}n't"));
            tok(verb.lemma, verb.lemma, "VERB", "VB", "VerbForm=Inf", "root")
        } else if aux_roll < 0.25 {
            let m = *["will", "can"].choose(&mut self.rng).unwrap();
            pre.push(tok(m, m, "AUX", "MD", "VerbForm=Fin", "aux"));
            tok(verb.lemma, verb.lemma, "VERB", "VB", "VerbForm=Inf", "root")
        } else if past {
            tok(verb.past, verb.lemma, "VERB", "VBD", "Mood=Ind|Tense=Past|VerbForm=Fin", "root")
        } else if agr.person == 3 && !agr.plural {
            tok(verb.third, verb.lemma, "VERB", "VBZ", "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin", "root")
        } else {
            tok(verb.lemma, verb.lemma, "VERB", "VBP", "Mood=Ind|Tense=Pres|VerbForm=Fin", "root")
        };
        clause = Phrase::single(verb_tok);
        let n_pre = pre.len();
        for (i, t) in pre.into_iter().enumerate().rev() {
            let rel = t.deprel;
            let mut p = Phrase::single(t);
            if i + 1 == n_pre && range.is_some() && n_pre == 2 {
                // handled below
            }
            p.toks[0].deprel = rel;
            clause.attach(p, rel, true);
        }
        if let Some(surface) = range {
            clause.ranges.push((0, surface));
        }
        let mut subj = subj;
        if clause.toks[0].form.starts_with('\'') {
            let last = subj.toks.len() - 1;
            subj.toks[last].space_after = false;
        }
        clause.attach(subj, "nsubj", true);
        if verb.transitive {
            let (obj, _) = self.noun_phrase(Role::Obj);
            clause.attach(obj, "obj", false);
        }
        let n_pp = if self.chance(0.45) { 1 } else { 0 } + if self.chance(0.1) { 1 } else { 0 };
        for _ in 0..n_pp {
            let pp = self.prep_phrase();
            clause.attach(pp, "obl", false);
        }
        if self.chance(0.2) {
            let adv = *ADVS.choose(&mut self.rng).unwrap();
            clause.attach(Phrase::single(tok(adv, adv, "ADV", "RB", "_", "advmod")), "advmod", false);
        }
        clause
    }

    fn fronted(&mut self) -> Phrase {
        // "From the AP comes this story"
        let verb = &VERBS[10];
        let (subj, agr) = self.noun_phrase(Role::Subj);
        let form = if agr.plural { verb.lemma } else { verb.third };
        let feats = if agr.plural {
            "Mood=Ind|Tense=Pres|VerbForm=Fin"
        } else {
            "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin"
        };
        let mut clause = Phrase::single(tok(form, verb.lemma, "VERB", "VBZ", feats, "root"));
        let pp = self.prep_phrase();
        clause.attach(pp, "obl", true);
        clause.attach(subj, "nsubj", false);
        clause
    }

    fn short(&mut self) -> Phrase {
        let verb = &VERBS[self.rng.random_range(9..VERBS.len())];
        let mut clause = Phrase::single(tok(
            verb.third,
            verb.lemma,
            "VERB",
            "VBZ",
            "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin",
            "root",
        ));
        let pron = *["He", "She", "It"].choose(&mut self.rng).unwrap();
        let lemma = pron.to_lowercase();
        clause.attach(
            Phrase::single(tok(pron, &lemma, "PRON", "PRP", "Case=Nom|Number=Sing|Person=3|PronType=Prs", "nsubj")),
            "nsubj",
            true,
        );
        clause
    }

    fn coordinate(&mut self, mut first: Phrase, extra: usize) -> Phrase {
        for _ in 0..extra {
            let mut next = self.clause();
            let cc = *["and", "but"].choose(&mut self.rng).unwrap();
            next.attach(Phrase::single(tok(cc, cc, "CCONJ", "CC", "_", "cc")), "cc", true);
            let mut comma = tok(",", ",", "PUNCT", ",", "_", "punct");
            comma.space_after = true;
            next.attach(Phrase::single(comma), "punct", true);
            let last = first.toks.len() - 1;
            first.toks[last].space_after = false;
            first.attach(next, "conj", false);
        }
        first
    }

    fn raw_sentence(&mut self) -> Phrase {
        self.oov_mode = self.chance(self.config.oov_sentence_rate);
        let roll: f64 = self.rng.random();
        let mut p = if roll < self.config.short_rate {
            self.short()
        } else if roll < self.config.short_rate + self.config.long_rate {
            let first = self.clause();
            let extra = self.rng.random_range(6..=9);
            self.coordinate(first, extra)
        } else if roll < self.config.short_rate + self.config.long_rate + 0.05 {
            self.fronted()
        } else {
            let first = self.clause();
            let extra = if self.chance(0.2) { 1 } else { 0 };
            self.coordinate(first, extra)
        };
        let fronted = p.toks.first().is_some_and(|t| t.upos == "ADP");
        let end = if fronted {
            ":"
        } else {
            *[".", ".", ".", ".", "!", "?"].choose(&mut self.rng).unwrap()
        };
        let last = p.toks.len() - 1;
        p.toks[last].space_after = false;
        p.attach(Phrase::single(tok(end, end, "PUNCT", ".", "_", "punct")), "punct", false);
        p
    }

    pub fn sentence(&mut self) -> UdSentence {
        let phrase = self.raw_sentence();
        self.count += 1;
        let mut tokens: Vec<UdToken> = phrase
            .toks
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut misc = Attrs::new();
                if !t.space_after && i + 1 < phrase.toks.len() {
                    misc.set("SpaceAfter", "No");
                }
                UdToken {
                    id: i + 1,
                    form: t.form.clone(),
                    lemma: t.lemma.clone(),
                    upos: t.upos.to_string(),
                    xpos: t.xpos.to_string(),
                    feats: Attrs::parse(&t.feats),
                    head: t.head.map_or(0, |h| h + 1),
                    deprel: if t.head.is_none() { "root".to_string() } else { t.deprel.to_string() },
                    deps: "_".to_string(),
                    misc,
                }
            })
            .collect();
        if let Some(first) = tokens.first_mut() {
            first.form = capitalize(&first.form);
        }
        let mut text = String::new();
        for (i, t) in tokens.iter().enumerate() {
            text.push_str(&t.form);
            if i + 1 < tokens.len() && t.misc.get("SpaceAfter") != Some("No") {
                text.push(' ');
            }
        }
        let ignored_lines = if self.config.multiword {
            phrase
                .ranges
                .iter()
                .map(|(start, surface)| {
                    let idx = phrase.toks.len().min(*start);
                    IgnoredLine {
                        before: idx,
                        line: format!("{}-{}\t{}\t_\t_\t_\t_\t_\t_\t_\t_", idx + 1, idx + 2, surface_case(surface, idx)),
                    }
                })
                .collect()
        } else {
            Vec::new()
        };
        UdSentence {
            tokens,
            comments: vec![format!("# sent_id = {}-{}", self.prefix, self.count), format!("# text = {text}")],
            ignored_lines,
        }
    }

    pub fn corpus(&mut self, n: usize) -> Vec<UdSentence> {
        (0..n).map(|_| self.sentence()).collect()
    }
}

fn surface_case(surface: &str, idx: usize) -> String {
    if idx == 0 {
        capitalize(surface)
    } else {
        surface.to_string()
    }
}

// ---------------------------------------------------------------------------
// Random trees
// ---------------------------------------------------------------------------

/// A random recursive tree of `n` nodes with payloads drawn from `pool`
/// (gold tokens), as an aligned shallow sentence.
pub fn random_shallow(rng: &mut ChaCha8Rng, n: usize, pool: &[UdToken]) -> ShallowSentence {
    let tokens: Vec<UdToken> = (0..n)
        .map(|i| {
            let src = pool.choose(rng).unwrap();
            let head = if i == 0 { 0 } else { rng.random_range(1..=i) };
            UdToken {
                id: i + 1,
                head,
                misc: Attrs::new(),
                deps: "_".into(),
                deprel: if head == 0 { "root".into() } else { src.deprel.clone() },
                ..src.clone()
            }
        })
        .collect();
    let sentence = UdSentence { tokens, comments: Vec::new(), ignored_lines: Vec::new() };
    srtk::deptree::shallow_transform(&sentence, rng.random()).unwrap()
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Exhaustive search over every node order and form choice, with the same
/// summation order and tie-break as the decoder: best score, then the
/// lexicographically smallest `(node, candidate rank)` sequence.
pub fn exhaustive_best(
    sentence: &ShallowSentence,
    scorer: &dyn Scorer,
    lexicon: &FormLexicon,
) -> (f64, Vec<String>) {
    let tree = &sentence.tree;
    let n = tree.node_count();
    let cands: Vec<Vec<String>> = tree
        .node_ids()
        .map(|id| lexicon.candidates_for(tree.payload(id)).into_iter().map(|c| c.form).collect())
        .collect();
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    let mut path: Vec<(usize, usize)> = Vec::new();
    let mut used = vec![false; n];

    #[allow(clippy::too_many_arguments)]
    fn rec(
        tree: &srtk::deptree::DepTree,
        cands: &[Vec<String>],
        scorer: &dyn Scorer,
        used: &mut [bool],
        path: &mut Vec<(usize, usize)>,
        score: f64,
        best: &mut Option<(f64, Vec<(usize, usize)>)>,
    ) {
        let n = used.len();
        if path.len() == n {
            let better = match best {
                None => true,
                Some((s, p)) => score > *s || (score == *s && *path < *p),
            };
            if better {
                *best = Some((score, path.clone()));
            }
            return;
        }
        let history: Vec<&str> = path.iter().map(|&(node, r)| cands[node - 1][r].as_str()).collect();
        let mut steps = Vec::new();
        for node in 1..=n {
            if used[node - 1] {
                continue;
            }
            for (r, form) in cands[node - 1].iter().enumerate() {
                let s = scorer.score_next(&history, &Continuation { node, form, payload: tree.payload(node) });
                steps.push((node, r, s));
            }
        }
        for (node, r, s) in steps {
            used[node - 1] = true;
            path.push((node, r));
            rec(tree, cands, scorer, used, path, score + s, best);
            path.pop();
            used[node - 1] = false;
        }
    }

    rec(tree, &cands, scorer, &mut used, &mut path, 0.0, &mut best);
    let (score, path) = best.unwrap();
    (score, path.iter().map(|&(node, r)| cands[node - 1][r].clone()).collect())
}

/// Textbook BLEU-4 computed from scratch: every n-gram of every hypothesis
/// is counted by scanning, clipped by a scan of its reference.
pub fn brute_force_bleu(hyps: &[Vec<String>], refs: &[Vec<String>]) -> f64 {
    let mut matched = [0u64; 4];
    let mut total = [0u64; 4];
    let (mut c, mut r) = (0u64, 0u64);
    for (h, rf) in hyps.iter().zip(refs) {
        c += h.len() as u64;
        r += rf.len() as u64;
        for n in 1..=4 {
            if h.len() < n {
                continue;
            }
            let grams: Vec<&[String]> = h.windows(n).collect();
            total[n - 1] += grams.len() as u64;
            let mut seen: Vec<&[String]> = Vec::new();
            for g in &grams {
                if seen.contains(g) {
                    continue;
                }
                seen.push(g);
                let in_hyp = grams.iter().filter(|x| *x == g).count() as u64;
                let in_ref = if rf.len() >= n { rf.windows(n).filter(|x| x == g).count() as u64 } else { 0 };
                matched[n - 1] += in_hyp.min(in_ref);
            }
        }
    }
    if c == 0 || (0..4).any(|i| matched[i] == 0) {
        return 0.0;
    }
    let geo = (0..4).map(|i| (matched[i] as f64 / total[i] as f64).ln()).sum::<f64>() / 4.0;
    let bp = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    100.0 * bp * geo.exp()
}

/// Checks that a shuffled tree is the original tree relabelled by its
/// alignment: same labelled edges, same payloads, forms removed.
pub fn isomorphic_to_source(shallow: &ShallowSentence, source: &UdSentence) -> bool {
    let Some(align) = &shallow.alignment else { return false };
    let original = build_tree(source).unwrap();
    let edges = |t: &srtk::deptree::DepTree, map: &dyn Fn(usize) -> usize| -> BTreeSet<(usize, usize, NodePayload)> {
        t.edges().map(|(h, d)| (if h == 0 { 0 } else { map(h) }, map(d), t.payload(d).clone())).collect()
    };
    let shuffled = edges(&shallow.tree, &|id| align[id - 1]);
    let expected = edges(&original, &|id| id);
    shuffled == expected
        && shallow.conllu.tokens.iter().all(|t| t.form == "_")
        && shallow.reference_forms == source.forms()
}

/// Independent one-pass filter used to cross-check synthetic-data stats:
/// `(kept, by_length, by_overlap)`.
pub fn one_pass_filter(corpus: &[UdSentence], vocab_counts: &HashMap<String, u64>, min_count: u64) -> (usize, usize, usize) {
    let mut out = (0, 0, 0);
    for s in corpus {
        let n = s.tokens.len();
        if !(5..=50).contains(&n) {
            out.1 += 1;
            continue;
        }
        let known = s.tokens.iter().filter(|t| vocab_counts.get(&t.form).copied().unwrap_or(0) >= min_count).count();
        // 5 * known >= 4 * n  <=>  known / n >= 0.8, in integers.
        if 5 * known >= 4 * n {
            out.0 += 1;
        } else {
            out.2 += 1;
        }
    }
    out
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

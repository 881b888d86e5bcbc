//! Reading and writing CoNLL-U.
//!
//! Parsing keeps enough of the original text that an untouched file
//! serializes back byte-for-byte: comment lines, multiword-token ranges
//! (`2-3`) and empty nodes (`5.1`) are held verbatim next to the syntactic
//! word rows. Only syntactic words take part in tree logic.
//!
//! The empty marker for every column is `_`. A token whose form really is an
//! underscore cannot be told apart from a missing form.

use std::fmt;
use std::io::BufRead;

use thiserror::Error;

/// Marker for an empty column.
pub const EMPTY: &str = "_";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConlluError {
    #[error("line {line}: expected 10 tab-separated columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: invalid token id `{value}`")]
    BadId { line: usize, value: String },
    #[error("line {line}: invalid head `{value}`")]
    BadHead { line: usize, value: String },
    #[error("line {line}: duplicate token id {id}")]
    DuplicateId { line: usize, id: usize },
    #[error("line {line}: token ids must run 1..n in order, expected {expected} found {found}")]
    IdSequence {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: token {id} is its own head")]
    SelfLoop { line: usize, id: usize },
    #[error("line {line}: token {id} points at missing head {head}")]
    DanglingHead { line: usize, id: usize, head: usize },
    #[error("line {line}: sentence has {roots} roots")]
    RootCount { line: usize, roots: usize },
    #[error("line {line}: dependency cycle through token {id}")]
    Cycle { line: usize, id: usize },
    #[error("line {line}: sentence has no tokens")]
    EmptySentence { line: usize },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ConlluError {
    fn from(err: std::io::Error) -> Self {
        ConlluError::Io(err.to_string())
    }
}

/// An ordered `key=value|key=value` column (FEATS, MISC).
///
/// Items without `=` are kept with `None` as value so MISC entries of any
/// shape survive a round trip.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Attrs(pub Vec<(String, Option<String>)>);

impl Attrs {
    pub fn new() -> Self {
        Attrs(Vec::new())
    }

    pub fn parse(column: &str) -> Self {
        if column == EMPTY || column.is_empty() {
            return Attrs::new();
        }
        Attrs(
            column
                .split('|')
                .map(|item| match item.split_once('=') {
                    Some((k, v)) => (k.to_string(), Some(v.to_string())),
                    None => (item.to_string(), None),
                })
                .collect(),
        )
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .and_then(|(_, v)| v.as_deref())
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.0.iter().any(|(k, _)| k == key)
    }

    /// Replaces the value of `key`, appending it if absent.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = Some(value.into());
        match self.0.iter_mut().find(|(k, _)| k == key) {
            Some(item) => item.1 = value,
            None => self.0.push((key.to_string(), value)),
        }
    }

    pub fn remove(&mut self, key: &str) {
        self.0.retain(|(k, _)| k != key);
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Option<&str>)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_deref()))
    }
}

impl fmt::Display for Attrs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str(EMPTY);
        }
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            f.write_str(k)?;
            if let Some(v) = v {
                write!(f, "={v}")?;
            }
        }
        Ok(())
    }
}

/// One syntactic word row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UdToken {
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: Attrs,
    pub head: usize,
    pub deprel: String,
    pub deps: String,
    pub misc: Attrs,
}

impl UdToken {
    pub fn has_form(&self) -> bool {
        self.form != EMPTY
    }
}

impl fmt::Display for UdToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.id,
            self.form,
            self.lemma,
            self.upos,
            self.xpos,
            self.feats,
            self.head,
            self.deprel,
            self.deps,
            self.misc
        )
    }
}

/// A line kept verbatim but excluded from the token list: a multiword range,
/// an empty node, or a comment that appears after the first token row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IgnoredLine {
    /// Number of syntactic tokens that precede this line in the block.
    pub before: usize,
    pub line: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UdSentence {
    pub tokens: Vec<UdToken>,
    /// Leading `#` lines, without the trailing newline.
    pub comments: Vec<String>,
    pub ignored_lines: Vec<IgnoredLine>,
}

impl UdSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn forms(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.form.clone()).collect()
    }

    /// Value of a `# key = value` comment.
    pub fn comment_value(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let body = c.strip_prefix('#')?.trim_start();
            let (k, v) = body.split_once('=')?;
            (k.trim() == key).then(|| v.trim())
        })
    }

    /// Checks ids, heads and tree shape. `first_line` is used for error
    /// locations only.
    pub fn validate(&self, first_line: usize) -> Result<(), ConlluError> {
        let line = first_line;
        let n = self.tokens.len();
        if n == 0 {
            return Err(ConlluError::EmptySentence { line });
        }
        for (i, tok) in self.tokens.iter().enumerate() {
            if tok.id != i + 1 {
                return Err(ConlluError::IdSequence {
                    line,
                    expected: i + 1,
                    found: tok.id,
                });
            }
        }
        let mut roots = 0;
        for tok in &self.tokens {
            if tok.head == tok.id {
                return Err(ConlluError::SelfLoop { line, id: tok.id });
            }
            if tok.head > n {
                return Err(ConlluError::DanglingHead {
                    line,
                    id: tok.id,
                    head: tok.head,
                });
            }
            if tok.head == 0 {
                roots += 1;
            }
        }
        if roots != 1 {
            return Err(ConlluError::RootCount { line, roots });
        }
        // Walk up from every token; a walk longer than n revisits a node.
        for tok in &self.tokens {
            let mut cur = tok.head;
            let mut steps = 0;
            while cur != 0 {
                steps += 1;
                if steps > n {
                    return Err(ConlluError::Cycle { line, id: tok.id });
                }
                cur = self.tokens[cur - 1].head;
            }
        }
        Ok(())
    }
}

impl fmt::Display for UdSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.comments {
            writeln!(f, "{c}")?;
        }
        let mut ignored = self.ignored_lines.iter().peekable();
        for (i, tok) in self.tokens.iter().enumerate() {
            while let Some(line) = ignored.next_if(|l| l.before <= i) {
                writeln!(f, "{}", line.line)?;
            }
            writeln!(f, "{tok}")?;
        }
        for line in ignored {
            writeln!(f, "{}", line.line)?;
        }
        writeln!(f)
    }
}

/// Parse result. `skipped` counts blocks dropped in lenient mode.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedCorpus {
    pub sentences: Vec<UdSentence>,
    pub skipped: usize,
}

fn parse_token(line: &str, lineno: usize) -> Result<Option<UdToken>, ConlluError> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(ConlluError::ColumnCount {
            line: lineno,
            found: cols.len(),
        });
    }
    let id_col = cols[0];
    if id_col.contains('-') || id_col.contains('.') {
        return Ok(None);
    }
    let id: usize = id_col
        .parse()
        .ok()
        .filter(|&id| id >= 1)
        .ok_or_else(|| ConlluError::BadId {
            line: lineno,
            value: id_col.to_string(),
        })?;
    let head: usize = cols[6].parse().map_err(|_| ConlluError::BadHead {
        line: lineno,
        value: cols[6].to_string(),
    })?;
    Ok(Some(UdToken {
        id,
        form: cols[1].to_string(),
        lemma: cols[2].to_string(),
        upos: cols[3].to_string(),
        xpos: cols[4].to_string(),
        feats: Attrs::parse(cols[5]),
        head,
        deprel: cols[7].to_string(),
        deps: cols[8].to_string(),
        misc: Attrs::parse(cols[9]),
    }))
}

/// Parses one sentence block (lines without the separating blank line).
/// `first_line` is the 1-based line number of the block's first line.
pub fn parse_block(block: &str, first_line: usize, strict: bool) -> Result<UdSentence, ConlluError> {
    let mut sentence = UdSentence::default();
    for (offset, line) in block.lines().enumerate() {
        let lineno = first_line + offset;
        if line.starts_with('#') {
            if sentence.tokens.is_empty() && sentence.ignored_lines.is_empty() {
                sentence.comments.push(line.to_string());
            } else {
                sentence.ignored_lines.push(IgnoredLine {
                    before: sentence.tokens.len(),
                    line: line.to_string(),
                });
            }
            continue;
        }
        match parse_token(line, lineno)? {
            Some(tok) => {
                if sentence.tokens.iter().any(|t| t.id == tok.id) {
                    return Err(ConlluError::DuplicateId {
                        line: lineno,
                        id: tok.id,
                    });
                }
                sentence.tokens.push(tok);
            }
            None => sentence.ignored_lines.push(IgnoredLine {
                before: sentence.tokens.len(),
                line: line.to_string(),
            }),
        }
    }
    if strict {
        sentence.validate(first_line)?;
    } else if sentence.tokens.is_empty() {
        return Err(ConlluError::EmptySentence { line: first_line });
    }
    Ok(sentence)
}

/// Splits text into sentence blocks, yielding `(first_line, block)`.
fn blocks(text: &str) -> impl Iterator<Item = (usize, String)> + '_ {
    let mut lines = text.lines().enumerate().peekable();
    std::iter::from_fn(move || {
        while lines.next_if(|(_, l)| l.trim().is_empty()).is_some() {}
        let (start, first) = lines.next()?;
        let mut block = String::from(first);
        while let Some((_, line)) = lines.next_if(|(_, l)| !l.trim().is_empty()) {
            block.push('\n');
            block.push_str(line);
        }
        Some((start + 1, block))
    })
}

/// Parses a whole CoNLL-U document.
///
/// Strict mode fails on the first malformed block. Lenient mode drops
/// malformed blocks (bad columns, bad ids, or a broken tree) and counts them.
pub fn parse_conllu(text: &str, strict: bool) -> Result<ParsedCorpus, ConlluError> {
    let mut corpus = ParsedCorpus::default();
    for (first_line, block) in blocks(text) {
        match parse_block(&block, first_line, true) {
            Ok(sentence) => corpus.sentences.push(sentence),
            Err(err) if strict => return Err(err),
            Err(_) => corpus.skipped += 1,
        }
    }
    Ok(corpus)
}

pub fn serialize_conllu(sentences: &[UdSentence]) -> String {
    sentences.iter().map(|s| s.to_string()).collect()
}

/// Streams raw sentence blocks out of a reader without holding the whole
/// file in memory. Each item is `(first_line, block_text)`.
pub struct BlockReader<R> {
    reader: R,
    line_no: usize,
}

impl<R: BufRead> BlockReader<R> {
    pub fn new(reader: R) -> Self {
        BlockReader { reader, line_no: 0 }
    }
}

impl<R: BufRead> Iterator for BlockReader<R> {
    type Item = Result<(usize, String), ConlluError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut block = String::new();
        let mut start = 0;
        let mut line = String::new();
        loop {
            line.clear();
            match self.reader.read_line(&mut line) {
                Ok(0) => break,
                Ok(_) => {}
                Err(err) => return Some(Err(err.into())),
            }
            self.line_no += 1;
            let content = line.trim_end_matches(['\n', '\r']);
            if content.trim().is_empty() {
                if block.is_empty() {
                    continue;
                }
                break;
            }
            if block.is_empty() {
                start = self.line_no;
            } else {
                block.push('\n');
            }
            block.push_str(content);
        }
        (!block.is_empty()).then_some(Ok((start, block)))
    }
}

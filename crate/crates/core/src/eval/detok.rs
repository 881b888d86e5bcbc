//! Rule-based detokenizer.
//!
//! Tokens are joined with single spaces except where a rule glues a token
//! to a neighbour:
//! - closing punctuation `. , ! ? : ; %` and closing brackets attach left;
//! - opening brackets attach right;
//! - `"` alternates, odd occurrences opening and even ones closing;
//! - clitics starting with an apostrophe (`'m`, `'s`, ...) and `n't` attach left;
//! - `-lrb-` / `-rrb-` become `(` / `)`.

const CLOSING_PUNCT: [&str; 7] = [".", ",", "!", "?", ":", ";", "%"];
const OPENING: [&str; 3] = ["(", "[", "{"];
const CLOSING: [&str; 3] = [")", "]", "}"];

fn unescape(token: &str) -> &str {
    match token {
        "-lrb-" | "-LRB-" => "(",
        "-rrb-" | "-RRB-" => ")",
        _ => token,
    }
}

fn is_clitic(token: &str) -> bool {
    (token.starts_with('\'') && token.len() > 1 && token[1..].chars().all(char::is_alphabetic))
        || token.eq_ignore_ascii_case("n't")
}

pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    let mut glue_next = true;
    let mut quotes = 0usize;
    for tok in tokens {
        let tok = unescape(tok.as_ref());
        let (attach_left, attach_right) = if tok == "\"" {
            quotes += 1;
            if quotes % 2 == 1 {
                (false, true)
            } else {
                (true, false)
            }
        } else if OPENING.contains(&tok) {
            (false, true)
        } else if CLOSING.contains(&tok) || CLOSING_PUNCT.contains(&tok) || is_clitic(tok) {
            (true, false)
        } else {
            (false, false)
        };
        if !out.is_empty() && !glue_next && !attach_left {
            out.push(' ');
        }
        out.push_str(tok);
        glue_next = attach_right;
    }
    out
}

/// Inverse of [`detokenize`] for text it produced: splits punctuation,
/// brackets, quotes and clitics back into separate tokens.
pub fn retokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let mut rest = word;
        let mut tail = Vec::new();
        while let Some(c) = rest.chars().next() {
            let s = &rest[..c.len_utf8()];
            if OPENING.contains(&s) || s == "\"" {
                out.push(s.to_string());
                rest = &rest[c.len_utf8()..];
            } else {
                break;
            }
        }
        while let Some(c) = rest.chars().last() {
            let s = &rest[rest.len() - c.len_utf8()..];
            if CLOSING.contains(&s) || CLOSING_PUNCT.contains(&s) || s == "\"" {
                tail.push(s.to_string());
                rest = &rest[..rest.len() - c.len_utf8()];
            } else {
                break;
            }
        }
        let lower = rest.to_lowercase();
        if lower.len() > 3 && lower.ends_with("n't") {
            let cut = rest.len() - 3;
            out.push(rest[..cut].to_string());
            out.push(rest[cut..].to_string());
        } else if let Some(pos) = rest.rfind('\'').filter(|&p| p > 0 && is_clitic(&rest[p..])) {
            out.push(rest[..pos].to_string());
            out.push(rest[pos..].to_string());
        } else if !rest.is_empty() {
            out.push(rest.to_string());
        }
        out.extend(tail.into_iter().rev());
    }
    out
}

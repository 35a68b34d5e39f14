//! Normalized fragment sequences at line or token granularity.
//!
//! Comments and whitespace never reach a fragment. The lexer is permissive:
//! anything it does not recognize becomes a one-character token, so every
//! input tokenizes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Line,
    Token,
}

impl Granularity {
    pub const ALL: [Granularity; 2] = [Granularity::Line, Granularity::Token];

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Line => "line",
            Granularity::Token => "token",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "line" | "lines" => Ok(Granularity::Line),
            "token" | "tokens" => Ok(Granularity::Token),
            other => Err(Error::InvalidConfig(format!("unknown granularity `{other}`"))),
        }
    }
}

/// When comments and whitespace are removed relative to diffing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Strip comments, trim and drop blank lines before diffing.
    #[default]
    Pre,
    /// Diff raw lines/tokens, then drop added or removed units that are
    /// whitespace or comments, normalizing the survivors.
    Post,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Pre => "pre",
            Normalization::Post => "post",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pre" => Ok(Normalization::Pre),
            "post" => Ok(Normalization::Post),
            other => Err(Error::InvalidConfig(format!(
                "unknown normalization mode `{other}` (expected pre|post)"
            ))),
        }
    }
}

/// An immutable, normalized piece of source text. Equality is exact string
/// equality within one granularity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fragment {
    content: String,
    granularity: Granularity,
}

impl Fragment {
    pub fn new(content: impl Into<String>, granularity: Granularity) -> Result<Self> {
        let content = content.into();
        if content.is_empty() {
            return Err(Error::InvalidFragment("empty content".into()));
        }
        if content.contains(['\n', '\r']) {
            return Err(Error::InvalidFragment(format!("line break in {content:?}")));
        }
        match granularity {
            Granularity::Line => {
                if content.trim() != content {
                    return Err(Error::InvalidFragment(format!(
                        "surrounding whitespace in line {content:?}"
                    )));
                }
                if strip_comments(&content).trim().is_empty() {
                    return Err(Error::InvalidFragment(format!(
                        "comment-only line {content:?}"
                    )));
                }
            }
            Granularity::Token => {
                // string and char literals keep their inner spaces
                let literal = content.starts_with(['"', '\'']);
                if !literal && content.chars().any(char::is_whitespace) {
                    return Err(Error::InvalidFragment(format!(
                        "whitespace in token {content:?}"
                    )));
                }
            }
        }
        Ok(Fragment {
            content,
            granularity,
        })
    }

    pub(crate) fn new_unchecked(content: String, granularity: Granularity) -> Self {
        debug_assert!(!content.is_empty());
        Fragment {
            content,
            granularity,
        }
    }

    pub fn content(&self) -> &str {
        &self.content
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn into_content(self) -> String {
        self.content
    }
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.content)
    }
}

fn is_line_break(b: u8) -> bool {
    b == b'\n' || b == b'\r'
}

/// Returns the index just past a `"..."` or `'...'` literal starting at
/// `start`. Literals never cross a line break; an unterminated literal ends
/// before the break (or at end of input).
fn skip_quoted(bytes: &[u8], start: usize) -> usize {
    let quote = bytes[start];
    let mut i = start + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' if i + 1 < bytes.len() && !is_line_break(bytes[i + 1]) => i += 2,
            b if b == quote => return i + 1,
            b if is_line_break(b) => return i,
            _ => i += 1,
        }
    }
    bytes.len()
}

/// Index just past the comment starting at `start` (which must point at
/// `//` or `/*`).
fn comment_end(bytes: &[u8], start: usize) -> usize {
    if bytes[start + 1] == b'/' {
        bytes[start..]
            .iter()
            .position(|&b| is_line_break(b))
            .map_or(bytes.len(), |p| start + p)
    } else {
        let mut i = start + 2;
        while i + 1 < bytes.len() {
            if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                return i + 2;
            }
            i += 1;
        }
        bytes.len()
    }
}

/// Removes `//` and `/* */` comments. A comment becomes one space unless the
/// text before it already ends in whitespace; line breaks inside block
/// comments are kept so line numbering is unchanged. String and char
/// literals are copied verbatim.
pub fn strip_comments(source: &str) -> String {
    let bytes = source.as_bytes();
    let mut out = String::with_capacity(source.len());
    let mut copied = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'"' | b'\'' => i = skip_quoted(bytes, i),
            b'/' if matches!(bytes.get(i + 1), Some(b'/' | b'*')) => {
                out.push_str(&source[copied..i]);
                if !out.ends_with(|c: char| c.is_ascii_whitespace()) {
                    out.push(' ');
                }
                let end = comment_end(bytes, i);
                out.extend(
                    bytes[i..end]
                        .iter()
                        .filter(|&&b| is_line_break(b))
                        .map(|&b| b as char),
                );
                i = end;
                copied = end;
            }
            _ => i += 1,
        }
    }
    out.push_str(&source[copied..]);
    out
}

/// Splits on `\n`, `\r\n` and `\r`. A trailing break does not produce an
/// extra empty line.
pub fn split_lines(text: &str) -> impl Iterator<Item = &str> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    std::iter::from_fn(move || {
        if pos >= bytes.len() {
            return None;
        }
        let start = pos;
        while pos < bytes.len() && !is_line_break(bytes[pos]) {
            pos += 1;
        }
        let line = &text[start..pos];
        if pos < bytes.len() {
            if bytes[pos] == b'\r' && bytes.get(pos + 1) == Some(&b'\n') {
                pos += 2;
            } else {
                pos += 1;
            }
        }
        Some(line)
    })
}

pub fn fragment_lines(source: &str) -> Vec<Fragment> {
    let stripped = strip_comments(source);
    split_lines(&stripped)
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| Fragment::new_unchecked(l.to_owned(), Granularity::Line))
        .collect()
}

pub fn fragment_tokens(source: &str) -> Vec<Fragment> {
    lex(source)
        .into_iter()
        .filter(|t| t.kind != TokenKind::Comment)
        .map(|t| Fragment::new_unchecked(t.text.to_owned(), Granularity::Token))
        .collect()
}

pub fn fragment(source: &str, granularity: Granularity) -> Vec<Fragment> {
    match granularity {
        Granularity::Line => fragment_lines(source),
        Granularity::Token => fragment_tokens(source),
    }
}

/// A raw unit for post-normalization diffing: the text that is diffed, plus
/// the fragment it contributes if it survives filtering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawUnit {
    pub raw: String,
    pub fragment: Option<Fragment>,
}

/// Raw lines or tokens, comments and indentation included, each paired with
/// its normalized fragment (`None` for blank, comment-only, or comment units).
pub fn raw_units(source: &str, granularity: Granularity) -> Vec<RawUnit> {
    match granularity {
        Granularity::Line => {
            let stripped = strip_comments(source);
            split_lines(source)
                .zip(split_lines(&stripped).chain(std::iter::repeat("")))
                .map(|(raw, clean)| {
                    let clean = clean.trim();
                    RawUnit {
                        raw: raw.to_owned(),
                        fragment: (!clean.is_empty())
                            .then(|| Fragment::new_unchecked(clean.to_owned(), Granularity::Line)),
                    }
                })
                .collect()
        }
        Granularity::Token => lex(source)
            .into_iter()
            .map(|t| RawUnit {
                raw: t.text.to_owned(),
                fragment: (t.kind != TokenKind::Comment)
                    .then(|| Fragment::new_unchecked(t.text.to_owned(), Granularity::Token)),
            })
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TokenKind {
    StringLiteral,
    CharLiteral,
    Number,
    Identifier,
    Operator,
    Symbol,
    Comment,
    /// A character no rule matched.
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
}

/// Multi-character operators, longest first.
const OPERATORS: [&str; 24] = [
    ">>>=", ">>>", "<<=", ">>=", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>",
];

const SYMBOLS: &[u8] = b"(){}[];,.@=><!~?:+-*/&|^%";

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b == b'$'
}

fn is_ident_part(b: u8) -> bool {
    is_ident_start(b) || b.is_ascii_digit()
}

fn scan_number(bytes: &[u8], start: usize) -> usize {
    let digits = |mut i: usize, ok: fn(u8) -> bool| {
        while i < bytes.len() && (ok(bytes[i]) || bytes[i] == b'_') {
            i += 1;
        }
        i
    };
    let at = |i: usize| bytes.get(i).copied().unwrap_or(0);

    let mut i = start;
    if at(i) == b'0' && matches!(at(i + 1), b'x' | b'X') {
        i = digits(i + 2, |b| b.is_ascii_hexdigit());
        if matches!(at(i), b'l' | b'L') {
            i += 1;
        }
        return i;
    }
    if at(i) == b'0' && matches!(at(i + 1), b'b' | b'B') {
        i = digits(i + 2, |b| b == b'0' || b == b'1');
        if matches!(at(i), b'l' | b'L') {
            i += 1;
        }
        return i;
    }
    if at(i) != b'.' {
        i = digits(i, |b| b.is_ascii_digit());
    }
    if at(i) == b'.' {
        let next = at(i + 1);
        if next.is_ascii_digit() {
            i = digits(i + 1, |b| b.is_ascii_digit());
        } else if !is_ident_part(next) && next != b'.' {
            // `1.` is a complete double literal
            i += 1;
        }
    }
    if matches!(at(i), b'e' | b'E') {
        let sign = usize::from(matches!(at(i + 1), b'+' | b'-'));
        if at(i + 1 + sign).is_ascii_digit() {
            i = digits(i + 1 + sign, |b| b.is_ascii_digit());
        }
    }
    if matches!(at(i), b'l' | b'L' | b'f' | b'F' | b'd' | b'D') {
        i += 1;
    }
    i
}

/// Tokenizes Java-like source, comments included as [`TokenKind::Comment`].
pub fn lex(source: &str) -> Vec<Token<'_>> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let next = bytes.get(i + 1).copied().unwrap_or(0);
        let (kind, end) = if b < 0x80 && (b as char).is_whitespace() {
            i += 1;
            continue;
        } else if b >= 0x80 {
            let c = source[i..].chars().next().expect("char boundary");
            if c.is_whitespace() {
                i += c.len_utf8();
                continue;
            }
            (TokenKind::Unknown, i + c.len_utf8())
        } else if b == b'/' && (next == b'/' || next == b'*') {
            (TokenKind::Comment, comment_end(bytes, i))
        } else if b == b'"' {
            (TokenKind::StringLiteral, skip_quoted(bytes, i))
        } else if b == b'\'' {
            (TokenKind::CharLiteral, skip_quoted(bytes, i))
        } else if b.is_ascii_digit() || (b == b'.' && next.is_ascii_digit()) {
            (TokenKind::Number, scan_number(bytes, i))
        } else if is_ident_start(b) {
            let len = bytes[i..].iter().take_while(|&&c| is_ident_part(c)).count();
            (TokenKind::Identifier, i + len)
        } else if let Some(op) = OPERATORS
            .iter()
            .find(|op| bytes[i..].starts_with(op.as_bytes()))
        {
            (TokenKind::Operator, i + op.len())
        } else if SYMBOLS.contains(&b) {
            (TokenKind::Symbol, i + 1)
        } else {
            (TokenKind::Unknown, i + 1)
        };
        tokens.push(Token {
            kind,
            text: &source[i..end],
        });
        i = end;
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(frags: &[Fragment]) -> Vec<&str> {
        frags.iter().map(Fragment::content).collect()
    }

    #[test]
    fn trailing_line_comment_removed() {
        assert_eq!(strip_comments("int x = 1; // set x"), "int x = 1; ");
    }

    #[test]
    fn comment_markers_inside_strings_survive() {
        let src = r#"String s = "// not a comment";"#;
        assert_eq!(strip_comments(src), src);
        let src = r#"char c = '"'; /* x */ String t = "/* y */";"#;
        assert_eq!(
            strip_comments(src),
            r#"char c = '"';  String t = "/* y */";"#
        );
    }

    #[test]
    fn block_comment_keeps_line_breaks() {
        assert_eq!(strip_comments("a /* 1\n2\r\n3 */ b"), "a \n\r\n b");
        assert_eq!(strip_comments("a /* never closed\nb"), "a \n");
        assert_eq!(strip_comments("a/*x*//*y*/b"), "a b");
    }

    #[test]
    fn escaped_quote_does_not_end_string() {
        let src = r#"s = "a\"// b"; // c"#;
        assert_eq!(strip_comments(src), r#"s = "a\"// b"; "#);
    }

    #[test]
    fn lines_are_trimmed_and_blank_lines_dropped() {
        let frags = fragment_lines("  a;\n\n  // c\n b;\n");
        assert_eq!(texts(&frags), ["a;", "b;"]);
        assert!(fragment_lines("").is_empty());
        assert_eq!(texts(&fragment_lines("a\r\nb\rc")), ["a", "b", "c"]);
    }

    #[test]
    fn paper_fragment_tokenizes() {
        let toks = fragment_tokens("for (int i=0;i<n;i++)");
        assert_eq!(
            texts(&toks),
            ["for", "(", "int", "i", "=", "0", ";", "i", "<", "n", ";", "i", "++", ")"]
        );
    }

    #[test]
    fn maximal_munch() {
        assert_eq!(texts(&fragment_tokens("a >>>= b")), ["a", ">>>=", "b"]);
        assert_eq!(texts(&fragment_tokens("a>>>b")), ["a", ">>>", "b"]);
        assert_eq!(texts(&fragment_tokens("x->y::z")), ["x", "->", "y", "::", "z"]);
    }

    #[test]
    fn empty_source_has_no_tokens() {
        assert!(fragment_tokens("").is_empty());
        assert!(fragment_tokens("  /* only */ // comments\n").is_empty());
    }

    #[test]
    fn numbers() {
        assert_eq!(
            texts(&fragment_tokens("0x1F 1.5e-3f 10L .5 1. 1_000 0b101")),
            ["0x1F", "1.5e-3f", "10L", ".5", "1.", "1_000", "0b101"]
        );
        assert_eq!(texts(&fragment_tokens("a.b")), ["a", ".", "b"]);
    }

    #[test]
    fn unknown_characters_fall_back_to_single_tokens() {
        let toks = lex("a # é");
        assert_eq!(toks.len(), 3);
        assert_eq!(toks[1].kind, TokenKind::Unknown);
        assert_eq!(toks[2].text, "é");
        assert_eq!(toks[2].kind, TokenKind::Unknown);
    }

    #[test]
    fn fragment_validation() {
        assert!(Fragment::new("", Granularity::Token).is_err());
        assert!(Fragment::new("a b", Granularity::Token).is_err());
        assert!(Fragment::new(" a", Granularity::Line).is_err());
        assert!(Fragment::new("// c", Granularity::Line).is_err());
        assert!(Fragment::new("a\nb", Granularity::Line).is_err());
        assert!(Fragment::new("a b;", Granularity::Line).is_ok());
    }

    #[test]
    fn raw_line_units_align_with_normalized_lines() {
        let units = raw_units("  a; // x\n\n/* c\n d */ b;\n", Granularity::Line);
        let raws: Vec<_> = units.iter().map(|u| u.raw.as_str()).collect();
        assert_eq!(raws, ["  a; // x", "", "/* c", " d */ b;"]);
        let norm: Vec<_> = units
            .iter()
            .map(|u| u.fragment.as_ref().map(Fragment::content))
            .collect();
        assert_eq!(norm, [Some("a;"), None, None, Some("b;")]);
    }

    #[test]
    fn raw_token_units_mark_comments() {
        let units = raw_units("a /* c */ b", Granularity::Token);
        assert_eq!(units.len(), 3);
        assert!(units[1].fragment.is_none());
        assert_eq!(units[1].raw, "/* c */");
    }
}

//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

use regex::Regex;
use tempred_core::fragment::TokenKind;

/// Longest common subsequence length by the textbook O(nm) table.
pub fn lcs_length_oracle<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Clone, Copy, PartialEq)]
enum StripState {
    Code,
    Quote(char),
    Escape(char),
    LineComment,
    BlockComment,
}

/// Character-level state machine for comment removal.
pub fn reference_strip(src: &str) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::new();
    let mut state = StripState::Code;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        let brk = c == '\n' || c == '\r';
        match state {
            StripState::Code => {
                if c == '/' && matches!(next, Some('/') | Some('*')) {
                    if !out.ends_with([' ', '\t', '\n', '\r', '\x0c']) {
                        out.push(' ');
                    }
                    state = if next == Some('/') {
                        StripState::LineComment
                    } else {
                        StripState::BlockComment
                    };
                    i += 2;
                    continue;
                }
                if c == '"' || c == '\'' {
                    state = StripState::Quote(c);
                }
                out.push(c);
            }
            StripState::Quote(q) => {
                out.push(c);
                if c == '\\' {
                    state = StripState::Escape(q);
                } else if c == q || brk {
                    state = StripState::Code;
                }
            }
            StripState::Escape(q) => {
                out.push(c);
                state = if brk { StripState::Code } else { StripState::Quote(q) };
            }
            StripState::LineComment => {
                if brk {
                    out.push(c);
                    state = StripState::Code;
                }
            }
            StripState::BlockComment => {
                if brk {
                    out.push(c);
                } else if c == '*' && next == Some('/') {
                    state = StripState::Code;
                    i += 2;
                    continue;
                }
            }
        }
        i += 1;
    }
    out
}

/// Lines of the reference-stripped text, trimmed, blanks dropped.
pub fn reference_lines(src: &str) -> Vec<String> {
    reference_strip(src)
        .replace("\r\n", "\n")
        .split(['\n', '\r'])
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect()
}

type Rule = (TokenKind, Box<dyn Fn(&str) -> Option<usize> + Send + Sync>);

fn anchored(pattern: &str) -> impl Fn(&str) -> Option<usize> + Send + Sync {
    let re = Regex::new(&format!("^(?:{pattern})")).unwrap();
    move |s: &str| re.find(s).map(|m| m.end()).filter(|&n| n > 0)
}

fn rules() -> &'static [Rule] {
    static RULES: OnceLock<Vec<Rule>> = OnceLock::new();
    RULES.get_or_init(|| {
        let trailing_dot = anchored(r"[0-9][0-9_]*\.");
        let operators = [
            ">>>=", ">>>", "<<=", ">>=", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=", "+=",
            "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>",
        ]
        .map(regex::escape)
        .join("|");
        vec![
            (TokenKind::Comment, Box::new(anchored(r"//[^\r\n]*")) as Box<_>),
            (TokenKind::Comment, Box::new(anchored(r"/\*(?s:.*?)(?:\*/|\z)"))),
            (
                TokenKind::StringLiteral,
                Box::new(anchored(r#""(?:\\[^\r\n]|[^"\\\r\n]|\\)*"?"#)),
            ),
            (
                TokenKind::CharLiteral,
                Box::new(anchored(r#"'(?:\\[^\r\n]|[^'\\\r\n]|\\)*'?"#)),
            ),
            (TokenKind::Number, Box::new(anchored(r"0[xX][0-9a-fA-F_]*[lL]?"))),
            (TokenKind::Number, Box::new(anchored(r"0[bB][01_]*[lL]?"))),
            (
                TokenKind::Number,
                Box::new(anchored(
                    r"(?:[0-9][0-9_]*(?:\.[0-9][0-9_]*)?|\.[0-9][0-9_]*)(?:[eE][+-]?[0-9][0-9_]*)?[lLfFdD]?",
                )),
            ),
            (
                TokenKind::Number,
                Box::new(move |s: &str| {
                    let n = trailing_dot(s)?;
                    let next = s[n..].chars().next();
                    match next {
                        Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == '$' || c == '.' => None,
                        _ => Some(n),
                    }
                }),
            ),
            (TokenKind::Identifier, Box::new(anchored(r"[A-Za-z_$][A-Za-z0-9_$]*"))),
            (TokenKind::Operator, Box::new(anchored(&operators))),
            (
                TokenKind::Symbol,
                Box::new(anchored(r"[(){}\[\];,.@=><!~?:+\-*/&|^%]")),
            ),
        ]
    })
}

/// Longest match over all token rules, earlier rule on ties; whitespace is
/// skipped and anything else becomes a one-character unknown token.
pub fn reference_lex(src: &str) -> Vec<(TokenKind, String)> {
    let mut out = Vec::new();
    let mut rest = src;
    while let Some(c) = rest.chars().next() {
        if c.is_whitespace() {
            rest = &rest[c.len_utf8()..];
            continue;
        }
        let mut best: Option<(TokenKind, usize)> = None;
        for (kind, rule) in rules() {
            if let Some(n) = rule(rest) {
                if best.map_or(true, |(_, b)| n > b) {
                    best = Some((*kind, n));
                }
            }
        }
        let (kind, n) = best.unwrap_or((TokenKind::Unknown, c.len_utf8()));
        out.push((kind, rest[..n].to_owned()));
        rest = &rest[n..];
    }
    out
}

fn wildcard(pattern: &[char], text: &[char]) -> bool {
    match pattern.split_first() {
        None => text.is_empty(),
        Some(('*', rest)) => (0..=text.len()).any(|k| wildcard(rest, &text[k..])),
        Some(('?', rest)) => !text.is_empty() && wildcard(rest, &text[1..]),
        Some((c, rest)) => text.first() == Some(c) && wildcard(rest, &text[1..]),
    }
}

fn segments_match(pattern: &[&str], path: &[&str]) -> bool {
    match pattern.split_first() {
        None => path.is_empty(),
        Some((&"**", rest)) => (0..=path.len()).any(|k| segments_match(rest, &path[k..])),
        Some((seg, rest)) => {
            !path.is_empty()
                && wildcard(&seg.chars().collect::<Vec<_>>(), &path[0].chars().collect::<Vec<_>>())
                && segments_match(rest, &path[1..])
        }
    }
}

/// Segment-wise glob matching: `**` spans whole segments, `*` and `?` stay
/// inside one.
pub fn glob_match(pattern: &str, path: &str) -> bool {
    let pattern: Vec<&str> = pattern.split('/').collect();
    let path: Vec<&str> = path.split('/').collect();
    segments_match(&pattern, &path)
}

/// A throwaway git repository driven through the `git` binary.
pub struct GitFixture {
    dir: tempfile::TempDir,
}

impl GitFixture {
    pub fn new() -> Self {
        let fixture = GitFixture {
            dir: tempfile::tempdir().unwrap(),
        };
        fixture.git(&["init", "-q", "-b", "main"]);
        fixture.git(&["config", "user.name", "Test"]);
        fixture.git(&["config", "user.email", "test@example.com"]);
        fixture.git(&["config", "commit.gpgsign", "false"]);
        fixture
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn git(&self, args: &[&str]) -> String {
        self.git_at(args, 0)
    }

    fn git_at(&self, args: &[&str], timestamp: i64) -> String {
        let date = format!("@{} +0000", 1_600_000_000 + timestamp);
        let out = Command::new("git")
            .args(args)
            .current_dir(self.path())
            .env("GIT_AUTHOR_DATE", &date)
            .env("GIT_COMMITTER_DATE", &date)
            .env("GIT_CONFIG_NOSYSTEM", "1")
            .output()
            .expect("git runs");
        assert!(
            out.status.success(),
            "git {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    pub fn write(&self, path: &str, content: impl AsRef<[u8]>) {
        let full: PathBuf = self.path().join(path);
        std::fs::create_dir_all(full.parent().unwrap()).unwrap();
        std::fs::write(full, content).unwrap();
    }

    pub fn remove(&self, path: &str) {
        std::fs::remove_file(self.path().join(path)).unwrap();
    }

    /// Stages everything and commits at `1_600_000_000 + timestamp`.
    pub fn commit(&self, message: &str, timestamp: i64) -> String {
        self.git(&["add", "-A"]);
        self.git_at(&["commit", "-q", "--allow-empty", "-m", message], timestamp);
        self.git(&["rev-parse", "HEAD"]).trim().to_owned()
    }

    pub fn merge(&self, branch: &str, timestamp: i64) -> String {
        self.git_at(&["merge", "-q", "--no-ff", "-m", "merge", branch], timestamp);
        self.git(&["rev-parse", "HEAD"]).trim().to_owned()
    }
}

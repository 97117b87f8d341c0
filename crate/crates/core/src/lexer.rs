//! A small lexer for C, C++ and Java source text.
//!
//! The lexer is deliberately grammar-free: it only needs to know where
//! comments, literals and identifiers begin and end so that comment
//! stripping, clone generation and token-level diffs never touch the
//! inside of a string literal. Whitespace is skipped; every other byte of
//! the input belongs to exactly one token.

use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    Punct,
    LineComment,
    BlockComment,
}

impl TokenKind {
    pub fn is_comment(self) -> bool {
        matches!(self, TokenKind::LineComment | TokenKind::BlockComment)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    pub span: Range<usize>,
}

const PUNCTS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->*", "::", "->", "++", "--", "<<", ">>", "<=", ">=",
    "==", "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "##", ".*",
];

const STRING_PREFIXES: &[&str] = &["L", "u", "U", "u8"];
const RAW_PREFIXES: &[&str] = &["R", "LR", "uR", "UR", "u8R"];

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}

/// Tokenizes `src`, including comment tokens.
pub fn tokenize(src: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut pos = 0;
    while pos < src.len() {
        let c = src[pos..].chars().next().expect("in bounds");
        if c.is_whitespace() {
            pos += c.len_utf8();
            continue;
        }
        let start = pos;
        let kind = if src[pos..].starts_with("//") {
            pos = src[pos..].find('\n').map_or(src.len(), |i| pos + i);
            TokenKind::LineComment
        } else if src[pos..].starts_with("/*") {
            pos = src[pos + 2..].find("*/").map_or(src.len(), |i| pos + 2 + i + 2);
            TokenKind::BlockComment
        } else if src[pos..].starts_with("\"\"\"") {
            // Java text block
            pos = src[pos + 3..]
                .find("\"\"\"")
                .map_or(src.len(), |i| pos + 3 + i + 3);
            TokenKind::Str
        } else if c == '"' {
            pos = scan_quoted(bytes, pos, b'"');
            TokenKind::Str
        } else if c == '\'' {
            pos = scan_quoted(bytes, pos, b'\'');
            TokenKind::Char
        } else if c.is_ascii_digit()
            || (c == '.' && bytes.get(pos + 1).is_some_and(u8::is_ascii_digit))
        {
            pos = scan_number(bytes, pos);
            TokenKind::Number
        } else if is_ident_start(c) {
            let end = src[pos..]
                .char_indices()
                .find(|&(_, ch)| !is_ident_continue(ch))
                .map_or(src.len(), |(i, _)| pos + i);
            let word = &src[pos..end];
            match bytes.get(end) {
                Some(b'"') if RAW_PREFIXES.contains(&word) => {
                    pos = scan_raw_string(src, end);
                    TokenKind::Str
                }
                Some(b'"') if STRING_PREFIXES.contains(&word) => {
                    pos = scan_quoted(bytes, end, b'"');
                    TokenKind::Str
                }
                Some(b'\'') if STRING_PREFIXES.contains(&word) => {
                    pos = scan_quoted(bytes, end, b'\'');
                    TokenKind::Char
                }
                _ => {
                    pos = end;
                    TokenKind::Ident
                }
            }
        } else if let Some(p) = PUNCTS.iter().find(|p| src[pos..].starts_with(**p)) {
            pos += p.len();
            TokenKind::Punct
        } else {
            pos += c.len_utf8();
            TokenKind::Punct
        };
        out.push(Token {
            kind,
            text: &src[start..pos],
            span: start..pos,
        });
    }
    out
}

/// Tokens with comments removed.
pub fn code_tokens(src: &str) -> Vec<&str> {
    tokenize(src)
        .into_iter()
        .filter(|t| !t.kind.is_comment())
        .map(|t| t.text)
        .collect()
}

/// Token stream used for edit distances: code tokens verbatim, comments
/// split into their delimiters and whitespace-separated words.
pub fn diff_tokens(src: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for tok in tokenize(src) {
        match tok.kind {
            TokenKind::LineComment => {
                out.push(&tok.text[..2]);
                out.extend(tok.text[2..].split_whitespace());
            }
            TokenKind::BlockComment => {
                let closed = tok.text.len() >= 4 && tok.text.ends_with("*/");
                let inner = if closed {
                    &tok.text[2..tok.text.len() - 2]
                } else {
                    &tok.text[2..]
                };
                out.push(&tok.text[..2]);
                out.extend(inner.split_whitespace());
                if closed {
                    out.push("*/");
                }
            }
            _ => out.push(tok.text),
        }
    }
    out
}

// Ends at the closing quote, or before an unescaped newline when the
// literal is unterminated.
fn scan_quoted(bytes: &[u8], start: usize, quote: u8) -> usize {
    let mut i = start + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'\n' => return i,
            b if b == quote => return i + 1,
            _ => i += 1,
        }
    }
    bytes.len()
}

fn scan_raw_string(src: &str, quote: usize) -> usize {
    let rest = &src[quote + 1..];
    let Some(open) = rest.find('(') else {
        return scan_quoted(src.as_bytes(), quote, b'"');
    };
    let delim = &rest[..open];
    if delim.len() > 16 || delim.contains(|c: char| c.is_whitespace() || c == '\\') {
        return scan_quoted(src.as_bytes(), quote, b'"');
    }
    let close = format!("){delim}\"");
    rest[open..]
        .find(&close)
        .map_or(src.len(), |i| quote + 1 + open + i + close.len())
}

fn scan_number(bytes: &[u8], start: usize) -> usize {
    let mut i = start;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'.' {
            i += 1;
            if matches!(b, b'e' | b'E' | b'p' | b'P')
                && matches!(bytes.get(i), Some(b'+' | b'-'))
                && !(bytes[start] == b'0' && matches!(bytes.get(start + 1), Some(b'x' | b'X')) && matches!(b, b'e' | b'E'))
            {
                i += 1;
            }
        } else if b == b'\'' && bytes.get(i + 1).is_some_and(u8::is_ascii_alphanumeric) {
            // C++14 digit separator
            i += 1;
        } else {
            break;
        }
    }
    i
}

use alloc::string::String;
use alloc::vec::Vec;

use super::{ParseError, Span};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokenKind {
    /// Bare word: keyword or unquoted identifier. Holds the raw text.
    Word(String),
    /// `"x"`, `` `x` `` or `[x]`, quotes removed.
    QuotedIdent(String),
    /// `'...'` with `''` unescaped.
    Str(String),
    Number(String),
    Symbol(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

impl Token {
    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.kind, TokenKind::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    pub fn is_symbol(&self, sym: &str) -> bool {
        matches!(&self.kind, TokenKind::Symbol(s) if *s == sym)
    }
}

const SYMBOLS: &[&str] = &[
    "<>", "<=", ">=", "!=", "==", "||", "(", ")", ",", ".", "*", "+", "-", "/", "%", "=", "<", ">",
    ";",
];

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        // comments
        if c == b'-' && bytes.get(i + 1) == Some(&b'-') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let start = i;
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(ParseError::syntax(start, "unterminated block comment"));
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
            continue;
        }
        let start = i;
        match c {
            b'\'' => {
                let (value, end) = read_quoted(text, i, b'\'', b'\'')?;
                tokens.push(Token { kind: TokenKind::Str(value), span: Span::new(start, end) });
                i = end;
            }
            b'"' | b'`' => {
                let (value, end) = read_quoted(text, i, c, c)?;
                tokens.push(Token { kind: TokenKind::QuotedIdent(value), span: Span::new(start, end) });
                i = end;
            }
            b'[' => {
                let close = text[i + 1..]
                    .find(']')
                    .ok_or_else(|| ParseError::syntax(start, "unterminated [identifier]"))?;
                let end = i + 1 + close + 1;
                let value = String::from(&text[i + 1..end - 1]);
                tokens.push(Token { kind: TokenKind::QuotedIdent(value), span: Span::new(start, end) });
                i = end;
            }
            b'0'..=b'9' => {
                let end = read_number(bytes, i);
                tokens.push(Token {
                    kind: TokenKind::Number(String::from(&text[i..end])),
                    span: Span::new(start, end),
                });
                i = end;
            }
            b'.' if bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                let end = read_number(bytes, i);
                tokens.push(Token {
                    kind: TokenKind::Number(String::from(&text[i..end])),
                    span: Span::new(start, end),
                });
                i = end;
            }
            c if c == b'_' || c.is_ascii_alphabetic() || c >= 0x80 => {
                let mut end = i;
                while end < bytes.len() {
                    let b = bytes[end];
                    if b == b'_' || b == b'$' || b.is_ascii_alphanumeric() || b >= 0x80 {
                        end += 1;
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Word(String::from(&text[i..end])),
                    span: Span::new(start, end),
                });
                i = end;
            }
            _ => {
                let rest = &text[i..];
                let sym = SYMBOLS
                    .iter()
                    .find(|s| rest.starts_with(**s))
                    .ok_or_else(|| ParseError::syntax(start, "unexpected character"))?;
                tokens.push(Token { kind: TokenKind::Symbol(sym), span: Span::new(start, start + sym.len()) });
                i += sym.len();
            }
        }
    }
    Ok(tokens)
}

/// Reads a quoted run starting at `start` (which holds `open`). A doubled
/// `close` inside the run is an escaped quote.
fn read_quoted(text: &str, start: usize, open: u8, close: u8) -> Result<(String, usize), ParseError> {
    debug_assert_eq!(text.as_bytes()[start], open);
    let bytes = text.as_bytes();
    let mut value = String::new();
    let mut i = start + 1;
    let mut run_start = i;
    while i < bytes.len() {
        if bytes[i] == close {
            if bytes.get(i + 1) == Some(&close) {
                value.push_str(&text[run_start..=i]);
                i += 2;
                run_start = i;
                continue;
            }
            value.push_str(&text[run_start..i]);
            return Ok((value, i + 1));
        }
        i += 1;
    }
    Err(ParseError::syntax(start, "unterminated quoted token"))
}

fn read_number(bytes: &[u8], start: usize) -> usize {
    let mut i = start;
    if bytes[i] == b'0' && matches!(bytes.get(i + 1), Some(b'x' | b'X')) {
        i += 2;
        while i < bytes.len() && bytes[i].is_ascii_hexdigit() {
            i += 1;
        }
        return i;
    }
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < bytes.len() && matches!(bytes[i], b'e' | b'E') {
        let mut j = i + 1;
        if j < bytes.len() && matches!(bytes[j], b'+' | b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}

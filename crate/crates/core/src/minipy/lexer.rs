//! Tokenizer for the imperative surface syntax.
//!
//! The lexer is deliberately more permissive than the parser: it understands
//! strings, floats, comments and the full operator set so that mutation-site
//! discovery works on arbitrary host-language code shipped by external
//! corpora, not only on programs the interpreter can run.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Name(String),
    /// Integer literal; `value` is `None` when it does not fit in `i64` or is
    /// written in a non-decimal base.
    Int { value: Option<i64>, decimal: bool },
    Float,
    Str,
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte offsets into the source, `start..end`.
    pub start: usize,
    pub end: usize,
    /// 1-based physical line of the first character.
    pub line: u32,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }

    pub fn is_op(&self, op: &str) -> bool {
        matches!(self.kind, TokenKind::Op(o) if o == op)
    }

    pub fn is_name(&self, name: &str) -> bool {
        matches!(&self.kind, TokenKind::Name(n) if n == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: u32,
    pub message: String,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for LexError {}

// Longest first so that maximal munch works with a linear scan.
const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "<", ">", "=",
    "(", ")", "[", "]", "{", "}", ",", ":", ".", ";", "@", "&", "|", "^", "~", "!",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    Lexer::new(src).run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    indents: Vec<usize>,
    depth: usize,
    tokens: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            line: 1,
            indents: vec![0],
            depth: 0,
            tokens: Vec::new(),
        }
    }

    fn err(&self, message: impl Into<String>) -> LexError {
        LexError {
            line: self.line,
            message: message.into(),
        }
    }

    fn push(&mut self, kind: TokenKind, start: usize, line: u32) {
        self.tokens.push(Token {
            kind,
            start,
            end: self.pos,
            line,
        });
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        let mut at_line_start = true;
        while self.pos < self.bytes.len() {
            if at_line_start && self.depth == 0 {
                at_line_start = false;
                if self.handle_indentation()? {
                    at_line_start = true;
                    continue;
                }
            }
            let c = self.bytes[self.pos];
            match c {
                b'\n' => {
                    let start = self.pos;
                    self.pos += 1;
                    if self.depth == 0 {
                        self.push(TokenKind::Newline, start, self.line);
                        at_line_start = true;
                    }
                    self.line += 1;
                }
                b' ' | b'\t' | b'\r' | b'\x0c' => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b'\\' if self.bytes.get(self.pos + 1) == Some(&b'\n') => {
                    self.pos += 2;
                    self.line += 1;
                }
                b'0'..=b'9' => self.number()?,
                b'.' if matches!(self.bytes.get(self.pos + 1), Some(b'0'..=b'9')) => {
                    self.number()?
                }
                b'"' | b'\'' => self.string(self.pos)?,
                _ if c == b'_' || c.is_ascii_alphabetic() || c >= 0x80 => {
                    let start = self.pos;
                    while self.pos < self.bytes.len() {
                        let b = self.bytes[self.pos];
                        if b == b'_' || b.is_ascii_alphanumeric() || b >= 0x80 {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                    let word = &self.src[start..self.pos];
                    let is_prefix = word.len() <= 2
                        && word
                            .chars()
                            .all(|ch| matches!(ch.to_ascii_lowercase(), 'r' | 'b' | 'f' | 'u'));
                    if is_prefix && matches!(self.bytes.get(self.pos), Some(b'"' | b'\'')) {
                        self.string(start)?;
                    } else {
                        self.push(TokenKind::Name(word.to_string()), start, self.line);
                    }
                }
                _ => self.operator()?,
            }
        }
        let end = self.pos;
        if !matches!(
            self.tokens.last().map(|t| &t.kind),
            None | Some(TokenKind::Newline)
        ) {
            self.tokens.push(Token {
                kind: TokenKind::Newline,
                start: end,
                end,
                line: self.line,
            });
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.tokens.push(Token {
                kind: TokenKind::Dedent,
                start: end,
                end,
                line: self.line,
            });
        }
        self.tokens.push(Token {
            kind: TokenKind::Eof,
            start: end,
            end,
            line: self.line,
        });
        Ok(self.tokens)
    }

    /// Measures leading whitespace of a logical line. Returns true when the
    /// line was blank or comment-only and has been consumed.
    fn handle_indentation(&mut self) -> Result<bool, LexError> {
        let mut width = 0;
        let mut p = self.pos;
        while p < self.bytes.len() {
            match self.bytes[p] {
                b' ' => width += 1,
                b'\t' => width = (width / 8 + 1) * 8,
                b'\r' | b'\x0c' => {}
                _ => break,
            }
            p += 1;
        }
        if p >= self.bytes.len() || self.bytes[p] == b'\n' || self.bytes[p] == b'#' {
            // blank line: skip through newline without emitting tokens
            while p < self.bytes.len() && self.bytes[p] != b'\n' {
                p += 1;
            }
            if p < self.bytes.len() {
                p += 1;
                self.line += 1;
            }
            self.pos = p;
            return Ok(true);
        }
        self.pos = p;
        let current = *self.indents.last().unwrap();
        if width > current {
            self.indents.push(width);
            self.push(TokenKind::Indent, p, self.line);
        } else if width < current {
            while width < *self.indents.last().unwrap() {
                self.indents.pop();
                self.push(TokenKind::Dedent, p, self.line);
            }
            if width != *self.indents.last().unwrap() {
                return Err(self.err("unindent does not match any outer indentation level"));
            }
        }
        Ok(false)
    }

    fn number(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let b = self.bytes;
        if b[self.pos] == b'0' && matches!(b.get(self.pos + 1), Some(b'x' | b'X' | b'o' | b'O' | b'b' | b'B')) {
            self.pos += 2;
            while self.pos < b.len() && (b[self.pos].is_ascii_alphanumeric() || b[self.pos] == b'_') {
                self.pos += 1;
            }
            self.push(
                TokenKind::Int {
                    value: None,
                    decimal: false,
                },
                start,
                self.line,
            );
            return Ok(());
        }
        let mut is_float = false;
        while self.pos < b.len() && (b[self.pos].is_ascii_digit() || b[self.pos] == b'_') {
            self.pos += 1;
        }
        if self.pos < b.len() && b[self.pos] == b'.' {
            is_float = true;
            self.pos += 1;
            while self.pos < b.len() && (b[self.pos].is_ascii_digit() || b[self.pos] == b'_') {
                self.pos += 1;
            }
        }
        if self.pos < b.len() && matches!(b[self.pos], b'e' | b'E') {
            let mut q = self.pos + 1;
            if q < b.len() && matches!(b[q], b'+' | b'-') {
                q += 1;
            }
            if q < b.len() && b[q].is_ascii_digit() {
                is_float = true;
                self.pos = q;
                while self.pos < b.len() && b[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        if self.pos < b.len() && matches!(b[self.pos], b'j' | b'J') {
            self.pos += 1;
            is_float = true;
        }
        if is_float {
            self.push(TokenKind::Float, start, self.line);
        } else {
            let digits: String = self.src[start..self.pos].chars().filter(|c| *c != '_').collect();
            let value = digits.parse::<i64>().ok();
            self.push(
                TokenKind::Int {
                    value,
                    decimal: true,
                },
                start,
                self.line,
            );
        }
        Ok(())
    }

    fn string(&mut self, start: usize) -> Result<(), LexError> {
        let line = self.line;
        let quote = self.bytes[self.pos];
        let triple = self.bytes.get(self.pos + 1) == Some(&quote)
            && self.bytes.get(self.pos + 2) == Some(&quote);
        self.pos += if triple { 3 } else { 1 };
        loop {
            if self.pos >= self.bytes.len() {
                return Err(LexError {
                    line,
                    message: "unterminated string literal".into(),
                });
            }
            let c = self.bytes[self.pos];
            if c == b'\\' {
                if self.bytes.get(self.pos + 1) == Some(&b'\n') {
                    self.line += 1;
                }
                self.pos += 2;
                continue;
            }
            if c == b'\n' {
                if !triple {
                    return Err(LexError {
                        line,
                        message: "unterminated string literal".into(),
                    });
                }
                self.line += 1;
            }
            if c == quote {
                if !triple {
                    self.pos += 1;
                    break;
                }
                if self.bytes.get(self.pos + 1) == Some(&quote)
                    && self.bytes.get(self.pos + 2) == Some(&quote)
                {
                    self.pos += 3;
                    break;
                }
            }
            self.pos += 1;
        }
        self.push(TokenKind::Str, start, line);
        Ok(())
    }

    fn operator(&mut self) -> Result<(), LexError> {
        let rest = &self.src[self.pos..];
        let op = OPERATORS
            .iter()
            .find(|op| rest.starts_with(**op))
            .ok_or_else(|| self.err(format!("unexpected character {:?}", rest.chars().next().unwrap())))?;
        let start = self.pos;
        self.pos += op.len();
        match *op {
            "(" | "[" | "{" => self.depth += 1,
            ")" | "]" | "}" => self.depth = self.depth.saturating_sub(1),
            _ => {}
        }
        self.push(TokenKind::Op(op), start, self.line);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn indentation_produces_indent_dedent() {
        let k = kinds("def f(a1):\n    return a1\n");
        assert!(k.contains(&TokenKind::Indent));
        assert!(k.contains(&TokenKind::Dedent));
        assert_eq!(k.last(), Some(&TokenKind::Eof));
    }

    #[test]
    fn maximal_munch_on_operators() {
        let toks = tokenize("a //= b // c <= d").unwrap();
        let ops: Vec<_> = toks
            .iter()
            .filter_map(|t| match t.kind {
                TokenKind::Op(o) => Some(o),
                _ => None,
            })
            .collect();
        assert_eq!(ops, vec!["//=", "//", "<="]);
    }

    #[test]
    fn strings_and_floats_are_opaque() {
        let src = "x = 'a + b' + \"c\" * 1.5 + 2\n";
        let toks = tokenize(src).unwrap();
        assert_eq!(toks.iter().filter(|t| t.kind == TokenKind::Str).count(), 2);
        assert_eq!(toks.iter().filter(|t| t.kind == TokenKind::Float).count(), 1);
        assert!(toks.iter().any(|t| t.kind
            == TokenKind::Int {
                value: Some(2),
                decimal: true
            }));
    }

    #[test]
    fn brackets_suppress_newlines() {
        let k = kinds("x = [1,\n  2]\ny = 3\n");
        assert_eq!(k.iter().filter(|t| **t == TokenKind::Newline).count(), 2);
    }

    #[test]
    fn lines_are_tracked() {
        let toks = tokenize("a\n\n# c\nb\n").unwrap();
        let b = toks.iter().find(|t| t.is_name("b")).unwrap();
        assert_eq!(b.line, 4);
    }

    #[test]
    fn bad_dedent_is_error() {
        assert!(tokenize("if x:\n    a\n  b\n").is_err());
    }

    #[test]
    fn comment_and_blank_lines_keep_indentation() {
        let src = "def f(a):\n    for i in a:\n        x = 1\n    # note\n\n    return x\n";
        let kinds: Vec<TokenKind> = tokenize(src).unwrap().into_iter().map(|t| t.kind).collect();
        let dedent = kinds.iter().position(|k| *k == TokenKind::Dedent).unwrap();
        assert_eq!(kinds[dedent + 1], TokenKind::Name("return".into()));
    }
}

//! Owned literal values and their canonical text representation.
//!
//! Every output that leaves the interpreter or the external executor is
//! serialized with [`Literal::repr`], which follows the host language's
//! `repr` for the value universe we care about: `[1, 2]`, `(1,)`, `True`,
//! `None`, `'text'`, `{1: 2}`.

use super::lexer::{tokenize, Token, TokenKind};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Literal {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Literal>),
    Tuple(Vec<Literal>),
    Dict(Vec<(Literal, Literal)>),
}

impl Literal {
    pub fn repr(&self) -> String {
        let mut s = String::new();
        self.write_repr(&mut s);
        s
    }

    fn write_repr(&self, out: &mut String) {
        match self {
            Literal::None => out.push_str("None"),
            Literal::Bool(true) => out.push_str("True"),
            Literal::Bool(false) => out.push_str("False"),
            Literal::Int(i) => out.push_str(&i.to_string()),
            Literal::Float(f) => out.push_str(&float_repr(*f)),
            Literal::Str(s) => out.push_str(&str_repr(s)),
            Literal::List(items) => {
                out.push('[');
                write_items(items, out);
                out.push(']');
            }
            Literal::Tuple(items) => {
                out.push('(');
                write_items(items, out);
                if items.len() == 1 {
                    out.push(',');
                }
                out.push(')');
            }
            Literal::Dict(entries) => {
                out.push('{');
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    k.write_repr(out);
                    out.push_str(": ");
                    v.write_repr(out);
                }
                out.push('}');
            }
        }
    }

    pub fn is_bool(&self) -> bool {
        matches!(self, Literal::Bool(_))
    }

    pub fn contains_float(&self) -> bool {
        match self {
            Literal::Float(_) => true,
            Literal::List(xs) | Literal::Tuple(xs) => xs.iter().any(Literal::contains_float),
            Literal::Dict(es) => es.iter().any(|(k, v)| k.contains_float() || v.contains_float()),
            _ => false,
        }
    }

    /// Host-language `==`: booleans compare as integers and lists equal
    /// tuples element-wise. Used when strict typing is switched off.
    pub fn loose_eq(&self, other: &Literal) -> bool {
        use Literal::*;
        match (self, other) {
            (Bool(a), Int(b)) | (Int(b), Bool(a)) => *a as i64 == *b,
            (Int(a), Float(b)) | (Float(b), Int(a)) => *a as f64 == *b,
            (Bool(a), Float(b)) | (Float(b), Bool(a)) => (*a as i64) as f64 == *b,
            (List(a) | Tuple(a), List(b) | Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.loose_eq(y))
            }
            (Dict(a), Dict(b)) => {
                a.len() == b.len()
                    && a.iter().all(|(k, v)| {
                        b.iter().any(|(k2, v2)| k.loose_eq(k2) && v.loose_eq(v2))
                    })
            }
            _ => self == other,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.repr())
    }
}

fn write_items(items: &[Literal], out: &mut String) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        item.write_repr(out);
    }
}

pub fn float_repr(f: f64) -> String {
    if f.is_nan() {
        return "nan".into();
    }
    if f.is_infinite() {
        return if f > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if f == 0.0 {
        return if f.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    // shortest round-trip digits from the std formatter, re-laid out the
    // way the host language does it
    let sci = format!("{:e}", f.abs());
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let sign = if f < 0.0 { "-" } else { "" };
    if (-4..16).contains(&exp) {
        let point = exp + 1;
        let body = if point <= 0 {
            format!("0.{}{}", "0".repeat((-point) as usize), digits)
        } else if point as usize >= digits.len() {
            format!("{}{}.0", digits, "0".repeat(point as usize - digits.len()))
        } else {
            format!("{}.{}", &digits[..point as usize], &digits[point as usize..])
        };
        format!("{sign}{body}")
    } else {
        let m = if digits.len() == 1 {
            digits.clone()
        } else {
            format!("{}.{}", &digits[..1], &digits[1..])
        };
        let esign = if exp < 0 { '-' } else { '+' };
        format!("{sign}{m}e{esign}{:02}", exp.abs())
    }
}

pub fn str_repr(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                out.push_str(&format!("\\x{:02x}", c as u32));
            }
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiteralError(pub String);

impl fmt::Display for LiteralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid literal: {}", self.0)
    }
}

impl std::error::Error for LiteralError {}

/// Parses a single literal; the whole text must be consumed.
pub fn parse_literal(text: &str) -> Result<Literal, LiteralError> {
    let mut p = LitParser::new(text)?;
    let v = p.literal()?;
    p.finish()?;
    Ok(v)
}

/// Parses a comma-separated argument list such as `[1, 2], [3]`.
/// Keyword arguments (`s = "hi"`) are accepted and treated positionally.
pub fn parse_args(text: &str) -> Result<Vec<Literal>, LiteralError> {
    let mut p = LitParser::new(text)?;
    let mut out = Vec::new();
    if p.at_end() {
        return Ok(out);
    }
    loop {
        if matches!(&p.peek().kind, TokenKind::Name(_)) && p.peek_at(1).is_op("=") {
            p.pos += 2;
        }
        out.push(p.literal()?);
        if !p.eat(",") || p.at_end() {
            break;
        }
    }
    p.finish()?;
    Ok(out)
}

/// Renders an argument tuple the way it appears inside a call.
pub fn args_repr(args: &[Literal]) -> String {
    args.iter().map(Literal::repr).collect::<Vec<_>>().join(", ")
}

struct LitParser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
}

impl<'a> LitParser<'a> {
    fn new(src: &'a str) -> Result<Self, LiteralError> {
        // the lexer is line oriented; literals may legitimately span lines
        // only inside brackets, which the lexer already joins
        let toks = tokenize(src.trim())
            .map_err(|e| LiteralError(e.message))?
            .into_iter()
            .filter(|t| !matches!(t.kind, TokenKind::Newline | TokenKind::Indent | TokenKind::Dedent))
            .collect();
        Ok(LitParser {
            src: src.trim(),
            toks,
            pos: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Token {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)]
    }

    fn at_end(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Eof)
    }

    fn eat(&mut self, op: &str) -> bool {
        if self.peek().is_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn finish(&self) -> Result<(), LiteralError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(LiteralError(format!(
                "unexpected trailing input {:?}",
                &self.src[self.peek().start..]
            )))
        }
    }

    fn literal(&mut self) -> Result<Literal, LiteralError> {
        let tok = self.peek().clone();
        match &tok.kind {
            TokenKind::Op("-") | TokenKind::Op("+") => {
                let neg = tok.is_op("-");
                self.pos += 1;
                match self.literal()? {
                    Literal::Int(i) => Ok(Literal::Int(if neg {
                        i.checked_neg().ok_or_else(|| LiteralError("integer overflow".into()))?
                    } else {
                        i
                    })),
                    Literal::Float(f) => Ok(Literal::Float(if neg { -f } else { f })),
                    _ => Err(LiteralError("unary sign applied to non-number".into())),
                }
            }
            TokenKind::Int { value, decimal } => {
                self.pos += 1;
                let text = tok.text(self.src).replace('_', "");
                let v = if *decimal {
                    *value
                } else {
                    let (radix, digits) = match &text[..2] {
                        "0x" | "0X" => (16, &text[2..]),
                        "0o" | "0O" => (8, &text[2..]),
                        _ => (2, &text[2..]),
                    };
                    i64::from_str_radix(digits, radix).ok()
                };
                v.map(Literal::Int)
                    .ok_or_else(|| LiteralError(format!("integer {text} out of range")))
            }
            TokenKind::Float => {
                self.pos += 1;
                let text = tok.text(self.src).replace('_', "");
                text.parse::<f64>()
                    .map(Literal::Float)
                    .map_err(|_| LiteralError(format!("bad float {text}")))
            }
            TokenKind::Str => {
                let mut s = String::new();
                // implicit concatenation of adjacent string literals
                while let TokenKind::Str = self.peek().kind {
                    let t = self.peek().clone();
                    s.push_str(&decode_string(t.text(self.src))?);
                    self.pos += 1;
                }
                Ok(Literal::Str(s))
            }
            TokenKind::Name(n) => {
                self.pos += 1;
                match n.as_str() {
                    "True" => Ok(Literal::Bool(true)),
                    "False" => Ok(Literal::Bool(false)),
                    "None" => Ok(Literal::None),
                    "inf" | "nan" => Err(LiteralError(format!("{n} is not a literal"))),
                    _ => Err(LiteralError(format!("name {n} is not a literal"))),
                }
            }
            TokenKind::Op("[") => {
                self.pos += 1;
                let items = self.sequence("]")?;
                Ok(Literal::List(items.0))
            }
            TokenKind::Op("(") => {
                self.pos += 1;
                let (items, trailing_comma) = self.sequence(")")?;
                if items.len() == 1 && !trailing_comma {
                    Ok(items.into_iter().next().unwrap())
                } else {
                    Ok(Literal::Tuple(items))
                }
            }
            TokenKind::Op("{") => {
                self.pos += 1;
                let mut entries = Vec::new();
                while !self.peek().is_op("}") {
                    let k = self.literal()?;
                    if !self.eat(":") {
                        return Err(LiteralError("set literals are not supported".into()));
                    }
                    let v = self.literal()?;
                    entries.push((k, v));
                    if !self.eat(",") {
                        break;
                    }
                }
                if !self.eat("}") {
                    return Err(LiteralError("expected '}'".into()));
                }
                Ok(Literal::Dict(entries))
            }
            _ => Err(LiteralError(format!(
                "unexpected {:?}",
                &self.src[tok.start..tok.end.max(tok.start)]
            ))),
        }
    }

    fn sequence(&mut self, close: &str) -> Result<(Vec<Literal>, bool), LiteralError> {
        let mut items = Vec::new();
        let mut trailing = false;
        while !self.peek().is_op(close) {
            items.push(self.literal()?);
            trailing = self.eat(",");
            if !trailing {
                break;
            }
        }
        if !self.eat(close) {
            return Err(LiteralError(format!("expected '{close}'")));
        }
        Ok((items, trailing))
    }
}

fn decode_string(tok: &str) -> Result<String, LiteralError> {
    let prefix_len = tok.find(['\'', '"']).unwrap_or(0);
    let prefix = tok[..prefix_len].to_ascii_lowercase();
    if prefix.contains('b') {
        return Err(LiteralError("bytes literals are not supported".into()));
    }
    if prefix.contains('f') {
        return Err(LiteralError("f-strings are not literals".into()));
    }
    let raw = prefix.contains('r');
    let body = &tok[prefix_len..];
    let q = &body[..1];
    let triple = body.len() >= 6 && body.starts_with(&q.repeat(3));
    let inner = if triple {
        &body[3..body.len() - 3]
    } else {
        &body[1..body.len() - 1]
    };
    if raw {
        return Ok(inner.to_string());
    }
    let mut out = String::new();
    let mut chars = inner.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('0') => out.push('\0'),
            Some('\\') => out.push('\\'),
            Some('\'') => out.push('\''),
            Some('"') => out.push('"'),
            Some('\n') => {}
            Some('x') => {
                let hex: String = chars.by_ref().take(2).collect();
                let v = u32::from_str_radix(&hex, 16).map_err(|_| LiteralError("bad \\x escape".into()))?;
                out.push(char::from_u32(v).unwrap());
            }
            Some('u') => {
                let hex: String = chars.by_ref().take(4).collect();
                let v = u32::from_str_radix(&hex, 16).map_err(|_| LiteralError("bad \\u escape".into()))?;
                out.push(char::from_u32(v).ok_or_else(|| LiteralError("bad code point".into()))?);
            }
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reprs() {
        use Literal::*;
        assert_eq!(List(vec![Int(1), Int(-2)]).repr(), "[1, -2]");
        assert_eq!(Tuple(vec![Int(1)]).repr(), "(1,)");
        assert_eq!(Tuple(vec![]).repr(), "()");
        assert_eq!(Bool(true).repr(), "True");
        assert_eq!(Str("it's".into()).repr(), "\"it's\"");
        assert_eq!(Str("a\nb".into()).repr(), "'a\\nb'");
        assert_eq!(Dict(vec![(Str("a".into()), List(vec![]))]).repr(), "{'a': []}");
    }

    #[test]
    fn float_reprs_follow_host_rules() {
        assert_eq!(float_repr(1.0), "1.0");
        assert_eq!(float_repr(0.5), "0.5");
        assert_eq!(float_repr(-2.25), "-2.25");
        assert_eq!(float_repr(1e16), "1e+16");
        assert_eq!(float_repr(1.5e-7), "1.5e-07");
        assert_eq!(float_repr(0.0001), "0.0001");
        assert_eq!(float_repr(123456789.0), "123456789.0");
        assert_eq!(float_repr(0.1 + 0.2), "0.30000000000000004");
    }

    #[test]
    fn parse_round_trips_nested() {
        for text in ["[[1, 2], [], [-3]]", "(1, 'a', None)", "{1: True, 2: False}", "'x'", "-7", "(1,)"] {
            assert_eq!(parse_literal(text).unwrap().repr(), text);
        }
    }

    #[test]
    fn args_split_on_top_level_commas() {
        let args = parse_args("[1, 2], [3]").unwrap();
        assert_eq!(args.len(), 2);
        assert_eq!(args_repr(&args), "[1, 2], [3]");
        assert_eq!(parse_args("s = \"hi\"").unwrap(), vec![Literal::Str("hi".into())]);
        assert_eq!(parse_args("").unwrap(), vec![]);
    }

    #[test]
    fn non_literals_are_rejected() {
        for bad in ["[1] + [2]", "f(1)", "x", "[1, 2", "1 2"] {
            assert!(parse_literal(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn strictness() {
        let one = Literal::Int(1);
        let t = Literal::Bool(true);
        assert_ne!(one, t);
        assert!(one.loose_eq(&t));
        assert!(Literal::List(vec![one.clone()]).loose_eq(&Literal::Tuple(vec![one])));
    }
}

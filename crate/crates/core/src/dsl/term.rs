use super::types::Type;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Prim {
    If,
    Map,
    Empty,
    Append,
    Extend,
    Init,
    Tail,
    Length,
    Index,
    Eq,
    Lt,
    Gt,
    And,
    Or,
    Not,
}

impl Prim {
    pub const ALL: [Prim; 15] = [
        Prim::If,
        Prim::Map,
        Prim::Empty,
        Prim::Append,
        Prim::Extend,
        Prim::Init,
        Prim::Tail,
        Prim::Length,
        Prim::Index,
        Prim::Eq,
        Prim::Lt,
        Prim::Gt,
        Prim::And,
        Prim::Or,
        Prim::Not,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Prim::If => "if",
            Prim::Map => "map",
            Prim::Empty => "empty",
            Prim::Append => "append",
            Prim::Extend => "extend",
            Prim::Init => "init",
            Prim::Tail => "tail",
            Prim::Length => "length",
            Prim::Index => "index",
            Prim::Eq => "==",
            Prim::Lt => "<",
            Prim::Gt => ">",
            Prim::And => "&&",
            Prim::Or => "||",
            Prim::Not => "!",
        }
    }

    pub fn from_name(s: &str) -> Option<Prim> {
        let alias = match s {
            "and" => "&&",
            "or" => "||",
            "not" => "!",
            other => other,
        };
        Prim::ALL.into_iter().find(|p| p.name() == alias)
    }

    pub fn signature(self) -> Type {
        let (t0, t1) = (Type::Var(0), Type::Var(1));
        let l = Type::list;
        match self {
            Prim::If => Type::arrows([Type::Bool, t0.clone(), t0.clone()], t0),
            Prim::Map => Type::arrows([Type::arrow(t0.clone(), t1.clone()), l(t0)], l(t1)),
            Prim::Empty => l(t0),
            Prim::Append => Type::arrows([t0.clone(), l(t0.clone())], l(t0)),
            Prim::Extend => Type::arrows([l(t0.clone()), l(t0.clone())], l(t0)),
            Prim::Init | Prim::Tail => Type::arrow(l(t0.clone()), l(t0)),
            Prim::Length => Type::arrow(l(t0), Type::Int),
            Prim::Index => Type::arrows([Type::Int, l(t0.clone())], t0),
            Prim::Eq | Prim::Lt | Prim::Gt => Type::arrows([Type::Int, Type::Int], Type::Bool),
            Prim::And | Prim::Or => Type::arrows([Type::Bool, Type::Bool], Type::Bool),
            Prim::Not => Type::arrow(Type::Bool, Type::Bool),
        }
    }

    pub fn arity(self) -> usize {
        self.signature().args_and_ret().0.len()
    }

    /// Primitives lowered to statements rather than expressions.
    pub fn is_statement(self) -> bool {
        matches!(
            self,
            Prim::If | Prim::Map | Prim::Append | Prim::Extend | Prim::Init | Prim::Tail
        )
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, Prim::Eq | Prim::Lt | Prim::Gt)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, Prim::And | Prim::Or)
    }

    /// Primitives allowed as the (partially applied) function argument of map.
    pub fn mappable(self) -> bool {
        matches!(
            self,
            Prim::Length | Prim::Index | Prim::Init | Prim::Tail | Prim::Append | Prim::Extend | Prim::If
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    Prim(Prim),
    Lit(i64),
    /// 1-based parameter index (`a1`, `a2`).
    Param(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub node: Node,
    pub children: Vec<Term>,
}

impl Term {
    pub fn lit(v: i64) -> Term {
        Term { node: Node::Lit(v), children: vec![] }
    }

    pub fn param(k: usize) -> Term {
        Term { node: Node::Param(k), children: vec![] }
    }

    pub fn app(p: Prim, children: Vec<Term>) -> Term {
        Term { node: Node::Prim(p), children }
    }

    pub fn empty() -> Term {
        Term::app(Prim::Empty, vec![])
    }

    pub fn prim(&self) -> Option<Prim> {
        match self.node {
            Node::Prim(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_prim(&self, p: Prim) -> bool {
        self.node == Node::Prim(p)
    }

    pub fn is_empty_list(&self) -> bool {
        self.is_prim(Prim::Empty)
    }

    /// A primitive applied to fewer arguments than its arity.
    pub fn is_partial(&self) -> bool {
        match self.node {
            Node::Prim(p) => self.children.len() < p.arity(),
            _ => false,
        }
    }

    /// Nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Term::depth).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Term::size).sum::<usize>()
    }

    pub fn uses_param(&self, k: usize) -> bool {
        self.node == Node::Param(k) || self.children.iter().any(|c| c.uses_param(k))
    }

    pub fn max_param(&self) -> usize {
        let own = match self.node {
            Node::Param(k) => k,
            _ => 0,
        };
        self.children.iter().map(Term::max_param).fold(own, usize::max)
    }

    /// Postorder (children left to right, then the node).
    pub fn postorder(&self) -> Vec<&Term> {
        fn go<'a>(t: &'a Term, out: &mut Vec<&'a Term>) {
            for c in &t.children {
                go(c, out);
            }
            out.push(t);
        }
        let mut out = Vec::with_capacity(self.size());
        go(self, &mut out);
        out
    }
}

/// Postorder flattening with child indices, shared by the evaluator and the
/// translator.
pub struct Flat<'a> {
    pub nodes: Vec<&'a Term>,
    pub children: Vec<Vec<usize>>,
}

impl<'a> Flat<'a> {
    pub fn new(root: &'a Term) -> Flat<'a> {
        fn go<'a>(t: &'a Term, nodes: &mut Vec<&'a Term>, children: &mut Vec<Vec<usize>>) -> usize {
            let kids = t.children.iter().map(|c| go(c, nodes, children)).collect();
            nodes.push(t);
            children.push(kids);
            nodes.len() - 1
        }
        let mut nodes = Vec::new();
        let mut children = Vec::new();
        go(root, &mut nodes, &mut children);
        Flat { nodes, children }
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Node::Lit(v) => write!(f, "{v}"),
            Node::Param(k) => write!(f, "a{k}"),
            Node::Prim(p) if p.arity() == 0 => f.write_str(p.name()),
            Node::Prim(p) => {
                write!(f, "({}", p.name())?;
                for c in &self.children {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("s-expression error at byte {pos}: {message}")]
pub struct ParseTermError {
    pub pos: usize,
    pub message: String,
}

impl FromStr for Term {
    type Err = ParseTermError;

    fn from_str(s: &str) -> Result<Term, ParseTermError> {
        let toks = sexp_tokens(s);
        let mut pos = 0;
        let t = parse_sexp(&toks, &mut pos)?;
        if pos != toks.len() {
            return Err(ParseTermError {
                pos: toks[pos].0,
                message: "trailing input".into(),
            });
        }
        Ok(t)
    }
}

fn sexp_tokens(s: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if let Some(st) = start.take() {
                out.push((st, &s[st..i]));
            }
            if !c.is_whitespace() {
                out.push((i, &s[i..i + 1]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(st) = start {
        out.push((st, &s[st..]));
    }
    out
}

fn parse_sexp(toks: &[(usize, &str)], pos: &mut usize) -> Result<Term, ParseTermError> {
    let err = |p: usize, m: &str| ParseTermError { pos: p, message: m.to_string() };
    let Some(&(at, tok)) = toks.get(*pos) else {
        return Err(err(toks.last().map_or(0, |t| t.0 + t.1.len()), "unexpected end of input"));
    };
    *pos += 1;
    if tok == "(" {
        let &(hat, head) = toks.get(*pos).ok_or_else(|| err(at, "unclosed parenthesis"))?;
        *pos += 1;
        let p = Prim::from_name(head).ok_or_else(|| err(hat, &format!("unknown primitive {head}")))?;
        let mut children = Vec::new();
        loop {
            match toks.get(*pos) {
                Some(&(_, ")")) => {
                    *pos += 1;
                    break;
                }
                Some(_) => children.push(parse_sexp(toks, pos)?),
                None => return Err(err(at, "unclosed parenthesis")),
            }
        }
        if children.len() > p.arity() {
            return Err(err(at, &format!("{} takes {} arguments", p.name(), p.arity())));
        }
        Ok(Term::app(p, children))
    } else if tok == ")" {
        Err(err(at, "unexpected ')'"))
    } else if let Some(k) = tok.strip_prefix('a').and_then(|d| d.parse::<usize>().ok()) {
        if k == 0 {
            return Err(err(at, "parameters are numbered from a1"));
        }
        Ok(Term::param(k))
    } else if let Ok(v) = tok.parse::<i64>() {
        Ok(Term::lit(v))
    } else if let Some(p) = Prim::from_name(tok).filter(|p| p.arity() == 0) {
        Ok(Term::app(p, vec![]))
    } else {
        Err(err(at, &format!("unexpected token {tok}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_primitives_with_signatures() {
        assert_eq!(Prim::ALL.len(), 15);
        assert_eq!(Prim::Append.signature().to_string(), "t0 -> L(t0) -> L(t0)");
        assert_eq!(Prim::Map.signature().to_string(), "(t0 -> t1) -> L(t0) -> L(t1)");
        assert_eq!(Prim::If.signature().to_string(), "bool -> t0 -> t0 -> t0");
        assert_eq!(Prim::Index.signature().to_string(), "int -> L(t0) -> t0");
        assert_eq!(Prim::Empty.arity(), 0);
        assert_eq!(Prim::If.arity(), 3);
    }

    #[test]
    fn sexp_round_trip() {
        for s in [
            "(map (length) a1)",
            "(tail a1)",
            "(if (> (length a1) 2) a1 (tail a1))",
            "(index -1 a2)",
            "(append (length a1) empty)",
            "(map (if (&& (< (length a1) 3) (! (== 2 (length a2)))) a2) (append a1 empty))",
        ] {
            let t: Term = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
        }
        let t: Term = "(map (length) a1)".parse().unwrap();
        assert!(t.children[0].is_partial());
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn sexp_errors() {
        assert!("(tail a1".parse::<Term>().is_err());
        assert!("(foo a1)".parse::<Term>().is_err());
        assert!("(tail a1 a2)".parse::<Term>().is_err());
        assert!("a0".parse::<Term>().is_err());
        assert!("(tail a1))".parse::<Term>().is_err());
    }

    #[test]
    fn depth_counts_leaves() {
        let t: Term = "(append (length a1) a1)".parse().unwrap();
        assert_eq!(t.depth(), 3);
        assert_eq!(Term::param(1).depth(), 1);
    }
}

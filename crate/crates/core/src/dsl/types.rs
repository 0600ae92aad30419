use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Int,
    Bool,
    List(Box<Type>),
    Var(u32),
    Arrow(Box<Type>, Box<Type>),
}

impl Type {
    pub fn list(t: Type) -> Type {
        Type::List(Box::new(t))
    }

    pub fn arrow(a: Type, b: Type) -> Type {
        Type::Arrow(Box::new(a), Box::new(b))
    }

    /// `args[0] -> args[1] -> ... -> ret`
    pub fn arrows(args: impl IntoIterator<Item = Type>, ret: Type) -> Type {
        let args: Vec<Type> = args.into_iter().collect();
        args.into_iter().rev().fold(ret, |acc, a| Type::arrow(a, acc))
    }

    /// `L(int)^arity -> L(int)`, the shape of every sampled program.
    pub fn program(arity: usize) -> Type {
        Type::arrows(vec![Type::list(Type::Int); arity], Type::list(Type::Int))
    }

    /// Nested list `L^k(base)`.
    pub fn nested(base: Type, k: usize) -> Type {
        (0..k).fold(base, |t, _| Type::list(t))
    }

    pub fn args_and_ret(&self) -> (Vec<&Type>, &Type) {
        let mut args = Vec::new();
        let mut t = self;
        while let Type::Arrow(a, b) = t {
            args.push(a.as_ref());
            t = b;
        }
        (args, t)
    }

    pub fn elem(&self) -> Option<&Type> {
        match self {
            Type::List(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_list(&self) -> bool {
        matches!(self, Type::List(_))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Type::Int | Type::Bool => true,
            Type::Var(_) => false,
            Type::List(t) => t.is_ground(),
            Type::Arrow(a, b) => a.is_ground() && b.is_ground(),
        }
    }

    fn vars(&self, out: &mut Vec<u32>) {
        match self {
            Type::Var(v) => {
                if !out.contains(v) {
                    out.push(*v)
                }
            }
            Type::List(t) => t.vars(out),
            Type::Arrow(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            _ => {}
        }
    }

    fn rename(&self, map: &HashMap<u32, u32>) -> Type {
        match self {
            Type::Var(v) => Type::Var(map.get(v).copied().unwrap_or(*v)),
            Type::List(t) => Type::list(t.rename(map)),
            Type::Arrow(a, b) => Type::arrow(a.rename(map), b.rename(map)),
            t => t.clone(),
        }
    }

    /// Renames type variables to `t0, t1, ...` in order of first occurrence.
    pub fn normalized(&self) -> Type {
        let mut vs = Vec::new();
        self.vars(&mut vs);
        let map = vs.iter().enumerate().map(|(i, v)| (*v, i as u32)).collect();
        self.rename(&map)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Bool => f.write_str("bool"),
            Type::Var(v) => write!(f, "t{v}"),
            Type::List(t) => write!(f, "L({t})"),
            Type::Arrow(a, b) => match a.as_ref() {
                Type::Arrow(..) => write!(f, "({a}) -> {b}"),
                _ => write!(f, "{a} -> {b}"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse type: {0}")]
pub struct TypeParseError(pub String);

impl FromStr for Type {
    type Err = TypeParseError;

    fn from_str(s: &str) -> Result<Type, TypeParseError> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut p = TypeParser { s: compact.as_bytes(), pos: 0 };
        let t = p.arrow().ok_or_else(|| TypeParseError(s.to_string()))?;
        if p.pos != p.s.len() {
            return Err(TypeParseError(s.to_string()));
        }
        Ok(t)
    }
}

struct TypeParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl TypeParser<'_> {
    fn eat(&mut self, lit: &str) -> bool {
        if self.s[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn arrow(&mut self) -> Option<Type> {
        let a = self.atom()?;
        if self.eat("->") || self.eat("→") {
            Some(Type::arrow(a, self.arrow()?))
        } else {
            Some(a)
        }
    }

    fn atom(&mut self) -> Option<Type> {
        if self.eat("int") {
            Some(Type::Int)
        } else if self.eat("bool") {
            Some(Type::Bool)
        } else if self.eat("L(") || self.eat("List(") {
            let t = self.arrow()?;
            self.eat(")").then_some(Type::list(t))
        } else if self.eat("(") {
            let t = self.arrow()?;
            self.eat(")").then_some(t)
        } else if self.eat("t") {
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            std::str::from_utf8(&self.s[start..self.pos]).ok()?.parse().ok().map(Type::Var)
        } else {
            None
        }
    }
}

/// Substitution produced by first-order unification.
#[derive(Debug, Default, Clone)]
pub struct Subst {
    map: HashMap<u32, Type>,
    next: u32,
}

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }

    pub fn fresh(&mut self) -> Type {
        self.next += 1;
        Type::Var(1000 + self.next)
    }

    /// Copies `t` with every variable replaced by a fresh one.
    pub fn instantiate(&mut self, t: &Type) -> Type {
        let mut vs = Vec::new();
        t.vars(&mut vs);
        let map = vs
            .into_iter()
            .map(|v| {
                self.next += 1;
                (v, 1000 + self.next)
            })
            .collect();
        t.rename(&map)
    }

    pub fn apply(&self, t: &Type) -> Type {
        match t {
            Type::Var(v) => match self.map.get(v) {
                Some(u) => self.apply(u),
                None => t.clone(),
            },
            Type::List(e) => Type::list(self.apply(e)),
            Type::Arrow(a, b) => Type::arrow(self.apply(a), self.apply(b)),
            _ => t.clone(),
        }
    }

    pub fn unify(&mut self, a: &Type, b: &Type) -> bool {
        let a = self.apply(a);
        let b = self.apply(b);
        match (&a, &b) {
            _ if a == b => true,
            (Type::Var(v), t) | (t, Type::Var(v)) => {
                let mut vs = Vec::new();
                t.vars(&mut vs);
                if vs.contains(v) {
                    return false;
                }
                self.map.insert(*v, t.clone());
                true
            }
            (Type::List(x), Type::List(y)) => self.unify(x, y),
            (Type::Arrow(x1, y1), Type::Arrow(x2, y2)) => self.unify(x1, x2) && self.unify(y1, y2),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_parse_round_trip() {
        let t = Type::arrows(
            [Type::arrow(Type::Var(0), Type::Var(1)), Type::list(Type::Var(0))],
            Type::list(Type::Var(1)),
        );
        assert_eq!(t.to_string(), "(t0 -> t1) -> L(t0) -> L(t1)");
        assert_eq!(t.to_string().parse::<Type>().unwrap(), t);
        assert_eq!("L(int)->L(int)->L(int)".parse::<Type>().unwrap(), Type::program(2));
    }

    #[test]
    fn unification() {
        let mut s = Subst::new();
        let a = Type::list(Type::Var(0));
        let b = Type::list(Type::list(Type::Int));
        assert!(s.unify(&a, &b));
        assert_eq!(s.apply(&Type::Var(0)), Type::list(Type::Int));
        assert!(!s.unify(&Type::Var(0), &Type::Bool));
        let mut s = Subst::new();
        assert!(!s.unify(&Type::Var(0), &Type::list(Type::Var(0))));
    }
}

use super::term::{Node, Prim, Term};
use super::types::{Subst, Type};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

pub const LITERAL_MIN: i64 = -1;
pub const LITERAL_MAX: i64 = 5;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("type mismatch at {node}: expected {expected}, found {found}")]
    TypeMismatch { node: String, expected: Type, found: Type },
    #[error("{node} has too many arguments")]
    Arity { node: String },
    #[error("partial application {node} outside the function slot of map")]
    MisplacedPartial { node: String },
    #[error("parameter a{index} does not exist")]
    UnknownParam { index: usize },
    #[error("literal {value} outside [{LITERAL_MIN}, {LITERAL_MAX}]")]
    LiteralRange { value: i64 },
}

/// Infers the type of `term` given the types of `a1..aN`.
pub fn typecheck(term: &Term, params: &[Type]) -> Result<Type, TypeError> {
    let mut s = Subst::new();
    let t = infer(term, params, &mut s, false)?;
    Ok(s.apply(&t).normalized())
}

/// Type of a whole program whose parameters are all `L(int)`.
pub fn typecheck_program(term: &Term, arity: usize) -> Result<Type, TypeError> {
    let params = vec![Type::list(Type::Int); arity];
    let ret = typecheck(term, &params)?;
    Ok(Type::arrows(params, ret))
}

fn infer(term: &Term, params: &[Type], s: &mut Subst, fn_slot: bool) -> Result<Type, TypeError> {
    match term.node {
        Node::Lit(v) => {
            if !(LITERAL_MIN..=LITERAL_MAX).contains(&v) {
                return Err(TypeError::LiteralRange { value: v });
            }
            Ok(Type::Int)
        }
        Node::Param(k) => params
            .get(k.wrapping_sub(1))
            .cloned()
            .ok_or(TypeError::UnknownParam { index: k }),
        Node::Prim(p) => {
            let arity = p.arity();
            let n = term.children.len();
            if n > arity {
                return Err(TypeError::Arity { node: term.to_string() });
            }
            // only a single trailing argument may be missing, and only in map's slot
            if n < arity && !(fn_slot && n + 1 == arity && p.mappable()) {
                return Err(TypeError::MisplacedPartial { node: term.to_string() });
            }
            let mut t = s.instantiate(&p.signature());
            for (i, c) in term.children.iter().enumerate() {
                let Type::Arrow(expected, rest) = t else { unreachable!() };
                let found = infer(c, params, s, p == Prim::Map && i == 0)?;
                if !s.unify(&expected, &found) {
                    return Err(TypeError::TypeMismatch {
                        node: c.to_string(),
                        expected: s.apply(&expected).normalized(),
                        found: s.apply(&found).normalized(),
                    });
                }
                t = *rest;
            }
            Ok(s.apply(&t))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    /// First argument of a comparison is not an integer literal.
    C1,
    /// Last argument of extend, length and map is not `empty`.
    C2,
    /// The literal -1 only appears as the first argument of index.
    C3,
    /// index, init and tail are never applied to `empty`.
    C4,
    /// No identical operands of a comparison or logical operator.
    S1,
    /// No list extended with itself.
    S2,
    /// No identical branches of if.
    S3,
    /// Every parameter occurs.
    S4,
}

impl Rule {
    pub const COMPILE: [Rule; 4] = [Rule::C1, Rule::C2, Rule::C3, Rule::C4];
    pub const SAMPLE: [Rule; 4] = [Rule::S1, Rule::S2, Rule::S3, Rule::S4];

    pub fn phase(self) -> Phase {
        if Rule::COMPILE.contains(&self) {
            Phase::Compile
        } else {
            Phase::Sample
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format!("{self:?}").to_lowercase())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Compile,
    Sample,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuntimeRule {
    /// Executes without error on every input.
    NoError,
    /// Does not produce the same output on every input.
    NonConstantOutput,
}

/// Independently toggleable constraint rules.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub compile_time: BTreeSet<Rule>,
    pub sample_time: BTreeSet<Rule>,
    pub runtime: BTreeSet<RuntimeRule>,
}

impl Default for ConstraintSet {
    fn default() -> Self {
        ConstraintSet {
            compile_time: Rule::COMPILE.into_iter().collect(),
            sample_time: Rule::SAMPLE.into_iter().collect(),
            runtime: [RuntimeRule::NoError, RuntimeRule::NonConstantOutput].into_iter().collect(),
        }
    }
}

impl ConstraintSet {
    pub fn none() -> ConstraintSet {
        ConstraintSet {
            compile_time: BTreeSet::new(),
            sample_time: BTreeSet::new(),
            runtime: BTreeSet::new(),
        }
    }

    pub fn enabled(&self, r: Rule) -> bool {
        self.compile_time.contains(&r) || self.sample_time.contains(&r)
    }

    pub fn without(mut self, r: Rule) -> ConstraintSet {
        self.compile_time.remove(&r);
        self.sample_time.remove(&r);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub node: String,
}

/// All violated rules of `phase` for a program over `arity` parameters.
pub fn check_constraints(term: &Term, arity: usize, phase: Phase, rules: &ConstraintSet) -> Vec<Violation> {
    let mut out = Vec::new();
    let on = |r: Rule| r.phase() == phase && rules.enabled(r);
    walk(term, None, &mut |t, parent| {
        let mut flag = |r: Rule| {
            if on(r) {
                out.push(Violation { rule: r, node: t.to_string() });
            }
        };
        if let Node::Lit(-1) = t.node {
            let ok = matches!(parent, Some((p, 0)) if p.is_prim(Prim::Index));
            if !ok {
                flag(Rule::C3);
            }
        }
        let Some(p) = t.prim() else { return };
        let complete = !t.is_partial();
        let kids = &t.children;
        if p.is_comparison() && matches!(kids.first().map(|c| c.node), Some(Node::Lit(_))) {
            flag(Rule::C1);
        }
        if complete && matches!(p, Prim::Extend | Prim::Length | Prim::Map) && kids.last().is_some_and(Term::is_empty_list) {
            flag(Rule::C2);
        }
        if complete && matches!(p, Prim::Index | Prim::Init | Prim::Tail) && kids.last().is_some_and(Term::is_empty_list) {
            flag(Rule::C4);
        }
        if (p.is_comparison() || p.is_logical()) && kids.len() == 2 && kids[0] == kids[1] {
            flag(Rule::S1);
        }
        if p == Prim::Extend && kids.len() == 2 && kids[0] == kids[1] {
            flag(Rule::S2);
        }
        if p == Prim::If && kids.len() == 3 && kids[1] == kids[2] {
            flag(Rule::S3);
        }
    });
    if on(Rule::S4) {
        for k in 1..=arity {
            if !term.uses_param(k) {
                out.push(Violation { rule: Rule::S4, node: format!("a{k}") });
            }
        }
    }
    out
}

fn walk<'a>(t: &'a Term, parent: Option<(&'a Term, usize)>, f: &mut impl FnMut(&'a Term, Option<(&'a Term, usize)>)) {
    f(t, parent);
    for (i, c) in t.children.iter().enumerate() {
        walk(c, Some((t, i)), f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Term {
        s.parse().unwrap()
    }

    fn rules(s: &str, arity: usize, phase: Phase) -> Vec<Rule> {
        check_constraints(&t(s), arity, phase, &ConstraintSet::default())
            .into_iter()
            .map(|v| v.rule)
            .collect()
    }

    #[test]
    fn typecheck_examples() {
        let l = |x| Type::list(x);
        assert_eq!(typecheck(&t("(length a1)"), &[l(Type::Int)]).unwrap(), Type::Int);
        assert!(matches!(
            typecheck(&t("(index a1 a1)"), &[l(Type::Int)]),
            Err(TypeError::TypeMismatch { .. })
        ));
        assert_eq!(
            typecheck(&t("(map (length) a1)"), &[l(l(Type::Int))]).unwrap(),
            l(Type::Int)
        );
        assert_eq!(typecheck(&t("empty"), &[]).unwrap(), l(Type::Var(0)));
        assert_eq!(typecheck_program(&t("(tail a1)"), 1).unwrap(), Type::program(1));
        assert!(matches!(
            typecheck(&t("(append (length) a1)"), &[l(Type::Int)]),
            Err(TypeError::MisplacedPartial { .. })
        ));
        assert!(matches!(typecheck(&t("(index 9 a1)"), &[l(Type::Int)]), Err(TypeError::LiteralRange { .. })));
        assert!(matches!(typecheck(&t("(tail a2)"), &[l(Type::Int)]), Err(TypeError::UnknownParam { .. })));
    }

    #[test]
    fn map_partials_typecheck() {
        let ll = Type::list(Type::list(Type::Int));
        for s in [
            "(map (index 0) a1)",
            "(map (tail) a1)",
            "(map (append 3) a1)",
            "(map (extend (tail empty)) a1)",
            "(map (if (< (length a1) 2) (init empty)) a1)",
        ] {
            assert!(typecheck(&t(s), &[ll.clone()]).is_ok(), "{s}");
        }
    }

    #[test]
    fn constraint_examples() {
        assert_eq!(rules("(== 0 0)", 0, Phase::Compile), vec![Rule::C1]);
        assert_eq!(rules("(extend a1 a1)", 1, Phase::Sample), vec![Rule::S2]);
        assert_eq!(rules("(tail a1)", 2, Phase::Sample), vec![Rule::S4]);
        assert_eq!(rules("(extend a1 empty)", 1, Phase::Compile), vec![Rule::C2]);
        assert_eq!(rules("(length empty)", 1, Phase::Compile), vec![Rule::C2]);
        assert_eq!(rules("(map (length) empty)", 1, Phase::Compile), vec![Rule::C2]);
        assert_eq!(rules("(append -1 a1)", 1, Phase::Compile), vec![Rule::C3]);
        assert!(rules("(index -1 a1)", 1, Phase::Compile).is_empty());
        assert!(rules("(map (index -1) a1)", 1, Phase::Compile).is_empty());
        assert_eq!(rules("(tail empty)", 1, Phase::Compile), vec![Rule::C4]);
        assert_eq!(rules("(index 0 empty)", 1, Phase::Compile), vec![Rule::C4]);
        assert_eq!(rules("(< (length a1) (length a1))", 1, Phase::Sample), vec![Rule::S1]);
        assert_eq!(rules("(&& (< (length a1) 1) (< (length a1) 1))", 1, Phase::Sample), vec![Rule::S1]);
        assert_eq!(rules("(if (< (length a1) 2) a1 a1)", 1, Phase::Sample), vec![Rule::S3]);
        assert!(rules("(if (> (length a1) 2) a1 (tail a1))", 1, Phase::Sample).is_empty());
    }

    #[test]
    fn rules_toggle_independently() {
        let cs = ConstraintSet::default().without(Rule::C1);
        assert!(check_constraints(&t("(== 0 0)"), 0, Phase::Compile, &cs).is_empty());
    }
}

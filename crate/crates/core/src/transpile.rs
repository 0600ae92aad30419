//! Lowering of DSL terms to imperative mini-language source.
//!
//! Only `empty` and `if` nodes introduce variables (`v1, v2, ...`, numbered
//! in postorder). Every other node is either an inline expression or a
//! statement that mutates the list it operates on, in which case the node's
//! value is that list's expression. `map` becomes an index loop that writes
//! each element back in place.

use crate::dsl::{Flat, Node, Prim, Term};
use crate::minipy::{self, Module};
use std::collections::BTreeMap;

pub const DEFAULT_FUNCTION_NAME: &str = "f";
const INDENT: &str = "    ";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpProgram {
    pub source: String,
    pub ast: Module,
    pub function_name: String,
    pub arity: usize,
    /// Postorder node index to the first source line emitted for it.
    pub line_map: BTreeMap<usize, u32>,
    pub loc: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranslateError {
    #[error("cannot translate node {0}")]
    UntranslatableNode(String),
    #[error("translation does not parse: {0}")]
    Reparse(String),
}

/// Counts non-blank lines, the function header included.
pub fn loc(source: &str) -> usize {
    source.lines().filter(|l| !l.trim().is_empty()).count()
}

pub fn translate(term: &Term, arity: usize) -> Result<ImpProgram, TranslateError> {
    translate_named(term, arity, DEFAULT_FUNCTION_NAME)
}

pub fn translate_named(term: &Term, arity: usize, name: &str) -> Result<ImpProgram, TranslateError> {
    let flat = Flat::new(term);
    let n = flat.len();
    let bad = |id: usize| TranslateError::UntranslatableNode(flat.nodes[id].to_string());

    // partial nodes may only sit in the function slot of map
    let mut in_slot = vec![false; n];
    for id in 0..n {
        if flat.nodes[id].is_prim(Prim::Map) {
            let f = flat.children[id][0];
            if !flat.nodes[f].is_partial() || !flat.nodes[f].prim().is_some_and(Prim::mappable) {
                return Err(bad(id));
            }
            in_slot[f] = true;
        }
    }

    let mut vars: Vec<Option<String>> = vec![None; n];
    let mut next = 0;
    for id in 0..n {
        if flat.nodes[id].is_partial() && !in_slot[id] {
            return Err(bad(id));
        }
        if matches!(flat.nodes[id].prim(), Some(Prim::Empty | Prim::If)) {
            next += 1;
            vars[id] = Some(format!("v{next}"));
        }
    }

    let mut expr: Vec<String> = vec![String::new(); n];
    for id in 0..n {
        let t = flat.nodes[id];
        let kid = |k: usize| flat.children[id][k];
        expr[id] = match t.node {
            Node::Lit(v) => v.to_string(),
            Node::Param(k) => format!("a{k}"),
            Node::Prim(p) => match p {
                Prim::Empty | Prim::If => vars[id].clone().unwrap(),
                _ if t.is_partial() => String::new(),
                Prim::Append | Prim::Extend | Prim::Map => expr[kid(1)].clone(),
                Prim::Init | Prim::Tail => expr[kid(0)].clone(),
                Prim::Length => format!("len({})", expr[kid(0)]),
                Prim::Index => format!("{}[{}]", expr[kid(1)], expr[kid(0)]),
                Prim::Eq | Prim::Lt | Prim::Gt => {
                    let op = match p {
                        Prim::Eq => "==",
                        Prim::Lt => "<",
                        _ => ">",
                    };
                    format!("{} {op} {}", expr[kid(0)], expr[kid(1)])
                }
                Prim::And | Prim::Or => {
                    let op = if p == Prim::And { "and" } else { "or" };
                    format!(
                        "{} {op} {}",
                        operand(&flat, &expr, kid(0)),
                        operand(&flat, &expr, kid(1))
                    )
                }
                Prim::Not => format!("not {}", operand(&flat, &expr, kid(0))),
            },
        };
    }

    let params: Vec<String> = (1..=arity).map(|k| format!("a{k}")).collect();
    let mut lines = vec![format!("def {name}({}):", params.join(", "))];
    let empties: Vec<&String> = (0..n)
        .filter(|&id| flat.nodes[id].is_empty_list())
        .filter_map(|id| vars[id].as_ref())
        .collect();
    if !empties.is_empty() {
        let names: Vec<&str> = empties.iter().map(|s| s.as_str()).collect();
        let inits = vec!["[]"; names.len()];
        lines.push(format!("{INDENT}{} = {}", names.join(", "), inits.join(", ")));
    }

    let mut line_map = BTreeMap::new();
    for id in 0..n {
        let t = flat.nodes[id];
        if t.is_partial() {
            continue;
        }
        let Some(p) = t.prim() else { continue };
        if !p.is_statement() {
            continue;
        }
        line_map.insert(id, lines.len() as u32 + 1);
        let kid = |k: usize| flat.children[id][k];
        let body = match p {
            Prim::Map => {
                let list = &expr[kid(1)];
                let f = kid(0);
                let elem = format!("{list}[i]");
                let fk = |k: usize| flat.children[f].get(k).map_or("", |&c| expr[c].as_str());
                let mut out = vec![format!("for i in range(len({list})):")];
                let inner = match flat.nodes[f].prim().unwrap() {
                    Prim::Length => vec![format!("{elem} = len({elem})")],
                    Prim::Index => vec![format!("{elem} = {elem}[{}]", fk(0))],
                    Prim::If => {
                        let v = &expr[f];
                        vec![
                            format!("if {}:", fk(0)),
                            format!("{INDENT}{v} = {}", fk(1)),
                            "else:".to_string(),
                            format!("{INDENT}{v} = {elem}"),
                            format!("{elem} = {v}"),
                        ]
                    }
                    fp => statement(fp, &elem, fk(0)),
                };
                out.extend(inner.into_iter().map(|l| format!("{INDENT}{l}")));
                out
            }
            Prim::If => vec![
                format!("if {}:", expr[kid(0)]),
                format!("{INDENT}{} = {}", expr[id], expr[kid(1)]),
                "else:".to_string(),
                format!("{INDENT}{} = {}", expr[id], expr[kid(2)]),
            ],
            Prim::Append | Prim::Extend => statement(p, &expr[kid(1)], &expr[kid(0)]),
            Prim::Init | Prim::Tail => statement(p, &expr[kid(0)], ""),
            _ => unreachable!(),
        };
        lines.extend(body.into_iter().map(|l| format!("{INDENT}{l}")));
    }
    lines.push(format!("{INDENT}return {}", expr[flat.root()]));

    let mut source = lines.join("\n");
    source.push('\n');
    let ast = minipy::parse(&source).map_err(|e| TranslateError::Reparse(e.to_string()))?;
    Ok(ImpProgram {
        loc: loc(&source),
        source,
        ast,
        function_name: name.to_string(),
        arity,
        line_map,
    })
}

/// One-line image of a list statement applied to `list`.
fn statement(p: Prim, list: &str, arg: &str) -> Vec<String> {
    vec![match p {
        Prim::Append => format!("{list}.append({arg})"),
        Prim::Extend => format!("{list}.extend({arg})"),
        Prim::Init => format!("{list}.pop()"),
        Prim::Tail => format!("{list}.pop(0)"),
        _ => unreachable!("{p:?}"),
    }]
}

/// Boolean operands are parenthesized unless atomic.
fn operand(flat: &Flat, expr: &[String], id: usize) -> String {
    match flat.nodes[id].prim() {
        Some(p) if p.is_comparison() || p.is_logical() || p == Prim::Not => format!("({})", expr[id]),
        _ => expr[id].clone(),
    }
}

//! Reference evaluator. Lists are shared mutable stores and effects run in
//! postorder, so results agree with executing the imperative translation.

use super::term::{Flat, Node, Prim, Term};
use crate::minipy::{ErrorKind, Value};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind:?}: {message}")]
pub struct EvalError {
    pub kind: ErrorKind,
    pub message: String,
}

fn fail<T>(kind: ErrorKind, message: &str) -> Result<T, EvalError> {
    Err(EvalError { kind, message: message.to_string() })
}

/// Evaluates `term` on `inputs` (bound to `a1, a2, ...`). Inputs are copied
/// first so callers' values are never mutated.
pub fn eval_dsl(term: &Term, inputs: &[Value]) -> Result<Value, EvalError> {
    let params = inputs
        .iter()
        .map(|v| Value::from_literal(&v.to_literal()).expect("runtime values convert"))
        .collect();
    let flat = Flat::new(term);
    let mut ev = Evaluator { flat: &flat, params, vars: HashMap::new() };
    ev.run()
}

struct Evaluator<'a> {
    flat: &'a Flat<'a>,
    params: Vec<Value>,
    vars: HashMap<usize, Value>,
}

impl Evaluator<'_> {
    fn node(&self, id: usize) -> &Term {
        self.flat.nodes[id]
    }

    fn kid(&self, id: usize, k: usize) -> usize {
        self.flat.children[id][k]
    }

    fn run(&mut self) -> Result<Value, EvalError> {
        for id in 0..self.flat.len() {
            if self.node(id).is_empty_list() {
                self.vars.insert(id, Value::list(vec![]));
            }
        }
        for id in 0..self.flat.len() {
            if self.node(id).is_partial() {
                continue;
            }
            match self.node(id).prim() {
                Some(Prim::Map) => self.exec_map(id)?,
                Some(p) if p.is_statement() => self.exec(id)?,
                _ => {}
            }
        }
        self.value(self.flat.root())
    }

    fn exec(&mut self, id: usize) -> Result<(), EvalError> {
        match self.node(id).prim().unwrap() {
            Prim::Append => {
                let recv = self.value(self.kid(id, 1))?;
                let x = self.value(self.kid(id, 0))?;
                push(&recv, x);
            }
            Prim::Extend => {
                let recv = self.value(self.kid(id, 1))?;
                let src = self.value(self.kid(id, 0))?;
                extend(&recv, &src);
            }
            Prim::Init => pop(&self.value(self.kid(id, 0))?, false)?,
            Prim::Tail => pop(&self.value(self.kid(id, 0))?, true)?,
            Prim::If => {
                let cond = self.value(self.kid(id, 0))?.truthy();
                let v = self.value(self.kid(id, if cond { 1 } else { 2 }))?;
                self.vars.insert(id, v);
            }
            p => unreachable!("{p:?} is not a statement"),
        }
        Ok(())
    }

    fn exec_map(&mut self, id: usize) -> Result<(), EvalError> {
        let f = self.kid(id, 0);
        let list = self.kid(id, 1);
        let n = list_len(&self.value(list)?);
        let fp = self.node(f).prim().unwrap();
        for i in 0..n {
            let elem = || -> Result<Value, EvalError> { index(&self.value(list)?, i as i64) };
            match fp {
                Prim::Length => {
                    let new = Value::Int(list_len(&elem()?) as i64);
                    store(&self.value(list)?, i, new)?;
                }
                Prim::Index => {
                    let e = elem()?;
                    let k = as_int(&self.value(self.kid(f, 0))?);
                    let new = index(&e, k)?;
                    store(&self.value(list)?, i, new)?;
                }
                Prim::Init => pop(&elem()?, false)?,
                Prim::Tail => pop(&elem()?, true)?,
                Prim::Append => {
                    let e = elem()?;
                    push(&e, self.value(self.kid(f, 0))?);
                }
                Prim::Extend => {
                    let e = elem()?;
                    extend(&e, &self.value(self.kid(f, 0))?);
                }
                Prim::If => {
                    let cond = self.value(self.kid(f, 0))?.truthy();
                    let v = if cond { self.value(self.kid(f, 1))? } else { elem()? };
                    self.vars.insert(f, v.clone());
                    store(&self.value(list)?, i, v)?;
                }
                p => unreachable!("{p:?} cannot be mapped"),
            }
        }
        Ok(())
    }

    /// Current value of the expression standing for node `id`.
    fn value(&self, id: usize) -> Result<Value, EvalError> {
        let t = self.node(id);
        match t.node {
            Node::Lit(v) => Ok(Value::Int(v)),
            Node::Param(k) => Ok(self.params[k - 1].clone()),
            Node::Prim(p) => match p {
                Prim::Empty | Prim::If => Ok(self.vars.get(&id).cloned().expect("variable assigned before use")),
                Prim::Append | Prim::Extend | Prim::Map => self.value(self.kid(id, 1)),
                Prim::Init | Prim::Tail => self.value(self.kid(id, 0)),
                Prim::Length => Ok(Value::Int(list_len(&self.value(self.kid(id, 0))?) as i64)),
                Prim::Index => {
                    let l = self.value(self.kid(id, 1))?;
                    let k = as_int(&self.value(self.kid(id, 0))?);
                    index(&l, k)
                }
                Prim::Eq | Prim::Lt | Prim::Gt => {
                    let a = as_int(&self.value(self.kid(id, 0))?);
                    let b = as_int(&self.value(self.kid(id, 1))?);
                    Ok(Value::Bool(match p {
                        Prim::Eq => a == b,
                        Prim::Lt => a < b,
                        _ => a > b,
                    }))
                }
                Prim::And | Prim::Or => {
                    let a = self.value(self.kid(id, 0))?;
                    if a.truthy() == (p == Prim::Or) {
                        Ok(a)
                    } else {
                        self.value(self.kid(id, 1))
                    }
                }
                Prim::Not => Ok(Value::Bool(!self.value(self.kid(id, 0))?.truthy())),
            },
        }
    }
}

fn as_int(v: &Value) -> i64 {
    match v {
        Value::Int(i) => *i,
        Value::Bool(b) => *b as i64,
        other => panic!("ill-typed operand {other:?}"),
    }
}

fn list_len(v: &Value) -> usize {
    match v {
        Value::List(l) => l.borrow().len(),
        other => panic!("ill-typed list {other:?}"),
    }
}

fn resolve(len: usize, k: i64) -> Option<usize> {
    let k = if k < 0 { k + len as i64 } else { k };
    (0..len as i64).contains(&k).then_some(k as usize)
}

fn index(v: &Value, k: i64) -> Result<Value, EvalError> {
    let Value::List(l) = v else { panic!("ill-typed list {v:?}") };
    let items = l.borrow();
    match resolve(items.len(), k) {
        Some(i) => Ok(items[i].clone()),
        None => fail(ErrorKind::IndexOutOfRange, "list index out of range"),
    }
}

fn store(v: &Value, i: usize, x: Value) -> Result<(), EvalError> {
    let Value::List(l) = v else { panic!("ill-typed list {v:?}") };
    let mut items = l.borrow_mut();
    match items.get_mut(i) {
        Some(slot) => {
            *slot = x;
            Ok(())
        }
        None => fail(ErrorKind::IndexOutOfRange, "list assignment index out of range"),
    }
}

fn push(v: &Value, x: Value) {
    let Value::List(l) = v else { panic!("ill-typed list {v:?}") };
    l.borrow_mut().push(x);
}

fn extend(v: &Value, src: &Value) {
    let (Value::List(l), Value::List(s)) = (v, src) else { panic!("ill-typed extend") };
    let items = s.borrow().clone();
    l.borrow_mut().extend(items);
}

fn pop(v: &Value, front: bool) -> Result<(), EvalError> {
    let Value::List(l) = v else { panic!("ill-typed list {v:?}") };
    let mut items = l.borrow_mut();
    if items.is_empty() {
        return fail(ErrorKind::PopFromEmpty, "pop from empty list");
    }
    if front {
        items.remove(0);
    } else {
        items.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(src: &str, inputs: &[&[i64]]) -> Result<String, ErrorKind> {
        let t: Term = src.parse().unwrap();
        let vals: Vec<Value> = inputs.iter().map(|x| Value::int_list(x)).collect();
        eval_dsl(&t, &vals).map(|v| v.repr()).map_err(|e| e.kind)
    }

    #[test]
    fn basic_primitives() {
        assert_eq!(run("(tail a1)", &[&[4, 1, 3]]).unwrap(), "[1, 3]");
        assert_eq!(run("(init a1)", &[&[4, 1, 3]]).unwrap(), "[4, 1]");
        assert_eq!(run("(append (index -1 a1) a1)", &[&[2, 5]]).unwrap(), "[2, 5, 5]");
        assert_eq!(run("(extend a2 a1)", &[&[1], &[2, 3]]).unwrap(), "[1, 2, 3]");
        assert_eq!(run("(tail (tail a1))", &[&[1]]), Err(ErrorKind::PopFromEmpty));
        assert_eq!(run("(append (index 4 a1) a1)", &[&[1]]), Err(ErrorKind::IndexOutOfRange));
    }

    #[test]
    fn effects_follow_emission_order() {
        // length is read after the pop that precedes the append statement
        assert_eq!(run("(append (length a1) (tail a1))", &[&[7, 8, 9]]).unwrap(), "[8, 9, 2]");
        // both branches run before the if; the result aliases a1
        assert_eq!(run("(if (> (length a1) 2) a1 (tail a1))", &[&[1, 2]]).unwrap(), "[2]");
    }

    #[test]
    fn map_partials() {
        assert_eq!(
            run("(map (length) (append a1 (append a1 empty)))", &[&[1, 2]]).unwrap(),
            "[2, 2]"
        );
        assert_eq!(
            run("(index 0 (map (append 5) (append a1 empty)))", &[&[1]]).unwrap(),
            "[1, 5]"
        );
        assert_eq!(
            run("(map (if (> (length a1) 3) 0) a1)", &[&[1, 2, 3, 4]]).unwrap(),
            "[0, 0, 0, 0]"
        );
    }

    #[test]
    fn inputs_are_not_mutated() {
        let t: Term = "(tail a1)".parse().unwrap();
        let x = Value::int_list(&[1, 2]);
        eval_dsl(&t, &[x.clone()]).unwrap();
        assert_eq!(x.repr(), "[1, 2]");
    }
}

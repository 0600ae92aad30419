//! Big-step interpreter with line coverage.

use super::ast::*;
use super::literal::Literal;
use super::value::Value;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_steps: u64,
    pub max_list_len: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_steps: 1_000_000,
            max_list_len: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorKind {
    IndexOutOfRange,
    PopFromEmpty,
    TypeError,
    ZeroDivision,
    Overflow,
    NameError,
    AttributeError,
    ValueError,
    StepLimitExceeded,
    ListTooLong,
}

impl ErrorKind {
    /// Exception class of the host language this error corresponds to.
    pub fn python_class(self) -> &'static str {
        match self {
            ErrorKind::IndexOutOfRange | ErrorKind::PopFromEmpty => "IndexError",
            ErrorKind::TypeError => "TypeError",
            ErrorKind::ZeroDivision => "ZeroDivisionError",
            ErrorKind::Overflow => "OverflowError",
            ErrorKind::NameError => "NameError",
            ErrorKind::AttributeError => "AttributeError",
            ErrorKind::ValueError => "ValueError",
            ErrorKind::StepLimitExceeded => "TimeoutError",
            ErrorKind::ListTooLong => "MemoryError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeError {
    pub kind: ErrorKind,
    pub line: u32,
    pub message: String,
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at line {}: {}", self.kind.python_class(), self.line, self.message)
    }
}

impl std::error::Error for RuntimeError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExecStatus {
    Ok,
    Error(RuntimeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecResult {
    pub status: ExecStatus,
    pub output: Option<Literal>,
    pub covered_lines: BTreeSet<u32>,
    pub steps: u64,
}

impl ExecResult {
    pub fn is_ok(&self) -> bool {
        matches!(self.status, ExecStatus::Ok)
    }

    pub fn error(&self) -> Option<&RuntimeError> {
        match &self.status {
            ExecStatus::Error(e) => Some(e),
            ExecStatus::Ok => None,
        }
    }
}

/// Runs `function` from `module` on `args`. Errors inside the program are
/// reported in the result, never propagated.
pub fn interpret(module: &Module, function: &str, args: Vec<Value>, limits: Limits) -> ExecResult {
    let mut m = Machine {
        env: HashMap::new(),
        covered: BTreeSet::new(),
        steps: 0,
        limits,
        line: 0,
    };
    let result = match module.function(function) {
        None => Err(RuntimeError {
            kind: ErrorKind::NameError,
            line: 0,
            message: format!("name '{function}' is not defined"),
        }),
        Some(f) if f.params.len() != args.len() => Err(RuntimeError {
            kind: ErrorKind::TypeError,
            line: f.line,
            message: format!(
                "{}() takes {} positional arguments but {} were given",
                f.name,
                f.params.len(),
                args.len()
            ),
        }),
        Some(f) => {
            m.covered.insert(f.line);
            m.line = f.line;
            for (p, a) in f.params.iter().zip(args) {
                m.env.insert(p.clone(), a);
            }
            match m.block(&f.body) {
                Ok(Flow::Return(v)) => Ok(v),
                Ok(Flow::Normal) => Ok(Value::None),
                Ok(Flow::Break | Flow::Continue) => Err(RuntimeError {
                    kind: ErrorKind::TypeError,
                    line: m.line,
                    message: "'break' or 'continue' outside loop".into(),
                }),
                Err(e) => Err(e),
            }
        }
    };
    match result {
        Ok(v) => ExecResult {
            status: ExecStatus::Ok,
            output: Some(v.to_literal()),
            covered_lines: m.covered,
            steps: m.steps,
        },
        Err(e) => ExecResult {
            status: ExecStatus::Error(e),
            output: None,
            covered_lines: m.covered,
            steps: m.steps,
        },
    }
}

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Value),
}

struct Machine {
    env: HashMap<String, Value>,
    covered: BTreeSet<u32>,
    steps: u64,
    limits: Limits,
    line: u32,
}

type R<T> = Result<T, RuntimeError>;

impl Machine {
    fn fail<T>(&self, kind: ErrorKind, message: impl Into<String>) -> R<T> {
        Err(RuntimeError {
            kind,
            line: self.line,
            message: message.into(),
        })
    }

    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return self.fail(
                ErrorKind::StepLimitExceeded,
                format!("exceeded {} steps", self.limits.max_steps),
            );
        }
        Ok(())
    }

    fn visit(&mut self, line: u32) -> R<()> {
        self.line = line;
        self.covered.insert(line);
        self.tick()
    }

    fn block(&mut self, stmts: &[Stmt]) -> R<Flow> {
        for s in stmts {
            match self.stmt(s)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, s: &Stmt) -> R<Flow> {
        self.visit(s.line)?;
        match &s.kind {
            StmtKind::Assign { targets, values } => {
                if targets.len() == 1 && values.len() == 1 {
                    let v = self.expr(&values[0])?;
                    self.assign(&targets[0], v)?;
                } else {
                    let vals: Vec<Value> = if values.len() == 1 {
                        match self.expr(&values[0])? {
                            Value::List(l) => l.borrow().clone(),
                            other => {
                                return self.fail(
                                    ErrorKind::TypeError,
                                    format!("cannot unpack non-iterable {} object", other.type_name()),
                                )
                            }
                        }
                    } else {
                        values.iter().map(|e| self.expr(e)).collect::<R<_>>()?
                    };
                    if vals.len() != targets.len() {
                        return self.fail(
                            ErrorKind::ValueError,
                            format!("expected {} values to unpack, got {}", targets.len(), vals.len()),
                        );
                    }
                    for (t, v) in targets.iter().zip(vals) {
                        self.assign(t, v)?;
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::AugAssign { target, op, value } => {
                let current = match target {
                    Target::Name(n) => self.lookup(n)?,
                    Target::Index { base, index } => {
                        let b = self.expr(base)?;
                        let i = self.expr(index)?;
                        self.index(&b, &i)?
                    }
                };
                let rhs = self.expr(value)?;
                let result = match (&current, op) {
                    // `lst += other` extends in place
                    (Value::List(l), BinOp::Add) => {
                        let items = self.iter_list(&rhs)?;
                        self.check_len(l.borrow().len() + items.len())?;
                        l.borrow_mut().extend(items);
                        current.clone()
                    }
                    _ => self.binary(*op, &current, &rhs)?,
                };
                self.assign(target, result)?;
                Ok(Flow::Normal)
            }
            StmtKind::Expr(e) => {
                self.expr(e)?;
                Ok(Flow::Normal)
            }
            StmtKind::If { branches, orelse } => {
                for (k, b) in branches.iter().enumerate() {
                    if k > 0 {
                        self.visit(b.line)?;
                    }
                    if self.expr(&b.cond)?.truthy() {
                        return self.block(&b.body);
                    }
                }
                // `else:` is not a line of its own in host tracing
                if let Some(e) = orelse {
                    return self.block(&e.body);
                }
                Ok(Flow::Normal)
            }
            StmtKind::For { var, range, body } => {
                let args = range
                    .iter()
                    .map(|e| {
                        let v = self.expr(e)?;
                        self.as_int(&v, "range")
                    })
                    .collect::<R<Vec<i64>>>()?;
                let (start, stop, step) = match args.as_slice() {
                    [stop] => (0, *stop, 1),
                    [start, stop] => (*start, *stop, 1),
                    [start, stop, step] => (*start, *stop, *step),
                    _ => unreachable!("parser bounds range arity"),
                };
                if step == 0 {
                    return self.fail(ErrorKind::ValueError, "range() arg 3 must not be zero");
                }
                let mut i = start;
                loop {
                    if (step > 0 && i >= stop) || (step < 0 && i <= stop) {
                        break;
                    }
                    self.env.insert(var.clone(), Value::Int(i));
                    match self.block(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                    // the loop header is revisited on every iteration
                    self.visit(s.line)?;
                    i = match i.checked_add(step) {
                        Some(n) => n,
                        None => break,
                    };
                }
                Ok(Flow::Normal)
            }
            StmtKind::While { cond, body } => {
                loop {
                    if !self.expr(cond)?.truthy() {
                        break;
                    }
                    match self.block(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                    self.visit(s.line)?;
                }
                Ok(Flow::Normal)
            }
            StmtKind::Break => Ok(Flow::Break),
            StmtKind::Continue => Ok(Flow::Continue),
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.expr(e)?,
                    None => Value::None,
                };
                Ok(Flow::Return(v))
            }
        }
    }

    fn assign(&mut self, target: &Target, v: Value) -> R<()> {
        match target {
            Target::Name(n) => {
                self.env.insert(n.clone(), v);
                Ok(())
            }
            Target::Index { base, index } => {
                let b = self.expr(base)?;
                let i = self.expr(index)?;
                let Value::List(l) = &b else {
                    return self.fail(
                        ErrorKind::TypeError,
                        format!("'{}' object does not support item assignment", b.type_name()),
                    );
                };
                let idx = self.as_index(&i, "list")?;
                let len = l.borrow().len();
                match normalize(idx, len) {
                    Some(k) => {
                        l.borrow_mut()[k] = v;
                        Ok(())
                    }
                    None => self.fail(ErrorKind::IndexOutOfRange, "list assignment index out of range"),
                }
            }
        }
    }

    fn lookup(&self, name: &str) -> R<Value> {
        match self.env.get(name) {
            Some(v) => Ok(v.clone()),
            None => self.fail(ErrorKind::NameError, format!("name '{name}' is not defined")),
        }
    }

    fn check_len(&self, n: usize) -> R<()> {
        if n > self.limits.max_list_len {
            return self.fail(
                ErrorKind::ListTooLong,
                format!("list length {n} exceeds limit {}", self.limits.max_list_len),
            );
        }
        Ok(())
    }

    fn as_int(&self, v: &Value, ctx: &str) -> R<i64> {
        match v {
            Value::Int(i) => Ok(*i),
            Value::Bool(b) => Ok(*b as i64),
            other => self.fail(
                ErrorKind::TypeError,
                format!("'{}' object cannot be interpreted as an integer in {ctx}", other.type_name()),
            ),
        }
    }

    fn as_index(&self, v: &Value, what: &str) -> R<i64> {
        match v {
            Value::Int(i) => Ok(*i),
            Value::Bool(b) => Ok(*b as i64),
            other => self.fail(
                ErrorKind::TypeError,
                format!("{what} indices must be integers, not {}", other.type_name()),
            ),
        }
    }

    fn iter_list(&self, v: &Value) -> R<Vec<Value>> {
        match v {
            Value::List(l) => Ok(l.borrow().clone()),
            other => self.fail(
                ErrorKind::TypeError,
                format!("'{}' object is not iterable", other.type_name()),
            ),
        }
    }

    fn index(&self, base: &Value, i: &Value) -> R<Value> {
        let Value::List(l) = base else {
            return self.fail(
                ErrorKind::TypeError,
                format!("'{}' object is not subscriptable", base.type_name()),
            );
        };
        let idx = self.as_index(i, "list")?;
        let items = l.borrow();
        match normalize(idx, items.len()) {
            Some(k) => Ok(items[k].clone()),
            None => self.fail(ErrorKind::IndexOutOfRange, "list index out of range"),
        }
    }

    fn expr(&mut self, e: &Expr) -> R<Value> {
        self.tick()?;
        match e {
            Expr::Int(i) => Ok(Value::Int(*i)),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::None => Ok(Value::None),
            Expr::Name(n) => self.lookup(n),
            Expr::List(items) => {
                let vals = items.iter().map(|x| self.expr(x)).collect::<R<Vec<_>>>()?;
                self.check_len(vals.len())?;
                Ok(Value::list(vals))
            }
            Expr::Unary(op, inner) => {
                let v = self.expr(inner)?;
                match op {
                    UnaryOp::Not => Ok(Value::Bool(!v.truthy())),
                    UnaryOp::Neg => match v {
                        Value::Int(i) => i
                            .checked_neg()
                            .map(Value::Int)
                            .map_or_else(|| self.fail(ErrorKind::Overflow, "integer overflow"), Ok),
                        Value::Bool(b) => Ok(Value::Int(-(b as i64))),
                        other => self.fail(
                            ErrorKind::TypeError,
                            format!("bad operand type for unary -: '{}'", other.type_name()),
                        ),
                    },
                    UnaryOp::Pos => match v {
                        Value::Int(i) => Ok(Value::Int(i)),
                        Value::Bool(b) => Ok(Value::Int(b as i64)),
                        other => self.fail(
                            ErrorKind::TypeError,
                            format!("bad operand type for unary +: '{}'", other.type_name()),
                        ),
                    },
                }
            }
            Expr::Binary(op, l, r) => {
                let a = self.expr(l)?;
                let b = self.expr(r)?;
                self.binary(*op, &a, &b)
            }
            Expr::Compare(first, rest) => {
                let mut lhs = self.expr(first)?;
                for (op, rhs_e) in rest {
                    let rhs = self.expr(rhs_e)?;
                    if !self.compare(*op, &lhs, &rhs)? {
                        return Ok(Value::Bool(false));
                    }
                    lhs = rhs;
                }
                Ok(Value::Bool(true))
            }
            Expr::BoolOp(op, l, r) => {
                let a = self.expr(l)?;
                match (op, a.truthy()) {
                    (BoolOp::And, false) | (BoolOp::Or, true) => Ok(a),
                    _ => self.expr(r),
                }
            }
            Expr::Index(b, i) => {
                let base = self.expr(b)?;
                let idx = self.expr(i)?;
                self.index(&base, &idx)
            }
            Expr::Len(inner) => match self.expr(inner)? {
                Value::List(l) => Ok(Value::Int(l.borrow().len() as i64)),
                other => self.fail(
                    ErrorKind::TypeError,
                    format!("object of type '{}' has no len()", other.type_name()),
                ),
            },
            Expr::MethodCall {
                receiver,
                method,
                args,
            } => {
                let recv = self.expr(receiver)?;
                let Value::List(l) = &recv else {
                    return self.fail(
                        ErrorKind::AttributeError,
                        format!("'{}' object has no attribute '{}'", recv.type_name(), method.name()),
                    );
                };
                let argv = args.iter().map(|a| self.expr(a)).collect::<R<Vec<_>>>()?;
                match method {
                    Method::Append => {
                        self.check_len(l.borrow().len() + 1)?;
                        l.borrow_mut().push(argv[0].clone());
                        Ok(Value::None)
                    }
                    Method::Extend => {
                        // snapshot first so that `x.extend(x)` doubles once
                        let items = self.iter_list(&argv[0])?;
                        self.check_len(l.borrow().len() + items.len())?;
                        l.borrow_mut().extend(items);
                        Ok(Value::None)
                    }
                    Method::Pop => {
                        let len = l.borrow().len();
                        if len == 0 {
                            return self.fail(ErrorKind::PopFromEmpty, "pop from empty list");
                        }
                        let idx = match argv.first() {
                            Some(v) => self.as_index(v, "list")?,
                            None => -1,
                        };
                        match normalize(idx, len) {
                            Some(k) => Ok(l.borrow_mut().remove(k)),
                            None => self.fail(ErrorKind::IndexOutOfRange, "pop index out of range"),
                        }
                    }
                }
            }
        }
    }

    fn binary(&self, op: BinOp, a: &Value, b: &Value) -> R<Value> {
        let num = |v: &Value| match v {
            Value::Int(i) => Some(*i),
            Value::Bool(b) => Some(*b as i64),
            _ => None,
        };
        if let (Some(x), Some(y)) = (num(a), num(b)) {
            let r = match op {
                BinOp::Add => x.checked_add(y),
                BinOp::Sub => x.checked_sub(y),
                BinOp::Mul => x.checked_mul(y),
                BinOp::FloorDiv | BinOp::Mod => {
                    if y == 0 {
                        let what = if op == BinOp::Mod { "integer modulo by zero" } else { "integer division or modulo by zero" };
                        return self.fail(ErrorKind::ZeroDivision, what);
                    }
                    let (q, r) = floor_divmod(x, y);
                    if op == BinOp::FloorDiv {
                        q
                    } else {
                        r
                    }
                }
            };
            return r
                .map(Value::Int)
                .map_or_else(|| self.fail(ErrorKind::Overflow, "integer overflow"), Ok);
        }
        match (op, a, b) {
            (BinOp::Add, Value::List(x), Value::List(y)) => {
                let mut items = x.borrow().clone();
                items.extend(y.borrow().iter().cloned());
                self.check_len(items.len())?;
                Ok(Value::list(items))
            }
            (BinOp::Mul, Value::List(x), n) | (BinOp::Mul, n, Value::List(x)) if num(n).is_some() => {
                let n = num(n).unwrap().max(0) as usize;
                let src = x.borrow();
                self.check_len(src.len().saturating_mul(n))?;
                let mut items = Vec::with_capacity(src.len() * n);
                for _ in 0..n {
                    items.extend(src.iter().cloned());
                }
                Ok(Value::list(items))
            }
            _ => self.fail(
                ErrorKind::TypeError,
                format!(
                    "unsupported operand type(s) for {}: '{}' and '{}'",
                    op.symbol(),
                    a.type_name(),
                    b.type_name()
                ),
            ),
        }
    }

    fn compare(&self, op: CmpOp, a: &Value, b: &Value) -> R<bool> {
        match op {
            CmpOp::Eq => Ok(py_eq(a, b)),
            CmpOp::Ne => Ok(!py_eq(a, b)),
            _ => {
                let ord = self.order(a, b, op)?;
                Ok(match op {
                    CmpOp::Lt => ord.is_lt(),
                    CmpOp::Le => ord.is_le(),
                    CmpOp::Gt => ord.is_gt(),
                    CmpOp::Ge => ord.is_ge(),
                    _ => unreachable!(),
                })
            }
        }
    }

    fn order(&self, a: &Value, b: &Value, op: CmpOp) -> R<std::cmp::Ordering> {
        let num = |v: &Value| match v {
            Value::Int(i) => Some(*i),
            Value::Bool(b) => Some(*b as i64),
            _ => None,
        };
        if let (Some(x), Some(y)) = (num(a), num(b)) {
            return Ok(x.cmp(&y));
        }
        if let (Value::List(x), Value::List(y)) = (a, b) {
            let xs = x.borrow().clone();
            let ys = y.borrow().clone();
            for (p, q) in xs.iter().zip(ys.iter()) {
                if !py_eq(p, q) {
                    return self.order(p, q, op);
                }
            }
            return Ok(xs.len().cmp(&ys.len()));
        }
        self.fail(
            ErrorKind::TypeError,
            format!(
                "'{}' not supported between instances of '{}' and '{}'",
                op.symbol(),
                a.type_name(),
                b.type_name()
            ),
        )
    }
}

/// Host-language `==`: numeric booleans, deep lists.
fn py_eq(a: &Value, b: &Value) -> bool {
    let num = |v: &Value| match v {
        Value::Int(i) => Some(*i),
        Value::Bool(b) => Some(*b as i64),
        _ => None,
    };
    match (a, b) {
        (Value::None, Value::None) => true,
        (Value::List(x), Value::List(y)) => {
            if std::rc::Rc::ptr_eq(x, y) {
                return true;
            }
            let xs = x.borrow();
            let ys = y.borrow();
            xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(p, q)| py_eq(p, q))
        }
        _ => match (num(a), num(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        },
    }
}

fn normalize(idx: i64, len: usize) -> Option<usize> {
    let len = len as i64;
    let k = if idx < 0 { idx + len } else { idx };
    if (0..len).contains(&k) {
        Some(k as usize)
    } else {
        None
    }
}

/// Quotient and remainder rounded toward negative infinity.
fn floor_divmod(x: i64, y: i64) -> (Option<i64>, Option<i64>) {
    let q = match x.checked_div(y) {
        Some(q) => q,
        None => return (None, None),
    };
    let r = x - q * y;
    if r != 0 && ((r < 0) != (y < 0)) {
        (q.checked_sub(1), Some(r + y))
    } else {
        (Some(q), Some(r))
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse;
    use super::*;

    fn run(src: &str, args: Vec<Value>) -> ExecResult {
        let m = parse(src).unwrap();
        interpret(&m, "f", args, Limits::default())
    }

    #[test]
    fn tail_translation() {
        let r = run("def f(a1):\n    a1.pop(0)\n    return a1", vec![Value::int_list(&[4, 1, 3])]);
        assert!(r.is_ok());
        assert_eq!(r.output.unwrap().repr(), "[1, 3]");
        assert_eq!(r.covered_lines.into_iter().collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn branch_exclusivity() {
        let src = "def f(a1):\n    if len(a1) > 2:\n        v1 = a1\n    else:\n        v1 = []\n    return v1\n";
        let r = run(src, vec![Value::int_list(&[1, 2, 3])]);
        assert_eq!(r.covered_lines.iter().copied().collect::<Vec<_>>(), vec![1, 2, 3, 6]);
        let r = run(src, vec![Value::int_list(&[1])]);
        assert_eq!(r.covered_lines.iter().copied().collect::<Vec<_>>(), vec![1, 2, 5, 6]);
    }

    #[test]
    fn infinite_loop_hits_step_limit() {
        let m = parse("def f(a1):\n    while True:\n        a1 = a1\n    return a1\n").unwrap();
        let r = interpret(&m, "f", vec![Value::int_list(&[])], Limits { max_steps: 1000, max_list_len: 10 });
        assert_eq!(r.error().unwrap().kind, ErrorKind::StepLimitExceeded);
        assert_eq!(r.steps, 1001);
    }

    #[test]
    fn python_division_semantics() {
        let src = "def f(a, b):\n    return [a // b, a % b]\n";
        for (a, b, q, r) in [(7, 2, 3, 1), (-7, 2, -4, 1), (7, -2, -4, -1), (-7, -2, 3, -1)] {
            let out = run(src, vec![Value::Int(a), Value::Int(b)]).output.unwrap();
            assert_eq!(out.repr(), format!("[{q}, {r}]"), "{a} {b}");
        }
        let r = run(src, vec![Value::Int(1), Value::Int(0)]);
        assert_eq!(r.error().unwrap().kind, ErrorKind::ZeroDivision);
    }

    #[test]
    fn negative_indexing_and_pops() {
        let src = "def f(a):\n    x = a[-1]\n    a.pop()\n    a.pop(0)\n    return [x, a]\n";
        assert_eq!(run(src, vec![Value::int_list(&[1, 2, 3, 4])]).output.unwrap().repr(), "[4, [2, 3]]");
        let r = run("def f(a):\n    a.pop(0)\n    return a\n", vec![Value::int_list(&[])]);
        assert_eq!(r.error().unwrap().kind, ErrorKind::PopFromEmpty);
        assert_eq!(r.error().unwrap().line, 2);
        let r = run("def f(a):\n    return a[3]\n", vec![Value::int_list(&[1])]);
        assert_eq!(r.error().unwrap().kind, ErrorKind::IndexOutOfRange);
    }

    #[test]
    fn aliasing_is_observable() {
        let src = "def f(a1):\n    v1 = []\n    v1.append(a1)\n    v1.append(a1)\n    for i in range(len(v1)):\n        v1[i].append(len(a1))\n    return a1\n";
        assert_eq!(run(src, vec![Value::int_list(&[0, 0, 0])]).output.unwrap().repr(), "[0, 0, 0, 3, 4]");
    }

    #[test]
    fn self_extend_doubles() {
        let src = "def f(a):\n    a.extend(a)\n    return a\n";
        assert_eq!(run(src, vec![Value::int_list(&[1, 2])]).output.unwrap().repr(), "[1, 2, 1, 2]");
    }

    #[test]
    fn overflow_is_reported() {
        let src = "def f(a):\n    return a * a\n";
        let r = run(src, vec![Value::Int(i64::MAX)]);
        assert_eq!(r.error().unwrap().kind, ErrorKind::Overflow);
    }

    #[test]
    fn bool_int_host_equality_but_strict_output() {
        let r = run("def f(a):\n    return a == 1\n", vec![Value::Bool(true)]);
        assert_eq!(r.output.unwrap(), Literal::Bool(true));
    }

    #[test]
    fn loop_control() {
        let src = "def f(n):\n    s = 0\n    for i in range(n):\n        if i % 2 == 0:\n            continue\n        if i > 6:\n            break\n        s += i\n    return s\n";
        assert_eq!(run(src, vec![Value::Int(20)]).output.unwrap(), Literal::Int(1 + 3 + 5));
    }

    #[test]
    fn determinism() {
        let src = "def f(a):\n    b = []\n    for i in range(len(a)):\n        b.append(a[i] * i)\n    return b\n";
        let x = run(src, vec![Value::int_list(&[3, 1, 2])]);
        let y = run(src, vec![Value::int_list(&[3, 1, 2])]);
        assert_eq!(x, y);
    }
}

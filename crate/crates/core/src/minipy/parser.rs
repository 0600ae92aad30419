//! Recursive-descent parser for the imperative mini-language.

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: u32,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for SyntaxError {}

const RESERVED: &[&str] = &[
    "import", "from", "class", "lambda", "with", "try", "except", "finally", "raise", "yield",
    "global", "nonlocal", "del", "assert", "async", "await", "pass", "is", "in", "as", "print",
];

pub fn parse(source: &str) -> Result<Module, SyntaxError> {
    let tokens = tokenize(source).map_err(|e| SyntaxError {
        line: e.line,
        message: e.message,
    })?;
    let mut p = Parser { tokens, pos: 0 };
    p.module()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Token {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(SyntaxError {
            line: self.peek().line,
            message: message.into(),
        })
    }

    fn describe(&self) -> String {
        match &self.peek().kind {
            TokenKind::Name(n) => format!("'{n}'"),
            TokenKind::Int { .. } => "integer literal".into(),
            TokenKind::Float => "float literal".into(),
            TokenKind::Str => "string literal".into(),
            TokenKind::Op(o) => format!("'{o}'"),
            TokenKind::Newline => "end of line".into(),
            TokenKind::Indent => "indent".into(),
            TokenKind::Dedent => "dedent".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.peek().is_op(op) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.error(format!("expected '{op}', found {}", self.describe()))
        }
    }

    fn eat_name(&mut self, name: &str) -> bool {
        if self.peek().is_name(name) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_name(&mut self, name: &str) -> PResult<()> {
        if self.eat_name(name) {
            Ok(())
        } else {
            self.error(format!("expected '{name}', found {}", self.describe()))
        }
    }

    fn identifier(&mut self) -> PResult<String> {
        match &self.peek().kind {
            TokenKind::Name(n) if !is_keyword(n) => {
                let n = n.clone();
                self.next();
                Ok(n)
            }
            _ => self.error(format!("expected identifier, found {}", self.describe())),
        }
    }

    fn expect_newline(&mut self) -> PResult<()> {
        match self.peek().kind {
            TokenKind::Newline => {
                self.next();
                Ok(())
            }
            TokenKind::Eof => Ok(()),
            _ => self.error(format!("expected end of line, found {}", self.describe())),
        }
    }

    fn module(&mut self) -> PResult<Module> {
        let mut functions = Vec::new();
        loop {
            match &self.peek().kind {
                TokenKind::Eof => break,
                TokenKind::Newline => {
                    self.next();
                }
                TokenKind::Name(n) if n == "def" => functions.push(self.function()?),
                _ => return self.error(format!("expected function definition, found {}", self.describe())),
            }
        }
        if functions.is_empty() {
            return self.error("no function definition");
        }
        Ok(Module { functions })
    }

    fn function(&mut self) -> PResult<FunctionDef> {
        let line = self.peek().line;
        self.expect_name("def")?;
        let name = self.identifier()?;
        self.expect_op("(")?;
        let mut params = Vec::new();
        while !self.peek().is_op(")") {
            let p = self.identifier()?;
            if params.contains(&p) {
                return self.error(format!("duplicate parameter '{p}'"));
            }
            params.push(p);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        self.expect_op(":")?;
        let body = self.block()?;
        Ok(FunctionDef {
            name,
            params,
            body,
            line,
        })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        if !matches!(self.peek().kind, TokenKind::Newline) {
            // `if x: return y` form
            let stmt = self.simple_statement()?;
            self.expect_newline()?;
            return Ok(vec![stmt]);
        }
        self.next();
        if !matches!(self.peek().kind, TokenKind::Indent) {
            return self.error("expected an indented block");
        }
        self.next();
        let mut body = Vec::new();
        loop {
            match self.peek().kind {
                TokenKind::Dedent => {
                    self.next();
                    break;
                }
                TokenKind::Eof => break,
                _ => body.push(self.statement()?),
            }
        }
        Ok(body)
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let line = self.peek().line;
        if let TokenKind::Name(n) = &self.peek().kind {
            match n.as_str() {
                "if" => return self.if_statement(),
                "for" => {
                    self.next();
                    let var = self.identifier()?;
                    self.expect_name("in")?;
                    self.expect_name("range")?;
                    self.expect_op("(")?;
                    let mut range = Vec::new();
                    while !self.peek().is_op(")") {
                        range.push(self.expr()?);
                        if !self.eat_op(",") {
                            break;
                        }
                    }
                    self.expect_op(")")?;
                    if range.is_empty() || range.len() > 3 {
                        return Err(SyntaxError {
                            line,
                            message: "range() takes 1 to 3 arguments".into(),
                        });
                    }
                    self.expect_op(":")?;
                    let body = self.block()?;
                    return Ok(Stmt {
                        kind: StmtKind::For { var, range, body },
                        line,
                    });
                }
                "while" => {
                    self.next();
                    let cond = self.expr()?;
                    self.expect_op(":")?;
                    let body = self.block()?;
                    return Ok(Stmt {
                        kind: StmtKind::While { cond, body },
                        line,
                    });
                }
                "def" => return self.error("nested function definitions are not supported"),
                "elif" | "else" => return self.error(format!("unexpected '{n}'")),
                _ => {}
            }
        }
        let stmt = self.simple_statement()?;
        self.expect_newline()?;
        Ok(stmt)
    }

    fn if_statement(&mut self) -> PResult<Stmt> {
        let line = self.peek().line;
        self.expect_name("if")?;
        let mut branches = Vec::new();
        let cond = self.expr()?;
        self.expect_op(":")?;
        let body = self.block()?;
        branches.push(Branch { cond, body, line });
        let mut orelse = None;
        loop {
            let l = self.peek().line;
            if self.eat_name("elif") {
                let cond = self.expr()?;
                self.expect_op(":")?;
                let body = self.block()?;
                branches.push(Branch { cond, body, line: l });
            } else if self.eat_name("else") {
                self.expect_op(":")?;
                let body = self.block()?;
                orelse = Some(ElseBlock { body, line: l });
                break;
            } else {
                break;
            }
        }
        Ok(Stmt {
            kind: StmtKind::If { branches, orelse },
            line,
        })
    }

    fn simple_statement(&mut self) -> PResult<Stmt> {
        let line = self.peek().line;
        if let TokenKind::Name(n) = &self.peek().kind {
            match n.as_str() {
                "return" => {
                    self.next();
                    let value = if matches!(self.peek().kind, TokenKind::Newline | TokenKind::Eof) {
                        None
                    } else {
                        Some(self.expr()?)
                    };
                    return Ok(Stmt {
                        kind: StmtKind::Return(value),
                        line,
                    });
                }
                "break" => {
                    self.next();
                    return Ok(Stmt {
                        kind: StmtKind::Break,
                        line,
                    });
                }
                "continue" => {
                    self.next();
                    return Ok(Stmt {
                        kind: StmtKind::Continue,
                        line,
                    });
                }
                _ => {}
            }
        }
        let lhs = self.expr_list()?;
        if self.eat_op("=") {
            let targets = lhs
                .into_iter()
                .map(|e| to_target(e).ok_or(()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| SyntaxError {
                    line,
                    message: "cannot assign to expression".into(),
                })?;
            let values = self.expr_list()?;
            if self.peek().is_op("=") {
                return self.error("chained assignment is not supported");
            }
            return Ok(Stmt {
                kind: StmtKind::Assign { targets, values },
                line,
            });
        }
        for (sym, op) in [
            ("+=", BinOp::Add),
            ("-=", BinOp::Sub),
            ("*=", BinOp::Mul),
            ("//=", BinOp::FloorDiv),
            ("%=", BinOp::Mod),
        ] {
            if self.eat_op(sym) {
                if lhs.len() != 1 {
                    return self.error("illegal expression for augmented assignment");
                }
                let target = to_target(lhs.into_iter().next().unwrap()).ok_or(SyntaxError {
                    line,
                    message: "illegal expression for augmented assignment".into(),
                })?;
                let value = self.expr()?;
                return Ok(Stmt {
                    kind: StmtKind::AugAssign { target, op, value },
                    line,
                });
            }
        }
        if lhs.len() != 1 {
            return Err(SyntaxError {
                line,
                message: "tuple expressions are not supported".into(),
            });
        }
        Ok(Stmt {
            kind: StmtKind::Expr(lhs.into_iter().next().unwrap()),
            line,
        })
    }

    fn expr_list(&mut self) -> PResult<Vec<Expr>> {
        let mut out = vec![self.expr()?];
        while self.eat_op(",") {
            if self.peek().is_op("=") || matches!(self.peek().kind, TokenKind::Newline | TokenKind::Eof) {
                break;
            }
            out.push(self.expr()?);
        }
        Ok(out)
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_name("or") {
            let rhs = self.and_expr()?;
            lhs = Expr::BoolOp(BoolOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat_name("and") {
            let rhs = self.not_expr()?;
            lhs = Expr::BoolOp(BoolOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_name("not") {
            let inner = self.not_expr()?;
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(inner)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let first = self.arith()?;
        let mut rest = Vec::new();
        loop {
            let op = match &self.peek().kind {
                TokenKind::Op(o) => CmpOp::from_symbol(o),
                _ => None,
            };
            match op {
                Some(op) => {
                    self.next();
                    rest.push((op, self.arith()?));
                }
                None => break,
            }
        }
        if self.peek().is_name("in") || self.peek().is_name("is") {
            return self.error(format!("operator {} is not supported", self.describe()));
        }
        if rest.is_empty() {
            Ok(first)
        } else {
            Ok(Expr::Compare(Box::new(first), rest))
        }
    }

    fn arith(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.peek().is_op("+") {
                BinOp::Add
            } else if self.peek().is_op("-") {
                BinOp::Sub
            } else {
                break;
            };
            self.next();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match &self.peek().kind {
                TokenKind::Op("*") => BinOp::Mul,
                TokenKind::Op("//") => BinOp::FloorDiv,
                TokenKind::Op("%") => BinOp::Mod,
                TokenKind::Op("/") => return self.error("true division is not supported"),
                _ => break,
            };
            self.next();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_op("-") {
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?)));
        }
        if self.eat_op("+") {
            return Ok(Expr::Unary(UnaryOp::Pos, Box::new(self.unary()?)));
        }
        if self.peek().is_op("**") {
            return self.error("'**' is not supported");
        }
        let e = self.postfix()?;
        if self.peek().is_op("**") {
            return self.error("'**' is not supported");
        }
        Ok(e)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.eat_op("[") {
                if self.peek().is_op(":") {
                    return self.error("slicing is not supported");
                }
                let idx = self.expr()?;
                if self.peek().is_op(":") {
                    return self.error("slicing is not supported");
                }
                self.expect_op("]")?;
                e = Expr::Index(Box::new(e), Box::new(idx));
            } else if self.peek().is_op(".") {
                self.next();
                let name = self.identifier()?;
                let method = match name.as_str() {
                    "append" => Method::Append,
                    "extend" => Method::Extend,
                    "pop" => Method::Pop,
                    other => return self.error(format!("unsupported method '{other}'")),
                };
                self.expect_op("(")?;
                let mut args = Vec::new();
                while !self.peek().is_op(")") {
                    args.push(self.expr()?);
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op(")")?;
                let ok = match method {
                    Method::Append | Method::Extend => args.len() == 1,
                    Method::Pop => args.len() <= 1,
                };
                if !ok {
                    return self.error(format!("wrong number of arguments to {}()", method.name()));
                }
                e = Expr::MethodCall {
                    receiver: Box::new(e),
                    method,
                    args,
                };
            } else if self.peek().is_op("(") {
                return self.error("unsupported call");
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let tok = self.peek().clone();
        match &tok.kind {
            TokenKind::Int { value, decimal } => {
                self.next();
                match (value, decimal) {
                    (Some(v), true) => Ok(Expr::Int(*v)),
                    _ => Err(SyntaxError {
                        line: tok.line,
                        message: "integer literal out of range or in unsupported base".into(),
                    }),
                }
            }
            TokenKind::Float => self.error("float literals are not supported"),
            TokenKind::Str => self.error("string literals are not supported"),
            TokenKind::Name(n) => match n.as_str() {
                "True" => {
                    self.next();
                    Ok(Expr::Bool(true))
                }
                "False" => {
                    self.next();
                    Ok(Expr::Bool(false))
                }
                "None" => {
                    self.next();
                    Ok(Expr::None)
                }
                "len" if self.peek_at(1).is_op("(") => {
                    self.next();
                    self.next();
                    let arg = self.expr()?;
                    self.expect_op(")")?;
                    Ok(Expr::Len(Box::new(arg)))
                }
                _ if is_keyword(n) => self.error(format!("unsupported syntax '{n}'")),
                _ => {
                    self.next();
                    if self.peek().is_op("(") {
                        return Err(SyntaxError {
                            line: tok.line,
                            message: format!("unsupported call to '{n}'"),
                        });
                    }
                    Ok(Expr::Name(n.clone()))
                }
            },
            TokenKind::Op("(") => {
                self.next();
                let e = self.expr()?;
                if self.peek().is_op(",") {
                    return self.error("tuples are not supported");
                }
                self.expect_op(")")?;
                Ok(e)
            }
            TokenKind::Op("[") => {
                self.next();
                let mut items = Vec::new();
                while !self.peek().is_op("]") {
                    items.push(self.expr()?);
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op("]")?;
                Ok(Expr::List(items))
            }
            _ => self.error(format!("unexpected {}", self.describe())),
        }
    }
}

fn is_keyword(n: &str) -> bool {
    RESERVED.contains(&n)
        || matches!(
            n,
            "def" | "return" | "if" | "elif" | "else" | "for" | "while" | "break" | "continue"
                | "and" | "or" | "not" | "True" | "False" | "None"
        )
}

fn to_target(e: Expr) -> Option<Target> {
    match e {
        Expr::Name(n) => Some(Target::Name(n)),
        Expr::Index(base, index) => Some(Target::Index {
            base: *base,
            index: *index,
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_statement_function() {
        let m = parse("def f(a1):\n    return len(a1)").unwrap();
        let f = m.function("f").unwrap();
        assert_eq!(f.params, vec!["a1"]);
        assert_eq!(f.body.len(), 1);
        assert_eq!(f.statement_count() + 1, 2);
    }

    #[test]
    fn import_is_rejected_with_line() {
        let err = parse("def f(a):\n    import os\n    return a\n").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn table_one_fragments_parse() {
        for frag in ["a + b", "a < b", "a and b", "1"] {
            let src = format!("def f(a, b):\n    return {frag}\n");
            parse(&src).unwrap_or_else(|e| panic!("{frag}: {e}"));
        }
        parse("def f(a):\n    for i in range(a):\n        continue\n    return a\n").unwrap();
    }

    #[test]
    fn tuple_init_and_subscript_assign() {
        let m = parse("def f(a1):\n    v1, v2 = [], []\n    a1[0] = len(v1)\n    return a1\n").unwrap();
        match &m.functions[0].body[0].kind {
            StmtKind::Assign { targets, values } => {
                assert_eq!(targets.len(), 2);
                assert_eq!(values.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn if_elif_else_lines() {
        let src = "def f(x):\n    if x < 0:\n        return 0\n    elif x == 0:\n        return 1\n    else:\n        return 2\n";
        let m = parse(src).unwrap();
        match &m.functions[0].body[0].kind {
            StmtKind::If { branches, orelse } => {
                assert_eq!(branches.iter().map(|b| b.line).collect::<Vec<_>>(), vec![2, 4]);
                assert_eq!(orelse.as_ref().unwrap().line, 6);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_language() {
        for bad in [
            "def f(a):\n    pass\n",
            "def f(a):\n    return a[1:]\n",
            "def f(a):\n    return 'x'\n",
            "def f(a):\n    return 1.5\n",
            "def f(a):\n    return sorted(a)\n",
            "def f(a):\n    return a / 2\n",
            "x = 1\n",
        ] {
            assert!(parse(bad).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn precedence() {
        let m = parse("def f(a, b):\n    return not a + 1 * b < 3 and b\n").unwrap();
        let StmtKind::Return(Some(Expr::BoolOp(BoolOp::And, lhs, _))) = &m.functions[0].body[0].kind else {
            panic!()
        };
        assert!(matches!(**lhs, Expr::Unary(UnaryOp::Not, _)));
    }
}

//! The imperative mini-language: a small, host-language-compatible subset
//! with functions, lists, loops and conditionals. It is the execution
//! substrate for ground truth, mutant filtering and coverage comparison.

pub mod ast;
pub mod interp;
pub mod lexer;
pub mod literal;
pub mod parser;
pub mod value;

pub use ast::Module;
pub use interp::{interpret, ErrorKind, ExecResult, ExecStatus, Limits, RuntimeError};
pub use literal::{args_repr, parse_args, parse_literal, Literal, LiteralError};
pub use parser::{parse, SyntaxError};
pub use value::Value;

/// Parses `source`, converts `args` into fresh runtime values and runs
/// `function`.
pub fn run_source(
    source: &str,
    function: &str,
    args: &[Literal],
    limits: Limits,
) -> Result<ExecResult, RunError> {
    let module = parse(source)?;
    let values = args
        .iter()
        .map(Value::from_literal)
        .collect::<Result<Vec<_>, _>>()
        .map_err(RunError::Input)?;
    Ok(interpret(&module, function, values, limits))
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("unsupported input: {0}")]
    Input(String),
}

//! Typed list-processing language: primitives, type inference, structural
//! constraints and a reference evaluator.

pub mod check;
pub mod eval;
pub mod term;
pub mod types;

pub use check::{
    check_constraints, typecheck, typecheck_program, ConstraintSet, Phase, Rule, RuntimeRule, TypeError, Violation,
    LITERAL_MAX, LITERAL_MIN,
};
pub use eval::{eval_dsl, EvalError};
pub use term::{Flat, Node, ParseTermError, Prim, Term};
pub use types::{Subst, Type};

#[derive(Debug, Clone)]
pub struct Dsl {
    pub primitives: Vec<Prim>,
    pub literals: Vec<i64>,
    pub constraints: ConstraintSet,
}

/// The list DSL with its full constraint set.
pub fn list_dsl() -> Dsl {
    Dsl {
        primitives: Prim::ALL.to_vec(),
        literals: (LITERAL_MIN..=LITERAL_MAX).collect(),
        constraints: ConstraintSet::default(),
    }
}

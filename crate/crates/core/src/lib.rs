//! Generation of in- and out-of-distribution programs, execution with
//! coverage tracing, and evaluation of language models on execution
//! prediction and execution choice.
//!
//! The pipeline, bottom-up:
//!
//! * [`dsl`]: a typed list-processing language and a reference evaluator.
//! * [`grammar`]: compiles the language into a weighted grammar and samples
//!   programs and inputs from it.
//! * [`transpile`]: lowers sampled terms to imperative source.
//! * [`minipy`]: parses and runs that source with line coverage.
//! * [`mutate`]: single-token mutants, filtered and picked by coverage.
//! * [`executor`]: in-process and subprocess execution backends.
//! * [`datasets`]: problem sets.
//! * [`llm`], [`harness`], [`metrics`]: model access, experiments, scores.

pub mod config;
pub mod datasets;
pub mod dsl;
pub mod executor;
pub mod grammar;
pub mod harness;
pub mod llm;
pub mod manifest;
pub mod metrics;
pub mod minipy;
pub mod mutate;
pub mod transpile;
pub mod util;

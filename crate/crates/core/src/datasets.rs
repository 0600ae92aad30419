//! Problem sets: the sampled DSL list corpus, the model-generated list
//! corpus, and ingestion of externally supplied programs.

use crate::dsl::{list_dsl, Term, Type};
use crate::executor::{ExecRequest, Execution, Executor, ExecutorError, ExecutorKind, Executors};
use crate::grammar::{self, GrammarError, RejectionStats, SamplerConfig, TranspiledRunner, ValidProgram};
use crate::llm::{ChatModel, LlmError, Message};
use crate::minipy::lexer::{tokenize, TokenKind};
use crate::minipy::{args_repr, Literal};
use crate::mutate::MutationInfo;
use crate::transpile;
use crate::util::{derived_rng, read_jsonl, write_jsonl};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::Mutex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetTag {
    DslList,
    LlmList,
    External,
}

impl std::fmt::Display for DatasetTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DatasetTag::DslList => "dsl-list",
            DatasetTag::LlmList => "llm-list",
            DatasetTag::External => "external",
        })
    }
}

/// A program, one input, and the ground-truth output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub dataset: DatasetTag,
    pub source: String,
    pub function_name: String,
    /// Argument list text, e.g. `[4, 1, 3], [0]`.
    pub input: String,
    /// Canonical representation of the return value.
    pub output: String,
    pub loc: usize,
    pub executor: ExecutorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation_info: Option<MutationInfo>,
    /// Originating DSL term, for sampled programs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dsl: Option<String>,
}

impl Problem {
    pub fn request(&self, trace: bool) -> ExecRequest {
        ExecRequest {
            source: self.source.clone(),
            function_name: self.function_name.clone(),
            input: self.input.clone(),
            trace,
        }
    }

    /// Whether the ground truth is a boolean.
    pub fn boolean_output(&self) -> bool {
        matches!(self.output.as_str(), "True" | "False")
    }
}

pub fn save_problems(path: &Path, problems: &[Problem]) -> std::io::Result<()> {
    write_jsonl(path, problems)
}

pub fn load_problems(path: &Path) -> std::io::Result<Vec<Problem>> {
    read_jsonl(path)
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("LOC bin [{lo}, {hi}) for {signature} has {available} programs, {needed} needed")]
    InsufficientBinPopulation { signature: String, lo: usize, hi: usize, available: usize, needed: usize },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Executor(#[from] ExecutorError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Half-open LOC bins used for the DSL list corpus.
pub const LOC_BINS: [(usize, usize); 5] = [(4, 8), (8, 12), (12, 16), (16, 20), (20, 24)];

#[derive(Clone, Debug)]
pub struct DslListConfig {
    pub seed: u64,
    /// Weights, input ranges and attempt limits; type and depth are set per pool.
    pub sampler: SamplerConfig,
    pub arities: Vec<usize>,
    pub depths: Vec<usize>,
    pub pool_size: usize,
    pub bins: Vec<(usize, usize)>,
    pub per_bin: usize,
}

impl Default for DslListConfig {
    fn default() -> Self {
        DslListConfig {
            seed: 0,
            sampler: SamplerConfig::default(),
            arities: vec![1, 2],
            depths: vec![4, 5],
            pool_size: 1000,
            bins: LOC_BINS.to_vec(),
            per_bin: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DslProgram {
    pub index: usize,
    pub dsl: String,
    pub arity: usize,
    pub depth: usize,
    pub loc: usize,
    pub source: String,
}

#[derive(Clone, Debug)]
pub struct DslListBuild {
    pub problems: Vec<Problem>,
    pub programs: Vec<DslProgram>,
    /// Rejection statistics per `arity/depth` pool.
    pub stats: BTreeMap<String, RejectionStats>,
    /// Distinct programs per arity after merging the depth pools.
    pub distinct: BTreeMap<usize, usize>,
}

fn sample_pool(config: &DslListConfig, arity: usize, depth: usize) -> Result<(Vec<ValidProgram>, RejectionStats), GrammarError> {
    let mut sc = config.sampler.clone();
    sc.program_type = Type::program(arity);
    sc.max_depth = depth;
    let dsl = list_dsl();
    let cfg = sc.compile(&dsl)?;
    let mut rng = derived_rng(config.seed, &format!("dsl-list/{arity}/{depth}"));
    let mut stats = RejectionStats::default();
    let runner = TranspiledRunner::default();
    let pool = (0..config.pool_size)
        .map(|_| grammar::sample_valid_program(&cfg, &sc, &dsl.constraints, &runner, &mut rng, &mut stats))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((pool, stats))
}

/// Samples a pool per (arity, depth), then selects `per_bin` programs per
/// LOC bin and arity, each with its sampled inputs.
pub fn build_dsl_list(config: &DslListConfig) -> Result<DslListBuild, DatasetError> {
    let combos: Vec<(usize, usize)> =
        config.arities.iter().flat_map(|&a| config.depths.iter().map(move |&d| (a, d))).collect();
    let pools: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = combos.iter().map(|&(a, d)| s.spawn(move || sample_pool(config, a, d))).collect();
        handles.into_iter().map(|h| h.join().expect("sampler thread")).collect()
    });
    let mut stats = BTreeMap::new();
    let mut by_arity: BTreeMap<usize, Vec<(ValidProgram, usize)>> = BTreeMap::new();
    for (&(a, d), pool) in combos.iter().zip(pools) {
        let (programs, st) = pool?;
        stats.insert(format!("{a}/{d}"), st);
        by_arity.entry(a).or_default().extend(programs.into_iter().map(|p| (p, d)));
    }

    let mut problems = Vec::new();
    let mut programs = Vec::new();
    let mut distinct = BTreeMap::new();
    for &arity in &config.arities {
        let mut seen = HashSet::new();
        let mut pool = Vec::new();
        for (p, depth) in by_arity.remove(&arity).unwrap_or_default() {
            if seen.insert(p.term.to_string()) {
                let imp = transpile::translate(&p.term, arity).map_err(|e| DatasetError::Format(e.to_string()))?;
                pool.push((p, depth, imp));
            }
        }
        distinct.insert(arity, pool.len());
        let mut rng = derived_rng(config.seed, &format!("dsl-list/select/{arity}"));
        for &(lo, hi) in &config.bins {
            let members: Vec<usize> = (0..pool.len()).filter(|&i| (lo..hi).contains(&pool[i].2.loc)).collect();
            if members.len() < config.per_bin {
                return Err(DatasetError::InsufficientBinPopulation {
                    signature: Type::program(arity).to_string(),
                    lo,
                    hi,
                    available: members.len(),
                    needed: config.per_bin,
                });
            }
            let mut picked = rand::seq::index::sample(&mut rng, members.len(), config.per_bin).into_vec();
            picked.sort_unstable();
            for k in picked {
                let (p, depth, imp) = &pool[members[k]];
                let index = programs.len();
                programs.push(DslProgram {
                    index,
                    dsl: p.term.to_string(),
                    arity,
                    depth: *depth,
                    loc: imp.loc,
                    source: imp.source.clone(),
                });
                for (j, (args, out)) in p.inputs.iter().zip(&p.outputs).enumerate() {
                    problems.push(Problem {
                        id: format!("dsl-{index:03}-{j}"),
                        dataset: DatasetTag::DslList,
                        source: imp.source.clone(),
                        function_name: imp.function_name.clone(),
                        input: args_repr(args),
                        output: out.repr(),
                        loc: imp.loc,
                        executor: ExecutorKind::Builtin,
                        mutation_info: None,
                        dsl: Some(p.term.to_string()),
                    });
                }
            }
        }
    }
    Ok(DslListBuild { problems, programs, stats, distinct })
}

/// Re-parses a stored DSL term.
pub fn problem_term(p: &Problem) -> Option<Term> {
    p.dsl.as_ref().and_then(|d| d.parse().ok())
}

/// Problems whose stored output differs from a fresh execution.
pub fn verify_problems(problems: &[Problem], executors: &Executors) -> Vec<(String, String)> {
    let mut bad = Vec::new();
    for p in problems {
        let outcome = executors.get(p.executor).and_then(|e| e.execute(&p.request(false)));
        match outcome {
            Ok(r) if r.is_ok() && r.output_repr.as_deref() == Some(p.output.as_str()) => {}
            Ok(r) => bad.push((p.id.clone(), format!("{:?} {:?}", r.output_repr, r.error_kind()))),
            Err(e) => bad.push((p.id.clone(), e.to_string())),
        }
    }
    bad
}

/// A function to implement: signature-style header and description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub header: String,
    pub name: String,
    pub description: String,
}

/// Parses lines of the form `1. "name(args)": "description"`.
pub fn parse_function_list(text: &str) -> Vec<FunctionSpec> {
    text.lines().filter_map(parse_function_line).collect()
}

fn parse_function_line(line: &str) -> Option<FunctionSpec> {
    let line = line.trim();
    let digits = line.find(|c: char| !c.is_ascii_digit())?;
    if digits == 0 {
        return None;
    }
    let rest = line[digits..].strip_prefix(['.', ')'])?.trim_start();
    let rest = rest.strip_prefix('"')?;
    let close = rest.find('"')?;
    let header = rest[..close].trim();
    let rest = rest[close + 1..].trim_start().strip_prefix(':')?.trim();
    let description = rest.strip_prefix('"')?.strip_suffix(['"', ','].as_slice()).map(|d| d.trim_end_matches('"'))?;
    let name = header.split('(').next()?.trim();
    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return None;
    }
    Some(FunctionSpec { header: header.to_string(), name: name.to_string(), description: description.trim().to_string() })
}

/// The sorting and searching functions appended to every brainstormed list.
pub fn fixed_functions() -> Vec<FunctionSpec> {
    parse_function_list(include_str!("../data/fixed_headers.txt"))
}

pub const BRAINSTORM_PROMPT: &str = r#"Your task is to brainstorm a list of 100 known / common list functions in Python. These could be standard textbook algorithms or simple utility functions. Some examples are length, reverse, unique, compact, flatten, insert, index, union, tail, permutations, order-by, mean, median, range, argmax.

Each function you come up with must satisfy the following conditions:
- Takes in a list of integers as one of the parameters and returns a list, integer, or boolean after doing some processing on the input.
- Does NOT contain random operations.
- Does NOT involve substantial floating-point operations.
- Does NOT rely on any imports (e.g., numpy or the Python standard library).

Try to have as much variability in the types of operations; for any class or variations of operations, have at most 2-3. Structure your response in the following manner. The name should be a function signature (e.g., length(lst)), and the description should encapsulate the expected behavior of the function.

1. "[name]": "[description]"
2. "[name]": "[description]"
3. "[name]": "[description]"
..."#;

pub fn codegen_prompt(f: &FunctionSpec) -> String {
    format!(
        "Your task is to write a Python function `{}` that {}. You may use built-ins, but limit your usage so the function has enough logic in it; you are not allowed to use numpy. Make the logic in your function as explicit as possible, and make sure that the result returned by your function is deterministic. Do not include comments, and do not output any extra information.",
        f.header, f.description
    )
}

pub const EXCLUSION_SUFFIX: &str = "Do NOT include the following inputs:";

pub fn inputgen_prompt(name: &str, description: &str, code: &str, excluded: &[String]) -> String {
    let mut instruction = format!(
        "You are given a Python function named `{name}` below, which {description}. Your goal is to generate 3 simple test inputs for this function that comprehensively test all functionality of the `{name}` function and produce no errors when executed. Do NOT include any extra information and put each input on a separate line. If the input contains multiple arguments, separate them by commas. Do NOT include floating-point values. Make sure that lists contain only a few elements, but are not empty."
    );
    if !excluded.is_empty() {
        instruction.push_str(&format!(" {EXCLUSION_SUFFIX} {}", excluded.join(", ")));
    }
    format!("{instruction}\n\n```python\n{code}\n```")
}

/// The input-generation conversation, led by the worked `add` example.
pub fn inputgen_messages(f: &FunctionSpec, code: &str, excluded: &[String]) -> Vec<Message> {
    vec![
        Message::user(inputgen_prompt("add", "returns the sum of two numbers", "def add(a, b):\n    return a + b", &[])),
        Message::assistant("3, 5\n-2, 7\n0, 0"),
        Message::user(inputgen_prompt(&f.name, &f.description, code, excluded)),
    ]
}

/// Strips a surrounding markdown code fence, if any.
pub fn extract_code(text: &str) -> String {
    if let Some(start) = text.find("```") {
        let body = &text[start + 3..];
        let body = body.split_once('\n').map_or("", |(_, b)| b);
        let end = body.find("```").unwrap_or(body.len());
        return body[..end].trim_end().to_string();
    }
    text.trim().to_string()
}

fn parse_input_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("```"))
        .map(String::from)
        .collect()
}

fn has_float(text: &str) -> bool {
    tokenize(text).map_or(false, |ts| ts.iter().any(|t| t.kind == TokenKind::Float))
}

#[derive(Clone, Debug)]
pub struct LlmListConfig {
    pub inputs_per_function: usize,
    /// Input regenerations allowed after the first attempt.
    pub retry_cap: usize,
}

impl Default for LlmListConfig {
    fn default() -> Self {
        LlmListConfig { inputs_per_function: 3, retry_cap: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationFailure {
    pub function: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct LlmListBuild {
    pub functions: Vec<FunctionSpec>,
    pub problems: Vec<Problem>,
    pub failures: Vec<GenerationFailure>,
}

fn first_text(model: &dyn ChatModel, messages: &[Message]) -> Result<String, LlmError> {
    let r = model.complete(messages, 1).into_iter().next().expect("one sample")?;
    Ok(r.text)
}

/// Generates code and inputs for one function, regenerating inputs that
/// error or involve floats.
fn generate_function(
    model: &dyn ChatModel,
    executor: &dyn Executor,
    f: &FunctionSpec,
    config: &LlmListConfig,
) -> Result<(String, Vec<(String, Execution)>), String> {
    let code = extract_code(&first_text(model, &[Message::user(codegen_prompt(f))]).map_err(|e| e.to_string())?);
    let mut excluded: Vec<String> = Vec::new();
    for _ in 0..=config.retry_cap {
        let text = first_text(model, &inputgen_messages(f, &code, &excluded)).map_err(|e| e.to_string())?;
        let lines = parse_input_lines(&text);
        let mut good = Vec::new();
        let mut bad = Vec::new();
        for line in lines.into_iter().take(config.inputs_per_function) {
            if has_float(&line) {
                bad.push(line);
                continue;
            }
            let req = ExecRequest { source: code.clone(), function_name: f.name.clone(), input: line.clone(), trace: false };
            let r = match executor.execute(&req) {
                Ok(r) => r,
                Err(ExecutorError::Unsupported(_)) => {
                    bad.push(line);
                    continue;
                }
                Err(e) => return Err(e.to_string()),
            };
            if r.is_ok() && !r.output_repr.as_deref().is_some_and(has_float) {
                good.push((line, r));
            } else {
                bad.push(line);
            }
        }
        if bad.is_empty() && good.len() == config.inputs_per_function {
            return Ok((code, good));
        }
        for b in bad {
            if !excluded.contains(&b) {
                excluded.push(b);
            }
        }
    }
    Err(format!("input generation retries exhausted for {}", f.header))
}

/// Brainstorms functions, appends the fixed sorting and searching headers,
/// then generates code, inputs and ground truth for each.
pub fn build_llm_list(model: &dyn ChatModel, executor: &dyn Executor, config: &LlmListConfig) -> Result<LlmListBuild, DatasetError> {
    let listing = first_text(model, &[Message::user(BRAINSTORM_PROMPT)])?;
    let mut functions = parse_function_list(&listing);
    if functions.is_empty() {
        return Err(DatasetError::Format("brainstorm response contains no functions".into()));
    }
    functions.extend(fixed_functions());
    let results: Vec<Mutex<Option<Result<(String, Vec<(String, Execution)>), String>>>> =
        functions.iter().map(|_| Mutex::new(None)).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..model.parallelism().max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some(f) = functions.get(i) else { break };
                *results[i].lock().unwrap() = Some(generate_function(model, executor, f, config));
            });
        }
    });
    let mut out = LlmListBuild { functions: functions.clone(), ..Default::default() };
    for (i, (f, r)) in functions.iter().zip(results).enumerate() {
        match r.into_inner().unwrap().expect("every function processed") {
            Ok((code, inputs)) => {
                for (j, (input, exec)) in inputs.into_iter().enumerate() {
                    out.problems.push(Problem {
                        id: format!("llm-{i:03}-{j}"),
                        dataset: DatasetTag::LlmList,
                        loc: transpile::loc(&code),
                        source: code.clone(),
                        function_name: f.name.clone(),
                        input,
                        output: exec.output_repr.unwrap_or_default(),
                        executor: executor.kind(),
                        mutation_info: None,
                        dsl: None,
                    });
                }
            }
            Err(reason) => out.failures.push(GenerationFailure { function: f.header.clone(), reason }),
        }
    }
    Ok(out)
}

/// One externally supplied program-input pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalRecord {
    #[serde(default)]
    pub id: Option<String>,
    pub source: String,
    pub function_name: String,
    pub input: String,
}

#[derive(Clone, Debug)]
pub struct IngestConfig {
    pub min_chars: usize,
    pub max_chars: usize,
    /// Executed-step ceiling; `None` disables the filter.
    pub max_steps: Option<u64>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { min_chars: 100, max_chars: 800, max_steps: Some(1000) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum RejectReason {
    Length { chars: usize },
    Duplicate,
    ExecutionError { kind: String, message: String },
    Nondeterministic { first: String, second: String },
    TooManySteps { steps: u64 },
    FloatValue,
    Executor { message: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub index: usize,
    pub id: String,
    #[serde(flatten)]
    pub reason: RejectReason,
}

#[derive(Clone, Debug, Default)]
pub struct IngestOutcome {
    pub problems: Vec<Problem>,
    pub rejections: Vec<Rejection>,
}

fn ingest_one(r: &ExternalRecord, executor: &dyn Executor, config: &IngestConfig) -> Result<Execution, RejectReason> {
    let chars = r.source.chars().count();
    if chars < config.min_chars || chars > config.max_chars {
        return Err(RejectReason::Length { chars });
    }
    let req = ExecRequest { source: r.source.clone(), function_name: r.function_name.clone(), input: r.input.clone(), trace: false };
    let run = || executor.execute(&req).map_err(|e| RejectReason::Executor { message: e.to_string() });
    let first = run()?;
    if let Some(e) = &first.error {
        return Err(RejectReason::ExecutionError { kind: e.kind.clone(), message: e.message.clone() });
    }
    let second = run()?;
    if second.output_repr != first.output_repr || second.status != first.status {
        return Err(RejectReason::Nondeterministic {
            first: first.output_repr.unwrap_or_default(),
            second: second.output_repr.unwrap_or_default(),
        });
    }
    if let Some(max) = config.max_steps {
        if first.steps > max {
            return Err(RejectReason::TooManySteps { steps: first.steps });
        }
    }
    if first.output_repr.as_deref().is_some_and(has_float) {
        return Err(RejectReason::FloatValue);
    }
    Ok(first)
}

/// Executes each record for ground truth and applies the length,
/// determinism and step filters. Exact duplicates are dropped.
pub fn ingest_external(records: &[ExternalRecord], executor: &dyn Executor, config: &IngestConfig) -> IngestOutcome {
    let ids: Vec<String> =
        records.iter().enumerate().map(|(i, r)| r.id.clone().unwrap_or_else(|| format!("ext-{i:04}"))).collect();
    let mut seen = HashSet::new();
    let duplicate: Vec<bool> =
        records.iter().map(|r| !seen.insert((r.source.clone(), r.function_name.clone(), r.input.clone()))).collect();
    let results: Vec<Mutex<Option<Result<Execution, RejectReason>>>> = records.iter().map(|_| Mutex::new(None)).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).min(records.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some(r) = records.get(i) else { break };
                let out = if duplicate[i] { Err(RejectReason::Duplicate) } else { ingest_one(r, executor, config) };
                *results[i].lock().unwrap() = Some(out);
            });
        }
    });
    let mut out = IngestOutcome::default();
    for (i, (r, res)) in records.iter().zip(results).enumerate() {
        match res.into_inner().unwrap().expect("every record processed") {
            Ok(exec) => out.problems.push(Problem {
                id: ids[i].clone(),
                dataset: DatasetTag::External,
                source: r.source.clone(),
                function_name: r.function_name.clone(),
                input: r.input.clone(),
                output: exec.output_repr.unwrap_or_default(),
                loc: transpile::loc(&r.source),
                executor: executor.kind(),
                mutation_info: None,
                dsl: None,
            }),
            Err(reason) => out.rejections.push(Rejection { index: i, id: ids[i].clone(), reason }),
        }
    }
    out
}

pub fn ingest_file(path: &Path, executor: &dyn Executor, config: &IngestConfig) -> Result<IngestOutcome, DatasetError> {
    let records: Vec<ExternalRecord> = read_jsonl(path)?;
    Ok(ingest_external(&records, executor, config))
}

/// Parses a stored output back into a literal.
pub fn output_literal(p: &Problem) -> Option<Literal> {
    crate::minipy::parse_literal(&p.output).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::BuiltinExecutor;
    use crate::llm::{MockBehavior, MockModel};

    #[test]
    fn parses_numbered_function_lines() {
        let fs = parse_function_list("Here you go:\n1. \"remove(lst, value)\": \"removes all occurrences of value\"\n2) \"length(lst)\": \"returns the length\",\nnot a line\n");
        assert_eq!(fs.len(), 2);
        assert_eq!(fs[0].header, "remove(lst, value)");
        assert_eq!(fs[0].name, "remove");
        assert_eq!(fs[0].description, "removes all occurrences of value");
        assert_eq!(fs[1].description, "returns the length");
        assert_eq!(fixed_functions().len(), 12);
    }

    #[test]
    fn exclusion_suffix_precedes_code() {
        let p = inputgen_prompt("g", "does g", "def g(x):\n    return x", &["[1]".into(), "2, 3".into()]);
        assert!(p.contains("but are not empty. Do NOT include the following inputs: [1], 2, 3\n\n```python\ndef g"));
    }

    #[test]
    fn code_fences_are_stripped() {
        assert_eq!(extract_code("```python\ndef f():\n    return 1\n```\n"), "def f():\n    return 1");
        assert_eq!(extract_code("def f():\n    return 1\n"), "def f():\n    return 1");
    }

    fn record(source: &str, input: &str) -> ExternalRecord {
        ExternalRecord { id: None, source: source.into(), function_name: "f".into(), input: input.into() }
    }

    #[test]
    fn ingest_filters_by_length_and_errors() {
        let pad = |body: &str| format!("def f(a):\n{body}{}\n", " ".repeat(0));
        let long_ok = pad(&format!("    total = 0\n    for i in range(len(a)):\n        total = total + a[i]\n    # {}\n    return total", "x".repeat(40)));
        assert!((100..=800).contains(&long_ok.len()), "{}", long_ok.len());
        let short = "def f(a):\n    return a\n".to_string();
        let erroring = long_ok.replace("return total", "return a[10]");
        let records = vec![record(&long_ok, "[1, 2]"), record(&short, "[1]"), record(&erroring, "[1]"), record(&long_ok, "[1, 2]")];
        let out = ingest_external(&records, &BuiltinExecutor::default(), &IngestConfig::default());
        assert_eq!(out.problems.len(), 1);
        assert_eq!(out.problems[0].output, "3");
        let reasons: Vec<&RejectReason> = out.rejections.iter().map(|r| &r.reason).collect();
        assert!(matches!(reasons[0], RejectReason::Length { .. }));
        assert!(matches!(reasons[1], RejectReason::ExecutionError { .. }));
        assert_eq!(reasons[2], &RejectReason::Duplicate);
    }

    /// Answers each pipeline prompt by its kind; the first input set for
    /// `head` contains an erroring input.
    struct ScriptedLists {
        calls: Mutex<Vec<String>>,
    }

    impl ChatModel for ScriptedLists {
        fn name(&self) -> String {
            "lists".into()
        }

        fn complete(&self, messages: &[Message], n: usize) -> Vec<Result<crate::llm::ModelResponse, LlmError>> {
            let prompt = messages.last().unwrap().content.clone();
            self.calls.lock().unwrap().push(prompt.clone());
            let text = if prompt.starts_with("Your task is to brainstorm") {
                "1. \"head(lst)\": \"returns the first element\"\n2. \"size(lst)\": \"returns the length\"".to_string()
            } else if let Some(rest) = prompt.strip_prefix("Your task is to write a Python function `") {
                let header = rest.split('`').next().unwrap();
                format!("```python\ndef {header}:\n    return len(lst)\n```")
            } else if prompt.contains("named `head`") && !prompt.contains("Do NOT include the following inputs: [0.5]") {
                "[1, 2]\n[0.5]\n[3]".to_string()
            } else if prompt.contains("(lst, target)") {
                "[1, 2], 1\n[7], 7\n[3, 4, 5], 0".to_string()
            } else {
                "[1, 2]\n[7]\n[3, 4, 5]".to_string()
            };
            (0..n).map(|_| Ok(crate::llm::ModelResponse::text(text.clone()))).collect()
        }
    }

    #[test]
    fn llm_list_pipeline_regenerates_bad_inputs() {
        let model = ScriptedLists { calls: Mutex::new(Vec::new()) };
        let out = build_llm_list(&model, &BuiltinExecutor::default(), &LlmListConfig::default()).unwrap();
        assert_eq!(out.functions.len(), 2 + 12);
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        assert_eq!(out.problems.len(), 14 * 3);
        assert_eq!(out.problems[0].output, "2");
        let calls = model.calls.lock().unwrap();
        assert_eq!(calls.iter().filter(|c| c.contains("Do NOT include the following inputs: [0.5]")).count(), 1);
    }

    #[test]
    fn unparseable_inputs_exhaust_retries() {
        let text = "def x(:";
        let model = MockModel::new("m", MockBehavior::Fixed(format!("1. \"g(lst)\": \"g\"\n{text}")), None);
        let out = build_llm_list(&model, &BuiltinExecutor::default(), &LlmListConfig { retry_cap: 2, ..Default::default() }).unwrap();
        assert!(out.problems.is_empty());
        assert_eq!(out.failures.len(), 13);
    }
}

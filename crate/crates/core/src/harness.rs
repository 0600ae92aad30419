//! Execution prediction and execution choice experiments: prompt rendering,
//! answer extraction, judging and resumable record files.

use crate::datasets::Problem;
use crate::llm::{ChatModel, LlmError, Message, ModelResponse, PairTruth, Profile};
use crate::minipy::{parse_literal, Literal};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptMode {
    ZeroShot,
    OneShot,
}

impl PromptMode {
    /// One-shot for traditional models, zero-shot otherwise.
    pub fn for_profile(p: Profile) -> PromptMode {
        match p {
            Profile::Traditional => PromptMode::OneShot,
            Profile::Reasoning | Profile::EffortBased => PromptMode::ZeroShot,
        }
    }
}

impl std::str::FromStr for PromptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<PromptMode, String> {
        match s {
            "zero-shot" => Ok(PromptMode::ZeroShot),
            "one-shot" => Ok(PromptMode::OneShot),
            other => Err(format!("unknown prompt mode {other:?}")),
        }
    }
}

const PREDICTION_INTRO: &str = "You are given a Python program and an assertion containing an input to a function. Replace the ?? in the assertion with a literal (no unsimplified expressions, no function calls) representing the function's return value for the given input. Execute the program exactly as written, even if it is incorrect or incomplete.";

const PREDICTION_ZERO_SHOT_TAIL: &str =
    " For your final answer, provide the full assertion in [ANSWER] and [/ANSWER] tags.";

const PREDICTION_ONE_SHOT_TAIL: &str = r#" Execute the program step by step before arriving at an answer, and provide the full assertion with the function output in [ANSWER] and [/ANSWER] tags, following the example.

[PYTHON]
def performOperation(s):
    s = s + s
    return "b" + s + "a"
assert performOperation(s = "hi") == ??
[/PYTHON]
[THOUGHT]
Let's execute the code step by step:

1. The function performOperation is defined, which takes a single argument s.
2. The function is called with the argument "hi", so within the function, s is initially "hi".
3. Inside the function, s is concatenated with itself, so s becomes "hihi".
4. The function then returns a new string that starts with "b", followed by the value of s (which is now "hihi"), and ends with "a".
5. The return value of the function is therefore "bhihia".
[/THOUGHT]
[ANSWER]
assert performOperation(s = "hi") == "bhihia"
[/ANSWER]"#;

const CHOICE_INTRO: &str = "You are given two Python programs below and an assertion containing an input to a function. First, choose either program, whichever one you are more confident in reasoning about. Then, replace the ?? in the assertion with a literal (no unsimplified expressions, no function calls) representing the function's return value for the given input on your chosen program. Execute the program exactly as written, even if it is incorrect or incomplete.";

const CHOICE_FORMAT: &str = r#"{
    "chosen_program": chosen_program_letter,
    "assertion": full_assertion
}"#;

const CHOICE_ZERO_SHOT_TAIL: &str = " For your final answer, output the letter of your chosen program (A or B) and the full assertion in the following json format:";

const CHOICE_ONE_SHOT_TAIL: &str = " Execute the program step by step before arriving at an answer, then output the letter of your chosen program (A or B) and the full assertion in the following json format:";

const CHOICE_EXAMPLE: &str = r#"# Example
[PROGRAM_A]
def performOperation(s):
    first = s[0].upper()
    rest = s[1:].upper()
    return first + rest
[/PROGRAM_A]
[PROGRAM_B]
def performOperation(s):
    first = s[0].upper()
    rest = s[1:].lower()
    return first + rest
[/PROGRAM_B]
[ASSERTION]
assert performOperation(s = 'hELLO') == ??
[/ASSERTION]
[THOUGHT]
First, let's figure out which program I am more confident in reasoning about.

Looking at programs A and B, the difference is in the expression for rest. Program A defines rest as s[1:].upper() while program B defines rest as s[1:].lower(). Program B looks similar to how one might implement the capitalize() function, so I will choose program B as I am more confident in reasoning about this program behavior. 

Now, let's execute the code step by step:

1. The function performOperation is defined, which takes a single argument s.
2. The function is called with the argument 'hELLO', so within the function, s is initially 'hELLO'.
3. The variable first is defined as the upper case of the first character of s, which is 'H'.
4. The variable rest is defined as the lower case of s[1:], which is 'ello'.
4. The function returns first ('H') concatenated with rest ('ello').
5. The return value of the function is therefore 'Hello'.
[/THOUGHT]
{
    "chosen_program": "B",
    "assertion": "assert performOperation(s = 'hELLO') == 'Hello'"
}

# Question"#;

pub fn build_prediction_prompt(problem: &Problem, mode: PromptMode) -> String {
    let tail = match mode {
        PromptMode::ZeroShot => PREDICTION_ZERO_SHOT_TAIL,
        PromptMode::OneShot => PREDICTION_ONE_SHOT_TAIL,
    };
    format!(
        "{PREDICTION_INTRO}{tail}\n\n[PYTHON]\n{}\nassert {}({}) == ??\n[/PYTHON]",
        problem.source.trim_end(),
        problem.function_name,
        problem.input
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    /// Program A is the original.
    OriginalFirst,
    /// Program A is the mutant.
    MutatedFirst,
}

pub fn build_choice_prompt(original: &Problem, mutated: &Problem, order: Order, mode: PromptMode) -> String {
    let (a, b) = match order {
        Order::OriginalFirst => (original, mutated),
        Order::MutatedFirst => (mutated, original),
    };
    let (tail, example) = match mode {
        PromptMode::ZeroShot => (CHOICE_ZERO_SHOT_TAIL, String::new()),
        PromptMode::OneShot => (CHOICE_ONE_SHOT_TAIL, format!("{CHOICE_EXAMPLE}\n")),
    };
    format!(
        "{CHOICE_INTRO}{tail}\n{CHOICE_FORMAT}\n\n{example}[PROGRAM_A]\n{}\n[/PROGRAM_A]\n[PROGRAM_B]\n{}\n[/PROGRAM_B]\n[ASSERTION]\nassert {}({}) == ??\n[/ASSERTION]",
        a.source.trim_end(),
        b.source.trim_end(),
        original.function_name,
        original.input
    )
}

/// Right-hand side of the first top-level `==` in an assertion.
fn assertion_rhs(assertion: &str) -> Option<&str> {
    let s = assertion.trim();
    let s = s.strip_prefix("assert")?;
    let bytes = s.as_bytes();
    let mut depth = 0i32;
    let mut quote: Option<u8> = None;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if let Some(q) = quote {
            if c == b'\\' {
                i += 1;
            } else if c == q {
                quote = None;
            }
        } else {
            match c {
                b'\'' | b'"' => quote = Some(c),
                b'(' | b'[' | b'{' => depth += 1,
                b')' | b']' | b'}' => depth -= 1,
                b'=' if depth == 0 && bytes.get(i + 1) == Some(&b'=') => return Some(s[i + 2..].trim()),
                _ => {}
            }
        }
        i += 1;
    }
    None
}

/// Literal on the right of `assert f(...) == <literal>`.
pub fn parse_assertion(assertion: &str) -> Option<Literal> {
    let rhs = assertion_rhs(assertion)?;
    parse_literal(rhs.trim_end_matches(';').trim()).ok()
}

/// Literal from the last `[ANSWER]` block; `None` when unparsable.
pub fn extract_prediction(response: &str) -> Option<Literal> {
    let start = response.rfind("[ANSWER]")? + "[ANSWER]".len();
    let end = start + response[start..].find("[/ANSWER]")?;
    let body = &response[start..end];
    let at = body.find("assert")?;
    let line = body[at..].lines().next()?;
    parse_assertion(line)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Letter {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiceAnswer {
    pub letter: Option<Letter>,
    pub literal: Option<Literal>,
}

fn letter_of(s: &str) -> Option<Letter> {
    let t = s.trim().trim_matches(|c| c == '"' || c == '\'').trim();
    let t = t.strip_prefix("Program ").or_else(|| t.strip_prefix("program ")).unwrap_or(t);
    match t {
        "A" => Some(Letter::A),
        "B" => Some(Letter::B),
        _ => None,
    }
}

/// Reads the last JSON object holding `chosen_program`, falling back to a
/// lenient scan when the object is not valid JSON.
pub fn extract_choice(response: &str) -> ChoiceAnswer {
    for (i, _) in response.rmatch_indices('{') {
        let mut it = serde_json::Deserializer::from_str(&response[i..]).into_iter::<Json>();
        if let Some(Ok(Json::Object(obj))) = it.next() {
            if let Some(chosen) = obj.get("chosen_program") {
                let letter = chosen.as_str().and_then(letter_of);
                let literal = obj.get("assertion").and_then(Json::as_str).and_then(parse_assertion);
                return ChoiceAnswer { letter, literal };
            }
        }
    }
    let field = |key: &str| -> Option<&str> {
        let at = response.rfind(key)? + key.len();
        let rest = response[at..].trim_start().strip_prefix(':')?.trim_start();
        Some(rest)
    };
    let letter = field("\"chosen_program\"").and_then(|r| {
        let end = r.find([',', '\n', '}']).unwrap_or(r.len());
        letter_of(&r[..end])
    });
    let literal = field("\"assertion\"").and_then(|r| {
        if r.starts_with('"') {
            let mut it = serde_json::Deserializer::from_str(r).into_iter::<String>();
            it.next().and_then(Result::ok).and_then(|s| parse_assertion(&s))
        } else {
            parse_assertion(r.lines().next().unwrap_or(""))
        }
    });
    ChoiceAnswer { letter, literal }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Original,
    Mutated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Judgment {
    Correct,
    Reverted,
    Other,
    Unparsed,
}

/// Compares a prediction with the variant's own and the paired program's
/// ground truth. Strict comparison keeps `True` apart from `1` and lists
/// apart from tuples.
pub fn judge(extracted: Option<&Literal>, own: &Literal, other: &Literal, strict: bool) -> Judgment {
    let Some(x) = extracted else { return Judgment::Unparsed };
    let eq = |a: &Literal, b: &Literal| if strict { a == b } else { a.loose_eq(b) };
    if eq(x, own) {
        Judgment::Correct
    } else if eq(x, other) {
        Judgment::Reverted
    } else {
        Judgment::Other
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub problem_id: String,
    pub dataset: String,
    pub model: String,
    pub variant: Variant,
    pub sample: usize,
    pub loc: usize,
    /// Either program of the pair returns a boolean.
    pub boolean_output: bool,
    pub response: Option<String>,
    pub extracted: Option<String>,
    pub judgment: Judgment,
    /// Transport failure; such records count as incorrect.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chosen {
    Original,
    Mutated,
    Unparsed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceRecord {
    pub problem_id: String,
    pub dataset: String,
    pub model: String,
    pub run: usize,
    pub order: Order,
    pub chosen: Chosen,
    pub loc: usize,
    pub boolean_output: bool,
    pub response: Option<String>,
    pub extracted: Option<String>,
    /// Relative to the chosen program.
    pub judgment: Judgment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("problem {0} has no counterpart in the paired set")]
    Unpaired(String),
    #[error("ground truth of {id} is not a literal: {output}")]
    BadGroundTruth { id: String, output: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An original problem with its mutant and both parsed outputs.
#[derive(Clone, Debug)]
pub struct Pair {
    pub original: Problem,
    pub mutated: Problem,
    pub original_output: Literal,
    pub mutated_output: Literal,
}

impl Pair {
    pub fn boolean_output(&self) -> bool {
        self.original_output.is_bool() || self.mutated_output.is_bool()
    }

    pub fn truth(&self) -> PairTruth {
        PairTruth {
            function_name: self.original.function_name.clone(),
            input: self.original.input.clone(),
            original_source: self.original.source.clone(),
            original_output: self.original.output.clone(),
            mutated_source: self.mutated.source.clone(),
            mutated_output: self.mutated.output.clone(),
        }
    }

    fn get(&self, v: Variant) -> (&Problem, &Literal, &Literal) {
        match v {
            Variant::Original => (&self.original, &self.original_output, &self.mutated_output),
            Variant::Mutated => (&self.mutated, &self.mutated_output, &self.original_output),
        }
    }
}

/// Aligns originals with mutants by problem id.
pub fn pair_problems(originals: &[Problem], mutated: &[Problem]) -> Result<Vec<Pair>, HarnessError> {
    let by_id: HashMap<&str, &Problem> = mutated.iter().map(|p| (p.id.as_str(), p)).collect();
    if by_id.len() != originals.len() {
        let known: HashSet<&str> = originals.iter().map(|p| p.id.as_str()).collect();
        if let Some(extra) = mutated.iter().find(|p| !known.contains(p.id.as_str())) {
            return Err(HarnessError::Unpaired(extra.id.clone()));
        }
    }
    let lit = |p: &Problem| {
        parse_literal(&p.output).map_err(|_| HarnessError::BadGroundTruth { id: p.id.clone(), output: p.output.clone() })
    };
    originals
        .iter()
        .map(|o| {
            let m = by_id.get(o.id.as_str()).ok_or_else(|| HarnessError::Unpaired(o.id.clone()))?;
            Ok(Pair { original_output: lit(o)?, mutated_output: lit(m)?, original: o.clone(), mutated: (*m).clone() })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub samples: usize,
    pub mode: PromptMode,
    pub strict: bool,
    /// Append-only record file; existing records are reused on resume.
    pub records: Option<PathBuf>,
    /// Stop after this many new units, leaving the run resumable.
    pub unit_limit: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { samples: 5, mode: PromptMode::ZeroShot, strict: true, records: None, unit_limit: None }
    }
}

fn load_existing<T: serde::de::DeserializeOwned>(path: Option<&Path>) -> Result<Vec<T>, HarnessError> {
    match path {
        Some(p) if p.exists() => Ok(crate::util::read_jsonl(p)?),
        _ => Ok(Vec::new()),
    }
}

fn open_append(path: Option<&Path>) -> Result<Option<Mutex<File>>, HarnessError> {
    let Some(p) = path else { return Ok(None) };
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(Some(Mutex::new(OpenOptions::new().create(true).append(true).open(p)?)))
}

fn append<T: Serialize>(file: &Option<Mutex<File>>, records: &[T]) -> Result<(), HarnessError> {
    if let Some(f) = file {
        let mut text = String::new();
        for r in records {
            text.push_str(&serde_json::to_string(r).expect("serializable record"));
            text.push('\n');
        }
        let mut g = f.lock().unwrap();
        g.write_all(text.as_bytes())?;
        g.flush()?;
    }
    Ok(())
}

/// Runs `work` over `units` with up to `threads` workers, stopping early on
/// the first error.
fn dispatch<U: Sync, F>(units: &[U], threads: usize, work: F) -> Result<(), HarnessError>
where
    F: Fn(&U) -> Result<(), HarnessError> + Sync,
{
    let next = AtomicUsize::new(0);
    let failure: Mutex<Option<HarnessError>> = Mutex::new(None);
    std::thread::scope(|s| {
        for _ in 0..threads.max(1).min(units.len().max(1)) {
            s.spawn(|| loop {
                if failure.lock().unwrap().is_some() {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(u) = units.get(i) else { break };
                if let Err(e) = work(u) {
                    failure.lock().unwrap().get_or_insert(e);
                }
            });
        }
    });
    match failure.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn outcome(r: &Result<ModelResponse, LlmError>) -> (Option<String>, Option<String>) {
    match r {
        Ok(m) => (Some(m.text.clone()), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

/// Queries each variant of every pair `samples` times in separate passes.
pub fn run_prediction(pairs: &[Pair], model: &dyn ChatModel, opts: &RunOptions) -> Result<Vec<PredictionRecord>, HarnessError> {
    let path = opts.records.as_deref();
    let mut done: BTreeMap<(String, Variant, usize), PredictionRecord> = BTreeMap::new();
    for r in load_existing::<PredictionRecord>(path)? {
        done.entry((r.problem_id.clone(), r.variant, r.sample)).or_insert(r);
    }
    let mut units: Vec<(&Pair, Variant)> = Vec::new();
    for pair in pairs {
        for v in [Variant::Original, Variant::Mutated] {
            let complete = (0..opts.samples).all(|s| done.contains_key(&(pair.original.id.clone(), v, s)));
            if !complete {
                units.push((pair, v));
            }
        }
    }
    units.truncate(opts.unit_limit.unwrap_or(usize::MAX));
    let file = open_append(path)?;
    let fresh: Mutex<Vec<PredictionRecord>> = Mutex::new(Vec::new());
    let model_name = model.name();
    dispatch(&units, model.parallelism(), |&(pair, variant)| {
        let (problem, own, other) = pair.get(variant);
        let prompt = build_prediction_prompt(problem, opts.mode);
        let responses = model.complete(&[Message::user(prompt)], opts.samples);
        let records: Vec<PredictionRecord> = responses
            .iter()
            .enumerate()
            .filter(|(s, _)| !done.contains_key(&(pair.original.id.clone(), variant, *s)))
            .map(|(sample, r)| {
                let (response, error) = outcome(r);
                let lit = response.as_deref().and_then(extract_prediction);
                let judgment = match &error {
                    Some(_) => Judgment::Other,
                    None => judge(lit.as_ref(), own, other, opts.strict),
                };
                PredictionRecord {
                    problem_id: pair.original.id.clone(),
                    dataset: pair.original.dataset.to_string(),
                    model: model_name.clone(),
                    variant,
                    sample,
                    loc: problem.loc,
                    boolean_output: pair.boolean_output(),
                    response,
                    extracted: lit.map(|l| l.repr()),
                    judgment,
                    error,
                }
            })
            .collect();
        append(&file, &records)?;
        fresh.lock().unwrap().extend(records);
        Ok(())
    })?;
    for r in fresh.into_inner().unwrap() {
        done.insert((r.problem_id.clone(), r.variant, r.sample), r);
    }
    Ok(done.into_values().collect())
}

/// Runs each pair twice, once per presentation order.
pub fn run_choice(pairs: &[Pair], model: &dyn ChatModel, opts: &RunOptions) -> Result<Vec<ChoiceRecord>, HarnessError> {
    let path = opts.records.as_deref();
    let mut done: BTreeMap<(String, usize), ChoiceRecord> = BTreeMap::new();
    for r in load_existing::<ChoiceRecord>(path)? {
        done.entry((r.problem_id.clone(), r.run)).or_insert(r);
    }
    let mut units: Vec<(&Pair, usize, Order)> = Vec::new();
    for pair in pairs {
        for (run, order) in [(1, Order::OriginalFirst), (2, Order::MutatedFirst)] {
            if !done.contains_key(&(pair.original.id.clone(), run)) {
                units.push((pair, run, order));
            }
        }
    }
    units.truncate(opts.unit_limit.unwrap_or(usize::MAX));
    let file = open_append(path)?;
    let fresh: Mutex<Vec<ChoiceRecord>> = Mutex::new(Vec::new());
    let model_name = model.name();
    dispatch(&units, model.parallelism(), |&(pair, run, order)| {
        let prompt = build_choice_prompt(&pair.original, &pair.mutated, order, opts.mode);
        let r = model.complete(&[Message::user(prompt)], 1).into_iter().next().expect("one sample");
        let (response, error) = outcome(&r);
        let answer = response.as_deref().map(extract_choice);
        let chosen = match (answer.as_ref().and_then(|a| a.letter), order) {
            (None, _) => Chosen::Unparsed,
            (Some(Letter::A), Order::OriginalFirst) | (Some(Letter::B), Order::MutatedFirst) => Chosen::Original,
            _ => Chosen::Mutated,
        };
        let lit = answer.and_then(|a| a.literal);
        let judgment = match chosen {
            Chosen::Unparsed => Judgment::Unparsed,
            Chosen::Original => judge(lit.as_ref(), &pair.original_output, &pair.mutated_output, opts.strict),
            Chosen::Mutated => judge(lit.as_ref(), &pair.mutated_output, &pair.original_output, opts.strict),
        };
        let judgment = if error.is_some() { Judgment::Other } else { judgment };
        let record = ChoiceRecord {
            problem_id: pair.original.id.clone(),
            dataset: pair.original.dataset.to_string(),
            model: model_name.clone(),
            run,
            order,
            chosen,
            loc: pair.original.loc,
            boolean_output: pair.boolean_output(),
            response,
            extracted: lit.map(|l| l.repr()),
            judgment,
            error,
        };
        append(&file, std::slice::from_ref(&record))?;
        fresh.lock().unwrap().push(record);
        Ok(())
    })?;
    for r in fresh.into_inner().unwrap() {
        done.insert((r.problem_id.clone(), r.run), r);
    }
    Ok(done.into_values().collect())
}

/// The fixture pair rendered into the committed golden prompts.
pub fn golden_fixture() -> (Problem, Problem) {
    let original = Problem {
        id: "golden-0".into(),
        dataset: crate::datasets::DatasetTag::DslList,
        source: "def f(a1):\n    a1.pop(0)\n    return a1\n".into(),
        function_name: "f".into(),
        input: "[4, 1, 3]".into(),
        output: "[1, 3]".into(),
        loc: 3,
        executor: crate::executor::ExecutorKind::Builtin,
        mutation_info: None,
        dsl: Some("(tail a1)".into()),
    };
    let mutated = Problem {
        source: "def f(a1):\n    a1.pop(1)\n    return a1\n".into(),
        output: "[4, 3]".into(),
        ..original.clone()
    };
    (original, mutated)
}

/// Golden file names paired with the fixture renders they must equal.
pub fn golden_renders() -> Vec<(&'static str, String)> {
    let (o, m) = golden_fixture();
    vec![
        ("prediction_zero_shot.txt", build_prediction_prompt(&o, PromptMode::ZeroShot)),
        ("prediction_one_shot.txt", build_prediction_prompt(&o, PromptMode::OneShot)),
        ("choice_zero_shot_original_first.txt", build_choice_prompt(&o, &m, Order::OriginalFirst, PromptMode::ZeroShot)),
        ("choice_zero_shot_mutated_first.txt", build_choice_prompt(&o, &m, Order::MutatedFirst, PromptMode::ZeroShot)),
        ("choice_one_shot_original_first.txt", build_choice_prompt(&o, &m, Order::OriginalFirst, PromptMode::OneShot)),
        ("choice_one_shot_mutated_first.txt", build_choice_prompt(&o, &m, Order::MutatedFirst, PromptMode::OneShot)),
    ]
}

const GOLDENS: [(&str, &str); 6] = [
    ("prediction_zero_shot.txt", include_str!("../golden/prediction_zero_shot.txt")),
    ("prediction_one_shot.txt", include_str!("../golden/prediction_one_shot.txt")),
    ("choice_zero_shot_original_first.txt", include_str!("../golden/choice_zero_shot_original_first.txt")),
    ("choice_zero_shot_mutated_first.txt", include_str!("../golden/choice_zero_shot_mutated_first.txt")),
    ("choice_one_shot_original_first.txt", include_str!("../golden/choice_one_shot_original_first.txt")),
    ("choice_one_shot_mutated_first.txt", include_str!("../golden/choice_one_shot_mutated_first.txt")),
];

/// Names of golden prompts whose current render differs from the committed
/// text. Golden files carry one trailing newline that renders do not.
pub fn golden_mismatches() -> Vec<&'static str> {
    let goldens: HashMap<&str, &str> = GOLDENS.into_iter().collect();
    golden_renders()
        .into_iter()
        .filter(|(name, text)| goldens.get(name).map(|g| g.strip_suffix('\n').unwrap_or(g)) != Some(text.as_str()))
        .map(|(name, _)| name)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prediction_extraction() {
        assert_eq!(
            extract_prediction("[ANSWER]assert f([1,2]) == [2, 1][/ANSWER]"),
            Some(Literal::List(vec![Literal::Int(2), Literal::Int(1)]))
        );
        assert_eq!(extract_prediction("assert f(1) == 2"), None);
        assert_eq!(extract_prediction("[ANSWER]assert f(1) == 2[/ANSWER] then [ANSWER]\nassert f(1) == 3\n[/ANSWER]"), Some(Literal::Int(3)));
        assert_eq!(extract_prediction("[ANSWER]assert f(1) == [1] + [2][/ANSWER]"), None);
        assert_eq!(extract_prediction("[ANSWER]assert f(s = 'a==b') == 'x'[/ANSWER]"), Some(Literal::Str("x".into())));
        assert_eq!(extract_prediction("[ANSWER]assert f([1]) == True[/ANSWER]"), Some(Literal::Bool(true)));
    }

    #[test]
    fn choice_extraction() {
        let r = "thinking {not json}\n{\n    \"chosen_program\": \"B\",\n    \"assertion\": \"assert f([1]) == [2]\"\n}";
        let a = extract_choice(r);
        assert_eq!(a.letter, Some(Letter::B));
        assert_eq!(a.literal, Some(Literal::List(vec![Literal::Int(2)])));
        let lenient = extract_choice("{\n  \"chosen_program\": A,\n  \"assertion\": assert f([1]) == 0\n}");
        assert_eq!(lenient.letter, Some(Letter::A));
        assert_eq!(lenient.literal, Some(Literal::Int(0)));
        assert_eq!(extract_choice("no answer").letter, None);
    }

    #[test]
    fn judgments_are_strict() {
        let t = Literal::Bool(true);
        let one = Literal::Int(1);
        assert_eq!(judge(Some(&one), &t, &Literal::Int(2), true), Judgment::Other);
        assert_eq!(judge(Some(&one), &t, &Literal::Int(2), false), Judgment::Correct);
        assert_eq!(judge(Some(&Literal::Int(2)), &t, &Literal::Int(2), true), Judgment::Reverted);
        assert_eq!(judge(None, &t, &one, true), Judgment::Unparsed);
    }

    #[test]
    fn prompts_match_goldens() {
        assert!(golden_mismatches().is_empty(), "{:?}", golden_mismatches());
    }

    #[test]
    fn choice_order_places_programs() {
        let (o, m) = golden_fixture();
        let p = build_choice_prompt(&o, &m, Order::MutatedFirst, PromptMode::ZeroShot);
        assert!(p.contains("[PROGRAM_A]\ndef f(a1):\n    a1.pop(1)"));
        assert!(p.contains("[PROGRAM_B]\ndef f(a1):\n    a1.pop(0)"));
    }
}

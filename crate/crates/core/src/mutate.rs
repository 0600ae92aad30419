//! Single-token mutation of programs with coverage-guided mutant selection.
//!
//! Sites are found on the token stream, so any source the lexer accepts can
//! be mutated, and a mutant differs from its original in exactly one span.

use crate::datasets::Problem;
use crate::executor::{ExecRequest, Execution, Executor, ExecutorError, Executors};
use crate::minipy::lexer::{tokenize, LexError, Token, TokenKind};
use crate::util::derived_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Arithmetic,
    Relational,
    Logical,
    Keyword,
    NumericLiteral,
}

pub const ARITHMETIC: &[&str] = &["+", "-", "*", "//", "%"];
pub const AUGMENTED: &[&str] = &["+=", "-=", "*=", "//=", "%="];
pub const RELATIONAL: &[&str] = &["<", "<=", ">", ">=", "==", "!="];

const KEYWORDS: &[&str] = &[
    "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del", "elif",
    "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda",
    "nonlocal", "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationSite {
    /// Index of the mutated token in the token stream.
    pub token: usize,
    pub kind: OperatorKind,
    pub line: u32,
    pub start: usize,
    pub end: usize,
    pub original_token: String,
    pub replacement_token: String,
}

impl MutationSite {
    /// Position-based key, independent of candidate order.
    fn key(&self) -> (u32, usize, &str) {
        (self.line, self.start, self.replacement_token.as_str())
    }

    pub fn info(&self) -> MutationInfo {
        MutationInfo {
            kind: self.kind,
            line: self.line,
            original_token: self.original_token.clone(),
            replacement_token: self.replacement_token.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationInfo {
    pub kind: OperatorKind,
    pub line: u32,
    pub original_token: String,
    pub replacement_token: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mutant {
    pub source: String,
    pub site: MutationSite,
}

/// Whether the token ends an operand, making a following `+`/`-`/`*` binary.
fn ends_operand(t: &Token) -> bool {
    match &t.kind {
        TokenKind::Name(n) => !KEYWORDS.contains(&n.as_str()),
        TokenKind::Int { .. } | TokenKind::Float | TokenKind::Str => true,
        TokenKind::Op(o) => matches!(*o, ")" | "]" | "}"),
        _ => false,
    }
}

fn alternatives(set: &[&str], tok: &str) -> Vec<String> {
    set.iter().filter(|&&o| o != tok).map(|o| o.to_string()).collect()
}

pub fn sites(source: &str) -> Result<Vec<MutationSite>, LexError> {
    let tokens = tokenize(source)?;
    let mut out = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        let text = t.text(source);
        let (kind, repls) = match &t.kind {
            TokenKind::Op(o) if ARITHMETIC.contains(o) => {
                if i == 0 || !ends_operand(&tokens[i - 1]) {
                    continue;
                }
                (OperatorKind::Arithmetic, alternatives(ARITHMETIC, o))
            }
            TokenKind::Op(o) if AUGMENTED.contains(o) => (OperatorKind::Arithmetic, alternatives(AUGMENTED, o)),
            TokenKind::Op(o) if RELATIONAL.contains(o) => (OperatorKind::Relational, alternatives(RELATIONAL, o)),
            TokenKind::Name(n) => match n.as_str() {
                "and" => (OperatorKind::Logical, vec!["or".to_string()]),
                "or" => (OperatorKind::Logical, vec!["and".to_string()]),
                "continue" => (OperatorKind::Keyword, vec!["break".to_string()]),
                "break" => (OperatorKind::Keyword, vec!["continue".to_string()]),
                _ => continue,
            },
            TokenKind::Int { value: Some(v), decimal: true } => {
                let repls = [v.checked_sub(1), v.checked_add(1)].into_iter().flatten().map(|x| x.to_string()).collect();
                (OperatorKind::NumericLiteral, repls)
            }
            _ => continue,
        };
        for r in repls {
            out.push(MutationSite {
                token: i,
                kind,
                line: t.line,
                start: t.start,
                end: t.end,
                original_token: text.to_string(),
                replacement_token: r,
            });
        }
    }
    Ok(out)
}

pub fn apply(source: &str, site: &MutationSite) -> String {
    let mut s = String::with_capacity(source.len() + site.replacement_token.len());
    s.push_str(&source[..site.start]);
    s.push_str(&site.replacement_token);
    s.push_str(&source[site.end..]);
    s
}

/// One mutant per (site, replacement). Sources the lexer rejects have none.
pub fn enumerate_mutants(source: &str) -> Vec<Mutant> {
    sites(source)
        .unwrap_or_default()
        .into_iter()
        .map(|site| Mutant { source: apply(source, &site), site })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Survivor {
    pub mutant: Mutant,
    pub execution: Execution,
}

fn request(source: &str, problem: &Problem) -> ExecRequest {
    ExecRequest {
        source: source.to_string(),
        function_name: problem.function_name.clone(),
        input: problem.input.clone(),
        trace: true,
    }
}

/// Keeps mutants that run without error on the problem input and whose
/// output differs from the stored ground truth.
pub fn filter_valid(
    original: &Problem,
    candidates: Vec<Mutant>,
    executor: &dyn Executor,
) -> Result<Vec<Survivor>, ExecutorError> {
    let mut out = Vec::new();
    for mutant in candidates {
        let execution = executor.execute(&request(&mutant.source, original))?;
        if execution.is_ok() && execution.output_repr.as_deref() != Some(original.output.as_str()) {
            out.push(Survivor { mutant, execution });
        }
    }
    Ok(out)
}

/// Jaccard similarity as an exact fraction `(intersection, union)`.
pub fn jaccard(a: &BTreeSet<u32>, b: &BTreeSet<u32>) -> (usize, usize) {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        (1, 1)
    } else {
        (inter, union)
    }
}

/// Index of the survivor whose coverage is most similar to `coverage`; ties
/// are broken uniformly with `rng` over the candidates sorted by site.
pub fn select_mutant<R: Rng>(coverage: &BTreeSet<u32>, survivors: &[Survivor], rng: &mut R) -> Option<usize> {
    let scores: Vec<(usize, usize)> =
        survivors.iter().map(|s| jaccard(coverage, &s.execution.covered_lines)).collect();
    let best = *scores.iter().max_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)))?;
    let mut tied: Vec<usize> = (0..survivors.len()).filter(|&i| scores[i].0 * best.1 == best.0 * scores[i].1).collect();
    tied.sort_by(|&a, &b| survivors[a].mutant.site.key().cmp(&survivors[b].mutant.site.key()));
    Some(tied[rng.gen_range(0..tied.len())])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    NoSites,
    NoSurvivors,
    /// The original no longer reproduces its stored output.
    OriginalMismatch,
    ExecutorFailure(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dropped {
    pub id: String,
    pub reason: DropReason,
    pub candidates: usize,
}

#[derive(Clone, Debug, Default)]
pub struct MutationOutcome {
    pub kept: Vec<Problem>,
    pub mutated: Vec<Problem>,
    pub dropped: Vec<Dropped>,
}

impl MutationOutcome {
    pub fn drop_rate(&self) -> f64 {
        let total = self.kept.len() + self.dropped.len();
        if total == 0 {
            0.0
        } else {
            self.dropped.len() as f64 / total as f64
        }
    }
}

/// Mutates one problem, returning its mutated counterpart.
pub fn mutate_problem(problem: &Problem, executor: &dyn Executor, seed: u64) -> Result<Problem, DropReason> {
    let fail = |e: ExecutorError| DropReason::ExecutorFailure(e.to_string());
    let original = executor.execute(&request(&problem.source, problem)).map_err(fail)?;
    if !original.is_ok() || original.output_repr.as_deref() != Some(problem.output.as_str()) {
        return Err(DropReason::OriginalMismatch);
    }
    let candidates = enumerate_mutants(&problem.source);
    if candidates.is_empty() {
        return Err(DropReason::NoSites);
    }
    let survivors = filter_valid(problem, candidates, executor).map_err(fail)?;
    let mut rng = derived_rng(seed, &problem.id);
    let i = select_mutant(&original.covered_lines, &survivors, &mut rng).ok_or(DropReason::NoSurvivors)?;
    let chosen = &survivors[i];
    Ok(Problem {
        source: chosen.mutant.source.clone(),
        output: chosen.execution.output_repr.clone().unwrap_or_default(),
        mutation_info: Some(chosen.mutant.site.info()),
        ..problem.clone()
    })
}

/// Mutates every problem in parallel; problems without a valid mutant are
/// dropped from both outputs so that `kept[i]` pairs with `mutated[i]`.
pub fn mutate_dataset(problems: &[Problem], executors: &Executors, seed: u64, threads: usize) -> MutationOutcome {
    let results: Vec<Mutex<Option<Result<Problem, DropReason>>>> = problems.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..threads.max(1).min(problems.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(p) = problems.get(i) else { break };
                let r = executors
                    .get(p.executor)
                    .map_err(|e| DropReason::ExecutorFailure(e.to_string()))
                    .and_then(|ex| mutate_problem(p, ex, seed));
                *results[i].lock().unwrap() = Some(r);
            });
        }
    });
    let mut out = MutationOutcome::default();
    for (p, r) in problems.iter().zip(results) {
        match r.into_inner().unwrap().expect("every problem processed") {
            Ok(m) => {
                out.kept.push(p.clone());
                out.mutated.push(m);
            }
            Err(reason) => out.dropped.push(Dropped {
                id: p.id.clone(),
                candidates: enumerate_mutants(&p.source).len(),
                reason,
            }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::DatasetTag;
    use crate::executor::{BuiltinExecutor, ExecutorKind, Status};
    use crate::util::seeded_rng;

    fn replacements(src: &str) -> Vec<String> {
        enumerate_mutants(src).into_iter().map(|m| m.source).collect()
    }

    #[test]
    fn table_one_examples() {
        assert!(replacements("a + b").contains(&"a - b".to_string()));
        assert!(replacements("a < b").contains(&"a <= b".to_string()));
        assert!(replacements("a and b").contains(&"a or b".to_string()));
        assert!(replacements("continue").contains(&"break".to_string()));
        assert!(replacements("1").contains(&"0".to_string()));
    }

    #[test]
    fn relational_site_has_five_mutants() {
        let ms = enumerate_mutants("if x < y:\n    pass\n");
        assert_eq!(ms.len(), 5);
        assert!(ms.iter().all(|m| m.site.kind == OperatorKind::Relational));
    }

    #[test]
    fn literals_and_unary_operators() {
        let ms = enumerate_mutants("return -x");
        assert!(ms.is_empty());
        let ms = replacements("return a[-1]");
        assert_eq!(ms, vec!["return a[-0]", "return a[-2]"]);
        let ms = replacements("x //= 2");
        assert_eq!(ms.len(), 4 + 2);
        assert!(ms.contains(&"x %= 2".to_string()));
        assert!(replacements("return lst").is_empty());
        assert!(replacements("f(*xs)").is_empty());
    }

    fn problem(source: &str, input: &str, output: &str) -> Problem {
        Problem {
            id: "p".into(),
            dataset: DatasetTag::DslList,
            source: source.into(),
            function_name: "f".into(),
            input: input.into(),
            output: output.into(),
            loc: crate::transpile::loc(source),
            executor: ExecutorKind::Builtin,
            mutation_info: None,
            dsl: None,
        }
    }

    #[test]
    fn filter_drops_equal_outputs_and_errors() {
        let p = problem("def f(a, b):\n    return a + b\n", "2, 0", "2");
        let survivors = filter_valid(&p, enumerate_mutants(&p.source), &BuiltinExecutor::default()).unwrap();
        let got: Vec<&str> = survivors.iter().map(|s| s.mutant.site.replacement_token.as_str()).collect();
        // a - b == 2, a // b and a % b divide by zero
        assert_eq!(got, vec!["*"]);
    }

    fn survivor(lines: &[u32], line: u32) -> Survivor {
        Survivor {
            mutant: Mutant {
                source: String::new(),
                site: MutationSite {
                    token: 0,
                    kind: OperatorKind::Arithmetic,
                    line,
                    start: 0,
                    end: 1,
                    original_token: "+".into(),
                    replacement_token: "-".into(),
                },
            },
            execution: Execution {
                status: Status::Ok,
                output_repr: Some("0".into()),
                covered_lines: lines.iter().copied().collect(),
                error: None,
                steps: 0,
            },
        }
    }

    #[test]
    fn most_similar_coverage_wins() {
        let cov: BTreeSet<u32> = [1, 2, 3].into();
        let s = vec![survivor(&[1, 2], 1), survivor(&[1, 2, 3], 2), survivor(&[1], 3)];
        assert_eq!(select_mutant(&cov, &s, &mut seeded_rng(0)), Some(1));
        assert_eq!(select_mutant(&cov, &[], &mut seeded_rng(0)), None);
    }

    #[test]
    fn tie_break_ignores_candidate_order() {
        let cov: BTreeSet<u32> = [1, 2].into();
        let s = vec![survivor(&[1, 2], 4), survivor(&[1, 2], 7)];
        let r: Vec<Survivor> = s.iter().rev().cloned().collect();
        for seed in 0..20 {
            let a = select_mutant(&cov, &s, &mut seeded_rng(seed)).unwrap();
            let b = select_mutant(&cov, &r, &mut seeded_rng(seed)).unwrap();
            assert_eq!(s[a].mutant.site.line, r[b].mutant.site.line);
        }
    }

    #[test]
    fn dataset_pairs_stay_aligned() {
        let ps = vec![
            problem("def f(a1):\n    return a1\n", "[1]", "[1]"),
            Problem { id: "q".into(), ..problem("def f(a1):\n    return len(a1) + 1\n", "[1]", "2") },
        ];
        let out = mutate_dataset(&ps, &Executors::builtin_only(), 7, 2);
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.mutated.len(), 1);
        assert_eq!(out.kept[0].id, "q");
        assert_ne!(out.mutated[0].output, "2");
        assert_eq!(out.dropped[0].reason, DropReason::NoSites);
    }
}

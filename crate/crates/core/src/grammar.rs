//! Weighted grammar compiled from the DSL, and program/input sampling.
//!
//! Nonterminals are keyed by goal type, remaining depth and the context
//! flags that implement the compile-time rules. Polymorphic primitives are
//! instantiated over a finite type universe, so derivations are typed terms.

use crate::config::{ConfigError, KvConfig};
use crate::dsl::{check_constraints, eval_dsl, ConstraintSet, Dsl, Node, Phase, Prim, Rule, RuntimeRule, Term, Type};
use crate::minipy::{self, ErrorKind, Limits, Literal, Value};
use crate::transpile;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Flags {
    /// Integer literals excluded (first operand of a comparison).
    pub no_literal: bool,
    /// `empty` excluded.
    pub no_empty: bool,
    /// The literal -1 admitted (first operand of index).
    pub allow_neg1: bool,
}

impl Flags {
    fn normalized(self, ty: &Type) -> Flags {
        match ty {
            Type::Int => Flags { no_empty: false, ..self },
            Type::List(_) => Flags { no_empty: self.no_empty, ..Flags::default() },
            _ => Flags::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Term { ty: Type, depth: usize, flags: Flags },
    /// Function slot of map: a primitive missing its last argument.
    Func { from: Type, to: Type, depth: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Production {
    pub head: Node,
    pub children: Vec<usize>,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct Nonterminal {
    pub symbol: Symbol,
    pub productions: Vec<Production>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    pub prim: BTreeMap<Prim, f64>,
    pub literal: f64,
    pub param: f64,
}

impl Default for Weights {
    fn default() -> Self {
        let prim = Prim::ALL
            .into_iter()
            .map(|p| {
                let w = match p {
                    Prim::If | Prim::Map => 5.0,
                    Prim::Extend => 0.05,
                    _ => 1.0,
                };
                (p, w)
            })
            .collect();
        Weights { prim, literal: 1.0, param: 1.0 }
    }
}

impl Weights {
    pub fn with_overrides(overrides: &BTreeMap<Prim, f64>) -> Weights {
        let mut w = Weights::default();
        w.prim.extend(overrides.iter().map(|(p, x)| (*p, *x)));
        w
    }

    pub fn of(&self, p: Prim) -> f64 {
        self.prim.get(&p).copied().unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarError {
    #[error("no program of type {ty} with depth at most {depth}")]
    EmptyLanguage { ty: Type, depth: usize },
    #[error("unsupported program type {0}")]
    UnsupportedType(Type),
    #[error("no valid program after {0} attempts")]
    AttemptsExhausted(usize),
}

#[derive(Clone, Debug)]
pub struct Cfg {
    /// Children always precede their parents; `start` is last.
    pub nonterminals: Vec<Nonterminal>,
    pub start: usize,
    pub program_type: Type,
    pub arity: usize,
    pub max_depth: usize,
    params: Vec<Type>,
    dists: Vec<WeightedIndex<f64>>,
}

pub fn compile(dsl: &Dsl, program_type: &Type, max_depth: usize, weights: &Weights) -> Result<Cfg, GrammarError> {
    let (params, ret) = program_type.args_and_ret();
    if max_depth < 2 || !program_type.is_ground() || params.iter().any(|p| matches!(p, Type::Arrow(..))) {
        return Err(GrammarError::UnsupportedType(program_type.clone()));
    }
    let nesting = |t: &Type| {
        let mut k = 0;
        let mut t = t;
        while let Type::List(e) = t {
            k += 1;
            t = e;
        }
        k
    };
    let kmax = params
        .iter()
        .copied()
        .chain([ret])
        .map(nesting)
        .fold(max_depth - 1, usize::max);
    let mut universe = vec![Type::Int, Type::Bool];
    for k in 1..=kmax {
        universe.push(Type::nested(Type::Int, k));
        universe.push(Type::nested(Type::Bool, k));
    }
    let mut b = Builder {
        dsl,
        params: params.into_iter().cloned().collect(),
        weights,
        universe,
        memo: HashMap::new(),
        nts: Vec::new(),
    };
    let start_sym = Symbol::Term { ty: ret.clone(), depth: max_depth, flags: Flags::default() };
    let start = b.get(start_sym).ok_or_else(|| GrammarError::EmptyLanguage { ty: program_type.clone(), depth: max_depth })?;

    // keep only what is reachable from the start symbol
    let mut keep = vec![false; b.nts.len()];
    keep[start] = true;
    for id in (0..b.nts.len()).rev() {
        if keep[id] {
            for p in &b.nts[id].productions {
                for &c in &p.children {
                    keep[c] = true;
                }
            }
        }
    }
    let mut remap = vec![usize::MAX; b.nts.len()];
    let mut nonterminals = Vec::new();
    for (id, nt) in b.nts.into_iter().enumerate() {
        if keep[id] {
            remap[id] = nonterminals.len();
            nonterminals.push(nt);
        }
    }
    for nt in &mut nonterminals {
        for p in &mut nt.productions {
            for c in &mut p.children {
                *c = remap[*c];
            }
        }
    }
    let dists = nonterminals
        .iter()
        .map(|nt| WeightedIndex::new(nt.productions.iter().map(|p| p.weight)).expect("positive weights"))
        .collect();
    Ok(Cfg {
        start: remap[start],
        nonterminals,
        program_type: program_type.clone(),
        arity: b.params.len(),
        max_depth,
        params: b.params.clone(),
        dists,
    })
}

struct Builder<'a> {
    dsl: &'a Dsl,
    params: Vec<Type>,
    weights: &'a Weights,
    universe: Vec<Type>,
    memo: HashMap<Symbol, Option<usize>>,
    nts: Vec<Nonterminal>,
}

impl Builder<'_> {
    fn has(&self, p: Prim) -> bool {
        self.dsl.primitives.contains(&p)
    }

    fn rule(&self, r: Rule) -> bool {
        self.dsl.constraints.compile_time.contains(&r)
    }

    fn in_universe(&self, t: &Type) -> bool {
        self.universe.contains(t)
    }

    fn term(&mut self, ty: Type, depth: usize, flags: Flags) -> Option<usize> {
        let flags = flags.normalized(&ty);
        self.get(Symbol::Term { ty, depth, flags })
    }

    fn get(&mut self, sym: Symbol) -> Option<usize> {
        if let Some(r) = self.memo.get(&sym) {
            return *r;
        }
        let productions = match &sym {
            Symbol::Term { ty, depth, flags } => self.term_productions(ty, *depth, *flags),
            Symbol::Func { from, to, depth } => self.func_productions(from, to, *depth),
        };
        let r = if productions.is_empty() {
            None
        } else {
            self.nts.push(Nonterminal { symbol: sym.clone(), productions });
            Some(self.nts.len() - 1)
        };
        self.memo.insert(sym, r);
        r
    }

    fn push(&self, out: &mut Vec<Production>, head: Node, children: Option<Vec<usize>>) {
        let weight = match head {
            Node::Prim(p) => self.weights.of(p),
            Node::Lit(_) => self.weights.literal,
            Node::Param(_) => self.weights.param,
        };
        if let Some(children) = children {
            if weight > 0.0 {
                out.push(Production { head, children, weight });
            }
        }
    }

    fn term_productions(&mut self, ty: &Type, d: usize, flags: Flags) -> Vec<Production> {
        let mut out = Vec::new();
        if d == 0 {
            return out;
        }
        let none = Flags::default();
        let no_empty = |on: bool| Flags { no_empty: on, ..Flags::default() };
        if *ty == Type::Int && !flags.no_literal {
            for &v in &self.dsl.literals.clone() {
                if v == -1 && self.rule(Rule::C3) && !flags.allow_neg1 {
                    continue;
                }
                self.push(&mut out, Node::Lit(v), Some(vec![]));
            }
        }
        for k in 0..self.params.len() {
            if self.params[k] == *ty {
                self.push(&mut out, Node::Param(k + 1), Some(vec![]));
            }
        }
        if ty.is_list() && !flags.no_empty && self.has(Prim::Empty) {
            self.push(&mut out, Node::Prim(Prim::Empty), Some(vec![]));
        }
        if d < 2 {
            return out;
        }
        let c = d - 1;
        let elem_types: Vec<Type> = self.universe.iter().filter(|t| self.in_universe(&Type::list((*t).clone()))).cloned().collect();
        for p in self.dsl.primitives.clone() {
            match p {
                Prim::Empty => {}
                Prim::If => {
                    let kids = self.all(&[(Type::Bool, c, none), (ty.clone(), c, none), (ty.clone(), c, none)]);
                    self.push(&mut out, Node::Prim(p), kids);
                }
                Prim::Map => {
                    let Some(t1) = ty.elem() else { continue };
                    for t0 in &elem_types {
                        let f = self.get(Symbol::Func { from: t0.clone(), to: t1.clone(), depth: c });
                        let l = self.term(Type::list(t0.clone()), c, no_empty(self.rule(Rule::C2)));
                        self.push(&mut out, Node::Prim(p), f.zip(l).map(|(f, l)| vec![f, l]));
                    }
                }
                Prim::Append => {
                    let Some(t0) = ty.elem() else { continue };
                    let kids = self.all(&[(t0.clone(), c, none), (ty.clone(), c, none)]);
                    self.push(&mut out, Node::Prim(p), kids);
                }
                Prim::Extend => {
                    if !ty.is_list() {
                        continue;
                    }
                    let kids = self.all(&[(ty.clone(), c, none), (ty.clone(), c, no_empty(self.rule(Rule::C2)))]);
                    self.push(&mut out, Node::Prim(p), kids);
                }
                Prim::Init | Prim::Tail => {
                    if !ty.is_list() {
                        continue;
                    }
                    let kids = self.all(&[(ty.clone(), c, no_empty(self.rule(Rule::C4)))]);
                    self.push(&mut out, Node::Prim(p), kids);
                }
                Prim::Length => {
                    if *ty != Type::Int {
                        continue;
                    }
                    for t0 in &elem_types {
                        let kids = self.all(&[(Type::list(t0.clone()), c, no_empty(self.rule(Rule::C2)))]);
                        self.push(&mut out, Node::Prim(p), kids);
                    }
                }
                Prim::Index => {
                    if !self.in_universe(&Type::list(ty.clone())) {
                        continue;
                    }
                    let idx = Flags { allow_neg1: true, ..none };
                    let kids = self.all(&[(Type::Int, c, idx), (Type::list(ty.clone()), c, no_empty(self.rule(Rule::C4)))]);
                    self.push(&mut out, Node::Prim(p), kids);
                }
                Prim::Eq | Prim::Lt | Prim::Gt => {
                    if *ty != Type::Bool {
                        continue;
                    }
                    let first = Flags { no_literal: self.rule(Rule::C1), ..none };
                    let kids = self.all(&[(Type::Int, c, first), (Type::Int, c, none)]);
                    self.push(&mut out, Node::Prim(p), kids);
                }
                Prim::And | Prim::Or => {
                    if *ty != Type::Bool {
                        continue;
                    }
                    let kids = self.all(&[(Type::Bool, c, none), (Type::Bool, c, none)]);
                    self.push(&mut out, Node::Prim(p), kids);
                }
                Prim::Not => {
                    if *ty != Type::Bool {
                        continue;
                    }
                    let kids = self.all(&[(Type::Bool, c, none)]);
                    self.push(&mut out, Node::Prim(p), kids);
                }
            }
        }
        out
    }

    fn func_productions(&mut self, from: &Type, to: &Type, d: usize) -> Vec<Production> {
        let mut out = Vec::new();
        if d == 0 {
            return out;
        }
        let none = Flags::default();
        for p in self.dsl.primitives.clone() {
            let kids = match p {
                Prim::Length if from.is_list() && *to == Type::Int => Some(vec![]),
                Prim::Init | Prim::Tail if from.is_list() && from == to => Some(vec![]),
                _ if d < 2 => continue,
                Prim::Index if from.elem() == Some(to) => self.all(&[(Type::Int, d - 1, Flags { allow_neg1: true, ..none })]),
                Prim::Append if from.is_list() && from == to => self.all(&[(from.elem().unwrap().clone(), d - 1, none)]),
                Prim::Extend if from.is_list() && from == to => self.all(&[(from.clone(), d - 1, none)]),
                Prim::If if from == to => self.all(&[(Type::Bool, d - 1, none), (to.clone(), d - 1, none)]),
                _ => continue,
            };
            self.push(&mut out, Node::Prim(p), kids);
        }
        out
    }

    fn all(&mut self, specs: &[(Type, usize, Flags)]) -> Option<Vec<usize>> {
        specs.iter().map(|(t, d, f)| self.term(t.clone(), *d, *f)).collect()
    }
}

/// `principal` with its type variable set to `int`, nested at least `nesting` deep.
fn canonical_instance(principal: &Type, nesting: usize) -> Type {
    let mut depth = 0;
    let mut t = principal;
    while let Type::List(e) = t {
        depth += 1;
        t = e;
    }
    match t {
        Type::Var(_) => (0..depth.max(nesting)).fold(Type::Int, |acc, _| Type::list(acc)),
        _ => principal.clone(),
    }
}

impl Cfg {
    pub fn probabilities(&self, nt: usize) -> Vec<f64> {
        let ps = &self.nonterminals[nt].productions;
        let total: f64 = ps.iter().map(|p| p.weight).sum();
        ps.iter().map(|p| p.weight / total).collect()
    }

    pub fn sample_production<R: Rng + ?Sized>(&self, nt: usize, rng: &mut R) -> usize {
        self.dists[nt].sample(rng)
    }

    pub fn sample_from<R: Rng + ?Sized>(&self, nt: usize, rng: &mut R) -> Term {
        let p = &self.nonterminals[nt].productions[self.sample_production(nt, rng)];
        let children = p.children.iter().map(|&c| self.sample_from(c, rng)).collect();
        Term { node: p.head, children }
    }

    /// Top-down sample from the start symbol.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Term {
        self.sample_from(self.start, rng)
    }

    /// The element type of `length`'s argument, and of the list mapped by
    /// `(length)`, is invisible in the term, so a term whose list there is
    /// polymorphic has one derivation per admissible element type. The
    /// canonical one instantiates the free variable to `int`; canonical
    /// derivations correspond one to one with terms.
    pub fn is_canonical(&self, p: &Production, term: &Term) -> bool {
        let (list_nt, nesting) = match (p.head, p.children.as_slice()) {
            (Node::Prim(Prim::Length), [l]) if matches!(self.nonterminals[*l].symbol, Symbol::Term { .. }) => (*l, 1),
            (Node::Prim(Prim::Map), [_, l]) if term.children[0].node == Node::Prim(Prim::Length) => (*l, 2),
            _ => return true,
        };
        let Symbol::Term { ty, .. } = &self.nonterminals[list_nt].symbol else {
            return true;
        };
        let list = if nesting == 1 { &term.children[0] } else { &term.children[1] };
        match crate::dsl::typecheck(list, &self.params) {
            Ok(principal) => canonical_instance(&principal, nesting) == *ty,
            Err(_) => false,
        }
    }

    /// Number of derivations of every nonterminal, saturating.
    pub fn derivation_counts(&self) -> Vec<u128> {
        let mut counts = vec![0u128; self.nonterminals.len()];
        for (id, nt) in self.nonterminals.iter().enumerate() {
            counts[id] = nt.productions.iter().fold(0u128, |acc, p| {
                let prod = p.children.iter().fold(1u128, |x, &c| x.saturating_mul(counts[c]));
                acc.saturating_add(prod)
            });
        }
        counts
    }

    pub fn derivation_count(&self) -> u128 {
        self.derivation_counts()[self.start]
    }

    pub fn find(&self, sym: &Symbol) -> Option<usize> {
        self.nonterminals.iter().position(|nt| nt.symbol == *sym)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub program_type: Type,
    pub max_depth: usize,
    pub weight_overrides: BTreeMap<Prim, f64>,
    pub rng_seed: u64,
    pub input_count: usize,
    pub list_len_range: (usize, usize),
    pub element_range: (i64, i64),
    pub max_attempts: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            program_type: Type::program(1),
            max_depth: 5,
            weight_overrides: BTreeMap::new(),
            rng_seed: 0,
            input_count: 3,
            list_len_range: (3, 5),
            element_range: (0, 5),
            max_attempts: 10_000,
        }
    }
}

impl SamplerConfig {
    pub const KEYS: [&'static str; 10] = [
        "program_type",
        "max_depth",
        "seed",
        "input_count",
        "list_len_min",
        "list_len_max",
        "element_min",
        "element_max",
        "max_attempts",
        "weight.<primitive>",
    ];

    pub fn is_key(k: &str) -> bool {
        k.strip_prefix("weight.").is_some_and(|p| Prim::from_name(p).is_some()) || Self::KEYS[..9].contains(&k)
    }

    /// Applies recognised keys; others are left for the caller.
    pub fn apply(&mut self, kv: &KvConfig) -> Result<(), ConfigError> {
        if let Some(t) = kv.get("program_type") {
            self.program_type = match t {
                "1" => Type::program(1),
                "2" => Type::program(2),
                other => other.parse().map_err(|_| ConfigError::Value { key: "program_type".into(), value: other.into() })?,
            };
        }
        macro_rules! set {
            ($key:literal, $field:expr) => {
                if let Some(v) = kv.get_parsed($key)? {
                    $field = v;
                }
            };
        }
        set!("max_depth", self.max_depth);
        set!("seed", self.rng_seed);
        set!("input_count", self.input_count);
        set!("list_len_min", self.list_len_range.0);
        set!("list_len_max", self.list_len_range.1);
        set!("element_min", self.element_range.0);
        set!("element_max", self.element_range.1);
        set!("max_attempts", self.max_attempts);
        for (k, v) in kv.iter() {
            if let Some(name) = k.strip_prefix("weight.") {
                let p = Prim::from_name(name).ok_or_else(|| ConfigError::UnknownKey(k.to_string()))?;
                let w: f64 = v.parse().ok().filter(|w: &f64| *w >= 0.0 && w.is_finite()).ok_or_else(|| ConfigError::Value {
                    key: k.to_string(),
                    value: v.to_string(),
                })?;
                self.weight_overrides.insert(p, w);
            }
        }
        if self.list_len_range.0 > self.list_len_range.1 || self.element_range.0 > self.element_range.1 {
            return Err(ConfigError::Value { key: "range".into(), value: "lower bound above upper bound".into() });
        }
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.program_type.args_and_ret().0.len()
    }

    pub fn weights(&self) -> Weights {
        Weights::with_overrides(&self.weight_overrides)
    }

    pub fn compile(&self, dsl: &Dsl) -> Result<Cfg, GrammarError> {
        compile(dsl, &self.program_type, self.max_depth, &self.weights())
    }
}

/// `input_count` argument tuples; list lengths and elements are uniform
/// and drawn with replacement.
pub fn sample_inputs<R: Rng + ?Sized>(program_type: &Type, config: &SamplerConfig, rng: &mut R) -> Vec<Vec<Literal>> {
    let (params, _) = program_type.args_and_ret();
    (0..config.input_count)
        .map(|_| params.iter().map(|t| sample_value(t, config, rng)).collect())
        .collect()
}

fn sample_value<R: Rng + ?Sized>(t: &Type, config: &SamplerConfig, rng: &mut R) -> Literal {
    let (elo, ehi) = config.element_range;
    match t {
        Type::Int => Literal::Int(rng.gen_range(elo..=ehi)),
        Type::Bool => Literal::Bool(rng.gen()),
        Type::List(e) => {
            let (llo, lhi) = config.list_len_range;
            let n = rng.gen_range(llo..=lhi);
            Literal::List((0..n).map(|_| sample_value(e, config, rng)).collect())
        }
        other => panic!("cannot sample a value of type {other}"),
    }
}

/// Executes a program on several inputs.
pub trait ProgramRunner {
    fn run_all(&self, term: &Term, arity: usize, inputs: &[Vec<Literal>]) -> Vec<Result<Literal, ErrorKind>>;
}

/// Runs the imperative translation: the authoritative semantics.
#[derive(Debug, Clone, Copy, Default)]
pub struct TranspiledRunner {
    pub limits: Limits,
}

impl ProgramRunner for TranspiledRunner {
    fn run_all(&self, term: &Term, arity: usize, inputs: &[Vec<Literal>]) -> Vec<Result<Literal, ErrorKind>> {
        let Ok(prog) = transpile::translate(term, arity) else {
            return vec![Err(ErrorKind::TypeError); inputs.len()];
        };
        inputs
            .iter()
            .map(|args| {
                let values = args.iter().map(|a| Value::from_literal(a).map_err(|_| ErrorKind::TypeError)).collect::<Result<Vec<_>, _>>()?;
                let r = minipy::interpret(&prog.ast, &prog.function_name, values, self.limits);
                match r.status {
                    minipy::ExecStatus::Ok => Ok(r.output.unwrap()),
                    minipy::ExecStatus::Error(e) => Err(e.kind),
                }
            })
            .collect()
    }
}

/// Runs the reference evaluator.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceRunner;

impl ProgramRunner for ReferenceRunner {
    fn run_all(&self, term: &Term, _arity: usize, inputs: &[Vec<Literal>]) -> Vec<Result<Literal, ErrorKind>> {
        inputs
            .iter()
            .map(|args| {
                let values = args.iter().map(|a| Value::from_literal(a).map_err(|_| ErrorKind::TypeError)).collect::<Result<Vec<_>, _>>()?;
                eval_dsl(term, &values).map(|v| v.to_literal()).map_err(|e| e.kind)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidProgram {
    pub term: Term,
    pub inputs: Vec<Vec<Literal>>,
    pub outputs: Vec<Literal>,
    /// Samples drawn, this one included.
    pub attempts: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionStats {
    pub syntactic: usize,
    pub runtime_error: usize,
    pub constant_output: usize,
    pub accepted: usize,
}

/// Rejection-samples until a program satisfies the sample-time and runtime
/// rules on freshly drawn inputs.
pub fn sample_valid_program<R: Rng + ?Sized>(
    cfg: &Cfg,
    config: &SamplerConfig,
    rules: &ConstraintSet,
    runner: &dyn ProgramRunner,
    rng: &mut R,
    stats: &mut RejectionStats,
) -> Result<ValidProgram, GrammarError> {
    for attempt in 1..=config.max_attempts {
        let term = cfg.sample(rng);
        let inputs = sample_inputs(&cfg.program_type, config, rng);
        if !check_constraints(&term, cfg.arity, Phase::Sample, rules).is_empty() {
            stats.syntactic += 1;
            continue;
        }
        let results = runner.run_all(&term, cfg.arity, &inputs);
        // an erroring program has no ground truth, so it is rejected even
        // when the no-error rule is switched off
        if results.iter().any(Result::is_err) {
            stats.runtime_error += 1;
            continue;
        }
        let outputs: Vec<Literal> = results.into_iter().map(Result::unwrap).collect();
        if rules.runtime.contains(&RuntimeRule::NonConstantOutput) && outputs.windows(2).all(|w| w[0] == w[1]) {
            stats.constant_output += 1;
            continue;
        }
        stats.accepted += 1;
        return Ok(ValidProgram { term, inputs, outputs, attempts: attempt });
    }
    Err(GrammarError::AttemptsExhausted(config.max_attempts))
}

/// One line of a sampled corpus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledProgram {
    pub dsl_text: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub depth: usize,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl SampledProgram {
    pub fn new(v: &ValidProgram, program_type: &Type) -> SampledProgram {
        SampledProgram {
            dsl_text: v.term.to_string(),
            ty: program_type.to_string(),
            depth: v.term.depth(),
            inputs: v.inputs.iter().map(|a| minipy::args_repr(a)).collect(),
            outputs: v.outputs.iter().map(Literal::repr).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::list_dsl;
    use crate::util::seeded_rng;

    #[test]
    fn compiles_both_signatures() {
        for arity in [1, 2] {
            for depth in [4, 5] {
                let cfg = compile(&list_dsl(), &Type::program(arity), depth, &Weights::default()).unwrap();
                assert!(cfg.derivation_count() > 0);
                assert_eq!(cfg.start, cfg.nonterminals.len() - 1);
            }
        }
    }

    #[test]
    fn comparison_first_operand_has_no_literals() {
        let cfg = compile(&list_dsl(), &Type::program(1), 5, &Weights::default()).unwrap();
        for nt in &cfg.nonterminals {
            for p in &nt.productions {
                if matches!(p.head, Node::Prim(q) if q.is_comparison()) {
                    let first = &cfg.nonterminals[p.children[0]];
                    assert!(first.productions.iter().all(|q| !matches!(q.head, Node::Lit(_))));
                }
            }
        }
    }

    #[test]
    fn seeded_sampling_is_deterministic() {
        let cfg = compile(&list_dsl(), &Type::program(2), 5, &Weights::default()).unwrap();
        let a: Vec<String> = {
            let mut r = seeded_rng(9);
            (0..20).map(|_| cfg.sample(&mut r).to_string()).collect()
        };
        let b: Vec<String> = {
            let mut r = seeded_rng(9);
            (0..20).map(|_| cfg.sample(&mut r).to_string()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn inputs_follow_ranges() {
        let mut r = seeded_rng(1);
        let cfg = SamplerConfig::default();
        for arity in [1, 2] {
            let xs = sample_inputs(&Type::program(arity), &cfg, &mut r);
            assert_eq!(xs.len(), 3);
            for x in xs {
                assert_eq!(x.len(), arity);
                for l in x {
                    let Literal::List(items) = l else { panic!() };
                    assert!((3..=5).contains(&items.len()));
                    assert!(items.iter().all(|e| matches!(e, Literal::Int(0..=5))));
                }
            }
        }
    }

    #[test]
    fn config_keys() {
        let kv = KvConfig::parse("program_type = 2\nmax_depth = 4\nweight.extend = 0.5\nseed = 11\nlist_len_max = 6").unwrap();
        let mut c = SamplerConfig::default();
        c.apply(&kv).unwrap();
        assert_eq!(c.program_type, Type::program(2));
        assert_eq!(c.max_depth, 4);
        assert_eq!(c.rng_seed, 11);
        assert_eq!(c.list_len_range, (3, 6));
        assert_eq!(c.weights().of(Prim::Extend), 0.5);
        assert_eq!(c.weights().of(Prim::If), 5.0);
        assert!(kv.check_keys(SamplerConfig::is_key).is_ok());
        let bad = KvConfig::parse("weight.frob = 1").unwrap();
        assert!(SamplerConfig::default().apply(&bad).is_err());
    }

    #[test]
    fn valid_samples_satisfy_rules() {
        let cfg = compile(&list_dsl(), &Type::program(1), 4, &Weights::default()).unwrap();
        let mut r = seeded_rng(3);
        let mut stats = RejectionStats::default();
        let rules = ConstraintSet::default();
        for _ in 0..20 {
            let v = sample_valid_program(&cfg, &SamplerConfig::default(), &rules, &TranspiledRunner::default(), &mut r, &mut stats).unwrap();
            assert!(check_constraints(&v.term, 1, Phase::Sample, &rules).is_empty());
            assert!(v.outputs.windows(2).any(|w| w[0] != w[1]));
        }
        assert_eq!(stats.accepted, 20);
    }
}

//! `execmut`: sample, build, mutate, evaluate and report.

mod settings;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use execmut_core::config::KvConfig;
use execmut_core::datasets::{self, DslListConfig, IngestConfig, LlmListConfig, Problem, LOC_BINS};
use execmut_core::dsl::{list_dsl, Term};
use execmut_core::executor::{BuiltinExecutor, Executor};
use execmut_core::grammar::{self, RejectionStats, SampledProgram, TranspiledRunner};
use execmut_core::harness::{self, ChoiceRecord, Pair, PredictionRecord, RunOptions};
use execmut_core::manifest::RunManifest;
use execmut_core::metrics;
use execmut_core::mutate;
use execmut_core::transpile;
use execmut_core::util::{derived_rng, read_jsonl, write_atomic, write_jsonl};
use settings::{usage, Settings, Usage};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "execmut", version, about = "Program generation, mutation and code-reasoning evaluation")]
struct Cli {
    /// Global seed; every random stream is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat `key = value` file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// traditional, reasoning or effort-based.
    #[arg(long, global = true)]
    model_profile: Option<String>,
    /// Command line of an external executor speaking the JSON-lines protocol.
    #[arg(long, global = true)]
    executor_cmd: Option<String>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample valid programs with inputs and outputs.
    Sample {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        arity: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
        /// JSONL file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Translate terms to imperative source.
    Transpile {
        /// A term such as `(length a1)`.
        term: Option<String>,
        /// File with one term per line.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        arity: Option<usize>,
        #[arg(long, default_value = transpile::DEFAULT_FUNCTION_NAME)]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the binned DSL program corpus.
    BuildDslList {
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate functions and inputs with a model.
    BuildLlmList {
        #[arg(long)]
        model: String,
        #[arg(long)]
        model_name: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Execute and filter an external program corpus.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = ExecChoice::External)]
        executor: ExecChoice,
    },
    /// Produce one coverage-similar mutant per problem.
    Mutate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Execution prediction on original and mutated programs.
    RunPred(RunArgs),
    /// Execution choice between original and mutated programs.
    RunChoice(RunArgs),
    /// Aggregate records into tables and LOC series.
    Report {
        /// Record files, or directories holding prediction.jsonl / choice.jsonl.
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Format::Text, Format::Csv, Format::Series, Format::Dat])]
        format: Vec<Format>,
        /// Bin edges, e.g. `4,8,12,16,20,24`.
        #[arg(long)]
        loc_bins: Option<String>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Directory written by `mutate`.
    #[arg(long)]
    pairs: PathBuf,
    /// `mock:KIND` or an http(s) endpoint.
    #[arg(long)]
    model: String,
    #[arg(long)]
    model_name: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Evaluate only the first N pairs.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExecChoice {
    Builtin,
    External,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Series,
    Dat,
}

fn flags(cli: &Cli) -> KvConfig {
    let mut kv = KvConfig::new();
    if let Some(s) = cli.seed {
        kv.set("seed", s);
    }
    if let Some(p) = &cli.model_profile {
        kv.set("profile", p);
    }
    if let Some(c) = &cli.executor_cmd {
        kv.set("executor_cmd", c);
    }
    if let Some(t) = cli.threads {
        kv.set("threads", t);
    }
    match &cli.command {
        Command::Sample { count, arity, depth, .. } => {
            kv.set("count", count);
            if let Some(a) = arity {
                kv.set("program_type", a);
            }
            if let Some(d) = depth {
                kv.set("max_depth", d);
            }
        }
        Command::BuildLlmList { model_name: Some(m), .. } => kv.set("model", m),
        Command::RunPred(a) | Command::RunChoice(a) => {
            if let Some(m) = &a.model_name {
                kv.set("model", m);
            }
            if let Some(n) = a.samples {
                kv.set("samples", n);
            }
        }
        _ => {}
    }
    kv
}

fn manifest(cmd: &str, cli: &Cli, s: &Settings) -> Result<RunManifest> {
    let mut m = RunManifest::new(cmd);
    m.config = cli.config.as_ref().map(|p| p.display().to_string());
    m.seed = Some(s.seed()?);
    m.settings = s.kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    Ok(m)
}

fn load(path: &Path) -> Result<Vec<Problem>> {
    datasets::load_problems(path).with_context(|| format!("reading problems from {}", path.display()))
}

fn save<T: serde::Serialize>(path: &Path, items: &[T], m: &mut RunManifest) -> Result<()> {
    write_jsonl(path, items).with_context(|| format!("writing {}", path.display()))?;
    m.output(path);
    Ok(())
}

fn sample(cli: &Cli, s: &Settings, out: Option<&Path>) -> Result<()> {
    let sc = s.sampler()?;
    let count: usize = s.get("count", 10)?;
    let dsl = list_dsl();
    let cfg = sc.compile(&dsl)?;
    let mut rng = derived_rng(s.seed()?, "sample");
    let mut stats = RejectionStats::default();
    let runner = TranspiledRunner::default();
    let mut programs = Vec::with_capacity(count);
    for _ in 0..count {
        let v = grammar::sample_valid_program(&cfg, &sc, &dsl.constraints, &runner, &mut rng, &mut stats)?;
        programs.push(SampledProgram::new(&v, &sc.program_type));
    }
    log::info!("accepted {} of {} draws", stats.accepted, stats.accepted + stats.syntactic + stats.runtime_error + stats.constant_output);
    match out {
        Some(path) => {
            let mut m = manifest("sample", cli, s)?;
            save(path, &programs, &mut m)?;
            m.write_to(&sidecar(path))?;
        }
        None => print!("{}", execmut_core::util::to_jsonl(&programs)),
    }
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn transpile_cmd(term: Option<&str>, input: Option<&Path>, arity: Option<usize>, name: &str, out: Option<&Path>) -> Result<()> {
    let texts: Vec<String> = match (term, input) {
        (Some(t), None) => vec![t.to_string()],
        (None, Some(p)) => std::fs::read_to_string(p)
            .with_context(|| format!("reading {}", p.display()))?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_string)
            .collect(),
        _ => return usage("give exactly one of TERM or --in"),
    };
    let mut text = String::new();
    for t in texts {
        let term: Term = t.parse().map_err(|e| Usage(format!("{t}: {e}")))?;
        let arity = arity.unwrap_or_else(|| term.max_param().max(1));
        let prog = transpile::translate_named(&term, arity, name)?;
        text.push_str(&prog.source);
        if !prog.source.ends_with('\n') {
            text.push('\n');
        }
    }
    match out {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn build_dsl_list(cli: &Cli, s: &Settings, out: &Path) -> Result<()> {
    let defaults = DslListConfig::default();
    let config = DslListConfig {
        seed: s.seed()?,
        sampler: s.sampler()?,
        pool_size: s.get("pool_size", defaults.pool_size)?,
        per_bin: s.get("per_bin", defaults.per_bin)?,
        ..defaults
    };
    let build = datasets::build_dsl_list(&config)?;
    let mut m = manifest("build-dsl-list", cli, s)?;
    save(&out.join("dsl-list.jsonl"), &build.problems, &mut m)?;
    save(&out.join("programs.jsonl"), &build.programs, &mut m)?;
    let stats = serde_json::to_string_pretty(&build.stats)? + "\n";
    write_atomic(&out.join("stats.json"), stats.as_bytes())?;
    m.output(&out.join("stats.json"));
    m.dataset_ids = build.problems.iter().map(|p| p.id.clone()).collect();
    m.write_to(&out.join("build-dsl-list.manifest.json"))?;
    println!("{} programs, {} problems", build.programs.len(), build.problems.len());
    Ok(())
}

fn build_llm_list(cli: &Cli, s: &Settings, spec: &str, out: &Path) -> Result<()> {
    let model = s.model(spec, None, &out.join("llm-list.transcript.jsonl"))?;
    let executor = BuiltinExecutor::default();
    let defaults = LlmListConfig::default();
    let config = LlmListConfig {
        inputs_per_function: s.get("inputs_per_function", defaults.inputs_per_function)?,
        retry_cap: s.get("retry_cap", defaults.retry_cap)?,
    };
    let build = datasets::build_llm_list(model.as_ref(), &executor, &config)?;
    let mut m = manifest("build-llm-list", cli, s)?;
    m.model_config_hash = s.model_hash(spec)?;
    save(&out.join("llm-list.jsonl"), &build.problems, &mut m)?;
    save(&out.join("functions.jsonl"), &build.functions, &mut m)?;
    save(&out.join("failures.jsonl"), &build.failures, &mut m)?;
    m.dataset_ids = build.problems.iter().map(|p| p.id.clone()).collect();
    m.write_to(&out.join("build-llm-list.manifest.json"))?;
    println!("{} functions, {} problems, {} failures", build.functions.len(), build.problems.len(), build.failures.len());
    Ok(())
}

fn ingest(cli: &Cli, s: &Settings, input: &Path, out: &Path, choice: ExecChoice) -> Result<()> {
    let executor: Box<dyn Executor> = match choice {
        ExecChoice::Builtin => Box::new(BuiltinExecutor::default()),
        ExecChoice::External => Box::new(s.external()?),
    };
    let defaults = IngestConfig::default();
    let max_steps: i64 = s.get("max_steps", defaults.max_steps.map_or(-1, |v| v as i64))?;
    let config = IngestConfig {
        min_chars: s.get("min_chars", defaults.min_chars)?,
        max_chars: s.get("max_chars", defaults.max_chars)?,
        max_steps: (max_steps >= 0).then_some(max_steps as u64),
    };
    let outcome = datasets::ingest_file(input, executor.as_ref(), &config)?;
    let mut m = manifest("ingest", cli, s)?;
    m.input(input)?;
    save(&out.join("external.jsonl"), &outcome.problems, &mut m)?;
    save(&out.join("rejections.jsonl"), &outcome.rejections, &mut m)?;
    m.dataset_ids = outcome.problems.iter().map(|p| p.id.clone()).collect();
    m.write_to(&out.join("ingest.manifest.json"))?;
    println!("{} kept, {} rejected", outcome.problems.len(), outcome.rejections.len());
    Ok(())
}

fn mutate_cmd(cli: &Cli, s: &Settings, input: &Path, out: &Path) -> Result<()> {
    let problems = load(input)?;
    let executors = s.executors(&problems)?;
    let outcome = mutate::mutate_dataset(&problems, &executors, s.seed()?, s.threads()?);
    if outcome.kept.len() != outcome.mutated.len() {
        bail!("internal error: {} originals but {} mutants", outcome.kept.len(), outcome.mutated.len());
    }
    let mut m = manifest("mutate", cli, s)?;
    m.input(input)?;
    save(&out.join("original.jsonl"), &outcome.kept, &mut m)?;
    save(&out.join("mutated.jsonl"), &outcome.mutated, &mut m)?;
    save(&out.join("dropped.jsonl"), &outcome.dropped, &mut m)?;
    m.dataset_ids = outcome.kept.iter().map(|p| p.id.clone()).collect();
    m.write_to(&out.join("mutate.manifest.json"))?;
    println!(
        "{} pairs, {} dropped ({:.1}%)",
        outcome.kept.len(),
        outcome.dropped.len(),
        100.0 * outcome.drop_rate()
    );
    Ok(())
}

fn check_goldens() -> Result<()> {
    let bad = harness::golden_mismatches();
    if !bad.is_empty() {
        bail!("prompt templates differ from goldens: {}", bad.join(", "));
    }
    Ok(())
}

fn load_pairs(dir: &Path, limit: Option<usize>, m: &mut RunManifest) -> Result<Vec<Pair>> {
    let (o, mu) = (dir.join("original.jsonl"), dir.join("mutated.jsonl"));
    let mut pairs = harness::pair_problems(&load(&o)?, &load(&mu)?)?;
    m.input(&o)?;
    m.input(&mu)?;
    if let Some(n) = limit {
        pairs.truncate(n);
    }
    m.dataset_ids = pairs.iter().map(|p| p.original.id.clone()).collect();
    Ok(pairs)
}

fn run(cli: &Cli, s: &Settings, a: &RunArgs, choice: bool) -> Result<()> {
    check_goldens()?;
    let (cmd, stem) = if choice { ("run-choice", "choice") } else { ("run-pred", "prediction") };
    let mut m = manifest(cmd, cli, s)?;
    let pairs = load_pairs(&a.pairs, a.limit, &mut m)?;
    m.model_config_hash = s.model_hash(&a.model)?;
    let model = s.model(&a.model, Some(&pairs), &a.out.join(format!("{stem}.transcript.jsonl")))?;
    let records = a.out.join(format!("{stem}.jsonl"));
    let opts = RunOptions {
        samples: s.get("samples", 5)?,
        mode: s.prompt_mode()?,
        strict: s.get("strict", true)?,
        records: Some(records.clone()),
        unit_limit: None,
    };
    if choice {
        let rs = harness::run_choice(&pairs, model.as_ref(), &opts)?;
        write_jsonl(&records, &rs)?;
        println!("{} choice records", rs.len());
    } else {
        let rs = harness::run_prediction(&pairs, model.as_ref(), &opts)?;
        write_jsonl(&records, &rs)?;
        println!("{} prediction records", rs.len());
    }
    m.output(&records);
    m.output(&a.out.join(format!("{stem}.transcript.jsonl")));
    m.write_to(&a.out.join(format!("{cmd}.manifest.json")))?;
    Ok(())
}

fn parse_bins(text: Option<&str>) -> Result<Vec<(usize, usize)>> {
    let Some(t) = text else { return Ok(LOC_BINS.to_vec()) };
    let edges: Vec<usize> = t
        .split(',')
        .map(|e| e.trim().parse().map_err(|_| Usage(format!("bad bin edge {e:?}"))))
        .collect::<Result<_, _>>()?;
    if edges.len() < 2 || edges.windows(2).any(|w| w[0] >= w[1]) {
        return usage("--loc-bins needs at least two increasing edges");
    }
    Ok(edges.windows(2).map(|w| (w[0], w[1])).collect())
}

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn report(cli: &Cli, s: &Settings, inputs: &[PathBuf], out: Option<&Path>, formats: &[Format], bins: Option<&str>) -> Result<()> {
    let bins = parse_bins(bins)?;
    let mut m = manifest("report", cli, s)?;
    let mut prediction: Vec<PredictionRecord> = Vec::new();
    let mut choice: Vec<ChoiceRecord> = Vec::new();
    for p in inputs {
        let files: Vec<PathBuf> = if p.is_dir() {
            ["prediction.jsonl", "choice.jsonl"].iter().map(|f| p.join(f)).filter(|f| f.exists()).collect()
        } else if p.exists() {
            vec![p.clone()]
        } else {
            bail!("{} does not exist", p.display());
        };
        for f in files {
            let is_choice = f.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.contains("choice"));
            if is_choice {
                choice.extend(read_jsonl::<ChoiceRecord>(&f).with_context(|| format!("reading {}", f.display()))?);
            } else {
                prediction.extend(read_jsonl::<PredictionRecord>(&f).with_context(|| format!("reading {}", f.display()))?);
            }
            m.input(&f)?;
        }
    }
    if prediction.is_empty() && choice.is_empty() {
        bail!("no records found");
    }
    let rows = metrics::metrics_table(&prediction, &choice);
    let text = metrics::render_text(&rows);
    print!("{text}");
    let Some(out) = out else { return Ok(()) };
    let mut emit = |name: String, body: String| -> Result<()> {
        let path = out.join(name);
        write_atomic(&path, body.as_bytes())?;
        m.output(&path);
        Ok(())
    };
    if formats.contains(&Format::Text) {
        emit("report.txt".into(), text.clone())?;
    }
    if formats.contains(&Format::Csv) {
        emit("report.csv".into(), metrics::render_csv(&rows))?;
    }
    for row in rows.iter().filter(|r| r.prediction.is_some()) {
        let subset: Vec<PredictionRecord> =
            prediction.iter().filter(|r| r.dataset == row.dataset && r.model == row.model).cloned().collect();
        let series = metrics::loc_series(&subset, &bins);
        let stem = format!("loc_series.{}.{}", slug(&row.dataset), slug(&row.model));
        if formats.contains(&Format::Series) {
            emit(format!("{stem}.csv"), metrics::render_series_csv(&series))?;
        }
        if formats.contains(&Format::Dat) {
            emit(format!("{stem}.dat"), metrics::render_series_dat(&series))?;
        }
    }
    m.write_to(&out.join("report.manifest.json"))?;
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    let s = Settings::load(cli.config.as_deref(), flags(cli))?;
    match &cli.command {
        Command::Sample { out, .. } => sample(cli, &s, out.as_deref()),
        Command::Transpile { term, input, arity, name, out } => {
            transpile_cmd(term.as_deref(), input.as_deref(), *arity, name, out.as_deref())
        }
        Command::BuildDslList { out } => build_dsl_list(cli, &s, out),
        Command::BuildLlmList { model, out, .. } => build_llm_list(cli, &s, model, out),
        Command::Ingest { input, out, executor } => ingest(cli, &s, input, out, *executor),
        Command::Mutate { input, out } => mutate_cmd(cli, &s, input, out),
        Command::RunPred(a) => run(cli, &s, a, false),
        Command::RunChoice(a) => run(cli, &s, a, true),
        Command::Report { inputs, out, format, loc_bins } => {
            report(cli, &s, inputs, out.as_deref(), format, loc_bins.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<Usage>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

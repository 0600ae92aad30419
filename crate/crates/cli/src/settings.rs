//! Config file and flag merging, executor and model construction.

use anyhow::{Context, Result};
use execmut_core::config::KvConfig;
use execmut_core::datasets::Problem;
use execmut_core::executor::{ExecutorKind, Executors, ExternalExecutor};
use execmut_core::grammar::SamplerConfig;
use execmut_core::harness::{Pair, PromptMode};
use execmut_core::llm::{ChatModel, HttpModel, LogicalClock, MockBehavior, MockModel, ModelConfig, Oracle, Profile, Transcript};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

/// Invalid invocation; reported with exit code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

const KEYS: &[&str] = &[
    "pool_size",
    "per_bin",
    "count",
    "model",
    "profile",
    "prompt_mode",
    "samples",
    "strict",
    "parallelism",
    "max_retries",
    "timeout_secs",
    "backoff_ms",
    "api_key_env",
    "executor_cmd",
    "executor_pool",
    "executor_timeout_ms",
    "threads",
    "min_chars",
    "max_chars",
    "max_steps",
    "retry_cap",
    "inputs_per_function",
];

/// Config file entries overlaid by command-line flags.
pub struct Settings {
    pub kv: KvConfig,
}

impl Settings {
    pub fn load(config: Option<&Path>, flags: KvConfig) -> Result<Settings> {
        let base = match config {
            Some(p) => KvConfig::load(p).map_err(|e| Usage(format!("config {}: {e}", p.display())))?,
            None => KvConfig::new(),
        };
        let kv = base.merged(&flags);
        kv.check_keys(|k| SamplerConfig::is_key(k) || KEYS.contains(&k)).map_err(|e| Usage(format!("config: {e}")))?;
        Ok(Settings { kv })
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.kv.get_parsed(key).map_err(|e| Usage(e.to_string()))?.unwrap_or(default))
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        Ok(self.kv.get_parsed(key).map_err(|e| Usage(e.to_string()))?)
    }

    pub fn seed(&self) -> Result<u64> {
        self.get("seed", 0)
    }

    pub fn sampler(&self) -> Result<SamplerConfig> {
        let mut s = SamplerConfig::default();
        s.apply(&self.kv).map_err(|e| Usage(format!("config: {e}")))?;
        Ok(s)
    }

    pub fn threads(&self) -> Result<usize> {
        let default = std::thread::available_parallelism().map_or(4, |n| n.get());
        self.get("threads", default)
    }

    pub fn profile(&self) -> Result<Profile> {
        match self.kv.get("profile") {
            Some(p) => p.parse().map_err(|e: String| Usage(e).into()),
            None => Ok(Profile::Traditional),
        }
    }

    pub fn prompt_mode(&self) -> Result<PromptMode> {
        match self.kv.get("prompt_mode") {
            Some(m) => m.parse().map_err(|e: String| Usage(e).into()),
            None => Ok(PromptMode::for_profile(self.profile()?)),
        }
    }

    pub fn external(&self) -> Result<ExternalExecutor> {
        let pool = self.get("executor_pool", self.threads()?.min(8))?;
        let ex = match self.kv.get("executor_cmd") {
            Some(cmd) if !cmd.trim().is_empty() => ExternalExecutor::from_command_line(cmd, pool),
            _ => ExternalExecutor::reference(pool),
        };
        Ok(match self.opt::<u64>("executor_timeout_ms")? {
            Some(ms) => ex.with_timeout(Duration::from_millis(ms)),
            None => ex,
        })
    }

    /// Builtin execution, plus a subprocess pool when a problem needs one or
    /// a command is configured.
    pub fn executors(&self, problems: &[Problem]) -> Result<Executors> {
        let needs = problems.iter().any(|p| p.executor == ExecutorKind::External) || self.kv.get("executor_cmd").is_some();
        Ok(if needs { Executors::with_external(self.external()?) } else { Executors::builtin_only() })
    }

    fn model_config(&self, endpoint: &str) -> Result<ModelConfig> {
        let Some(name) = self.kv.get("model") else {
            return usage("an HTTP endpoint needs --model-name or a `model` config entry");
        };
        let mut c = ModelConfig::new(endpoint, name, self.profile()?);
        c.n_samples = self.get("samples", c.n_samples)?;
        c.parallelism = self.get("parallelism", c.parallelism)?;
        c.max_retries = self.get("max_retries", c.max_retries)?;
        c.request_timeout_secs = self.get("timeout_secs", c.request_timeout_secs)?;
        c.backoff_ms = self.get("backoff_ms", c.backoff_ms)?;
        c.api_key_env = self.get("api_key_env", c.api_key_env)?;
        Ok(c)
    }

    /// Hash of the HTTP model configuration, if an endpoint is used.
    pub fn model_hash(&self, spec: &str) -> Result<Option<String>> {
        if spec.starts_with("http://") || spec.starts_with("https://") {
            Ok(Some(self.model_config(spec)?.hash()))
        } else {
            Ok(None)
        }
    }

    /// Builds a model from `--model`. Oracle mocks need the evaluated pairs.
    pub fn model(&self, spec: &str, pairs: Option<&[Pair]>, transcript: &Path) -> Result<Box<dyn ChatModel>> {
        let endpoint = spec.starts_with("http://") || spec.starts_with("https://");
        let clock: Box<dyn execmut_core::llm::Clock> =
            if endpoint { Box::new(execmut_core::llm::SystemClock) } else { Box::new(LogicalClock::default()) };
        let log = Arc::new(
            Transcript::with_clock(transcript, clock).with_context(|| format!("opening transcript {}", transcript.display()))?,
        );
        if endpoint {
            return Ok(Box::new(HttpModel::new(self.model_config(spec)?, Some(log))?));
        }
        let Some(rest) = spec.strip_prefix("mock:") else {
            return usage(format!("unrecognised model {spec:?}; expected an http(s) endpoint or mock:KIND"));
        };
        let oracle = || -> Result<Oracle> {
            match pairs {
                Some(p) => Ok(Oracle::new(&p.iter().map(Pair::truth).collect::<Vec<_>>())),
                None => usage(format!("{spec} needs paired problems")),
            }
        };
        let behavior = if let Some(text) = rest.strip_prefix("fixed:") {
            MockBehavior::Fixed(text.replace("\\n", "\n"))
        } else if let Some(path) = rest.strip_prefix("scripted:") {
            return Ok(Box::new(
                MockModel::scripted(spec, Path::new(path), Some(log)).with_context(|| format!("reading script {path}"))?,
            ));
        } else {
            match rest {
                "ground-truth-given" => MockBehavior::GroundTruthGiven(oracle()?),
                "ground-truth-original" => MockBehavior::GroundTruthOriginal(oracle()?),
                "always-a" => MockBehavior::AlwaysA(oracle()?),
                other => return usage(format!("unknown mock {other:?}")),
            }
        };
        Ok(Box::new(MockModel::new(spec, behavior, Some(log))))
    }
}

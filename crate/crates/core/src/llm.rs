//! Chat-completion clients: an HTTP client for OpenAI-compatible endpoints
//! and deterministic mock models for offline runs.

use crate::util::sha256_hex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Message {
        Message { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Message {
        Message { role: "assistant".into(), content: content.into() }
    }
}

/// Hash identifying a conversation, used to key transcripts.
pub fn messages_hash(messages: &[Message]) -> String {
    sha256_hex(serde_json::to_string(messages).expect("serializable messages").as_bytes())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Traditional,
    Reasoning,
    EffortBased,
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Profile, String> {
        match s {
            "traditional" => Ok(Profile::Traditional),
            "reasoning" => Ok(Profile::Reasoning),
            "effort-based" | "effort" => Ok(Profile::EffortBased),
            other => Err(format!("unknown model profile {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub endpoint: String,
    pub model: String,
    pub profile: Profile,
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
    pub max_tokens: Option<u32>,
    pub reasoning_effort: Option<String>,
    pub n_samples: usize,
    pub request_timeout_secs: u64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub parallelism: usize,
    /// Environment variable holding the API key; unset means no auth header.
    pub api_key_env: String,
}

impl ModelConfig {
    pub fn new(endpoint: &str, model: &str, profile: Profile) -> ModelConfig {
        let (temperature, top_p, max_tokens, effort) = match profile {
            Profile::Traditional => (Some(0.2), Some(0.95), Some(4096), None),
            Profile::Reasoning => (Some(0.6), Some(0.95), None, None),
            Profile::EffortBased => (None, None, None, Some("high".to_string())),
        };
        ModelConfig {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            profile,
            temperature,
            top_p,
            max_tokens,
            reasoning_effort: effort,
            n_samples: 5,
            request_timeout_secs: 600,
            max_retries: 5,
            backoff_ms: 1000,
            parallelism: 4,
            api_key_env: "OPENAI_API_KEY".into(),
        }
    }

    pub fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    pub fn request_body(&self, messages: &[Message]) -> Json {
        let mut body = json!({ "model": self.model, "messages": messages });
        let obj = body.as_object_mut().unwrap();
        if let Some(t) = self.temperature {
            obj.insert("temperature".into(), json!(t));
        }
        if let Some(p) = self.top_p {
            obj.insert("top_p".into(), json!(p));
        }
        if let Some(m) = self.max_tokens {
            obj.insert("max_tokens".into(), json!(m));
        }
        if let Some(e) = &self.reasoning_effort {
            obj.insert("reasoning_effort".into(), json!(e));
        }
        body
    }

    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("serializable config").as_bytes())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub text: String,
    pub finish_reason: Option<String>,
    pub usage: Option<Usage>,
    pub latency_ms: u64,
}

impl ModelResponse {
    pub fn text(text: impl Into<String>) -> ModelResponse {
        ModelResponse { text: text.into(), finish_reason: Some("stop".into()), usage: None, latency_ms: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error, Serialize, Deserialize)]
pub enum LlmError {
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint returned {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    Decode(String),
    #[error("no scripted response for this prompt")]
    NotScripted,
}

pub trait ChatModel: Send + Sync {
    fn name(&self) -> String;

    /// `n` independent samples, ordered by sample index.
    fn complete(&self, messages: &[Message], n: usize) -> Vec<Result<ModelResponse, LlmError>>;

    fn parallelism(&self) -> usize {
        4
    }
}

pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
    }
}

/// Ticks once per reading.
#[derive(Default)]
pub struct LogicalClock(AtomicU64);

impl Clock for LogicalClock {
    fn now_ms(&self) -> u64 {
        self.0.fetch_add(1, Ordering::SeqCst)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Request,
    Response,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: u64,
    pub t: u64,
    pub kind: EntryKind,
    pub request_id: u64,
    pub model: String,
    pub prompt_sha256: String,
    pub sample: usize,
    pub in_flight: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request: Option<Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<ModelResponse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Append-only JSONL log of every request and its resolution.
pub struct Transcript {
    file: Mutex<(File, u64)>,
    clock: Box<dyn Clock>,
    next_id: AtomicU64,
}

impl Transcript {
    pub fn open(path: &Path) -> std::io::Result<Transcript> {
        Self::with_clock(path, Box::new(SystemClock))
    }

    pub fn with_clock(path: &Path, clock: Box<dyn Clock>) -> std::io::Result<Transcript> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let existing = Self::read(path).map(|v| v.len() as u64).unwrap_or(0);
        let f = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Transcript { file: Mutex::new((f, existing)), clock, next_id: AtomicU64::new(existing) })
    }

    pub fn read(path: &Path) -> std::io::Result<Vec<TranscriptEntry>> {
        crate::util::read_jsonl(path)
    }

    pub fn next_request_id(&self) -> u64 {
        self.next_id.fetch_add(1, Ordering::SeqCst)
    }

    #[allow(clippy::too_many_arguments)]
    fn log(
        &self,
        kind: EntryKind,
        request_id: u64,
        model: &str,
        prompt_sha256: &str,
        sample: usize,
        in_flight: usize,
        request: Option<Json>,
        outcome: Option<&Result<ModelResponse, LlmError>>,
    ) {
        let mut g = self.file.lock().unwrap();
        let entry = TranscriptEntry {
            seq: g.1,
            t: self.clock.now_ms(),
            kind,
            request_id,
            model: model.to_string(),
            prompt_sha256: prompt_sha256.to_string(),
            sample,
            in_flight,
            request,
            response: outcome.and_then(|o| o.as_ref().ok().cloned()),
            error: outcome.and_then(|o| o.as_ref().err().map(|e| e.to_string())),
        };
        g.1 += 1;
        let line = serde_json::to_string(&entry).expect("serializable entry");
        if let Err(e) = writeln!(g.0, "{line}").and_then(|_| g.0.flush()) {
            log::error!("transcript write failed: {e}");
        }
    }
}

/// Counting semaphore bounding in-flight requests.
struct Gate {
    limit: usize,
    busy: Mutex<usize>,
    freed: Condvar,
}

impl Gate {
    fn new(limit: usize) -> Gate {
        Gate { limit: limit.max(1), busy: Mutex::new(0), freed: Condvar::new() }
    }

    fn enter(&self) -> usize {
        let mut b = self.busy.lock().unwrap();
        while *b >= self.limit {
            b = self.freed.wait(b).unwrap();
        }
        *b += 1;
        *b
    }

    fn leave(&self) -> usize {
        let mut b = self.busy.lock().unwrap();
        *b -= 1;
        self.freed.notify_one();
        *b
    }
}

/// Shared request bookkeeping: gating and transcript logging.
struct Session {
    name: String,
    gate: Gate,
    transcript: Option<Arc<Transcript>>,
}

impl Session {
    fn run(
        &self,
        messages: &[Message],
        sample: usize,
        body: Option<Json>,
        call: impl FnOnce() -> Result<ModelResponse, LlmError>,
    ) -> Result<ModelResponse, LlmError> {
        let hash = messages_hash(messages);
        let in_flight = self.gate.enter();
        let id = self.transcript.as_ref().map_or(0, |t| t.next_request_id());
        if let Some(t) = &self.transcript {
            let body = body.unwrap_or_else(|| json!({ "messages": messages }));
            t.log(EntryKind::Request, id, &self.name, &hash, sample, in_flight, Some(body), None);
        }
        let out = call();
        let in_flight = self.gate.leave();
        if let Some(t) = &self.transcript {
            let kind = if out.is_ok() { EntryKind::Response } else { EntryKind::Error };
            t.log(kind, id, &self.name, &hash, sample, in_flight, None, Some(&out));
        }
        out
    }
}

pub struct HttpModel {
    pub config: ModelConfig,
    client: reqwest::blocking::Client,
    session: Session,
}

impl HttpModel {
    pub fn new(config: ModelConfig, transcript: Option<Arc<Transcript>>) -> Result<HttpModel, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.request_timeout_secs))
            .build()
            .map_err(|e| LlmError::Transport { attempts: 0, message: e.to_string() })?;
        let session = Session { name: config.model.clone(), gate: Gate::new(config.parallelism), transcript };
        Ok(HttpModel { config, client, session })
    }

    fn attempt(&self, body: &Json) -> Result<ModelResponse, (bool, LlmError)> {
        let started = Instant::now();
        let mut req = self.client.post(self.config.url()).json(body);
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| (true, LlmError::Transport { attempts: 1, message: e.to_string() }))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| (true, LlmError::Transport { attempts: 1, message: e.to_string() }))?;
        if !status.is_success() {
            let retry = status.as_u16() == 429 || status.is_server_error();
            return Err((retry, LlmError::Http { status: status.as_u16(), body: text }));
        }
        let v: Json = serde_json::from_str(&text).map_err(|e| (false, LlmError::Decode(e.to_string())))?;
        let choice = &v["choices"][0];
        let content = choice["message"]["content"]
            .as_str()
            .ok_or_else(|| (false, LlmError::Decode(format!("no message content in {text}"))))?;
        Ok(ModelResponse {
            text: content.to_string(),
            finish_reason: choice["finish_reason"].as_str().map(String::from),
            usage: serde_json::from_value(v["usage"].clone()).ok(),
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }

    fn request(&self, body: &Json) -> Result<ModelResponse, LlmError> {
        let mut attempt = 0;
        loop {
            match self.attempt(body) {
                Ok(r) => return Ok(r),
                Err((retry, e)) => {
                    attempt += 1;
                    if !retry || attempt > self.config.max_retries {
                        return Err(match e {
                            LlmError::Transport { message, .. } => LlmError::Transport { attempts: attempt, message },
                            other => other,
                        });
                    }
                    let wait = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(10)).min(60_000);
                    log::warn!("request failed ({e}); retry {attempt} in {wait} ms");
                    std::thread::sleep(Duration::from_millis(wait));
                }
            }
        }
    }
}

impl ChatModel for HttpModel {
    fn name(&self) -> String {
        self.config.model.clone()
    }

    fn complete(&self, messages: &[Message], n: usize) -> Vec<Result<ModelResponse, LlmError>> {
        let body = self.config.request_body(messages);
        (0..n).map(|i| self.session.run(messages, i, Some(body.clone()), || self.request(&body))).collect()
    }

    fn parallelism(&self) -> usize {
        self.config.parallelism
    }
}

/// Ground truth for one original/mutant pair, as seen by mock models.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairTruth {
    pub function_name: String,
    pub input: String,
    pub original_source: String,
    pub original_output: String,
    pub mutated_source: String,
    pub mutated_output: String,
}

#[derive(Clone, Debug, Default)]
pub struct Oracle {
    /// (trimmed source, input) to (own output, original output).
    by_program: HashMap<(String, String), (String, String)>,
}

impl Oracle {
    pub fn new(pairs: &[PairTruth]) -> Oracle {
        let mut by_program = HashMap::new();
        for p in pairs {
            let key = |s: &str| (s.trim().to_string(), p.input.trim().to_string());
            by_program.insert(key(&p.original_source), (p.original_output.clone(), p.original_output.clone()));
            by_program.insert(key(&p.mutated_source), (p.mutated_output.clone(), p.original_output.clone()));
        }
        Oracle { by_program }
    }

    fn lookup(&self, source: &str, input: &str) -> Option<&(String, String)> {
        self.by_program.get(&(source.trim().to_string(), input.trim().to_string()))
    }
}

#[derive(Clone, Debug)]
pub enum MockBehavior {
    /// Answers with the true output of the program in the prompt.
    GroundTruthGiven(Oracle),
    /// Answers with the original program's output whatever is shown.
    GroundTruthOriginal(Oracle),
    /// Chooses program A and answers with its true output.
    AlwaysA(Oracle),
    Fixed(String),
    /// Replays responses keyed by prompt hash and sample index.
    Scripted(HashMap<(String, usize), String>),
}

pub struct MockModel {
    name: String,
    behavior: MockBehavior,
    session: Session,
}

/// The last block delimited by `open` and `close`.
fn last_block<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = text.rfind(open)? + open.len();
    let end = start + text[start..].find(close)?;
    Some(&text[start..end])
}

/// Function name and argument text of the last `assert name(args) == ??`.
fn last_assertion(text: &str) -> Option<(&str, &str)> {
    let end = text.rfind(") == ??")?;
    let start = text[..end].rfind("assert ")? + "assert ".len();
    let call = &text[start..end];
    let open = call.find('(')?;
    Some((call[..open].trim(), &call[open + 1..]))
}

impl MockModel {
    pub fn new(name: &str, behavior: MockBehavior, transcript: Option<Arc<Transcript>>) -> MockModel {
        MockModel { name: name.to_string(), behavior, session: Session { name: name.to_string(), gate: Gate::new(4), transcript } }
    }

    /// Builds a replay model from a transcript file.
    pub fn scripted(name: &str, transcript_path: &Path, transcript: Option<Arc<Transcript>>) -> std::io::Result<MockModel> {
        let mut map = HashMap::new();
        let f = File::open(transcript_path)?;
        for line in BufReader::new(f).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e: TranscriptEntry = serde_json::from_str(&line)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            if let Some(r) = e.response {
                map.insert((e.prompt_sha256, e.sample), r.text);
            }
        }
        Ok(Self::new(name, MockBehavior::Scripted(map), transcript))
    }

    fn answer(&self, messages: &[Message], sample: usize) -> Result<String, LlmError> {
        let prompt = messages.last().map_or("", |m| m.content.as_str());
        let oracle = match &self.behavior {
            MockBehavior::Fixed(t) => return Ok(t.clone()),
            MockBehavior::Scripted(map) => {
                return map.get(&(messages_hash(messages), sample)).cloned().ok_or(LlmError::NotScripted)
            }
            MockBehavior::GroundTruthGiven(o) | MockBehavior::GroundTruthOriginal(o) | MockBehavior::AlwaysA(o) => o,
        };
        let original_wanted = matches!(self.behavior, MockBehavior::GroundTruthOriginal(_));
        let (name, input) = last_assertion(prompt).unwrap_or(("f", ""));
        let pick = |src: &str| {
            oracle.lookup(src, input).map_or("??".to_string(), |(own, orig)| {
                if original_wanted { orig.clone() } else { own.clone() }
            })
        };
        let assertion = |out: String| format!("assert {name}({input}) == {out}");
        if let Some(a) = last_block(prompt, "[PROGRAM_A]\n", "\n[/PROGRAM_A]") {
            let answer = json!({ "chosen_program": "A", "assertion": assertion(pick(a)) });
            return Ok(serde_json::to_string_pretty(&answer).unwrap());
        }
        let program = last_block(prompt, "[PYTHON]\n", "[/PYTHON]")
            .map(|b| b.rsplit_once("\nassert ").map_or(b, |(code, _)| code))
            .unwrap_or("");
        Ok(format!("[ANSWER]\n{}\n[/ANSWER]", assertion(pick(program))))
    }
}

impl ChatModel for MockModel {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn complete(&self, messages: &[Message], n: usize) -> Vec<Result<ModelResponse, LlmError>> {
        (0..n)
            .map(|i| self.session.run(messages, i, None, || self.answer(messages, i).map(ModelResponse::text)))
            .collect()
    }
}

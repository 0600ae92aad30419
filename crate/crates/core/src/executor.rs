//! Program execution backends: the in-process interpreter and a pool of
//! child processes speaking a JSON-lines protocol.

use crate::minipy::{self, Limits, Value};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

/// The reference executor script, runnable with `python3 -c`.
pub const PY_EXECUTOR: &str = include_str!("../fixtures/py_executor.py");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecutorKind {
    Builtin,
    External,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecRequest {
    pub source: String,
    pub function_name: String,
    /// Argument list text, e.g. `[4, 1, 3], [0]`.
    pub input: String,
    pub trace: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecFailure {
    /// Exception class name, e.g. `IndexError`.
    pub kind: String,
    pub message: String,
    pub line: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Execution {
    pub status: Status,
    pub output_repr: Option<String>,
    #[serde(default)]
    pub covered_lines: BTreeSet<u32>,
    pub error: Option<ExecFailure>,
    #[serde(default)]
    pub steps: u64,
}

impl Execution {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    pub fn error_kind(&self) -> Option<&str> {
        self.error.as_ref().map(|e| e.kind.as_str())
    }

    fn failure(kind: &str, message: String, line: Option<u32>) -> Execution {
        Execution {
            status: Status::Error,
            output_repr: None,
            covered_lines: BTreeSet::new(),
            error: Some(ExecFailure { kind: kind.to_string(), message, line }),
            steps: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExecutorError {
    #[error("cannot start executor {command:?}: {message}")]
    Spawn { command: Vec<String>, message: String },
    #[error("executor protocol error: {0}")]
    Protocol(String),
    #[error("unsupported input for the builtin executor: {0}")]
    Unsupported(String),
}

pub trait Executor: Send + Sync {
    fn kind(&self) -> ExecutorKind;
    fn execute(&self, req: &ExecRequest) -> Result<Execution, ExecutorError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinExecutor {
    pub limits: Limits,
}

impl Executor for BuiltinExecutor {
    fn kind(&self) -> ExecutorKind {
        ExecutorKind::Builtin
    }

    fn execute(&self, req: &ExecRequest) -> Result<Execution, ExecutorError> {
        let module = match minipy::parse(&req.source) {
            Ok(m) => m,
            Err(e) => return Ok(Execution::failure("SyntaxError", e.message, Some(e.line))),
        };
        let args = minipy::parse_args(&req.input).map_err(|e| ExecutorError::Unsupported(e.to_string()))?;
        let values = args
            .iter()
            .map(Value::from_literal)
            .collect::<Result<Vec<_>, _>>()
            .map_err(ExecutorError::Unsupported)?;
        let r = minipy::interpret(&module, &req.function_name, values, self.limits);
        Ok(match r.status {
            minipy::ExecStatus::Ok => Execution {
                status: Status::Ok,
                output_repr: r.output.map(|o| o.repr()),
                covered_lines: if req.trace { r.covered_lines } else { BTreeSet::new() },
                error: None,
                steps: r.steps,
            },
            minipy::ExecStatus::Error(e) => Execution {
                status: Status::Error,
                output_repr: None,
                covered_lines: if req.trace { r.covered_lines } else { BTreeSet::new() },
                error: Some(ExecFailure {
                    kind: e.kind.python_class().to_string(),
                    message: e.message,
                    line: Some(e.line),
                }),
                steps: r.steps,
            },
        })
    }
}

struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

struct PoolState {
    idle: Vec<Worker>,
    live: usize,
}

/// Pool of child processes; each handles one request at a time. A request
/// that exceeds the timeout kills its process, which is replaced lazily.
pub struct ExternalExecutor {
    command: Vec<String>,
    timeout: Duration,
    size: usize,
    state: Mutex<PoolState>,
    freed: Condvar,
}

impl ExternalExecutor {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

    pub fn new(command: Vec<String>, size: usize, timeout: Duration) -> ExternalExecutor {
        ExternalExecutor {
            command,
            timeout,
            size: size.max(1),
            state: Mutex::new(PoolState { idle: Vec::new(), live: 0 }),
            freed: Condvar::new(),
        }
    }

    /// Runs the bundled reference script with `python3`.
    pub fn reference(size: usize) -> ExternalExecutor {
        ExternalExecutor::new(Self::reference_command(), size, Self::DEFAULT_TIMEOUT)
    }

    pub fn reference_command() -> Vec<String> {
        vec!["python3".into(), "-u".into(), "-c".into(), PY_EXECUTOR.into()]
    }

    /// Splits a command line on whitespace.
    pub fn from_command_line(cmd: &str, size: usize) -> ExternalExecutor {
        ExternalExecutor::new(cmd.split_whitespace().map(String::from).collect(), size, Self::DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(mut self, timeout: Duration) -> ExternalExecutor {
        self.timeout = timeout;
        self
    }

    fn spawn(&self) -> Result<Worker, ExecutorError> {
        let spawn_err = |m: String| ExecutorError::Spawn { command: self.command.clone(), message: m };
        let (prog, args) = self.command.split_first().ok_or_else(|| spawn_err("empty command".into()))?;
        let mut child = Command::new(prog)
            .args(args)
            .env("PYTHONHASHSEED", "0")
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| spawn_err(e.to_string()))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => {
                        if tx.send(l).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });
        Ok(Worker { child, stdin, lines: rx })
    }

    fn acquire(&self) -> Result<Worker, ExecutorError> {
        let mut st = self.state.lock().unwrap();
        loop {
            if let Some(w) = st.idle.pop() {
                return Ok(w);
            }
            if st.live < self.size {
                st.live += 1;
                drop(st);
                return self.spawn().inspect_err(|_| self.retire());
            }
            st = self.freed.wait(st).unwrap();
        }
    }

    fn release(&self, w: Worker) {
        self.state.lock().unwrap().idle.push(w);
        self.freed.notify_one();
    }

    fn retire(&self) {
        self.state.lock().unwrap().live -= 1;
        self.freed.notify_one();
    }
}

impl Executor for ExternalExecutor {
    fn kind(&self) -> ExecutorKind {
        ExecutorKind::External
    }

    fn execute(&self, req: &ExecRequest) -> Result<Execution, ExecutorError> {
        let mut w = self.acquire()?;
        let line = serde_json::to_string(req).expect("serializable request");
        if writeln!(w.stdin, "{line}").and_then(|_| w.stdin.flush()).is_err() {
            drop(w);
            self.retire();
            return Err(ExecutorError::Protocol("executor process closed its input".into()));
        }
        match w.lines.recv_timeout(self.timeout) {
            Ok(resp) => {
                self.release(w);
                serde_json::from_str(&resp).map_err(|e| ExecutorError::Protocol(format!("{e}: {resp}")))
            }
            Err(RecvTimeoutError::Timeout) => {
                drop(w);
                self.retire();
                Ok(Execution::failure(
                    "TimeoutError",
                    format!("no response within {:?}", self.timeout),
                    None,
                ))
            }
            Err(RecvTimeoutError::Disconnected) => {
                drop(w);
                self.retire();
                Err(ExecutorError::Protocol("executor process exited".into()))
            }
        }
    }
}

impl Drop for ExternalExecutor {
    fn drop(&mut self) {
        if let Ok(mut st) = self.state.lock() {
            st.idle.clear();
        }
    }
}

/// The two backends, selected per problem.
pub struct Executors {
    pub builtin: BuiltinExecutor,
    pub external: Option<ExternalExecutor>,
}

impl Executors {
    pub fn builtin_only() -> Executors {
        Executors { builtin: BuiltinExecutor::default(), external: None }
    }

    pub fn with_external(external: ExternalExecutor) -> Executors {
        Executors { builtin: BuiltinExecutor::default(), external: Some(external) }
    }

    pub fn get(&self, kind: ExecutorKind) -> Result<&dyn Executor, ExecutorError> {
        match kind {
            ExecutorKind::Builtin => Ok(&self.builtin),
            ExecutorKind::External => self
                .external
                .as_ref()
                .map(|e| e as &dyn Executor)
                .ok_or_else(|| ExecutorError::Spawn { command: vec![], message: "no external executor configured".into() }),
        }
    }
}

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, warn};

use crate::instance::Task;

/// One document written to the adapter's standard input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverRequest {
    pub instance_id: String,
    pub task: Task,
    pub prompt: String,
}

/// The document an adapter prints on standard output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterReply {
    pub instance_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResponse {
    pub instance_id: String,
    pub raw_text: String,
    pub latency_ms: u64,
    pub attempts: u32,
    pub missing: bool,
}

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("adapter output for {instance_id} is not a response document: {detail}")]
    Protocol { instance_id: String, detail: String },
    #[error("adapter thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub retries: u32,
    pub initial_backoff: Duration,
    pub timeout: Duration,
    /// Requests in flight at once.
    pub parallelism: usize,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            retries: 5,
            initial_backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(600),
            parallelism: 4,
        }
    }
}

enum Attempt {
    Reply(String),
    /// Crash, nonzero exit or timeout; worth retrying.
    Transient(String),
}

fn run_once(command: &str, request: &SolverRequest, timeout: Duration) -> Attempt {
    let mut child = match Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
    {
        Ok(c) => c,
        Err(e) => return Attempt::Transient(format!("spawn failed: {e}")),
    };
    let mut line = serde_json::to_string(request).expect("requests always serialize");
    line.push('\n');
    let mut stdin = child.stdin.take().expect("stdin is piped");
    let writer = thread::spawn(move || {
        // A closed pipe just means the adapter ignored its input.
        let _ = stdin.write_all(line.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("stdout is piped");
    let reader = thread::spawn(move || {
        let mut buf = String::new();
        stdout.read_to_string(&mut buf).map(|_| buf)
    });
    let start = Instant::now();
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return Attempt::Transient("timed out".into());
            }
            Ok(None) => thread::sleep(Duration::from_millis(5)),
            Err(e) => return Attempt::Transient(format!("wait failed: {e}")),
        }
    };
    let _ = writer.join();
    let out = reader.join().ok().and_then(Result::ok).unwrap_or_default();
    if !status.success() {
        return Attempt::Transient(format!("exited with {status}"));
    }
    Attempt::Reply(out)
}

fn parse_reply(request: &SolverRequest, out: &str) -> Result<String, AdapterError> {
    let protocol = |detail: String| AdapterError::Protocol {
        instance_id: request.instance_id.clone(),
        detail,
    };
    let line = out
        .lines()
        .rev()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| protocol("empty output".into()))?;
    let reply: AdapterReply = serde_json::from_str(line).map_err(|e| protocol(e.to_string()))?;
    if reply.instance_id != request.instance_id {
        return Err(protocol(format!("reply is for {}", reply.instance_id)));
    }
    Ok(reply.text)
}

/// Runs one request through the adapter, retrying transient failures with
/// exponential backoff. Exhausted retries yield a missing response.
pub fn solve_one(command: &str, request: &SolverRequest, policy: &RetryPolicy) -> Result<SolverResponse, AdapterError> {
    let start = Instant::now();
    let mut backoff = policy.initial_backoff;
    for attempt in 1..=policy.retries + 1 {
        match run_once(command, request, policy.timeout) {
            Attempt::Reply(out) => {
                let raw_text = parse_reply(request, &out)?;
                return Ok(SolverResponse {
                    instance_id: request.instance_id.clone(),
                    raw_text,
                    latency_ms: start.elapsed().as_millis() as u64,
                    attempts: attempt,
                    missing: false,
                });
            }
            Attempt::Transient(why) => {
                debug!(id = %request.instance_id, attempt, %why, "adapter attempt failed");
                if attempt <= policy.retries {
                    thread::sleep(backoff);
                    backoff *= 2;
                }
            }
        }
    }
    warn!(id = %request.instance_id, "adapter retries exhausted; marking missing");
    Ok(SolverResponse {
        instance_id: request.instance_id.clone(),
        raw_text: String::new(),
        latency_ms: start.elapsed().as_millis() as u64,
        attempts: policy.retries + 1,
        missing: true,
    })
}

/// One terminal response per request, in request order.
pub fn run_external_solver(
    requests: &[SolverRequest],
    command: &str,
    policy: &RetryPolicy,
) -> Result<Vec<SolverResponse>, AdapterError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(policy.parallelism.max(1))
        .build()?;
    pool.install(|| {
        requests
            .par_iter()
            .map(|r| solve_one(command, r, policy))
            .collect()
    })
}

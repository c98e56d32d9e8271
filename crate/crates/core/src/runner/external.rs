//! External programs as methods under test.
//!
//! Wire protocol, line-delimited JSON over the child's stdin/stdout:
//!
//! ```text
//! -> {"id": 7, "input": [1.0, 2.0]}
//! <- {"id": 7, "output": 3.0}
//! <- {"id": 7, "error": "message"}
//! ```
//!
//! One response per request, ids must match. Each request waits at most the
//! configured timeout. A program that misses it, or answers with a malformed
//! line, is killed and restarted for the next request so late replies cannot
//! be misattributed.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{number, transform_all, ExecutionRecord, TransformedRow};
use crate::corpus::{ExecutionOutcome, FailureKind, Method};
use crate::mr::{MrId, MrSpec};
use crate::tdgen::{TestDatum, ValueRange};
use crate::{Error, Result};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(2);

/// How to launch an external method under test.
#[derive(Debug, Clone)]
pub struct ExternalSut {
    /// Method name recorded in execution records.
    pub name: String,
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
}

impl ExternalSut {
    pub fn new(program: impl Into<String>) -> Self {
        let program = program.into();
        let name = std::path::Path::new(&program)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| program.clone());
        ExternalSut {
            name,
            program,
            args: Vec::new(),
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Session {
    fn start(sut: &ExternalSut) -> Result<Self> {
        let spawn_err = |source| Error::Spawn {
            program: sut.program.clone(),
            source,
        };
        let mut child = Command::new(&sut.program)
            .args(&sut.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(spawn_err)?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Session { child, stdin, lines })
    }

    fn shutdown(mut self) {
        drop(self.stdin);
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Parse one response line for request `id`. The flag is false for
/// protocol errors, after which the session cannot be trusted.
fn parse_response(line: &str, id: u64) -> (ExecutionOutcome, bool) {
    let malformed = |why: &str| {
        let outcome = ExecutionOutcome::failure(
            FailureKind::DomainError,
            format!("protocol error: {why}: {}", line.chars().take(200).collect::<String>()),
        );
        (outcome, false)
    };
    let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(line) else {
        return malformed("response is not a JSON object");
    };
    match obj.get("id").and_then(Value::as_u64) {
        Some(got) if got == id => {}
        Some(_) => return malformed(&format!("response id does not match request id {id}")),
        None => return malformed("response has no integer id"),
    }
    if let Some(out) = obj.get("output") {
        return match out.as_f64() {
            Some(v) => (ExecutionOutcome::from_value(v), true),
            None => malformed("output is not a number"),
        };
    }
    match obj.get("error") {
        Some(Value::String(msg)) => (ExecutionOutcome::failure(FailureKind::DomainError, msg.clone()), true),
        Some(other) => (ExecutionOutcome::failure(FailureKind::DomainError, other.to_string()), true),
        None => malformed("response has neither output nor error"),
    }
}

struct Driver<'a> {
    sut: &'a ExternalSut,
    session: Option<Session>,
}

impl Driver<'_> {
    fn call(&mut self, id: u64, input: &[f64]) -> ExecutionOutcome {
        let session = match self.session.take() {
            Some(s) => s,
            None => match Session::start(self.sut) {
                Ok(s) => s,
                Err(e) => return ExecutionOutcome::failure(FailureKind::DomainError, e.to_string()),
            },
        };
        let (outcome, keep) = Self::exchange(&session, self.sut.timeout, id, input);
        if keep {
            self.session = Some(session);
        } else {
            session.shutdown();
        }
        outcome
    }

    /// Returns the outcome and whether the session is still usable.
    fn exchange(session: &Session, timeout: Duration, id: u64, input: &[f64]) -> (ExecutionOutcome, bool) {
        let request = json!({ "id": id, "input": input }).to_string();
        let mut stdin = &session.stdin;
        if writeln!(stdin, "{request}").and_then(|_| stdin.flush()).is_err() {
            return (
                ExecutionOutcome::failure(FailureKind::DomainError, "external program closed its input"),
                false,
            );
        }
        let deadline = Instant::now() + timeout;
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            match session.lines.recv_timeout(remaining) {
                Ok(line) if line.trim().is_empty() => continue,
                Ok(line) => return parse_response(&line, id),
                Err(RecvTimeoutError::Timeout) => {
                    return (
                        ExecutionOutcome::failure(
                            FailureKind::Timeout,
                            format!("no response within {:.3} s", timeout.as_secs_f64()),
                        ),
                        false,
                    )
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return (
                        ExecutionOutcome::failure(FailureKind::DomainError, "external program exited"),
                        false,
                    )
                }
            }
        }
    }
}

/// Execute transformed data against an external program.
///
/// The program is started once before any request; failure to start aborts
/// the run. Requests use the record's `exec_id` as their id.
pub fn execute_external(sut: &ExternalSut, mrs: &[MrId], rows: &[TransformedRow]) -> Result<Vec<ExecutionRecord>> {
    if rows.is_empty() {
        return Err(Error::Config("no test data to execute".into()));
    }
    let mut driver = Driver {
        sut,
        session: Some(Session::start(sut)?),
    };
    let mut records = Vec::with_capacity(mrs.len() * rows.len());
    for &mr in mrs {
        for row in rows {
            let exec_id = records.len() as u64;
            let followup_input = row.followups.get(&mr).cloned().flatten();
            let source_outcome = driver.call(exec_id, &row.td);
            let followup_outcome = followup_input.as_ref().map(|f| driver.call(exec_id, f));
            records.push(ExecutionRecord {
                exec_id,
                method: sut.name.clone(),
                mr,
                datum_id: row.id,
                source_input: row.td.clone(),
                followup_input,
                source_outcome,
                followup_outcome,
                verdict: None,
            });
        }
    }
    if let Some(s) = driver.session.take() {
        s.shutdown();
    }
    Ok(number(records))
}

/// Transform and execute against an external program.
pub fn run_external(
    sut: &ExternalSut,
    mrs: &[MrSpec],
    data: &[TestDatum],
    range: &ValueRange,
    seed: u64,
) -> Result<Vec<ExecutionRecord>> {
    let rows = transform_all(mrs, data, range, seed);
    let ids: Vec<MrId> = mrs.iter().map(|m| m.id()).collect();
    execute_external(sut, &ids, &rows)
}

/// Serve a built-in method over the wire protocol until `input` closes.
pub fn serve(method: Method, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Option<(u64, Vec<f64>)> = serde_json::from_str::<Value>(&line).ok().and_then(|v| {
            let id = v.get("id")?.as_u64()?;
            let input = v
                .get("input")?
                .as_array()?
                .iter()
                .map(Value::as_f64)
                .collect::<Option<Vec<f64>>>()?;
            Some((id, input))
        });
        let response = match request {
            None => json!({ "id": -1, "error": "malformed request" }),
            Some((id, input)) => match method.evaluate(&input) {
                ExecutionOutcome::Value(v) => json!({ "id": id, "output": v }),
                ExecutionOutcome::Failure { kind, message } => {
                    json!({ "id": id, "error": format!("{kind}: {message}") })
                }
            },
        };
        writeln!(output, "{response}")?;
        output.flush()?;
    }
    Ok(())
}

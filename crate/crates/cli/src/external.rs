//! Policy backed by a child process speaking JSON lines: one request per
//! step `{"observation": {...}, "info": {...}}` on its stdin, one reply
//! `[a0, a1]` (or `{"a": [a0, a1]}`) on its stdout.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use anyhow::{anyhow, Context};
use crowdnav::engine::protocol::{observation_payload, PayloadFormat};
use crowdnav::{Observation, Policy, StepInfo};
use serde_json::{json, Value};

pub struct ExternalPolicy {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    error: Option<anyhow::Error>,
}

impl ExternalPolicy {
    pub fn spawn(cmd: &str) -> anyhow::Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(cmd)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .with_context(|| format!("cannot start policy command {cmd:?}"))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self { child, stdin, stdout, error: None })
    }

    /// First communication failure, if any. Actions after a failure stop
    /// the robot.
    pub fn take_error(&mut self) -> Option<anyhow::Error> {
        self.error.take()
    }

    fn exchange(&mut self, obs: &Observation, info: &StepInfo) -> anyhow::Result<[f64; 2]> {
        let request = json!({ "observation": observation_payload(obs, PayloadFormat::Json), "info": info });
        writeln!(self.stdin, "{request}")?;
        self.stdin.flush()?;
        let mut line = String::new();
        if self.stdout.read_line(&mut line)? == 0 {
            return Err(anyhow!("policy process closed its output"));
        }
        let v: Value = serde_json::from_str(line.trim()).context("policy reply is not JSON")?;
        let arr = v.get("a").unwrap_or(&v);
        let a: Vec<f64> = serde_json::from_value(arr.clone()).context("policy reply is not a numeric array")?;
        <[f64; 2]>::try_from(a.as_slice()).map_err(|_| anyhow!("policy reply must have 2 components"))
    }
}

impl Policy for ExternalPolicy {
    fn name(&self) -> &str {
        "external"
    }

    fn act(&mut self, obs: &Observation, info: &StepInfo) -> [f64; 2] {
        if self.error.is_some() {
            return [-1.0, 0.0];
        }
        match self.exchange(obs, info) {
            Ok(a) => a,
            Err(e) => {
                self.error = Some(e);
                [-1.0, 0.0]
            }
        }
    }
}

impl Drop for ExternalPolicy {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

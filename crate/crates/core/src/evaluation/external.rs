//! Bridge to a real agent harness over a one-shot stdin/stdout JSON
//! exchange.
//!
//! The command is started once per evaluation through `sh -c`. It receives
//!
//! ```json
//! {"config": {"id": "...", "values": {...}}, "instances": ["..."]}
//! ```
//!
//! on standard input and must print a single document
//!
//! ```json
//! {"results": [{"instance_id": "...", "passed": true, "agent_runtime_s": 812.0,
//!               "base_runtimes_s": [...], "patched_runtimes_s": [...]}]}
//! ```
//!
//! on standard output before the timeout expires.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::space::{ConfigDocument, Configuration};

use super::{EvalError, Evaluator, InstanceResult};

#[derive(Debug, Serialize)]
struct Request<'a> {
    config: ConfigDocument,
    instances: &'a [String],
}

#[derive(Debug, Deserialize)]
struct Response {
    results: Vec<InstanceResult>,
}

#[derive(Debug, Clone)]
pub struct ExternalEvaluator {
    pub command: String,
    pub timeout: Duration,
    pub concurrent_safe: bool,
}

impl ExternalEvaluator {
    pub fn new(command: impl Into<String>, timeout: Duration) -> Self {
        ExternalEvaluator {
            command: command.into(),
            timeout,
            concurrent_safe: false,
        }
    }
}

pub fn external_evaluate(
    config: &Configuration,
    instances: &[String],
    command: &str,
    timeout: Duration,
) -> Result<Vec<InstanceResult>, EvalError> {
    if timeout.is_zero() {
        return Err(EvalError::Invariant("timeout must be positive".into()));
    }
    let request = serde_json::to_vec(&Request {
        config: ConfigDocument::from(config),
        instances,
    })
    .expect("request serializes");

    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let writer = thread::spawn(move || {
        // the child may exit without reading; a broken pipe is not our error
        let _ = stdin.write_all(&request);
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut buf = Vec::new();
        stdout.read_to_end(&mut buf).map(|_| buf)
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let err_reader = thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr.read_to_string(&mut buf);
        buf
    });

    let start = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if start.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(EvalError::Timeout(timeout.as_secs_f64()));
        }
        thread::sleep(Duration::from_millis(5));
    };
    let _ = writer.join();
    let out = reader.join().expect("stdout reader")?;
    let err = err_reader.join().unwrap_or_default();

    if !status.success() {
        return Err(EvalError::ExitStatus {
            code: status.code(),
            stderr: err.trim().to_string(),
        });
    }
    let text = std::str::from_utf8(&out).map_err(|e| EvalError::Malformed(e.to_string()))?;
    let response: Response = serde_json::from_str(text).map_err(|e| EvalError::Malformed(e.to_string()))?;
    if response.results.is_empty() {
        return Err(EvalError::NoResults);
    }
    for r in &response.results {
        r.check()?;
    }
    Ok(response.results)
}

impl Evaluator for ExternalEvaluator {
    fn label(&self) -> String {
        format!("external:{}", self.command)
    }

    fn concurrent_safe(&self) -> bool {
        self.concurrent_safe
    }

    fn evaluate(&self, config: &Configuration, instances: &[String]) -> Result<Vec<InstanceResult>, EvalError> {
        external_evaluate(config, instances, &self.command, self.timeout)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::default_space;

    fn config() -> Configuration {
        default_space().decode(&[0.5; 8]).unwrap()
    }

    fn ids() -> Vec<String> {
        vec!["astropy-1".to_string()]
    }

    const ONE_PASS: &str = r#"{"results":[{"instance_id":"astropy-1","passed":true,"agent_runtime_s":812.5,"base_runtimes_s":[1.0,1.1],"patched_runtimes_s":[0.9,0.95]}]}"#;

    #[test]
    fn stub_round_trip() {
        let cmd = format!("cat > /dev/null; echo '{ONE_PASS}'");
        let r = external_evaluate(&config(), &ids(), &cmd, Duration::from_secs(10)).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].passed);
        assert_eq!(r[0].agent_runtime, 812.5);
    }

    #[test]
    fn request_reaches_child() {
        let reply = r#"{"results":[{"instance_id":"astropy-1","passed":false,"agent_runtime_s":1.0}]}"#;
        let cmd = format!(
            "input=$(cat); echo \"$input\" | grep -q '\"instances\":\\[\"astropy-1\"\\]' || exit 7; \
             echo \"$input\" | grep -q '\"values\"' || exit 8; echo '{reply}'"
        );
        let r = external_evaluate(&config(), &ids(), &cmd, Duration::from_secs(10)).unwrap();
        assert!(!r[0].passed);
    }

    #[test]
    fn timeout() {
        let err = external_evaluate(&config(), &ids(), "sleep 5", Duration::from_millis(200)).unwrap_err();
        assert!(matches!(err, EvalError::Timeout(_)), "{err}");
    }

    #[test]
    fn short_runtime_list() {
        let cmd = r#"cat >/dev/null; echo '{"results":[{"instance_id":"a","passed":true,"agent_runtime_s":3,"base_runtimes_s":[1.0],"patched_runtimes_s":[0.5]}]}'"#;
        let err = external_evaluate(&config(), &ids(), cmd, Duration::from_secs(10)).unwrap_err();
        assert_eq!(err.to_string(), "invariant violation: runtime list < 2");
    }

    #[test]
    fn nonzero_exit_and_garbage() {
        let err = external_evaluate(&config(), &ids(), "cat >/dev/null; echo boom >&2; exit 4", Duration::from_secs(10)).unwrap_err();
        assert!(matches!(err, EvalError::ExitStatus { code: Some(4), .. }), "{err}");
        let err = external_evaluate(&config(), &ids(), "cat >/dev/null; echo not-json", Duration::from_secs(10)).unwrap_err();
        assert!(matches!(err, EvalError::Malformed(_)));
    }
}

//! Job descriptions exchanged with an external oracle process, and the
//! subprocess driver for differential comparison.

use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const ORACLE_ENV: &str = "FGL_ORACLE_CMD";

/// A reproducible description of one invocation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JobConfig {
    pub command: String,
    pub theory: Option<String>,
    pub family: Option<String>,
    pub p: Option<u32>,
    pub s: Option<u32>,
    pub n: Option<u32>,
    pub q: Option<u32>,
    pub qs: Option<Vec<u32>>,
    pub k: Option<u32>,
    pub x_order: Option<u32>,
    pub z_order: Option<u32>,
    pub c2_order: Option<u32>,
    pub order: Option<u32>,
    pub format: String,
    pub output: Option<String>,
    /// Quantities with the primary's canonical JSON, for `compare-oracle`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quantities: Vec<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    pub primary: Value,
}

impl JobConfig {
    /// SHA-256 of the canonical JSON of the configuration without
    /// quantities.
    pub fn job_id(&self) -> String {
        let bare = JobConfig { quantities: Vec::new(), ..self.clone() };
        let text = serde_json::to_string(&bare).expect("serialisable");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Match,
    Mismatch,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub quantity: String,
    pub verdict: VerdictKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diff: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub job_id: String,
    pub verdicts: Vec<Verdict>,
    #[serde(default)]
    pub truncation: Value,
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("environment variable {ORACLE_ENV} is not set")]
    NotConfigured,
    #[error("could not run oracle: {0}")]
    Spawn(#[from] std::io::Error),
    #[error("oracle exited with status {status}: {stderr}")]
    Failed { status: String, stderr: String },
    #[error("oracle output is not a valid report: {0}")]
    BadReport(String),
}

impl OracleReport {
    /// The report answers `job` and has one verdict per requested quantity.
    pub fn validate(&self, job: &JobConfig) -> Result<(), OracleError> {
        if self.job_id != job.job_id() {
            return Err(OracleError::BadReport(format!("job id {} does not match {}", self.job_id, job.job_id())));
        }
        for q in &job.quantities {
            if !self.verdicts.iter().any(|v| v.quantity == q.name) {
                return Err(OracleError::BadReport(format!("no verdict for {}", q.name)));
            }
        }
        Ok(())
    }

    pub fn mismatches(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| v.verdict == VerdictKind::Mismatch).collect()
    }
}

/// Run `command` through `sh -c`, writing `job` as JSON to its stdin and
/// parsing an [`OracleReport`] from its stdout.
pub fn run_oracle(command: &str, job: &JobConfig) -> Result<OracleReport, OracleError> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;
    let input = serde_json::to_vec(job).expect("serialisable");
    if let Some(mut stdin) = child.stdin.take() {
        // a closed pipe is reported through the exit status below
        let _ = stdin.write_all(&input);
    }
    let out = child.wait_with_output()?;
    if !out.status.success() {
        return Err(OracleError::Failed {
            status: out.status.to_string(),
            stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
        });
    }
    let report: OracleReport =
        serde_json::from_slice(&out.stdout).map_err(|e| OracleError::BadReport(e.to_string()))?;
    report.validate(job)?;
    Ok(report)
}

/// Run the command named by [`ORACLE_ENV`].
pub fn run_configured_oracle(job: &JobConfig) -> Result<OracleReport, OracleError> {
    let cmd = std::env::var(ORACLE_ENV).ok().filter(|c| !c.trim().is_empty()).ok_or(OracleError::NotConfigured)?;
    run_oracle(&cmd, job)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn job() -> JobConfig {
        JobConfig {
            command: "compare-oracle".into(),
            p: Some(3),
            s: Some(2),
            format: "json".into(),
            quantities: vec![Quantity { name: "fgl".into(), primary: json!([]) }],
            ..Default::default()
        }
    }

    #[test]
    fn job_id_ignores_quantities() {
        let a = job();
        let mut b = a.clone();
        b.quantities.clear();
        assert_eq!(a.job_id(), b.job_id());
        let mut c = a.clone();
        c.p = Some(5);
        assert_ne!(a.job_id(), c.job_id());
    }

    #[test]
    fn echo_oracle() {
        let j = job();
        let report = json!({"job_id": j.job_id(), "verdicts": [{"quantity": "fgl", "verdict": "match"}]});
        let cmd = format!("cat > /dev/null; echo '{report}'");
        let r = run_oracle(&cmd, &j).unwrap();
        assert!(r.mismatches().is_empty());
    }

    #[test]
    fn missing_verdict_is_rejected() {
        let j = job();
        let report = json!({"job_id": j.job_id(), "verdicts": []});
        let cmd = format!("cat > /dev/null; echo '{report}'");
        assert!(matches!(run_oracle(&cmd, &j), Err(OracleError::BadReport(_))));
    }

    #[test]
    fn failing_oracle() {
        assert!(matches!(run_oracle("cat > /dev/null; exit 4", &job()), Err(OracleError::Failed { .. })));
        assert!(matches!(run_oracle("cat > /dev/null; echo nope", &job()), Err(OracleError::BadReport(_))));
    }
}

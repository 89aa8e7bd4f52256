use std::io::Write;

use serde::{Deserialize, Serialize};

use super::RunConfig;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    PassFail,
    ReportOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Report,
}

/// A named number; non-finite or undefined values serialize as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub kind: CheckKind,
    pub values: Vec<Measurement>,
    pub tolerance: Option<f64>,
    /// Functional form the measurement is compared against.
    pub predicted: Option<String>,
    pub verdict: Verdict,
}

impl Check {
    pub fn pass_fail(id: impl Into<String>, ok: bool, tolerance: f64) -> Self {
        Self {
            id: id.into(),
            kind: CheckKind::PassFail,
            values: vec![],
            tolerance: Some(tolerance),
            predicted: None,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        }
    }

    pub fn report(id: impl Into<String>, predicted: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind: CheckKind::ReportOnly,
            values: vec![],
            tolerance: None,
            predicted: Some(predicted.into()),
            verdict: Verdict::Report,
        }
    }

    pub fn with(mut self, name: impl Into<String>, value: impl Into<Option<f64>>) -> Self {
        let value = value.into().filter(|v| v.is_finite());
        self.values.push(Measurement {
            name: name.into(),
            value,
        });
        self
    }

    pub fn predicting(mut self, form: impl Into<String>) -> Self {
        self.predicted = Some(form.into());
        self
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub dim: usize,
    pub refinements: Vec<usize>,
    pub ladder: String,
    pub weight: String,
    pub coefficients: String,
    pub seed: u64,
    pub bank_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub environment: Environment,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn new(suite: &str, environment: Environment, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| !c.failed());
        Self {
            suite: suite.into(),
            environment,
            checks,
            passed,
        }
    }
}

/// Everything a `verify` run emits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: RunConfig,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
}

impl Report {
    pub fn new(config: &RunConfig, suites: Vec<SuiteReport>) -> Self {
        let passed = suites.iter().all(|s| s.passed);
        Self {
            tool: "tentcalc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config.hash(),
            seed: config.seed,
            config: config.clone(),
            suites,
            passed,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Flat `(suite, check, value, verdict)` rows after a `#` header block.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# tool: {} {}", self.tool, self.version)?;
        writeln!(out, "# config_hash: {}", self.config_hash)?;
        writeln!(out, "# seed: {}", self.seed)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["suite", "check", "name", "value", "verdict"])?;
        for s in &self.suites {
            for c in &s.checks {
                let verdict = match c.verdict {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "fail",
                    Verdict::Report => "report",
                };
                if c.values.is_empty() {
                    w.write_record([s.suite.as_str(), &c.id, "", "", verdict])?;
                }
                for m in &c.values {
                    let v = m
                        .value
                        .map_or("undefined".to_string(), |v| format!("{v:e}"));
                    w.write_record([s.suite.as_str(), &c.id, &m.name, &v, verdict])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

use dirac_core::exact::Rat;
use dirac_core::linalg::CMat;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    pub max_deviation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
    pub detail: String,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, ok: bool, max_deviation: f64, detail: impl Into<String>) -> Self {
        CheckRecord {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            max_deviation,
            runtime_ms: None,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportEnvelope {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    pub checks: Vec<CheckRecord>,
    pub payload: Value,
}

impl ReportEnvelope {
    pub fn new(command: &str, config: Value) -> Self {
        ReportEnvelope {
            tool: "dirac",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            checks: vec![],
            payload: Value::Null,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.name.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn complex(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// Row-major matrix of [re, im] pairs.
pub fn matrix(m: &CMat) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex(m[(i, j)])).collect())).collect())
}

pub fn rational(q: &Rat) -> Value {
    json!({ "num": q.numer().to_string(), "den": q.denom().to_string() })
}

/// Rounds away float noise so payloads stay byte-stable across platforms.
pub fn round(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        0.0
    } else {
        (x * 1e10).round() / 1e10
    }
}

pub fn round_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| round(x)).collect()
}

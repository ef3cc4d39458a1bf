use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Member,
    NotMember,
    Certificate,
    NotSos,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass | Status::Member | Status::Certificate => EXIT_OK,
            Status::Fail | Status::NotMember | Status::NotSos => EXIT_NEGATIVE,
            Status::Inconclusive => EXIT_INCONCLUSIVE,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub status: Status,
    pub metrics: Map<String, Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub result: Value,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: impl Into<String>, status: Status) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            status,
            metrics: Map::new(),
            artifacts: Vec::new(),
            result: Value::Null,
            warnings: Vec::new(),
        }
    }

    pub fn metric(mut self, key: &str, value: impl Serialize) -> Self {
        self.metrics
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn result(mut self, value: impl Serialize) -> Self {
        self.result = serde_json::to_value(value).unwrap_or(Value::Null);
        self
    }

    /// One line for the diagnostic stream.
    pub fn summary(&self) -> String {
        let metrics: Vec<String> = self
            .metrics
            .iter()
            .map(|(k, v)| format!("{k}={}", compact(v)))
            .collect();
        let status = serde_json::to_value(self.status).expect("plain enum");
        format!("{}: {} {}", self.command, compact(&status), metrics.join(" "))
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:.3e}"),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

/// Failure before a verdict: bad invocation or bad data.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
        }
    }
}

impl From<oplift::Error> for CliError {
    fn from(e: oplift::Error) -> Self {
        match e {
            oplift::Error::Json(m) => CliError::Usage(m.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

//! Report envelope, exit codes and atomic file output.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use gnt_core::GntError;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

pub const SCHEMA: &str = "gnt-lab-report";
pub const SCHEMA_VERSION: u32 = 1;

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    /// A check ran and missed its tolerance.
    Fail,
    /// Bad input: unparsable files, inconsistent dimensions, invalid arguments.
    InvalidInput,
    /// A size cap or a resolution guard refused the request.
    Refused,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::InvalidInput => 2,
            Status::Refused => 3,
        }
    }

    pub fn from_error(err: &anyhow::Error) -> Status {
        match err.downcast_ref::<GntError>() {
            Some(GntError::CapExceeded { .. } | GntError::Refused(_)) => Status::Refused,
            _ => Status::InvalidInput,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub schema_version: u32,
    pub config: RunConfig,
    pub status: Status,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub result: Value,
}

impl Report {
    pub fn new(config: RunConfig, status: Status, error: Option<String>, result: Value) -> Self {
        Report {
            schema: SCHEMA,
            schema_version: SCHEMA_VERSION,
            config,
            status,
            exit_code: status.code(),
            error,
            result,
        }
    }
}

/// Writes via a temporary file in the target directory and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn to_pretty(report: &Report) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(report).expect("report serializes");
    s.push(b'\n');
    s
}

use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("conflicting overrides for teams {team_a} and {team_b} ({stage} stage)")]
    Conflict {
        stage: String,
        team_a: usize,
        team_b: usize,
    },

    #[error("value {value} out of range [0, {limit})")]
    Range { value: u64, limit: u64 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("schedule violation:\n{0}")]
    Schedule(ViolationReport),

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One broken rule in a schedule descriptor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// 1-based knockout round, `None` for descriptor-level problems.
    pub round: Option<usize>,
    /// Block indices (into the block list entering that round) involved.
    pub blocks: Vec<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ViolationReport(pub Vec<Violation>);

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            match v.round {
                Some(r) => write!(f, "  round {r}")?,
                None => write!(f, "  descriptor")?,
            }
            if !v.blocks.is_empty() {
                write!(f, " blocks {:?}", v.blocks)?;
            }
            write!(f, ": {}", v.message)?;
        }
        Ok(())
    }
}

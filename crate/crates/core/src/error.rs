use thiserror::Error;

use crate::model::Diagnostic;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid growth law: {0}")]
    InvalidGrowth(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid problem spec: {}", summarize(.0))]
    InvalidSpec(Vec<Diagnostic>),

    #[error("program {program} cannot be built for this spec: {reason}")]
    WrongProgram { program: String, reason: String },

    #[error("infeasible instance at period {period}: {reason}")]
    Infeasible { period: usize, reason: String },

    #[error("instance too large: {what} = {size} exceeds limit {limit}")]
    SizeGuard { what: &'static str, size: u128, limit: u128 },

    #[error("schedule has {got} periods, expected {expected}")]
    ScheduleLength { expected: usize, got: usize },

    #[error("period {period} refers to unknown treatment index {index}")]
    UnknownTreatment { period: usize, index: usize },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("malformed spec JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn summarize(diags: &[Diagnostic]) -> String {
    diags.iter().filter(|d| d.is_error()).map(|d| format!("[{}] {}", d.code, d.message)).collect::<Vec<_>>().join("; ")
}

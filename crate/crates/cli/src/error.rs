use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Validation,
    Runtime,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 1,
            ErrorKind::Runtime => 2,
        }
    }
}

/// Structured error record printed to stderr on failure. `operation` names
/// the config field or the module operation that failed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunError {
    pub kind: ErrorKind,
    pub operation: String,
    pub message: String,
}

impl RunError {
    pub fn validation(operation: &str, e: impl std::fmt::Display) -> Self {
        RunError {
            kind: ErrorKind::Validation,
            operation: operation.to_string(),
            message: e.to_string(),
        }
    }

    pub fn runtime(operation: &str, e: impl std::fmt::Display) -> Self {
        RunError {
            kind: ErrorKind::Runtime,
            operation: operation.to_string(),
            message: e.to_string(),
        }
    }

    pub fn record(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.operation, self.message)
    }
}

impl std::error::Error for RunError {}

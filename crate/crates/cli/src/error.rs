use serde::Serialize;
use spatperm::{Error, ErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Validation,
    Numeric,
    Io,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub class: Class,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            class: Class::Validation,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self {
            class: Class::Numeric,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            class: Class::Io,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class {
            Class::Validation => 1,
            Class::Numeric => 2,
            Class::Io => 3,
        }
    }

    /// The single-line JSON record written to standard error.
    pub fn record(&self, command: &str) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            status: &'static str,
            class: Class,
            exit_code: i32,
            command: &'a str,
            message: &'a str,
        }
        serde_json::to_string(&Record {
            status: "error",
            class: self.class,
            exit_code: self.exit_code(),
            command,
            message: &self.message,
        })
        .expect("plain record serializes")
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e.kind() {
            ErrorKind::Validation => CliError::validation(e.to_string()),
            ErrorKind::Numeric => CliError::numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}

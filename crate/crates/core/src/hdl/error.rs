use serde::Serialize;
use thiserror::Error;

use super::ast::Span;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HdlError {
    #[error("{span}: syntax error: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        span: Span,
        expected: Vec<String>,
        found: String,
    },
    #[error("{span}: unsupported construct: {construct}")]
    Unsupported { span: Span, construct: String },
    #[error("{span}: unresolved instance of module `{module}`")]
    UnresolvedInstance { span: Span, module: String },
    #[error("combinational cycle through {}", signals.join(" -> "))]
    CombinationalCycle { signals: Vec<String> },
    #[error("multiple clock domains: {}", clocks.join(", "))]
    MultipleClocks { clocks: Vec<String> },
    #[error("{span}: {message}")]
    Elaboration { span: Span, message: String },
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// Machine-readable form of a frontend error.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl HdlError {
    pub fn span(&self) -> Option<Span> {
        match self {
            HdlError::Syntax { span, .. }
            | HdlError::Unsupported { span, .. }
            | HdlError::UnresolvedInstance { span, .. }
            | HdlError::Elaboration { span, .. } => Some(*span),
            HdlError::CombinationalCycle { .. } | HdlError::MultipleClocks { .. } => None,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            HdlError::Syntax { .. } => "syntax",
            HdlError::Unsupported { .. } => "unsupported",
            HdlError::UnresolvedInstance { .. } => "unresolved-instance",
            HdlError::CombinationalCycle { .. } => "combinational-cycle",
            HdlError::MultipleClocks { .. } => "multiple-clocks",
            HdlError::Elaboration { .. } => "elaboration",
        }
    }

    pub fn diagnostic(&self) -> Diagnostic {
        let span = self.span().unwrap_or_default();
        Diagnostic {
            severity: Severity::Error,
            code: self.code(),
            line: span.line,
            col: span.col,
            message: self.to_string(),
        }
    }

    pub(crate) fn unsupported(span: Span, construct: impl Into<String>) -> Self {
        HdlError::Unsupported {
            span,
            construct: construct.into(),
        }
    }

    pub(crate) fn elab(span: Span, message: impl Into<String>) -> Self {
        HdlError::Elaboration {
            span,
            message: message.into(),
        }
    }
}

use std::fmt;

use serde::Serialize;

use crate::grid::GridError;

/// Byte range in the source plus the 1-based line/column of its start.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span { start: self.start, end: other.end.max(self.end), line: self.line, col: self.col }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiagnosticKind {
    Syntax,
    Grid(GridError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub span: Span,
    pub message: String,
    pub kind: DiagnosticKind,
}

impl Diagnostic {
    pub(crate) fn syntax(span: Span, message: impl Into<String>) -> Self {
        Diagnostic { span, message: message.into(), kind: DiagnosticKind::Syntax }
    }

    pub(crate) fn grid(span: Span, error: GridError) -> Self {
        Diagnostic { span, message: error.to_string(), kind: DiagnosticKind::Grid(error) }
    }

    pub fn is_syntax(&self) -> bool {
        matches!(self.kind, DiagnosticKind::Syntax)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.span.line, self.span.col, self.message)
    }
}

/// Renders diagnostics one per line, prefixed with `path`.
pub fn render_diagnostics(path: &str, diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| format!("{path}:{d}\n")).collect()
}

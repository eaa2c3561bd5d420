use std::fmt;

use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

/// The rule catalog. Declaration order is the report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FindingCode {
    InvalidId,
    DuplicateId,
    DuplicateLevelName,
    DuplicateMetadata,
    EmptyText,
    InvalidPriority,
    DanglingReference,
    UpwardDerivation,
    DuplicateLink,
    SelfRelation,
    Cycle,
    DuplicateAttachment,
    MetricWithoutQuestion,
    MissingUnit,
    NotAChild,
    TypeError,
    NoTopGoal,
    /// Goal without a realizing strategy (non-bottom levels only).
    G1,
    /// Strategy leading to no goal while lower levels exist.
    G2,
    /// Goal or strategy without a GQM graph.
    G3,
    /// Question without metrics.
    G4,
    /// Metric not used by any interpretation model.
    G5,
    /// Element unreachable from every top-level goal.
    G6,
    /// Inventory asset not mapped to any grid element.
    G7,
    /// Conflict relation without a resolution note.
    C1,
    /// Status unknown because data is missing.
    A1,
    /// Interpretation model reads no metric and no child status.
    A2,
}

impl FindingCode {
    pub fn as_str(self) -> &'static str {
        use FindingCode::*;
        match self {
            InvalidId => "E_INVALID_ID",
            DuplicateId => "E_DUPLICATE_ID",
            DuplicateLevelName => "E_DUPLICATE_LEVEL_NAME",
            DuplicateMetadata => "E_DUPLICATE_METADATA",
            EmptyText => "E_EMPTY_TEXT",
            InvalidPriority => "E_INVALID_PRIORITY",
            DanglingReference => "E_DANGLING_REFERENCE",
            UpwardDerivation => "E_UPWARD_DERIVATION",
            DuplicateLink => "E_DUPLICATE_LINK",
            SelfRelation => "E_SELF_RELATION",
            Cycle => "E_CYCLE",
            DuplicateAttachment => "E_DUPLICATE_ATTACHMENT",
            MetricWithoutQuestion => "E_METRIC_WITHOUT_QUESTION",
            MissingUnit => "E_MISSING_UNIT",
            NotAChild => "E_NOT_A_CHILD",
            TypeError => "E_TYPE",
            NoTopGoal => "W_NO_TOP_GOAL",
            G1 => "G1",
            G2 => "G2",
            G3 => "G3",
            G4 => "G4",
            G5 => "G5",
            G6 => "G6",
            G7 => "G7",
            C1 => "C1",
            A1 => "A1",
            A2 => "A2",
        }
    }

    pub fn severity(self) -> Severity {
        use FindingCode::*;
        match self {
            NoTopGoal | G1 | G2 | G3 | G4 | G5 | G6 | G7 | C1 | A1 | A2 => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for FindingCode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Finding {
    pub code: FindingCode,
    pub severity: Severity,
    /// Element ids (or `owner`, `question` pairs for question findings).
    pub subjects: Vec<String>,
    pub message: String,
}

impl Finding {
    pub fn new(code: FindingCode, subjects: Vec<String>, message: impl Into<String>) -> Self {
        Finding { code, severity: code.severity(), subjects, message: message.into() }
    }

    fn sort_key(&self) -> (FindingCode, &[String]) {
        (self.code, &self.subjects)
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        };
        write!(f, "{sev}[{}] {}: {}", self.code, self.subjects.join(", "), self.message)
    }
}

/// Sorts by (rule, subjects).
pub fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// 1 if any error, 2 if only warnings, 0 otherwise.
pub fn exit_code(findings: &[Finding]) -> i32 {
    if findings.iter().any(|f| f.severity == Severity::Error) {
        1
    } else if findings.iter().any(|f| f.severity == Severity::Warning) {
        2
    } else {
        0
    }
}

pub fn render_findings(findings: &[Finding]) -> String {
    if findings.is_empty() {
        return "no findings\n".to_string();
    }
    findings.iter().map(|f| format!("{f}\n")).collect()
}

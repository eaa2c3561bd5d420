use super::report::EvaluationReport;
use super::status::GoalStatus;
use crate::analysis::{sort_findings, Finding, FindingCode};

/// A1 for every element that is unknown because referenced metrics have no
/// data; A2 for every element whose model is vacuous or absent.
pub fn identify_new_gaps(report: &EvaluationReport) -> Vec<Finding> {
    let mut out = Vec::new();
    for e in &report.entries {
        if e.status == GoalStatus::Unknown && !e.missing_data.is_empty() {
            let mut subjects = vec![e.element.to_string()];
            subjects.extend(e.missing_data.iter().map(ToString::to_string));
            let list: Vec<&str> = e.missing_data.iter().map(|m| m.as_str()).collect();
            out.push(Finding::new(
                FindingCode::A1,
                subjects,
                format!("{} is unknown: no data for {}", e.element, list.join(", ")),
            ));
        }
        if !e.has_model {
            out.push(Finding::new(FindingCode::A2, vec![e.element.to_string()], format!("{} has no interpretation model", e.element)));
        } else if e.vacuous {
            out.push(Finding::new(
                FindingCode::A2,
                vec![e.element.to_string()],
                format!("interpretation model of {} reads no metric and no child status", e.element),
            ));
        }
    }
    sort_findings(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{MetricUse, ReportEntry};
    use crate::grid::ElementKind;
    use crate::id::id;

    fn entry(el: &str, status: GoalStatus, missing: &[&str], vacuous: bool) -> ReportEntry {
        ReportEntry {
            element: id(el),
            kind: ElementKind::Goal,
            rank: 0,
            priority: None,
            status,
            score: None,
            metrics: missing.iter().map(|m| MetricUse { metric: id(m), observations: 0 }).collect(),
            missing_data: missing.iter().map(|m| id(m)).collect(),
            unknown_children: vec![],
            has_model: true,
            vacuous,
        }
    }

    fn report(entries: Vec<ReportEntry>) -> EvaluationReport {
        EvaluationReport { grid_name: None, grid_version: None, evaluated_at: String::new(), entries }
    }

    #[test]
    fn all_achieved_is_clean() {
        assert!(identify_new_gaps(&report(vec![entry("G1", GoalStatus::Achieved, &[], false)])).is_empty());
    }

    #[test]
    fn unknown_with_missing_metric() {
        let f = identify_new_gaps(&report(vec![entry("G1", GoalStatus::Unknown, &["M3"], false)]));
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].code, FindingCode::A1);
        assert_eq!(f[0].subjects, vec!["G1".to_string(), "M3".to_string()]);
    }

    #[test]
    fn vacuous_and_absent_models() {
        let mut no_model = entry("G2", GoalStatus::Unknown, &[], true);
        no_model.has_model = false;
        let f = identify_new_gaps(&report(vec![entry("G1", GoalStatus::Achieved, &[], true), no_model]));
        let codes: Vec<_> = f.iter().map(|f| (f.code, f.subjects[0].clone())).collect();
        assert_eq!(codes, vec![(FindingCode::A2, "G1".into()), (FindingCode::A2, "G2".into())]);
    }
}

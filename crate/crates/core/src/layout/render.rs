use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{EdgeKind, LayoutedGrid, NodeKind};
use crate::evaluation::{EvaluationReport, GoalStatus};

pub const NEUTRAL_FILL: &str = "#ffffff";
const GQM_FILL: &str = "#f3f3f3";

/// Fill color per status.
pub fn palette(status: GoalStatus) -> &'static str {
    match status {
        GoalStatus::Achieved => "#5cb85c",
        GoalStatus::AtRisk => "#f0ad4e",
        GoalStatus::Failed => "#d9534f",
        GoalStatus::Unknown => "#b0b0b0",
    }
}

fn num(v: f64) -> String {
    // Coordinates are products of small constants; print them compactly.
    let r = (v * 100.0).round() / 100.0;
    if r == 0.0 {
        "0".to_string()
    } else {
        format!("{r}")
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// DOT document with pinned positions (points, y growing upward).
pub fn to_dot(layout: &LayoutedGrid) -> String {
    let mut out = String::from("digraph grid {\n  graph [splines=true];\n  node [fontname=\"Helvetica\", fontsize=10];\n");
    let mut layers: BTreeMap<u32, Vec<&str>> = BTreeMap::new();
    for n in &layout.nodes {
        let shape = match n.kind {
            NodeKind::Goal => "box",
            NodeKind::Strategy => "box, style=rounded",
            NodeKind::Gqm => "note",
        };
        let cx = n.x + n.width / 2.0;
        let cy = layout.height - (n.y + n.height / 2.0);
        let _ = writeln!(
            out,
            "  \"{}\" [label=\"{}\", shape={shape}, width={}, height={}, pos=\"{},{}!\"];",
            dot_escape(&n.key),
            dot_escape(&n.label),
            num(n.width / 72.0),
            num(n.height / 72.0),
            num(cx),
            num(cy)
        );
        if n.kind != NodeKind::Gqm {
            layers.entry(n.layer).or_default().push(&n.key);
        }
    }
    for e in &layout.edges {
        let style = match e.kind {
            EdgeKind::RealizedBy => "solid".to_string(),
            EdgeKind::LeadsTo => format!("solid, label=\"{}\"", e.inheritance.map(|i| i.keyword()).unwrap_or("")),
            EdgeKind::MeasuredBy => "dashed, arrowhead=none".to_string(),
        };
        let _ = writeln!(out, "  \"{}\" -> \"{}\" [style={style}];", dot_escape(&e.from), dot_escape(&e.to));
    }
    for (layer, keys) in &layers {
        let list: Vec<String> = keys.iter().map(|k| format!("\"{}\"", dot_escape(k))).collect();
        let _ = writeln!(out, "  // layer {layer}\n  {{ rank=same; {} }}", list.join("; "));
    }
    out.push_str("}\n");
    out
}

/// Static SVG 1.1 document. With a report, goal and strategy boxes are
/// filled by status; elements absent from the report stay neutral.
pub fn to_svg(layout: &LayoutedGrid, report: Option<&EvaluationReport>) -> String {
    let status: BTreeMap<&str, GoalStatus> = report
        .map(|r| r.entries.iter().map(|e| (e.element.as_str(), e.status)).collect())
        .unwrap_or_default();
    let mut out = String::new();
    let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = num(layout.width),
        h = num(layout.height)
    );
    if !layout.edges.is_empty() {
        out.push_str("<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerWidth=\"6\" markerHeight=\"6\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#555555\"/></marker></defs>\n");
        out.push_str("<g class=\"edges\" fill=\"none\" stroke=\"#555555\">\n");
        for e in &layout.edges {
            let pts: Vec<String> = e.points.iter().map(|p| format!("{},{}", num(p.x), num(p.y))).collect();
            let extra = match e.kind {
                EdgeKind::MeasuredBy => " stroke-dasharray=\"4,3\"".to_string(),
                _ => " marker-end=\"url(#arrow)\"".to_string(),
            };
            let _ = writeln!(
                out,
                "<polyline class=\"{}\" points=\"{}\"{extra}/>",
                match e.kind {
                    EdgeKind::RealizedBy => "realized-by",
                    EdgeKind::LeadsTo => "leads-to",
                    EdgeKind::MeasuredBy => "measured-by",
                },
                pts.join(" ")
            );
        }
        out.push_str("</g>\n");
    }
    if !layout.nodes.is_empty() {
        out.push_str("<g class=\"nodes\" font-family=\"Helvetica, Arial, sans-serif\" font-size=\"12\">\n");
        for n in &layout.nodes {
            let fill = match n.kind {
                NodeKind::Gqm => GQM_FILL,
                _ => status.get(n.key.as_str()).map_or(NEUTRAL_FILL, |s| palette(*s)),
            };
            let rx = if n.kind == NodeKind::Strategy { 12 } else { 0 };
            let cls = match n.kind {
                NodeKind::Goal => "goal",
                NodeKind::Strategy => "strategy",
                NodeKind::Gqm => "gqm",
            };
            let _ = writeln!(
                out,
                "<g class=\"{cls}\" id=\"{}\"><rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" rx=\"{rx}\" fill=\"{fill}\" stroke=\"#333333\"/><text x=\"{}\" y=\"{}\" text-anchor=\"middle\" dominant-baseline=\"middle\">{}</text></g>",
                xml_escape(&n.key),
                num(n.x),
                num(n.y),
                num(n.width),
                num(n.height),
                num(n.x + n.width / 2.0),
                num(n.y + n.height / 2.0),
                xml_escape(&n.label)
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{layout, LayoutOptions};
    use crate::grid::Grid;

    #[test]
    fn empty_skeletons() {
        let l = layout(&Grid::default(), &LayoutOptions::default()).unwrap();
        assert_eq!(to_dot(&l), "digraph grid {\n  graph [splines=true];\n  node [fontname=\"Helvetica\", fontsize=10];\n}\n");
        let svg = to_svg(&l, None);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("viewBox=\"0 0 0 0\""));
    }

    #[test]
    fn escapes() {
        assert_eq!(xml_escape("a<&>\"'"), "a&lt;&amp;&gt;&quot;&apos;");
        assert_eq!(dot_escape("say \"hi\""), "say \\\"hi\\\"");
    }
}

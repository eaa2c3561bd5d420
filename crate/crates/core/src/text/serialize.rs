use std::fmt::Write as _;

use super::lexer::quote;
use crate::grid::{Assumption, ContextFactor, Grid, Inheritance};
use crate::measurement::GqmGraph;

pub const HEADER: &str = "# GQM+Strategies grid\n";

/// Writes a grid as a `.gqms` document.
///
/// Output is deterministic: levels by rank, every other element by id.
pub fn serialize_grid(grid: &Grid) -> String {
    let mut out = String::from(HEADER);
    let meta = &grid.metadata;
    if meta.name.is_some() || meta.version.is_some() {
        out.push_str("\ngrid");
        if let Some(name) = &meta.name {
            let _ = write!(out, " {}", quote(name));
        }
        if let Some(version) = &meta.version {
            let _ = write!(out, " version {}", quote(version));
        }
        out.push_str(";\n");
    }

    let mut levels: Vec<_> = grid.levels.iter().collect();
    levels.sort_by(|a, b| (a.rank, &a.id).cmp(&(b.rank, &b.id)));
    if !levels.is_empty() {
        out.push('\n');
    }
    for l in levels {
        let _ = write!(out, "level {} {} rank {}", l.id, quote(&l.name), l.rank);
        if let Some(m) = l.revision_interval_months {
            let _ = write!(out, " revise_every {m}");
        }
        out.push_str(";\n");
    }

    let mut goals: Vec<_> = grid.goals.iter().collect();
    goals.sort_by(|a, b| a.id.cmp(&b.id));
    for g in goals {
        let _ = writeln!(out, "\ngoal {} at {} {{", g.id, g.level);
        let _ = writeln!(out, "  description {};", quote(&g.description));
        if let Some(p) = g.priority {
            let _ = writeln!(out, "  priority {p};");
        }
        write_rationale(&mut out, &g.context_factors, &g.assumptions);
        out.push_str("}\n");
    }

    let mut strategies: Vec<_> = grid.strategies.iter().collect();
    strategies.sort_by(|a, b| a.id.cmp(&b.id));
    for s in strategies {
        let _ = writeln!(out, "\nstrategy {} realizes {} {{", s.id, s.realizes);
        let _ = writeln!(out, "  description {};", quote(&s.description));
        write_rationale(&mut out, &s.context_factors, &s.assumptions);
        let mut links: Vec<_> = grid.derivations.iter().filter(|d| d.from_strategy == s.id).collect();
        links.sort();
        for d in links {
            let _ = write!(out, "  leads_to {}", d.to_goal);
            if d.inheritance != Inheritance::default() {
                let _ = write!(out, " {}", d.inheritance.keyword());
            }
            out.push_str(";\n");
        }
        out.push_str("}\n");
    }

    let mut relations: Vec<_> = grid.relations.iter().collect();
    relations.sort();
    if !relations.is_empty() {
        out.push('\n');
    }
    for r in relations {
        let _ = write!(out, "relation {} {} {}", r.from_goal, r.kind.keyword(), r.to_goal);
        match &r.resolution_note {
            Some(note) => {
                let _ = writeln!(out, " {{\n  resolution {};\n}}", quote(note));
            }
            None => out.push_str(";\n"),
        }
    }

    let mut graphs: Vec<_> = grid.gqm_graphs.iter().collect();
    graphs.sort_by(|a, b| a.attached_to.cmp(&b.attached_to));
    for g in graphs {
        write_gqm(&mut out, g);
    }
    out
}

fn write_rationale(out: &mut String, factors: &[ContextFactor], assumptions: &[Assumption]) {
    for c in factors {
        let _ = writeln!(out, "  context {} {};", c.id, quote(&c.statement));
    }
    for a in assumptions {
        let _ = writeln!(out, "  assumption {} {};", a.id, quote(&a.statement));
    }
}

fn write_gqm(out: &mut String, g: &GqmGraph) {
    let _ = writeln!(out, "\ngqm for {} {{", g.attached_to);
    for (kw, text) in [
        ("object", &g.goal.object),
        ("purpose", &g.goal.purpose),
        ("focus", &g.goal.quality_focus),
        ("viewpoint", &g.goal.viewpoint),
        ("context", &g.goal.context),
    ] {
        let _ = writeln!(out, "  {kw} {};", quote(text));
    }
    for q in &g.questions {
        let _ = writeln!(out, "  question {} {};", q.id, quote(&q.text));
    }
    for m in &g.metrics {
        let _ = writeln!(out, "  metric {} {} {{", m.id, quote(&m.name));
        let _ = writeln!(out, "    kind {};", m.kind.keyword());
        if let Some(unit) = &m.unit {
            let _ = writeln!(out, "    unit {};", quote(unit));
        }
        if !m.answers.is_empty() {
            let answers: Vec<&str> = m.answers.iter().map(|q| q.as_str()).collect();
            let _ = writeln!(out, "    answers {};", answers.join(", "));
        }
        if let Some(c) = &m.collection {
            out.push_str("    collect {\n");
            let _ = writeln!(out, "      responsible {};", quote(&c.responsible));
            let _ = writeln!(out, "      cadence {};", c.cadence);
            let _ = writeln!(out, "      method {};", quote(&c.method));
            let _ = writeln!(out, "      source {};", quote(&c.source));
            out.push_str("    }\n");
        }
        out.push_str("  }\n");
    }
    if let Some(model) = &g.interpretation {
        out.push_str("  interpretation {\n");
        let _ = writeln!(out, "    score := {};", model.score);
        if let Some(c) = &model.achieved {
            let _ = writeln!(out, "    achieved if {c};");
        }
        if let Some(c) = &model.at_risk {
            let _ = writeln!(out, "    at_risk if {c};");
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
}

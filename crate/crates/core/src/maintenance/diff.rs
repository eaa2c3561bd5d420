use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grid::{Assumption, ContextFactor, Grid, GoalRelation, Inheritance};
use crate::id::Id;
use crate::measurement::{gqm_key, GqmGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    Metadata,
    Level,
    Goal,
    Strategy,
    Gqm,
    Relation,
}

impl fmt::Display for ChangeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChangeKind::Metadata => "metadata",
            ChangeKind::Level => "level",
            ChangeKind::Goal => "goal",
            ChangeKind::Strategy => "strategy",
            ChangeKind::Gqm => "gqm",
            ChangeKind::Relation => "relation",
        })
    }
}

/// One diffable element: kind plus a key unique within the kind.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ElementRef {
    pub kind: ChangeKind,
    pub key: String,
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldChange {
    pub field: String,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modified {
    pub element: ElementRef,
    pub fields: Vec<FieldChange>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeSet {
    pub added: Vec<ElementRef>,
    pub removed: Vec<ElementRef>,
    pub modified: Vec<Modified>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.modified.is_empty()
    }

    /// Every element the change set mentions.
    pub fn touched(&self) -> BTreeSet<ElementRef> {
        self.added
            .iter()
            .chain(&self.removed)
            .chain(self.modified.iter().map(|m| &m.element))
            .cloned()
            .collect()
    }

    pub fn render_text(&self) -> String {
        if self.is_empty() {
            return "no changes\n".to_string();
        }
        let mut out = String::new();
        for a in &self.added {
            out.push_str(&format!("+ {a}\n"));
        }
        for r in &self.removed {
            out.push_str(&format!("- {r}\n"));
        }
        for m in &self.modified {
            out.push_str(&format!("~ {}\n", m.element));
            for f in &m.fields {
                out.push_str(&format!("    {}: {:?} -> {:?}\n", f.field, f.before, f.after));
            }
        }
        out
    }
}

type Fields = Vec<(&'static str, String)>;

fn annotations(cf: &[ContextFactor], asm: &[Assumption]) -> [(&'static str, String); 2] {
    let cf: Vec<String> = cf.iter().map(|c| format!("{}: {}", c.id, c.statement)).collect();
    let asm: Vec<String> = asm.iter().map(|a| format!("{}: {}", a.id, a.statement)).collect();
    [("context_factors", cf.join("; ")), ("assumptions", asm.join("; "))]
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn relation_key(r: &GoalRelation) -> String {
    format!("{} {} {}", r.from_goal, r.kind.keyword(), r.to_goal)
}

fn gqm_fields(g: &GqmGraph) -> Fields {
    let questions: Vec<String> = g.questions.iter().map(|q| format!("{}: {}", q.id, q.text)).collect();
    let metrics: Vec<String> = g
        .metrics
        .iter()
        .map(|m| serde_json::to_string(m).expect("metric serializes"))
        .collect();
    let interp = g.interpretation.as_ref().map(|m| {
        let mut s = format!("score := {}", m.score);
        if let Some(a) = &m.achieved {
            s.push_str(&format!("; achieved if {a}"));
        }
        if let Some(r) = &m.at_risk {
            s.push_str(&format!("; at_risk if {r}"));
        }
        s
    });
    vec![
        ("object", g.goal.object.clone()),
        ("purpose", g.goal.purpose.clone()),
        ("quality_focus", g.goal.quality_focus.clone()),
        ("viewpoint", g.goal.viewpoint.clone()),
        ("context", g.goal.context.clone()),
        ("questions", questions.join("; ")),
        ("metrics", metrics.join("; ")),
        ("interpretation", interp.unwrap_or_default()),
    ]
}

/// Flattens a grid into diffable elements with their field values.
fn elements(grid: &Grid) -> BTreeMap<ElementRef, Fields> {
    let mut out = BTreeMap::new();
    let r = |kind, key: String| ElementRef { kind, key };
    if grid.metadata.name.is_some() || grid.metadata.version.is_some() {
        out.insert(
            r(ChangeKind::Metadata, "grid".into()),
            vec![("name", opt(&grid.metadata.name)), ("version", opt(&grid.metadata.version))],
        );
    }
    for l in &grid.levels {
        out.insert(
            r(ChangeKind::Level, l.id.to_string()),
            vec![
                ("name", l.name.clone()),
                ("rank", l.rank.to_string()),
                ("revision_interval_months", opt(&l.revision_interval_months)),
            ],
        );
    }
    for g in &grid.goals {
        let mut f: Fields = vec![
            ("level", g.level.to_string()),
            ("description", g.description.clone()),
            ("priority", opt(&g.priority)),
        ];
        f.extend(annotations(&g.context_factors, &g.assumptions));
        out.insert(r(ChangeKind::Goal, g.id.to_string()), f);
    }
    for s in &grid.strategies {
        let mut leads: Vec<(&Id, Inheritance)> = grid
            .derivations
            .iter()
            .filter(|d| d.from_strategy == s.id)
            .map(|d| (&d.to_goal, d.inheritance))
            .collect();
        leads.sort();
        let leads: Vec<String> = leads.iter().map(|(g, i)| format!("{g} {}", i.keyword())).collect();
        let mut f: Fields = vec![
            ("realizes", s.realizes.to_string()),
            ("description", s.description.clone()),
            ("leads_to", leads.join(", ")),
        ];
        f.extend(annotations(&s.context_factors, &s.assumptions));
        out.insert(r(ChangeKind::Strategy, s.id.to_string()), f);
    }
    for g in &grid.gqm_graphs {
        out.insert(r(ChangeKind::Gqm, gqm_key(&g.attached_to)), gqm_fields(g));
    }
    for rel in &grid.relations {
        out.insert(r(ChangeKind::Relation, relation_key(rel)), vec![("resolution_note", opt(&rel.resolution_note))]);
    }
    out
}

/// Element-level changes from `a` to `b`, each list sorted.
pub fn diff(a: &Grid, b: &Grid) -> ChangeSet {
    let ea = elements(a);
    let eb = elements(b);
    let mut cs = ChangeSet::default();
    for (k, fa) in &ea {
        match eb.get(k) {
            None => cs.removed.push(k.clone()),
            Some(fb) => {
                let fields: Vec<FieldChange> = fa
                    .iter()
                    .zip(fb)
                    .filter(|(x, y)| x.1 != y.1)
                    .map(|(x, y)| FieldChange { field: x.0.to_string(), before: x.1.clone(), after: y.1.clone() })
                    .collect();
                if !fields.is_empty() {
                    cs.modified.push(Modified { element: k.clone(), fields });
                }
            }
        }
    }
    cs.added = eb.keys().filter(|k| !ea.contains_key(*k)).cloned().collect();
    cs
}

/// Levels an element belongs to in `grid`.
fn levels_of(grid: &Grid, e: &ElementRef) -> Vec<Id> {
    let of = |id: &str| grid.level_of(&Id::unchecked(id)).map(|l| l.id.clone());
    match e.kind {
        ChangeKind::Metadata => vec![],
        ChangeKind::Level => grid.level(&Id::unchecked(e.key.as_str())).map(|l| l.id.clone()).into_iter().collect(),
        ChangeKind::Goal | ChangeKind::Strategy => of(&e.key).into_iter().collect(),
        ChangeKind::Gqm => of(e.key.strip_prefix(crate::measurement::GQM_KEY_PREFIX).unwrap_or(&e.key))
            .into_iter()
            .collect(),
        ChangeKind::Relation => grid
            .relations
            .iter()
            .filter(|r| relation_key(r) == e.key)
            .flat_map(|r| [of(r.from_goal.as_str()), of(r.to_goal.as_str())])
            .flatten()
            .collect(),
    }
}

/// Levels touched by the change from `a` to `b`: removed elements are
/// placed by `a`, added ones by `b`, modified ones by both.
pub fn levels_touched(a: &Grid, b: &Grid, changes: &ChangeSet) -> BTreeSet<Id> {
    let mut out = BTreeSet::new();
    for e in &changes.removed {
        out.extend(levels_of(a, e));
    }
    for e in &changes.added {
        out.extend(levels_of(b, e));
    }
    for m in &changes.modified {
        out.extend(levels_of(a, &m.element));
        out.extend(levels_of(b, &m.element));
    }
    out
}

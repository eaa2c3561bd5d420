use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{Declaration, DerivationLink, ElementKind, Grid};
use crate::evaluation::TypeError;
use crate::id::Id;

/// The kind of thing a reference was expected to resolve to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RefKind {
    Level,
    Goal,
    Strategy,
    Element,
    Question,
    Metric,
}

impl fmt::Display for RefKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefKind::Level => "level",
            RefKind::Goal => "goal",
            RefKind::Strategy => "strategy",
            RefKind::Element => "goal or strategy",
            RefKind::Question => "question",
            RefKind::Metric => "metric",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("`{id}` is not a valid identifier")]
    InvalidId { id: String },
    #[error("duplicate identifier `{id}`")]
    DuplicateId { id: Id },
    #[error("duplicate level name \"{name}\"")]
    DuplicateLevelName { name: String },
    #[error("more than one grid header")]
    DuplicateMetadata,
    #[error("{owner}: {field} must not be empty")]
    EmptyText { owner: String, field: &'static str },
    #[error("{owner}: priority must be positive")]
    InvalidPriority { owner: Id },
    #[error("{from}: unknown {expected} `{id}`")]
    DanglingReference { id: Id, expected: RefKind, from: String },
    #[error("derivation {} -> {} points to a higher level", .link.from_strategy, .link.to_goal)]
    UpwardDerivation { link: DerivationLink },
    #[error("duplicate derivation {from} -> {to}")]
    DuplicateLink { from: Id, to: Id },
    #[error("goal `{goal}` is related to itself")]
    SelfRelation { goal: Id },
    #[error("derivation cycle {}", format_path(.path))]
    CycleDetected { path: Vec<Id> },
    #[error("more than one GQM graph attached to `{element}`")]
    DuplicateAttachment { element: Id },
    #[error("metric `{metric}` answers no question")]
    MetricWithoutQuestion { metric: Id },
    #[error("numeric metric `{metric}` has no unit")]
    MissingUnit { metric: Id },
    #[error("interpretation of `{element}` refers to `{child}`, which is not a direct child")]
    NotAChild { element: Id, child: Id },
    #[error("interpretation of `{element}`: {error}")]
    Type { element: Id, error: TypeError },
}

fn format_path(path: &[Id]) -> String {
    path.iter().map(Id::as_str).collect::<Vec<_>>().join(" -> ")
}

/// Where in a grid an error was found. Indices refer to positions in the
/// grid's collections before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Site {
    Metadata,
    Level(usize),
    Goal(usize),
    Strategy(usize),
    Derivation(usize),
    Relation(usize),
    Gqm(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Located {
    pub site: Site,
    pub error: GridError,
}

/// A `build_grid` error with the index of the offending declaration.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildError {
    pub declaration: Option<usize>,
    pub error: GridError,
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

/// Builds a grid from declarations, reporting every resolution error.
pub fn build_grid(declarations: Vec<Declaration>) -> Result<Grid, Vec<BuildError>> {
    let mut grid = Grid::default();
    let mut sites: HashMap<Site, usize> = HashMap::new();
    let mut counts = [0usize; 6];
    let mut metadata_seen: Vec<usize> = Vec::new();
    for (i, decl) in declarations.into_iter().enumerate() {
        let site = match &decl {
            Declaration::Metadata(_) => {
                metadata_seen.push(i);
                None
            }
            Declaration::Level(_) => Some(Site::Level(bump(&mut counts[0]))),
            Declaration::Goal(_) => Some(Site::Goal(bump(&mut counts[1]))),
            Declaration::Strategy(_) => Some(Site::Strategy(bump(&mut counts[2]))),
            Declaration::Derivation(_) => Some(Site::Derivation(bump(&mut counts[3]))),
            Declaration::Relation(_) => Some(Site::Relation(bump(&mut counts[4]))),
            Declaration::Gqm(_) => Some(Site::Gqm(bump(&mut counts[5]))),
        };
        if let Some(site) = site {
            sites.insert(site, i);
        }
        grid.push(decl);
    }

    let mut errors: Vec<BuildError> = metadata_seen
        .iter()
        .skip(1)
        .map(|&i| BuildError { declaration: Some(i), error: GridError::DuplicateMetadata })
        .collect();
    errors.extend(check_structure(&grid).into_iter().map(|located| BuildError {
        declaration: match located.site {
            Site::Metadata => metadata_seen.first().copied(),
            other => sites.get(&other).copied(),
        },
        error: located.error,
    }));
    if errors.is_empty() {
        grid.normalize();
        Ok(grid)
    } else {
        errors.sort_by_key(|e| e.declaration);
        Err(errors)
    }
}

fn bump(counter: &mut usize) -> usize {
    let v = *counter;
    *counter += 1;
    v
}

/// Checks every grid invariant, returning all violations in site order.
pub fn check_structure(grid: &Grid) -> Vec<Located> {
    let mut out = Vec::new();
    let mut push = |site: Site, error: GridError| out.push(Located { site, error });

    // Identifier grammar and the shared level/goal/strategy/metric namespace.
    let mut seen: HashSet<&Id> = HashSet::new();
    let check_id = |site: Site, id: &Id, push: &mut dyn FnMut(Site, GridError)| {
        if !Id::is_valid(id.as_str()) {
            push(site, GridError::InvalidId { id: id.to_string() });
        }
    };
    let mut level_names: HashSet<&str> = HashSet::new();
    for (i, level) in grid.levels.iter().enumerate() {
        let site = Site::Level(i);
        check_id(site, &level.id, &mut push);
        if !seen.insert(&level.id) {
            push(site, GridError::DuplicateId { id: level.id.clone() });
        }
        if level.name.trim().is_empty() {
            push(site, GridError::EmptyText { owner: level.id.to_string(), field: "name" });
        } else if !level_names.insert(level.name.as_str()) {
            push(site, GridError::DuplicateLevelName { name: level.name.clone() });
        }
    }
    for (i, goal) in grid.goals.iter().enumerate() {
        let site = Site::Goal(i);
        check_id(site, &goal.id, &mut push);
        if !seen.insert(&goal.id) {
            push(site, GridError::DuplicateId { id: goal.id.clone() });
        }
    }
    for (i, s) in grid.strategies.iter().enumerate() {
        let site = Site::Strategy(i);
        check_id(site, &s.id, &mut push);
        if !seen.insert(&s.id) {
            push(site, GridError::DuplicateId { id: s.id.clone() });
        }
    }
    for (i, g) in grid.gqm_graphs.iter().enumerate() {
        for m in &g.metrics {
            check_id(Site::Gqm(i), &m.id, &mut push);
            if !seen.insert(&m.id) {
                push(Site::Gqm(i), GridError::DuplicateId { id: m.id.clone() });
            }
        }
    }

    let level_ids: HashMap<&Id, u32> = grid.levels.iter().map(|l| (&l.id, l.rank)).collect();
    let goal_level: HashMap<&Id, &Id> = grid.goals.iter().map(|g| (&g.id, &g.level)).collect();
    let strategy_goal: HashMap<&Id, &Id> =
        grid.strategies.iter().map(|s| (&s.id, &s.realizes)).collect();
    let goal_rank = |g: &Id| goal_level.get(g).and_then(|l| level_ids.get(*l)).copied();
    let strategy_rank = |s: &Id| strategy_goal.get(s).and_then(|g| goal_rank(g));

    for (i, goal) in grid.goals.iter().enumerate() {
        let site = Site::Goal(i);
        if goal.description.trim().is_empty() {
            push(site, GridError::EmptyText { owner: goal.id.to_string(), field: "description" });
        }
        if goal.priority == Some(0) {
            push(site, GridError::InvalidPriority { owner: goal.id.clone() });
        }
        if !level_ids.contains_key(&goal.level) {
            push(
                site,
                GridError::DanglingReference {
                    id: goal.level.clone(),
                    expected: RefKind::Level,
                    from: goal.id.to_string(),
                },
            );
        }
        check_rationale(site, &goal.id, &goal.context_factors, &goal.assumptions, &mut push);
    }
    for (i, s) in grid.strategies.iter().enumerate() {
        let site = Site::Strategy(i);
        if s.description.trim().is_empty() {
            push(site, GridError::EmptyText { owner: s.id.to_string(), field: "description" });
        }
        if !goal_level.contains_key(&s.realizes) {
            push(
                site,
                GridError::DanglingReference {
                    id: s.realizes.clone(),
                    expected: RefKind::Goal,
                    from: s.id.to_string(),
                },
            );
        }
        check_rationale(site, &s.id, &s.context_factors, &s.assumptions, &mut push);
    }

    let mut links: HashSet<(&Id, &Id)> = HashSet::new();
    for (i, d) in grid.derivations.iter().enumerate() {
        let site = Site::Derivation(i);
        let from = format!("derivation {} -> {}", d.from_strategy, d.to_goal);
        let mut resolved = true;
        if !strategy_goal.contains_key(&d.from_strategy) {
            resolved = false;
            push(
                site,
                GridError::DanglingReference {
                    id: d.from_strategy.clone(),
                    expected: RefKind::Strategy,
                    from: from.clone(),
                },
            );
        }
        if !goal_level.contains_key(&d.to_goal) {
            resolved = false;
            push(
                site,
                GridError::DanglingReference {
                    id: d.to_goal.clone(),
                    expected: RefKind::Goal,
                    from,
                },
            );
        }
        if !links.insert((&d.from_strategy, &d.to_goal)) {
            push(site, GridError::DuplicateLink { from: d.from_strategy.clone(), to: d.to_goal.clone() });
        }
        if resolved {
            if let (Some(src), Some(dst)) = (strategy_rank(&d.from_strategy), goal_rank(&d.to_goal)) {
                if dst < src {
                    push(site, GridError::UpwardDerivation { link: d.clone() });
                }
            }
        }
    }

    for (i, r) in grid.relations.iter().enumerate() {
        let site = Site::Relation(i);
        for end in [&r.from_goal, &r.to_goal] {
            if !goal_level.contains_key(end) {
                push(
                    site,
                    GridError::DanglingReference {
                        id: end.clone(),
                        expected: RefKind::Goal,
                        from: format!("relation {} {} {}", r.from_goal, r.kind.keyword(), r.to_goal),
                    },
                );
            }
        }
        if r.from_goal == r.to_goal {
            push(site, GridError::SelfRelation { goal: r.from_goal.clone() });
        }
    }

    let mut attached: HashSet<&Id> = HashSet::new();
    for (i, g) in grid.gqm_graphs.iter().enumerate() {
        let site = Site::Gqm(i);
        let owner = &g.attached_to;
        let owner_kind = if goal_level.contains_key(owner) {
            Some(ElementKind::Goal)
        } else if strategy_goal.contains_key(owner) {
            Some(ElementKind::Strategy)
        } else {
            None
        };
        if owner_kind.is_none() {
            push(
                site,
                GridError::DanglingReference {
                    id: owner.clone(),
                    expected: RefKind::Element,
                    from: "gqm".to_string(),
                },
            );
        }
        if !attached.insert(owner) {
            push(site, GridError::DuplicateAttachment { element: owner.clone() });
        }
        let label = format!("gqm for {owner}");
        let mut questions: HashSet<&Id> = HashSet::new();
        for q in &g.questions {
            check_id(site, &q.id, &mut push);
            if !questions.insert(&q.id) {
                push(site, GridError::DuplicateId { id: q.id.clone() });
            }
            if q.text.trim().is_empty() {
                push(site, GridError::EmptyText { owner: q.id.to_string(), field: "question text" });
            }
        }
        for m in &g.metrics {
            if m.name.trim().is_empty() {
                push(site, GridError::EmptyText { owner: m.id.to_string(), field: "metric name" });
            }
            if m.answers.is_empty() {
                push(site, GridError::MetricWithoutQuestion { metric: m.id.clone() });
            }
            for q in &m.answers {
                if !questions.contains(q) {
                    push(
                        site,
                        GridError::DanglingReference {
                            id: q.clone(),
                            expected: RefKind::Question,
                            from: m.id.to_string(),
                        },
                    );
                }
            }
            if m.kind == crate::measurement::ValueKind::Numeric
                && m.unit.as_deref().is_none_or(|u| u.trim().is_empty())
            {
                push(site, GridError::MissingUnit { metric: m.id.clone() });
            }
            if let Some(spec) = &m.collection {
                for (field, value) in [
                    ("responsible", &spec.responsible),
                    ("method", &spec.method),
                    ("source", &spec.source),
                ] {
                    if value.trim().is_empty() {
                        push(site, GridError::EmptyText { owner: m.id.to_string(), field });
                    }
                }
            }
        }
        if let Some(model) = &g.interpretation {
            if let Err(error) = model.type_check() {
                push(site, GridError::Type { element: owner.clone(), error });
            }
            let refs = model.references();
            let own: HashSet<&Id> = g.metrics.iter().map(|m| &m.id).collect();
            for metric in &refs.metrics {
                if !own.contains(metric) {
                    push(
                        site,
                        GridError::DanglingReference {
                            id: metric.clone(),
                            expected: RefKind::Metric,
                            from: label.clone(),
                        },
                    );
                }
            }
            if owner_kind.is_some() {
                let children = grid.children(owner);
                for child in &refs.children {
                    if !children.contains(child) {
                        push(site, GridError::NotAChild { element: owner.clone(), child: child.clone() });
                    }
                }
            }
        }
    }

    for path in find_cycles(grid) {
        // Attribute the cycle to the derivation that closes it in canonical form.
        let site = path
            .windows(2)
            .find_map(|w| {
                grid.derivations
                    .iter()
                    .position(|d| d.from_strategy == w[0] && d.to_goal == w[1])
            })
            .map(Site::Derivation)
            .unwrap_or(Site::Metadata);
        push(site, GridError::CycleDetected { path });
    }

    out.sort_by_key(|l| l.site);
    out
}

fn check_rationale(
    site: Site,
    owner: &Id,
    factors: &[super::ContextFactor],
    assumptions: &[super::Assumption],
    push: &mut dyn FnMut(Site, GridError),
) {
    let mut ids: HashSet<&Id> = HashSet::new();
    for (id, statement, field) in factors
        .iter()
        .map(|c| (&c.id, &c.statement, "context statement"))
        .chain(assumptions.iter().map(|a| (&a.id, &a.statement, "assumption statement")))
    {
        if !Id::is_valid(id.as_str()) {
            push(site, GridError::InvalidId { id: id.to_string() });
        }
        if !ids.insert(id) {
            push(site, GridError::DuplicateId { id: id.clone() });
        }
        if statement.trim().is_empty() {
            push(site, GridError::EmptyText { owner: format!("{owner}.{id}"), field });
        }
    }
}

/// Finds cycles in the goal -> strategy -> goal graph. Each cycle is rotated
/// to start at its smallest id and closed by repeating that id.
fn find_cycles(grid: &Grid) -> Vec<Vec<Id>> {
    let adjacency = grid.child_map();
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Gray,
        Black,
    }
    let mut mark: BTreeMap<&Id, Mark> = adjacency.keys().map(|k| (k, Mark::White)).collect();
    let mut found: BTreeSet<Vec<Id>> = BTreeSet::new();

    for start in adjacency.keys() {
        if mark[start] != Mark::White {
            continue;
        }
        // Iterative DFS: (node, next child index).
        let mut stack: Vec<(&Id, usize)> = vec![(start, 0)];
        mark.insert(start, Mark::Gray);
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let kids = &adjacency[node];
            if *next < kids.len() {
                let child = &kids[*next];
                *next += 1;
                let Some(child) = adjacency.get_key_value(child).map(|(k, _)| k) else {
                    continue;
                };
                match mark[child] {
                    Mark::White => {
                        mark.insert(child, Mark::Gray);
                        stack.push((child, 0));
                    }
                    Mark::Gray => {
                        let pos = stack.iter().position(|(n, _)| *n == child).expect("gray on stack");
                        let cycle: Vec<Id> = stack[pos..].iter().map(|(n, _)| (*n).clone()).collect();
                        found.insert(canonical_cycle(cycle));
                    }
                    Mark::Black => {}
                }
            } else {
                mark.insert(node, Mark::Black);
                stack.pop();
            }
        }
    }
    found.into_iter().collect()
}

fn canonical_cycle(mut cycle: Vec<Id>) -> Vec<Id> {
    let min = cycle
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    cycle.rotate_left(min);
    if let Some(first) = cycle.first().cloned() {
        cycle.push(first);
    }
    cycle
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Goal, OrganizationalLevel, Strategy};
    use crate::id::id;

    fn level(i: &str, rank: u32) -> Declaration {
        Declaration::Level(OrganizationalLevel {
            id: id(i),
            name: format!("Level {i}"),
            rank,
            revision_interval_months: None,
        })
    }

    fn goal(i: &str, lvl: &str) -> Declaration {
        Declaration::Goal(Goal {
            id: id(i),
            level: id(lvl),
            description: format!("goal {i}"),
            priority: None,
            context_factors: vec![],
            assumptions: vec![],
        })
    }

    fn strategy(i: &str, realizes: &str) -> Declaration {
        Declaration::Strategy(Strategy {
            id: id(i),
            realizes: id(realizes),
            description: format!("strategy {i}"),
            context_factors: vec![],
            assumptions: vec![],
        })
    }

    fn derive(s: &str, g: &str) -> Declaration {
        Declaration::Derivation(DerivationLink {
            from_strategy: id(s),
            to_goal: id(g),
            inheritance: Default::default(),
        })
    }

    #[test]
    fn empty_declarations_give_empty_grid() {
        assert_eq!(build_grid(vec![]).unwrap(), Grid::default());
    }

    #[test]
    fn three_level_chain() {
        let grid = build_grid(vec![
            level("L0", 0),
            level("L1", 1),
            level("L2", 2),
            goal("G1", "L0"),
            strategy("S1", "G1"),
            derive("S1", "G2"),
            goal("G2", "L1"),
            strategy("S2", "G2"),
            derive("S2", "G3"),
            goal("G3", "L2"),
            strategy("S3", "G3"),
        ])
        .unwrap();
        assert_eq!(grid.goals.len(), 3);
        assert_eq!(grid.strategies.len(), 3);
        assert_eq!(grid.rank_of(&id("S2")), Some(1));
    }

    #[test]
    fn smallest_cycle() {
        let errs = build_grid(vec![level("L0", 0), goal("G1", "L0"), strategy("S1", "G1"), derive("S1", "G1")])
            .unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(
            errs[0].error,
            GridError::CycleDetected { path: vec![id("G1"), id("S1"), id("G1")] }
        );
        assert_eq!(errs[0].declaration, Some(3));
    }

    #[test]
    fn reports_all_errors_not_just_first() {
        let errs = build_grid(vec![
            level("L0", 0),
            goal("G1", "Nowhere"),
            goal("G1", "L0"),
            strategy("S1", "G9"),
        ])
        .unwrap_err();
        let kinds: Vec<_> = errs.iter().map(|e| &e.error).collect();
        assert!(kinds.iter().any(|e| matches!(e, GridError::DanglingReference { id, .. } if id.as_str() == "Nowhere")));
        assert!(kinds.iter().any(|e| matches!(e, GridError::DuplicateId { id } if id.as_str() == "G1")));
        assert!(kinds.iter().any(|e| matches!(e, GridError::DanglingReference { id, .. } if id.as_str() == "G9")));
        assert_eq!(errs.len(), 3);
    }

    #[test]
    fn upward_derivation_rejected_same_rank_allowed() {
        let errs = build_grid(vec![
            level("L0", 0),
            level("L1", 1),
            goal("G1", "L0"),
            goal("G2", "L1"),
            strategy("S2", "G2"),
            derive("S2", "G1"),
        ])
        .unwrap_err();
        assert!(matches!(errs[0].error, GridError::UpwardDerivation { .. }));

        let ok = build_grid(vec![
            level("L0", 0),
            goal("G1", "L0"),
            goal("G1b", "L0"),
            strategy("S1", "G1"),
            derive("S1", "G1b"),
        ]);
        assert!(ok.is_ok());
    }

    #[test]
    fn declaration_order_does_not_matter() {
        let decls = vec![
            level("L0", 0),
            level("L1", 1),
            goal("G1", "L0"),
            strategy("S1", "G1"),
            derive("S1", "G2"),
            goal("G2", "L1"),
        ];
        let mut reversed = decls.clone();
        reversed.reverse();
        assert_eq!(build_grid(decls).unwrap(), build_grid(reversed).unwrap());
    }
}

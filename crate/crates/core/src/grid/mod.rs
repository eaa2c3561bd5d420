//! The multi-level goal/strategy grid and its structural queries.
//!
//! A [`Grid`] holds organizational levels, goals, strategies, derivation
//! links (strategy leads to goal), goal relations and the GQM graphs that
//! make elements measurable. Grids are built from an unordered list of
//! [`Declaration`]s by [`build_grid`], which normalizes ordering so that
//! structural equality never depends on declaration order.

mod build;
mod trace;

pub use build::{build_grid, check_structure, BuildError, GridError, Located, RefKind, Site};
pub use trace::{collapse_set, trace_down, trace_up, TraceError};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::id::Id;
use crate::measurement::{GqmGraph, Metric};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrganizationalLevel {
    pub id: Id,
    pub name: String,
    /// 0 is the top of the organization.
    pub rank: u32,
    pub revision_interval_months: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextFactor {
    pub id: Id,
    pub statement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assumption {
    pub id: Id,
    pub statement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub id: Id,
    pub level: Id,
    pub description: String,
    pub priority: Option<u32>,
    pub context_factors: Vec<ContextFactor>,
    pub assumptions: Vec<Assumption>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub id: Id,
    pub realizes: Id,
    pub description: String,
    pub context_factors: Vec<ContextFactor>,
    pub assumptions: Vec<Assumption>,
}

/// How a derived goal relates to the goal its strategy realizes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inheritance {
    Identical,
    RetargetedValues,
    #[default]
    Refined,
}

impl Inheritance {
    pub const ALL: [Inheritance; 3] =
        [Inheritance::Identical, Inheritance::RetargetedValues, Inheritance::Refined];

    pub fn keyword(self) -> &'static str {
        match self {
            Inheritance::Identical => "identical",
            Inheritance::RetargetedValues => "retargeted",
            Inheritance::Refined => "refined",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == s)
    }
}

/// A strategy leading to a (same- or lower-level) goal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DerivationLink {
    pub from_strategy: Id,
    pub to_goal: Id,
    pub inheritance: Inheritance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    Conflicts,
    Supports,
}

impl RelationKind {
    pub fn keyword(self) -> &'static str {
        match self {
            RelationKind::Conflicts => "conflicts",
            RelationKind::Supports => "supports",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GoalRelation {
    pub from_goal: Id,
    pub to_goal: Id,
    pub kind: RelationKind,
    pub resolution_note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub name: Option<String>,
    pub version: Option<String>,
}

/// One top-level declaration fed to [`build_grid`].
#[derive(Debug, Clone, PartialEq)]
pub enum Declaration {
    Metadata(GridMetadata),
    Level(OrganizationalLevel),
    Goal(Goal),
    Strategy(Strategy),
    Derivation(DerivationLink),
    Relation(GoalRelation),
    Gqm(GqmGraph),
}

/// Goal or strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Goal,
    Strategy,
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::Goal => "goal",
            ElementKind::Strategy => "strategy",
        })
    }
}

/// The full model. Fields are public so tools can inspect and construct
/// grids directly; [`build_grid`] is the checked constructor and
/// [`check_structure`] re-verifies an arbitrary value.
///
/// Collections are kept sorted by id (links and relations by their fields)
/// after [`Grid::normalize`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub metadata: GridMetadata,
    pub levels: Vec<OrganizationalLevel>,
    pub goals: Vec<Goal>,
    pub strategies: Vec<Strategy>,
    pub derivations: Vec<DerivationLink>,
    pub relations: Vec<GoalRelation>,
    pub gqm_graphs: Vec<GqmGraph>,
}

impl Grid {
    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
            && self.goals.is_empty()
            && self.strategies.is_empty()
            && self.gqm_graphs.is_empty()
    }

    /// Sorts every collection into canonical order.
    pub fn normalize(&mut self) {
        self.levels.sort_by(|a, b| a.id.cmp(&b.id));
        self.goals.sort_by(|a, b| a.id.cmp(&b.id));
        self.strategies.sort_by(|a, b| a.id.cmp(&b.id));
        self.derivations.sort();
        self.relations.sort();
        self.gqm_graphs.sort_by(|a, b| a.attached_to.cmp(&b.attached_to));
    }

    pub fn level(&self, id: &Id) -> Option<&OrganizationalLevel> {
        self.levels.iter().find(|l| &l.id == id)
    }

    pub fn goal(&self, id: &Id) -> Option<&Goal> {
        self.goals.iter().find(|g| &g.id == id)
    }

    pub fn strategy(&self, id: &Id) -> Option<&Strategy> {
        self.strategies.iter().find(|s| &s.id == id)
    }

    pub fn element_kind(&self, id: &Id) -> Option<ElementKind> {
        if self.goal(id).is_some() {
            Some(ElementKind::Goal)
        } else if self.strategy(id).is_some() {
            Some(ElementKind::Strategy)
        } else {
            None
        }
    }

    /// All goal and strategy ids in sorted order.
    pub fn element_ids(&self) -> Vec<Id> {
        let mut ids: Vec<Id> = self
            .goals
            .iter()
            .map(|g| g.id.clone())
            .chain(self.strategies.iter().map(|s| s.id.clone()))
            .collect();
        ids.sort();
        ids
    }

    pub fn gqm_for(&self, element: &Id) -> Option<&GqmGraph> {
        self.gqm_graphs.iter().find(|g| &g.attached_to == element)
    }

    /// Rank of the level an element lives on. A strategy lives on the level
    /// of the goal it realizes.
    pub fn rank_of(&self, element: &Id) -> Option<u32> {
        self.level_of(element).map(|l| l.rank)
    }

    pub fn level_of(&self, element: &Id) -> Option<&OrganizationalLevel> {
        if let Some(g) = self.goal(element) {
            return self.level(&g.level);
        }
        let s = self.strategy(element)?;
        let g = self.goal(&s.realizes)?;
        self.level(&g.level)
    }

    /// Highest rank number among the levels, i.e. the bottom of the grid.
    pub fn bottom_rank(&self) -> Option<u32> {
        self.levels.iter().map(|l| l.rank).max()
    }

    /// Direct downward neighbours: a goal's realizing strategies, or the goals
    /// a strategy leads to. Sorted by id.
    pub fn children(&self, element: &Id) -> Vec<Id> {
        let mut out: Vec<Id> = if self.goal(element).is_some() {
            self.strategies
                .iter()
                .filter(|s| &s.realizes == element)
                .map(|s| s.id.clone())
                .collect()
        } else {
            self.derivations
                .iter()
                .filter(|d| &d.from_strategy == element)
                .map(|d| d.to_goal.clone())
                .collect()
        };
        out.sort();
        out.dedup();
        out
    }

    /// Direct upward neighbours: the strategies a goal is derived from, or
    /// the goal a strategy realizes. Sorted by id.
    pub fn parents(&self, element: &Id) -> Vec<Id> {
        let mut out: Vec<Id> = if self.goal(element).is_some() {
            self.derivations
                .iter()
                .filter(|d| &d.to_goal == element)
                .map(|d| d.from_strategy.clone())
                .collect()
        } else if let Some(s) = self.strategy(element) {
            vec![s.realizes.clone()]
        } else {
            Vec::new()
        };
        out.sort();
        out.dedup();
        out
    }

    /// Downward adjacency over goals and strategies.
    pub fn child_map(&self) -> BTreeMap<Id, Vec<Id>> {
        let mut map: BTreeMap<Id, Vec<Id>> =
            self.element_ids().into_iter().map(|id| (id, Vec::new())).collect();
        for s in &self.strategies {
            if let Some(v) = map.get_mut(&s.realizes) {
                v.push(s.id.clone());
            }
        }
        for d in &self.derivations {
            if let Some(v) = map.get_mut(&d.from_strategy) {
                v.push(d.to_goal.clone());
            }
        }
        for v in map.values_mut() {
            v.sort();
            v.dedup();
        }
        map
    }

    /// Goals on a rank-0 level.
    pub fn top_goals(&self) -> Vec<Id> {
        self.goals
            .iter()
            .filter(|g| self.level(&g.level).is_some_and(|l| l.rank == 0))
            .map(|g| g.id.clone())
            .collect()
    }

    /// Every metric in the grid with the element whose graph owns it.
    pub fn metrics(&self) -> impl Iterator<Item = (&Id, &Metric)> {
        self.gqm_graphs
            .iter()
            .flat_map(|g| g.metrics.iter().map(move |m| (&g.attached_to, m)))
    }

    /// Elements in topological order (parents before children), ties broken
    /// by id. Returns `None` when the derivation graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<Id>> {
        let children = self.child_map();
        let mut indegree: BTreeMap<&Id, usize> = children.keys().map(|k| (k, 0)).collect();
        for kids in children.values() {
            for k in kids {
                if let Some(d) = indegree.get_mut(k) {
                    *d += 1;
                }
            }
        }
        let mut ready: BTreeSet<&Id> =
            indegree.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
        let mut order = Vec::with_capacity(children.len());
        while let Some(next) = ready.pop_first() {
            order.push(next.clone());
            for k in &children[next] {
                if let Some(d) = indegree.get_mut(k) {
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(k);
                    }
                }
            }
        }
        (order.len() == children.len()).then_some(order)
    }

    /// Consumes `decl` into the grid without any checking.
    pub fn push(&mut self, decl: Declaration) {
        match decl {
            Declaration::Metadata(m) => self.metadata = m,
            Declaration::Level(l) => self.levels.push(l),
            Declaration::Goal(g) => self.goals.push(g),
            Declaration::Strategy(s) => self.strategies.push(s),
            Declaration::Derivation(d) => self.derivations.push(d),
            Declaration::Relation(r) => self.relations.push(r),
            Declaration::Gqm(g) => self.gqm_graphs.push(g),
        }
    }

    /// Flattens the grid back into declarations (canonical order).
    pub fn declarations(&self) -> Vec<Declaration> {
        let mut out = Vec::new();
        if self.metadata != GridMetadata::default() {
            out.push(Declaration::Metadata(self.metadata.clone()));
        }
        out.extend(self.levels.iter().cloned().map(Declaration::Level));
        out.extend(self.goals.iter().cloned().map(Declaration::Goal));
        out.extend(self.strategies.iter().cloned().map(Declaration::Strategy));
        out.extend(self.derivations.iter().cloned().map(Declaration::Derivation));
        out.extend(self.relations.iter().cloned().map(Declaration::Relation));
        out.extend(self.gqm_graphs.iter().cloned().map(Declaration::Gqm));
        out
    }
}

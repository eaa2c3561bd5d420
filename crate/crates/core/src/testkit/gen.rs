//! Seeded random generators for grids, expressions and environments.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use chrono::{Duration, TimeZone, Utc};
use rand::Rng;

use crate::evaluation::{Aggregate, ArithOp, CmpOp, Env, Expr, ExprType, GoalStatus, InterpretationModel, LogicOp};
use crate::grid::{
    Assumption, ContextFactor, DerivationLink, Goal, GoalRelation, Grid, GridMetadata, Inheritance,
    OrganizationalLevel, RelationKind, Strategy,
};
use crate::id::Id;
use crate::measurement::{
    Cadence, CollectionSpec, GqmGoal, GqmGraph, MeasurementDataset, Metric, ObsValue, Observation, Question, ValueKind,
};

const WORDS: &[&str] = &[
    "reduce", "cost", "increase", "customer", "satisfaction", "defects", "release", "cycle", "time", "quality",
    "market", "share", "a \"quoted\" word", "back\\slash", "tab\there", "line\nbreak", "# not a comment",
    "Überprüfung", "50%", "{braces}", "semi;colon",
];

fn text(rng: &mut impl Rng) -> String {
    let n = rng.random_range(1..=4);
    let words: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
    words.join(" ")
}

fn maybe_text(rng: &mut impl Rng) -> String {
    if rng.random_bool(0.2) {
        String::new()
    } else {
        text(rng)
    }
}

fn rationale(rng: &mut impl Rng) -> (Vec<ContextFactor>, Vec<Assumption>) {
    let cf = (0..rng.random_range(0..=2))
        .map(|i| ContextFactor { id: Id::unchecked(format!("C{}", i + 1)), statement: text(rng) })
        .collect();
    let asm = (0..rng.random_range(0..=2))
        .map(|i| Assumption { id: Id::unchecked(format!("A{}", i + 1)), statement: text(rng) })
        .collect();
    (cf, asm)
}

/// Knobs for [`random_grid_with`].
#[derive(Debug, Clone)]
pub struct GridParams {
    pub max_elements: usize,
    pub max_levels: usize,
    pub gqm_probability: f64,
    pub top_level_probability: f64,
    pub relations: bool,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { max_elements: 30, max_levels: 4, gqm_probability: 0.7, top_level_probability: 0.9, relations: true }
    }
}

/// A random grid that passes structural checks, with at most
/// `max_elements` goals and strategies.
pub fn random_grid(rng: &mut impl Rng, max_elements: usize) -> Grid {
    random_grid_with(rng, &GridParams { max_elements, ..GridParams::default() })
}

pub fn random_grid_with(rng: &mut impl Rng, p: &GridParams) -> Grid {
    let mut grid = Grid::default();
    if rng.random_bool(0.5) {
        grid.metadata = GridMetadata {
            name: Some(text(rng)),
            version: rng.random_bool(0.7).then(|| format!("{}.{}", rng.random_range(0..5), rng.random_range(0..10))),
        };
    }
    let n_levels = rng.random_range(1..=p.max_levels.max(1));
    let mut ranks: Vec<u32> = Vec::new();
    let mut r = if rng.random_bool(p.top_level_probability) { 0 } else { rng.random_range(1..3) };
    for _ in 0..n_levels {
        ranks.push(r);
        r += rng.random_range(1..=2);
    }
    for (i, rank) in ranks.iter().enumerate() {
        grid.levels.push(OrganizationalLevel {
            id: Id::unchecked(format!("L{i}")),
            name: format!("Level {i} {}", WORDS.choose(rng).unwrap()),
            rank: *rank,
            revision_interval_months: rng.random_bool(0.5).then(|| rng.random_range(1..=36)),
        });
    }

    let total = rng.random_range(0..=p.max_elements);
    // (id, level index, creation index) per goal.
    let mut goals: Vec<(Id, usize)> = Vec::new();
    let mut strategies: Vec<(Id, usize)> = Vec::new();
    for i in 0..total {
        let make_goal = goals.is_empty() || rng.random_bool(0.5);
        if make_goal {
            let level = rng.random_range(0..n_levels);
            let id = Id::unchecked(format!("G{i}"));
            let (cf, asm) = rationale(rng);
            grid.goals.push(Goal {
                id: id.clone(),
                level: grid.levels[level].id.clone(),
                description: text(rng),
                priority: rng.random_bool(0.4).then(|| rng.random_range(1..=5)),
                context_factors: cf,
                assumptions: asm,
            });
            goals.push((id, level));
        } else {
            let gi = rng.random_range(0..goals.len());
            let id = Id::unchecked(format!("S{i}"));
            let (cf, asm) = rationale(rng);
            grid.strategies.push(Strategy {
                id: id.clone(),
                realizes: goals[gi].0.clone(),
                description: text(rng),
                context_factors: cf,
                assumptions: asm,
            });
            strategies.push((id, gi));
        }
    }

    // Derivations strictly increase (rank, goal index), so no cycles.
    let position: Vec<(u32, usize)> = goals.iter().enumerate().map(|(i, (_, l))| (ranks[*l], i)).collect();
    for (sid, gi) in &strategies {
        let from = position[*gi];
        let targets: Vec<usize> = (0..goals.len()).filter(|&h| position[h] > from).collect();
        let k = rng.random_range(0..=2.min(targets.len()));
        let mut chosen: Vec<usize> = targets.choose_multiple(rng, k).copied().collect();
        chosen.sort();
        for h in chosen {
            let inheritance = *Inheritance::ALL.choose(rng).unwrap();
            grid.derivations.push(DerivationLink { from_strategy: sid.clone(), to_goal: goals[h].0.clone(), inheritance });
        }
    }

    if p.relations && goals.len() >= 2 {
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..rng.random_range(0..=3) {
            let a = rng.random_range(0..goals.len());
            let b = rng.random_range(0..goals.len());
            let kind = if rng.random_bool(0.5) { RelationKind::Conflicts } else { RelationKind::Supports };
            if a == b || !seen.insert((a, b, kind)) {
                continue;
            }
            grid.relations.push(GoalRelation {
                from_goal: goals[a].0.clone(),
                to_goal: goals[b].0.clone(),
                kind,
                resolution_note: rng.random_bool(0.5).then(|| text(rng)),
            });
        }
    }

    let mut metric_no = 0;
    let elements = grid.element_ids();
    for e in elements {
        if !rng.random_bool(p.gqm_probability) {
            continue;
        }
        let children = grid.children(&e);
        let g = random_gqm(rng, &e, &children, &mut metric_no);
        grid.gqm_graphs.push(g);
    }

    grid.normalize();
    grid
}

fn random_gqm(rng: &mut impl Rng, owner: &Id, children: &[Id], metric_no: &mut usize) -> GqmGraph {
    let mut g = GqmGraph::new(owner.clone());
    g.goal = GqmGoal {
        object: maybe_text(rng),
        purpose: maybe_text(rng),
        quality_focus: maybe_text(rng),
        viewpoint: maybe_text(rng),
        context: maybe_text(rng),
    };
    let nq = rng.random_range(0..=3);
    for i in 0..nq {
        g.questions.push(Question { id: Id::unchecked(format!("Q{}", i + 1)), text: text(rng) });
    }
    if nq > 0 {
        for _ in 0..rng.random_range(0..=3) {
            *metric_no += 1;
            let kind = if rng.random_bool(0.7) { ValueKind::Numeric } else { ValueKind::Boolean };
            let qids: Vec<Id> = g.questions.iter().map(|q| q.id.clone()).collect();
            let k = rng.random_range(1..=qids.len());
            let mut answers: Vec<Id> = qids.choose_multiple(rng, k).cloned().collect();
            answers.sort();
            g.metrics.push(Metric {
                id: Id::unchecked(format!("M{metric_no}")),
                name: text(rng),
                unit: match kind {
                    ValueKind::Numeric => Some(["h", "%", "dimensionless", "EUR/month"].choose(rng).unwrap().to_string()),
                    ValueKind::Boolean => rng.random_bool(0.2).then(|| "flag".to_string()),
                },
                kind,
                answers,
                collection: rng.random_bool(0.6).then(|| CollectionSpec {
                    responsible: text(rng),
                    cadence: *Cadence::ALL.choose(rng).unwrap(),
                    method: text(rng),
                    source: text(rng),
                }),
            });
        }
    }
    if rng.random_bool(0.8) {
        let ctx = ExprContext { metrics: g.metrics.iter().map(|m| m.id.clone()).collect(), children: children.to_vec() };
        let score = random_expr(rng, ExprType::Numeric, 3, &ctx, false);
        let achieved = rng.random_bool(0.5).then(|| random_expr(rng, ExprType::Boolean, 2, &ctx, true));
        let at_risk = rng.random_bool(0.5).then(|| random_expr(rng, ExprType::Boolean, 2, &ctx, true));
        g.interpretation = Some(InterpretationModel { score, achieved, at_risk });
    }
    g
}

/// Names an expression may refer to.
#[derive(Debug, Clone, Default)]
pub struct ExprContext {
    pub metrics: Vec<Id>,
    pub children: Vec<Id>,
}

fn literal(rng: &mut impl Rng) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1 => 0.5,
        2 => 1.25,
        _ => rng.random_range(-3..=9) as f64,
    }
}

/// A random well-typed expression of type `ty` and depth at most `depth`.
pub fn random_expr(rng: &mut impl Rng, ty: ExprType, depth: u32, ctx: &ExprContext, allow_score: bool) -> Expr {
    let leaf = depth == 0 || rng.random_bool(0.3);
    match ty {
        ExprType::Numeric if leaf => {
            let mut options: Vec<u8> = vec![0, 0, 3, 4];
            if !ctx.metrics.is_empty() {
                options.extend([1, 1, 1]);
            }
            if !ctx.children.is_empty() {
                options.extend([2]);
            }
            if allow_score {
                options.extend([5, 5]);
            }
            match *options.choose(rng).unwrap() {
                0 => Expr::Num(literal(rng)),
                1 => Expr::Agg(*Aggregate::ALL.choose(rng).unwrap(), ctx.metrics.choose(rng).unwrap().clone()),
                2 => Expr::ChildStatus(ctx.children.choose(rng).unwrap().clone()),
                3 => Expr::MinChildStatus,
                4 => Expr::AvgChildStatus,
                _ => Expr::Score,
            }
        }
        ExprType::Numeric => {
            if rng.random_bool(0.15) {
                Expr::Neg(Box::new(random_expr(rng, ty, depth - 1, ctx, allow_score)))
            } else {
                let op = *[ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div].choose(rng).unwrap();
                Expr::arith(
                    op,
                    random_expr(rng, ty, depth - 1, ctx, allow_score),
                    random_expr(rng, ty, depth - 1, ctx, allow_score),
                )
            }
        }
        ExprType::Boolean if leaf => {
            if rng.random_bool(0.3) {
                Expr::Bool(rng.random_bool(0.5))
            } else {
                let op = *[CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt].choose(rng).unwrap();
                let d = depth.saturating_sub(1).min(1);
                Expr::cmp(
                    op,
                    random_expr(rng, ExprType::Numeric, d, ctx, allow_score),
                    random_expr(rng, ExprType::Numeric, d, ctx, allow_score),
                )
            }
        }
        ExprType::Boolean => match rng.random_range(0..4) {
            0 => Expr::Not(Box::new(random_expr(rng, ty, depth - 1, ctx, allow_score))),
            1 => {
                let op = *[CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt].choose(rng).unwrap();
                Expr::cmp(
                    op,
                    random_expr(rng, ExprType::Numeric, depth - 1, ctx, allow_score),
                    random_expr(rng, ExprType::Numeric, depth - 1, ctx, allow_score),
                )
            }
            k => Expr::Logic(
                if k == 2 { LogicOp::And } else { LogicOp::Or },
                Box::new(random_expr(rng, ty, depth - 1, ctx, allow_score)),
                Box::new(random_expr(rng, ty, depth - 1, ctx, allow_score)),
            ),
        },
    }
}

/// A random environment over `ctx`: small integer series (sometimes empty
/// or absent), random child statuses and an optional score.
pub fn random_env(rng: &mut impl Rng, ctx: &ExprContext) -> Env {
    let mut series = BTreeMap::new();
    for m in &ctx.metrics {
        if rng.random_bool(0.1) {
            continue;
        }
        let len = if rng.random_bool(0.15) { 0 } else { rng.random_range(1..=5) };
        let values = (0..len)
            .map(|_| if rng.random_bool(0.1) { rng.random_range(0..4) as f64 * 0.25 } else { rng.random_range(-2..=6) as f64 })
            .collect();
        series.insert(m.clone(), values);
    }
    let mut children = BTreeMap::new();
    for c in &ctx.children {
        if rng.random_bool(0.9) {
            children.insert(c.clone(), *GoalStatus::ALL.choose(rng).unwrap());
        }
    }
    let score = rng.random_bool(0.8).then(|| literal(rng));
    Env { series, children, score }
}

/// A grid with no gap findings: contiguous levels, every element measured,
/// every question answered, every metric used and everything reachable.
pub fn gap_free_grid(rng: &mut impl Rng, levels: usize, width: usize) -> Grid {
    let mut grid = Grid::default();
    for i in 0..levels.max(1) {
        grid.levels.push(OrganizationalLevel {
            id: Id::unchecked(format!("L{i}")),
            name: format!("Level {i}"),
            rank: i as u32,
            revision_interval_months: None,
        });
    }
    let mut by_rank: Vec<Vec<Id>> = Vec::new();
    let mut counter = 0;
    let mut fresh = |p: &str| {
        counter += 1;
        Id::unchecked(format!("{p}{counter}"))
    };
    for (r, level) in grid.levels.clone().iter().enumerate() {
        let n = rng.random_range(1..=width.max(1));
        let ids: Vec<Id> = (0..n).map(|_| fresh("G")).collect();
        for id in &ids {
            grid.goals.push(Goal {
                id: id.clone(),
                level: level.id.clone(),
                description: text(rng),
                priority: None,
                context_factors: vec![],
                assumptions: vec![],
            });
        }
        let _ = r;
        by_rank.push(ids);
    }
    let bottom = by_rank.len() - 1;
    for r in 0..by_rank.len() {
        let goals = by_rank[r].clone();
        let mut strategies = Vec::new();
        for g in &goals {
            if r == bottom && rng.random_bool(0.5) {
                continue;
            }
            for _ in 0..rng.random_range(1..=2) {
                let s = fresh("S");
                grid.strategies.push(Strategy {
                    id: s.clone(),
                    realizes: g.clone(),
                    description: text(rng),
                    context_factors: vec![],
                    assumptions: vec![],
                });
                strategies.push(s);
            }
        }
        if r < bottom {
            let lower = &by_rank[r + 1];
            let mut links = std::collections::BTreeSet::new();
            for (i, s) in strategies.iter().enumerate() {
                links.insert((s.clone(), lower[i % lower.len()].clone()));
                if rng.random_bool(0.3) {
                    links.insert((s.clone(), lower.choose(rng).unwrap().clone()));
                }
            }
            // Every lower goal needs a parent.
            for (i, g) in lower.iter().enumerate() {
                links.insert((strategies[i % strategies.len()].clone(), g.clone()));
            }
            for (s, g) in links {
                grid.derivations.push(DerivationLink { from_strategy: s, to_goal: g, inheritance: Inheritance::Refined });
            }
        }
    }
    for (k, e) in grid.element_ids().into_iter().enumerate() {
        let m = Id::unchecked(format!("M{k}"));
        let mut g = GqmGraph::new(e.clone());
        g.questions.push(Question { id: Id::unchecked("Q1"), text: text(rng) });
        g.metrics.push(Metric {
            id: m.clone(),
            name: text(rng),
            unit: Some("dimensionless".into()),
            kind: ValueKind::Numeric,
            answers: vec![Id::unchecked("Q1")],
            collection: None,
        });
        g.interpretation = Some(InterpretationModel::with_score(Expr::agg(Aggregate::Last, m)));
        grid.gqm_graphs.push(g);
    }
    grid.normalize();
    grid
}

/// Random observations for the grid's metrics: some metrics get none, the
/// rest a short daily series starting 2026-01-01.
pub fn random_dataset(rng: &mut impl Rng, grid: &Grid) -> MeasurementDataset {
    let start = Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap();
    let mut series = BTreeMap::new();
    for (_, m) in grid.metrics() {
        if rng.random_bool(0.15) {
            continue;
        }
        let n = rng.random_range(1..=6);
        let obs = (0..n)
            .map(|i| Observation {
                timestamp: start + Duration::days(i),
                value: match m.kind {
                    ValueKind::Boolean => ObsValue::Bool(rng.random_bool(0.6)),
                    ValueKind::Numeric => ObsValue::Num(rng.random_range(-1..=8) as f64),
                },
            })
            .collect();
        series.insert(m.id.clone(), obs);
    }
    MeasurementDataset { series }
}

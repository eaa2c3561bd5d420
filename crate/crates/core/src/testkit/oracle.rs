//! Slow, direct reimplementations used to cross-check the library.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, NaiveDate};

use crate::analysis::AssetInventory;
use crate::evaluation::{Aggregate, ArithOp, CmpOp, Env, Expr, GoalStatus, LogicOp, Value};
use crate::grid::Grid;
use crate::id::Id;
use crate::layout::LayeredGraph;
use crate::measurement::{gqm_key, Cadence, DateWindow, MeasurementDataset};

/// Tree-walking evaluator with the three-valued semantics spelled out case
/// by case.
pub fn reference_eval(expr: &Expr, env: &Env) -> Value {
    use Value::*;
    let num = |v: f64| if v.is_finite() { Num(v) } else { Undefined };
    match expr {
        Expr::Num(v) => Num(*v),
        Expr::Bool(b) => Bool(*b),
        Expr::Score => match env.score {
            Some(s) => Num(s),
            None => Undefined,
        },
        Expr::Agg(agg, m) => {
            let Some(s) = env.series.get(m) else { return Undefined };
            if s.is_empty() {
                return Undefined;
            }
            let mut sorted = s.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let total: f64 = s.iter().sum();
            num(match agg {
                Aggregate::Last => *s.last().unwrap(),
                Aggregate::Sum => total,
                Aggregate::Avg => total / s.len() as f64,
                Aggregate::Min => sorted[0],
                Aggregate::Max => sorted[sorted.len() - 1],
                Aggregate::Count => s.len() as f64,
            })
        }
        Expr::ChildStatus(c) => match env.children.get(c).and_then(|s| s.encoding()) {
            Some(v) => Num(v),
            None => Undefined,
        },
        Expr::MinChildStatus | Expr::AvgChildStatus => {
            let mut vals = Vec::new();
            for s in env.children.values() {
                match s.encoding() {
                    Some(v) => vals.push(v),
                    None => return Undefined,
                }
            }
            if vals.is_empty() {
                return Undefined;
            }
            if matches!(expr, Expr::MinChildStatus) {
                num(vals.iter().copied().reduce(f64::min).unwrap())
            } else {
                num(vals.iter().sum::<f64>() / vals.len() as f64)
            }
        }
        Expr::Neg(e) => match reference_eval(e, env) {
            Num(v) => Num(-v),
            _ => Undefined,
        },
        Expr::Not(e) => match reference_eval(e, env) {
            Bool(b) => Bool(!b),
            _ => Undefined,
        },
        Expr::Arith(op, l, r) => match (reference_eval(l, env), reference_eval(r, env)) {
            (Num(a), Num(b)) => match op {
                ArithOp::Add => num(a + b),
                ArithOp::Sub => num(a - b),
                ArithOp::Mul => num(a * b),
                ArithOp::Div => {
                    if b == 0.0 {
                        Undefined
                    } else {
                        num(a / b)
                    }
                }
            },
            _ => Undefined,
        },
        Expr::Cmp(op, l, r) => match (reference_eval(l, env), reference_eval(r, env)) {
            (Num(a), Num(b)) => Bool(match op {
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Eq => a == b,
                CmpOp::Ge => a >= b,
                CmpOp::Gt => a > b,
            }),
            _ => Undefined,
        },
        Expr::Logic(op, l, r) => {
            let a = reference_eval(l, env);
            let b = reference_eval(r, env);
            // Kleene: a dominating operand decides even if the other is undefined.
            let dominant = matches!(op, LogicOp::Or);
            if a == Bool(dominant) || b == Bool(dominant) {
                Bool(dominant)
            } else if a == Bool(!dominant) && b == Bool(!dominant) {
                Bool(!dominant)
            } else {
                Undefined
            }
        }
    }
}

fn expr_metrics(e: &Expr, out: &mut BTreeSet<Id>) {
    match e {
        Expr::Agg(_, m) => {
            out.insert(m.clone());
        }
        Expr::Neg(x) | Expr::Not(x) => expr_metrics(x, out),
        Expr::Arith(_, l, r) | Expr::Cmp(_, l, r) | Expr::Logic(_, l, r) => {
            expr_metrics(l, out);
            expr_metrics(r, out);
        }
        _ => {}
    }
}

/// Downward edges as plain pairs, read straight from the grid's lists.
fn edges(grid: &Grid) -> Vec<(Id, Id)> {
    let mut e: Vec<(Id, Id)> = grid.strategies.iter().map(|s| (s.realizes.clone(), s.id.clone())).collect();
    e.extend(grid.derivations.iter().map(|d| (d.from_strategy.clone(), d.to_goal.clone())));
    e
}

/// Fixpoint reachability from `starts`, never entering `avoid`.
fn reach(grid: &Grid, starts: &[Id], avoid: Option<&Id>) -> BTreeSet<Id> {
    let mut seen: BTreeSet<Id> = starts.iter().filter(|s| Some(*s) != avoid).cloned().collect();
    let e = edges(grid);
    loop {
        let before = seen.len();
        for (a, b) in &e {
            if seen.contains(a) && Some(b) != avoid {
                seen.insert(b.clone());
            }
        }
        if seen.len() == before {
            return seen;
        }
    }
}

fn rank(grid: &Grid, e: &Id) -> Option<u32> {
    let level = grid
        .goals
        .iter()
        .find(|g| &g.id == e)
        .map(|g| g.level.clone())
        .or_else(|| {
            let s = grid.strategies.iter().find(|s| &s.id == e)?;
            grid.goals.iter().find(|g| g.id == s.realizes).map(|g| g.level.clone())
        })?;
    grid.levels.iter().find(|l| l.id == level).map(|l| l.rank)
}

/// Gap rules recomputed from their definitions; returns sorted
/// `(rule, subjects)` pairs.
pub fn brute_force_gaps(grid: &Grid, inventory: Option<&AssetInventory>) -> Vec<(String, Vec<String>)> {
    let mut out: Vec<(String, Vec<String>)> = Vec::new();
    let bottom = grid.levels.iter().map(|l| l.rank).max();
    let e = edges(grid);
    let has_child = |x: &Id| e.iter().any(|(a, _)| a == x);
    for g in &grid.goals {
        if !has_child(&g.id) && rank(grid, &g.id) != bottom {
            out.push(("G1".into(), vec![g.id.to_string()]));
        }
    }
    for s in &grid.strategies {
        let r = rank(grid, &s.id);
        if !has_child(&s.id) && grid.levels.iter().any(|l| Some(l.rank) > r) {
            out.push(("G2".into(), vec![s.id.to_string()]));
        }
    }
    let all: Vec<Id> = grid.goals.iter().map(|g| g.id.clone()).chain(grid.strategies.iter().map(|s| s.id.clone())).collect();
    for x in &all {
        if !grid.gqm_graphs.iter().any(|g| &g.attached_to == x) {
            out.push(("G3".into(), vec![x.to_string()]));
        }
    }
    let mut used = BTreeSet::new();
    for g in &grid.gqm_graphs {
        for q in &g.questions {
            let answered = g.metrics.iter().any(|m| m.answers.iter().any(|a| a == &q.id));
            if !answered {
                out.push(("G4".into(), vec![g.attached_to.to_string(), q.id.to_string()]));
            }
        }
        if let Some(m) = &g.interpretation {
            expr_metrics(&m.score, &mut used);
            for c in m.achieved.iter().chain(m.at_risk.iter()) {
                expr_metrics(c, &mut used);
            }
        }
    }
    for g in &grid.gqm_graphs {
        for m in &g.metrics {
            if !used.contains(&m.id) {
                out.push(("G5".into(), vec![m.id.to_string()]));
            }
        }
    }
    let tops: Vec<Id> = grid
        .goals
        .iter()
        .filter(|g| grid.levels.iter().any(|l| l.id == g.level && l.rank == 0))
        .map(|g| g.id.clone())
        .collect();
    let reached = reach(grid, &tops, None);
    for x in &all {
        if !reached.contains(x) {
            out.push(("G6".into(), vec![x.to_string()]));
        }
    }
    if let Some(inv) = inventory {
        for a in inv.goals.iter().chain(&inv.strategies).chain(&inv.metrics) {
            if a.maps_to.is_none() {
                out.push(("G7".into(), vec![a.label.clone()]));
            }
        }
    }
    out.sort();
    out
}

/// Cycle test by transitive closure (Floyd–Warshall) over downward edges.
pub fn brute_cycle_exists(grid: &Grid) -> bool {
    let mut ids: Vec<Id> = grid.goals.iter().map(|g| g.id.clone()).chain(grid.strategies.iter().map(|s| s.id.clone())).collect();
    ids.sort();
    ids.dedup();
    let idx: BTreeMap<&Id, usize> = ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let n = ids.len();
    let mut m = vec![vec![false; n]; n];
    for (a, b) in edges(grid) {
        if let (Some(&i), Some(&j)) = (idx.get(&a), idx.get(&b)) {
            m[i][j] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if m[i][k] {
                for j in 0..n {
                    if m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
    }
    (0..n).any(|i| m[i][i])
}

/// Nodes hidden by collapsing `element`: strict descendants that are not
/// reachable from a top goal once `element` is removed, plus their GQM keys.
pub fn brute_collapse(grid: &Grid, element: &Id) -> BTreeSet<String> {
    let below: BTreeSet<Id> = reach(grid, std::slice::from_ref(element), None)
        .into_iter()
        .filter(|x| x != element)
        .collect();
    let tops: Vec<Id> = grid
        .goals
        .iter()
        .filter(|g| grid.levels.iter().any(|l| l.id == g.level && l.rank == 0))
        .map(|g| g.id.clone())
        .collect();
    let visible = reach(grid, &tops, Some(element));
    let mut out = BTreeSet::new();
    for x in below.difference(&visible) {
        out.insert(x.to_string());
        if grid.gqm_graphs.iter().any(|g| &g.attached_to == x) {
            out.insert(gqm_key(x));
        }
    }
    out
}

/// All maximal upward paths ending at `element`, top-first and sorted.
pub fn brute_trace_up(grid: &Grid, element: &Id) -> Vec<Vec<Id>> {
    let e = edges(grid);
    let mut done = Vec::new();
    let mut open = vec![vec![element.clone()]];
    while let Some(path) = open.pop() {
        let head = path[0].clone();
        let parents: Vec<&Id> = e.iter().filter(|(_, b)| b == &head).map(|(a, _)| a).collect();
        if parents.is_empty() {
            done.push(path);
            continue;
        }
        for p in parents {
            let mut next = vec![p.clone()];
            next.extend(path.iter().cloned());
            open.push(next);
        }
    }
    done.sort();
    done.dedup();
    done
}

/// Plan rows as `(rank, metric, owner, missing)`.
pub fn brute_plan_rows(grid: &Grid) -> Vec<(u32, Id, Id, bool)> {
    let mut rows = Vec::new();
    for g in &grid.gqm_graphs {
        for m in &g.metrics {
            rows.push((rank(grid, &g.attached_to).unwrap(), m.id.clone(), g.attached_to.clone(), m.collection.is_none()));
        }
    }
    rows.sort();
    rows
}

/// Expected observations by walking every day of the window and counting
/// distinct calendar periods.
pub fn brute_expected(cadence: Cadence, window: DateWindow) -> u32 {
    let mut periods = BTreeSet::new();
    let mut d = window.start;
    while d <= window.end {
        let key: (i32, u32) = match cadence {
            Cadence::Daily => (d.year(), d.ordinal()),
            Cadence::Weekly => {
                let w = d.iso_week();
                (w.year(), w.week())
            }
            Cadence::Monthly => (d.year(), d.month()),
            Cadence::Quarterly => (d.year(), (d.month() - 1) / 3),
            Cadence::Yearly => (d.year(), 0),
        };
        periods.insert(key);
        d = d.succ_opt().unwrap_or(NaiveDate::MAX);
        if d == NaiveDate::MAX {
            break;
        }
    }
    periods.len() as u32
}

/// Crossings by checking every pair of edges between the same two rows.
pub fn pairwise_crossings(graph: &LayeredGraph) -> u64 {
    let mut pos: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (r, row) in graph.rows.iter().enumerate() {
        for (i, k) in row.iter().enumerate() {
            pos.insert(k.as_str(), (r, i));
        }
    }
    let placed: Vec<((usize, usize), (usize, usize))> =
        graph.edges.iter().map(|(a, b)| (pos[a.as_str()], pos[b.as_str()])).collect();
    let mut n = 0;
    for i in 0..placed.len() {
        for j in i + 1..placed.len() {
            let ((ra, a1), (_, a2)) = placed[i];
            let ((rb, b1), (_, b2)) = placed[j];
            if ra == rb && ((a1 < b1 && a2 > b2) || (a1 > b1 && a2 < b2)) {
                n += 1;
            }
        }
    }
    n
}

fn permutations(items: &[String]) -> Vec<Vec<String>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

/// Minimum crossings over every joint ordering of all rows.
pub fn exhaustive_min_crossings(graph: &LayeredGraph) -> u64 {
    let perms: Vec<Vec<Vec<String>>> = graph.rows.iter().map(|r| permutations(r)).collect();
    let mut choice = vec![0usize; perms.len()];
    let mut best = u64::MAX;
    loop {
        let candidate = LayeredGraph {
            rows: choice.iter().enumerate().map(|(r, &c)| perms[r][c].clone()).collect(),
            edges: graph.edges.clone(),
        };
        best = best.min(pairwise_crossings(&candidate));
        // Odometer increment.
        let mut r = 0;
        loop {
            if r == choice.len() {
                return if best == u64::MAX { 0 } else { best };
            }
            choice[r] += 1;
            if choice[r] < perms[r].len() {
                break;
            }
            choice[r] = 0;
            r += 1;
        }
    }
}

/// Status and score per measured element, computed top-down by plain
/// recursion with [`reference_eval`].
pub fn reference_statuses(grid: &Grid, data: &MeasurementDataset) -> BTreeMap<Id, (GoalStatus, Option<f64>)> {
    fn status_of(
        grid: &Grid,
        data: &MeasurementDataset,
        e: &Id,
        memo: &mut BTreeMap<Id, (GoalStatus, Option<f64>)>,
    ) -> GoalStatus {
        if let Some((s, _)) = memo.get(e) {
            return *s;
        }
        let Some(graph) = grid.gqm_graphs.iter().find(|g| &g.attached_to == e) else {
            return GoalStatus::Unknown;
        };
        let mut env = Env::default();
        for m in &graph.metrics {
            let values = data
                .series
                .get(&m.id)
                .map(|obs| obs.iter().map(|o| o.value.as_f64()).collect())
                .unwrap_or_default();
            env.series.insert(m.id.clone(), values);
        }
        for (a, b) in edges(grid) {
            if &a == e {
                let s = status_of(grid, data, &b, memo);
                env.children.insert(b, s);
            }
        }
        let result = match &graph.interpretation {
            None => (GoalStatus::Unknown, None),
            Some(model) => match reference_eval(&model.score, &env) {
                Value::Num(score) => {
                    env.score = Some(score);
                    let decide = |c: Expr| reference_eval(&c, &env);
                    match (decide(model.achieved_condition()), decide(model.at_risk_condition())) {
                        (Value::Bool(true), _) => (GoalStatus::Achieved, Some(score)),
                        (Value::Bool(false), Value::Bool(true)) => (GoalStatus::AtRisk, Some(score)),
                        (Value::Bool(false), Value::Bool(false)) => (GoalStatus::Failed, Some(score)),
                        _ => (GoalStatus::Unknown, Some(score)),
                    }
                }
                _ => (GoalStatus::Unknown, None),
            },
        };
        memo.insert(e.clone(), result);
        result.0
    }
    let mut memo = BTreeMap::new();
    for g in &grid.gqm_graphs {
        status_of(grid, data, &g.attached_to, &mut memo);
    }
    memo
}

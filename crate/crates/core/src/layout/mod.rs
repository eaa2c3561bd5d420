//! Layered layout of a grid and static DOT/SVG export.
//!
//! Each visible rank forms a horizontal band with a goal row above a
//! strategy row. Rows are ordered with one downward and one upward
//! barycenter sweep (ties by id); small inputs are then refined to a
//! crossing-minimal order. Long edges are routed through dummy points.
//! GQM graphs, when shown, sit immediately right of their owner.

mod order;
mod render;

pub use order::{barycenter, exact_feasible, refine_exact, LayeredGraph, EXACT_MAX_ROW};
pub use render::{palette, to_dot, to_svg, NEUTRAL_FILL};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{require_valid, PreconditionViolated};
use crate::exec::Exec;
use crate::grid::{collapse_set, Grid, Inheritance};
use crate::id::Id;
use crate::measurement::gqm_key;

pub const GOAL_SIZE: (f64, f64) = (160.0, 56.0);
pub const STRATEGY_SIZE: (f64, f64) = (160.0, 44.0);
pub const GQM_SIZE: (f64, f64) = (104.0, 36.0);
pub const H_GAP: f64 = 40.0;
pub const GQM_GAP: f64 = 12.0;
pub const ROW_HEIGHT: f64 = 100.0;
pub const MARGIN: f64 = 20.0;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutOptions {
    pub show_gqm: bool,
    /// Only these ranks are drawn; `None` draws all.
    pub visible_ranks: Option<BTreeSet<u32>>,
    /// Elements whose collapse sets are hidden. The elements stay visible.
    pub collapsed: BTreeSet<Id>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Goal,
    Strategy,
    Gqm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// Goal to one of its realizing strategies.
    RealizedBy,
    /// Strategy to a goal it leads to.
    LeadsTo,
    /// Element to its GQM graph.
    MeasuredBy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutNode {
    /// Element id, or `gqm:<owner>` for GQM graphs.
    pub key: String,
    pub kind: NodeKind,
    pub label: String,
    /// The level rank.
    pub layer: u32,
    /// Top-left corner.
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl LayoutNode {
    pub fn overlaps(&self, other: &LayoutNode) -> bool {
        self.x < other.x + other.width
            && other.x < self.x + self.width
            && self.y < other.y + other.height
            && other.y < self.y + self.height
    }

    /// Whether `p` lies on the box boundary (within `eps`).
    pub fn touches(&self, p: Point, eps: f64) -> bool {
        let inside_x = p.x >= self.x - eps && p.x <= self.x + self.width + eps;
        let inside_y = p.y >= self.y - eps && p.y <= self.y + self.height + eps;
        let on_x = (p.x - self.x).abs() <= eps || (p.x - self.x - self.width).abs() <= eps;
        let on_y = (p.y - self.y).abs() <= eps || (p.y - self.y - self.height).abs() <= eps;
        inside_x && inside_y && (on_x || on_y)
    }

    fn center_x(&self) -> f64 {
        self.x + self.width / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutEdge {
    pub from: String,
    pub to: String,
    pub kind: EdgeKind,
    pub inheritance: Option<Inheritance>,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LayoutedGrid {
    pub width: f64,
    pub height: f64,
    /// Nodes in row order, left to right.
    pub nodes: Vec<LayoutNode>,
    pub edges: Vec<LayoutEdge>,
    /// Edge crossings between goal/strategy rows.
    pub crossings: u64,
}

impl LayoutedGrid {
    pub fn node(&self, key: &str) -> Option<&LayoutNode> {
        self.nodes.iter().find(|n| n.key == key)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// The elements drawn under `options`.
pub fn visible_elements(grid: &Grid, options: &LayoutOptions) -> BTreeSet<Id> {
    let mut hidden: BTreeSet<String> = BTreeSet::new();
    for c in &options.collapsed {
        if let Ok(set) = collapse_set(grid, c) {
            hidden.extend(set);
        }
    }
    grid.element_ids()
        .into_iter()
        .filter(|e| !hidden.contains(e.as_str()))
        .filter(|e| match (&options.visible_ranks, grid.rank_of(e)) {
            (Some(ranks), Some(r)) => ranks.contains(&r),
            _ => true,
        })
        .collect()
}

struct Skeleton {
    graph: LayeredGraph,
    /// Band rank of each row.
    row_rank: Vec<u32>,
    /// Original edges with the dummy chain each one runs through.
    routes: Vec<(String, String, EdgeKind, Option<Inheritance>, Vec<String>)>,
    dummies: BTreeSet<String>,
}

fn dummy_key(from: &str, to: &str, row: usize) -> String {
    format!("~{from}~{to}~{row}")
}

fn skeleton(grid: &Grid, visible: &BTreeSet<Id>) -> Skeleton {
    // Row slots: (rank, 0) is the goal row, (rank, 1) the strategy row.
    let mut slot_of: BTreeMap<&Id, (u32, u8)> = BTreeMap::new();
    for g in grid.goals.iter().filter(|g| visible.contains(&g.id)) {
        slot_of.insert(&g.id, (grid.rank_of(&g.id).expect("validated"), 0));
    }
    for s in grid.strategies.iter().filter(|s| visible.contains(&s.id)) {
        slot_of.insert(&s.id, (grid.rank_of(&s.id).expect("validated"), 1));
    }
    let slots: BTreeSet<(u32, u8)> = slot_of.values().copied().collect();
    let row_index: BTreeMap<(u32, u8), usize> = slots.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut rows: Vec<Vec<String>> = vec![Vec::new(); slots.len()];
    let row_rank: Vec<u32> = slots.iter().map(|s| s.0).collect();
    for (id, slot) in &slot_of {
        rows[row_index[slot]].push(id.to_string());
    }

    let mut links: Vec<(String, String, EdgeKind, Option<Inheritance>)> = Vec::new();
    for s in &grid.strategies {
        if visible.contains(&s.id) && visible.contains(&s.realizes) {
            links.push((s.realizes.to_string(), s.id.to_string(), EdgeKind::RealizedBy, None));
        }
    }
    for d in &grid.derivations {
        if visible.contains(&d.from_strategy) && visible.contains(&d.to_goal) {
            links.push((d.from_strategy.to_string(), d.to_goal.to_string(), EdgeKind::LeadsTo, Some(d.inheritance)));
        }
    }
    links.sort();

    let mut edges = Vec::new();
    let mut routes = Vec::new();
    let mut dummies = BTreeSet::new();
    for (from, to, kind, inh) in links {
        let rf = row_index[&slot_of[&Id::unchecked(from.as_str())]];
        let rt = row_index[&slot_of[&Id::unchecked(to.as_str())]];
        let (top, bottom) = if rf <= rt { (rf, rt) } else { (rt, rf) };
        let (upper, lower) = if rf <= rt { (&from, &to) } else { (&to, &from) };
        let mut chain = vec![upper.clone()];
        for r in top + 1..bottom {
            let d = dummy_key(&from, &to, r);
            rows[r].push(d.clone());
            dummies.insert(d.clone());
            chain.push(d);
        }
        chain.push(lower.clone());
        for w in chain.windows(2) {
            edges.push((w[0].clone(), w[1].clone()));
        }
        let inner = chain[1..chain.len() - 1].to_vec();
        routes.push((from, to, kind, inh, if rf <= rt { inner } else { inner.into_iter().rev().collect() }));
    }
    for row in &mut rows {
        row.sort();
    }
    Skeleton { graph: LayeredGraph { rows, edges }, row_rank, routes, dummies }
}

/// The layered graph that [`layout`] orders, in its initial (sorted) order.
pub fn layered_graph(grid: &Grid, options: &LayoutOptions) -> Result<LayeredGraph, PreconditionViolated> {
    require_valid(grid)?;
    Ok(skeleton(grid, &visible_elements(grid, options)).graph)
}

pub fn layout(grid: &Grid, options: &LayoutOptions) -> Result<LayoutedGrid, PreconditionViolated> {
    layout_with(grid, options, Exec::default())
}

pub fn layout_with(grid: &Grid, options: &LayoutOptions, exec: Exec) -> Result<LayoutedGrid, PreconditionViolated> {
    require_valid(grid)?;
    let visible = visible_elements(grid, options);
    let mut sk = skeleton(grid, &visible);
    barycenter(&mut sk.graph);
    refine_exact(&mut sk.graph, exec);
    let crossings = sk.graph.crossings();

    // Insert GQM nodes right of their owners.
    let mut rows = sk.graph.rows.clone();
    if options.show_gqm {
        for row in &mut rows {
            let mut out = Vec::with_capacity(row.len());
            for k in row.drain(..) {
                let owner = Id::unchecked(k.as_str());
                let has = !sk.dummies.contains(&k) && grid.gqm_for(&owner).is_some();
                out.push(k);
                if has {
                    out.push(gqm_key(&owner));
                }
            }
            *row = out;
        }
    }

    let size = |k: &str| -> (f64, f64) {
        if sk.dummies.contains(k) {
            (0.0, 0.0)
        } else if k.starts_with(crate::measurement::GQM_KEY_PREFIX) {
            GQM_SIZE
        } else if grid.goal(&Id::unchecked(k)).is_some() {
            GOAL_SIZE
        } else {
            STRATEGY_SIZE
        }
    };

    // Horizontal placement: each row follows the centers of its upper
    // neighbours, then is pushed right to keep gaps.
    let mut up: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (u, v) in &sk.graph.edges {
        up.entry(v.as_str()).or_default().push(u.as_str());
    }
    let mut center: BTreeMap<String, f64> = BTreeMap::new();
    let mut boxes: Vec<LayoutNode> = Vec::new();
    let mut width = 0.0f64;
    for (r, row) in rows.iter().enumerate() {
        let y_top = MARGIN + r as f64 * ROW_HEIGHT;
        let mut cursor = MARGIN;
        let mut prev_dummy = true;
        for (i, k) in row.iter().enumerate() {
            let (w, h) = size(k);
            let is_gqm = k.starts_with(crate::measurement::GQM_KEY_PREFIX);
            let gap = if i == 0 {
                0.0
            } else if is_gqm {
                GQM_GAP
            } else if prev_dummy || sk.dummies.contains(k) {
                H_GAP / 2.0
            } else {
                H_GAP
            };
            let min_left = cursor + gap;
            let desired = up
                .get(k.as_str())
                .map(|ps| ps.iter().filter_map(|p| center.get(*p)).sum::<f64>() / ps.len() as f64 - w / 2.0);
            let left = if is_gqm { min_left } else { desired.map_or(min_left, |d| d.max(min_left)) };
            center.insert(k.clone(), left + w / 2.0);
            cursor = left + w;
            width = width.max(cursor);
            prev_dummy = sk.dummies.contains(k);
            if sk.dummies.contains(k) {
                continue;
            }
            let (kind, label) = if is_gqm {
                (NodeKind::Gqm, format!("GQM {}", &k[crate::measurement::GQM_KEY_PREFIX.len()..]))
            } else if grid.goal(&Id::unchecked(k.as_str())).is_some() {
                (NodeKind::Goal, k.clone())
            } else {
                (NodeKind::Strategy, k.clone())
            };
            let layer = sk.row_rank[r];
            boxes.push(LayoutNode { key: k.clone(), kind, label, layer, x: left, y: y_top + (ROW_HEIGHT - MARGIN - h) / 2.0, width: w, height: h });
        }
    }

    let by_key: BTreeMap<&str, &LayoutNode> = boxes.iter().map(|n| (n.key.as_str(), n)).collect();
    let row_y = |k: &str| -> f64 {
        let r = rows.iter().position(|row| row.iter().any(|x| x == k)).expect("dummy placed");
        MARGIN + r as f64 * ROW_HEIGHT + (ROW_HEIGHT - MARGIN) / 2.0
    };
    let mut edges: Vec<LayoutEdge> = Vec::new();
    for (from, to, kind, inheritance, via) in &sk.routes {
        let (a, b) = (by_key[from.as_str()], by_key[to.as_str()]);
        let downward = a.y < b.y;
        let (ya, yb) = if downward { (a.y + a.height, b.y) } else { (a.y, b.y + b.height) };
        let mut points = vec![Point { x: a.center_x(), y: ya }];
        points.extend(via.iter().map(|d| Point { x: center[d], y: row_y(d) }));
        points.push(Point { x: b.center_x(), y: yb });
        edges.push(LayoutEdge { from: from.clone(), to: to.clone(), kind: *kind, inheritance: *inheritance, points });
    }
    if options.show_gqm {
        for n in boxes.iter().filter(|n| n.kind == NodeKind::Gqm) {
            let owner = &n.key[crate::measurement::GQM_KEY_PREFIX.len()..];
            let o = by_key[owner];
            let y = n.y + n.height / 2.0;
            edges.push(LayoutEdge {
                from: owner.to_string(),
                to: n.key.clone(),
                kind: EdgeKind::MeasuredBy,
                inheritance: None,
                points: vec![Point { x: o.x + o.width, y }, Point { x: n.x, y }],
            });
        }
    }

    let height = if rows.is_empty() { 0.0 } else { MARGIN + rows.len() as f64 * ROW_HEIGHT };
    let width = if boxes.is_empty() { 0.0 } else { width + MARGIN };
    Ok(LayoutedGrid { width, height, nodes: boxes, edges, crossings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_grid;

    pub(crate) const CHAIN: &str = r#"
level L0 "Business" rank 0;
level L1 "Software" rank 1;
level L2 "Project" rank 2;
goal G1 at L0 { description "g1"; }
strategy S1 realizes G1 { description "s1"; leads_to G2; }
goal G2 at L1 { description "g2"; }
strategy S2 realizes G2 { description "s2"; leads_to G3; }
goal G3 at L2 { description "g3"; }
strategy S3 realizes G3 { description "s3"; }
gqm for G1 { }
gqm for S2 { }
"#;

    #[test]
    fn empty_grid() {
        let l = layout(&Grid::default(), &LayoutOptions::default()).unwrap();
        assert!(l.is_empty());
        assert!(l.edges.is_empty());
    }

    #[test]
    fn chain_has_three_layers_and_no_crossings() {
        let grid = parse_grid(CHAIN).unwrap();
        let l = layout(&grid, &LayoutOptions { show_gqm: true, ..Default::default() }).unwrap();
        let layers: BTreeSet<u32> = l.nodes.iter().map(|n| n.layer).collect();
        assert_eq!(layers, BTreeSet::from([0, 1, 2]));
        assert_eq!(l.crossings, 0);
        assert_eq!(l.nodes.len(), 8);
        let g1 = l.node("G1").unwrap();
        let q = l.node("gqm:G1").unwrap();
        assert_eq!(q.layer, 0);
        assert!(q.x > g1.x);
        for (i, a) in l.nodes.iter().enumerate() {
            for b in &l.nodes[i + 1..] {
                assert!(!a.overlaps(b), "{} overlaps {}", a.key, b.key);
            }
        }
        for e in &l.edges {
            assert!(l.node(&e.from).unwrap().touches(e.points[0], 1e-9), "{e:?}");
            assert!(l.node(&e.to).unwrap().touches(*e.points.last().unwrap(), 1e-9), "{e:?}");
        }
    }

    #[test]
    fn filters() {
        let grid = parse_grid(CHAIN).unwrap();
        let opts = LayoutOptions { collapsed: BTreeSet::from([Id::unchecked("S1")]), ..Default::default() };
        let l = layout(&grid, &opts).unwrap();
        let keys: Vec<&str> = l.nodes.iter().map(|n| n.key.as_str()).collect();
        assert_eq!(keys, vec!["G1", "S1"]);
        let opts = LayoutOptions { visible_ranks: Some(BTreeSet::from([2])), ..Default::default() };
        let l = layout(&grid, &opts).unwrap();
        assert!(l.nodes.iter().all(|n| n.layer == 2));
        assert_eq!(l.nodes.len(), 2);
    }

    #[test]
    fn long_edges_get_bends() {
        let grid = parse_grid(
            r#"
level L0 "A" rank 0;
level L2 "C" rank 2;
goal G1 at L0 { description "g"; }
strategy S1 realizes G1 { description "s"; leads_to G3; }
goal G3 at L2 { description "g"; }
goal G4 at L2 { description "g"; }
goal G5 at L0 { description "g"; }
strategy S5 realizes G5 { description "s"; leads_to G3; }
"#,
        )
        .unwrap();
        let l = layout(&grid, &LayoutOptions::default()).unwrap();
        let e = l.edges.iter().find(|e| e.from == "S1" && e.to == "G3").unwrap();
        assert_eq!(e.points.len(), 2);
        assert_eq!(layered_graph(&grid, &LayoutOptions::default()).unwrap().rows.len(), 3);
    }
}

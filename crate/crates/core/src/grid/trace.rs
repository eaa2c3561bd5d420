use std::collections::{BTreeSet, VecDeque};

use super::Grid;
use crate::id::Id;
use crate::measurement::gqm_key;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("unknown element `{0}`")]
    UnknownElement(Id),
}

fn require(grid: &Grid, element: &Id) -> Result<(), TraceError> {
    match grid.element_kind(element) {
        Some(_) => Ok(()),
        None => Err(TraceError::UnknownElement(element.clone())),
    }
}

/// Every upward path from `element` to an element without parents.
///
/// Paths are ordered top-first and end with `element` itself, so a chain
/// `G1 <- S1 <- G2` traced from `G2` yields `[G1, S1, G2]`. Multiple parents
/// yield multiple paths, sorted lexicographically.
pub fn trace_up(grid: &Grid, element: &Id) -> Result<Vec<Vec<Id>>, TraceError> {
    require(grid, element)?;
    let mut paths = Vec::new();
    let mut current = vec![element.clone()];
    walk_up(grid, &mut current, &mut paths);
    for p in &mut paths {
        p.reverse();
    }
    paths.sort();
    Ok(paths)
}

fn walk_up(grid: &Grid, current: &mut Vec<Id>, out: &mut Vec<Vec<Id>>) {
    let last = current.last().expect("non-empty path").clone();
    let parents = grid.parents(&last);
    if parents.is_empty() {
        out.push(current.clone());
        return;
    }
    for p in parents {
        // Accepted grids are acyclic; the guard only protects unchecked values.
        if current.contains(&p) {
            out.push(current.clone());
            continue;
        }
        current.push(p);
        walk_up(grid, current, out);
        current.pop();
    }
}

/// `element` and everything reachable from it through downward edges.
pub fn trace_down(grid: &Grid, element: &Id) -> Result<BTreeSet<Id>, TraceError> {
    require(grid, element)?;
    Ok(reachable(grid, std::slice::from_ref(element), None))
}

/// Breadth-first reachability over downward edges, never entering `avoid`.
fn reachable(grid: &Grid, starts: &[Id], avoid: Option<&Id>) -> BTreeSet<Id> {
    let children = grid.child_map();
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<&Id> = VecDeque::new();
    for s in starts {
        if Some(s) != avoid && seen.insert(s.clone()) {
            queue.push_back(s);
        }
    }
    while let Some(node) = queue.pop_front() {
        for child in children.get(node).into_iter().flatten() {
            if Some(child) != avoid && seen.insert(child.clone()) {
                queue.push_back(child);
            }
        }
    }
    seen
}

/// Node keys hidden when `element` is collapsed: its strict descendants that
/// cannot be reached from any top-level goal without passing through
/// `element`, together with the GQM graphs attached to them.
///
/// Goals and strategies appear under their id; GQM graphs under
/// [`gqm_key`] of their owner.
pub fn collapse_set(grid: &Grid, element: &Id) -> Result<BTreeSet<String>, TraceError> {
    require(grid, element)?;
    let mut below = reachable(grid, &grid.children(element), None);
    below.remove(element);
    let still_visible = reachable(grid, &grid.top_goals(), Some(element));
    let mut hidden = BTreeSet::new();
    for id in below.difference(&still_visible) {
        if grid.gqm_for(id).is_some() {
            hidden.insert(gqm_key(id));
        }
        hidden.insert(id.to_string());
    }
    Ok(hidden)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_grid;
    use crate::id::id;

    const DIAMOND: &str = r#"
level L0 "Top" rank 0;
level L1 "Mid" rank 1;
goal G0 at L0 { description "root"; }
strategy SA realizes G0 { description "a"; leads_to G1; }
strategy SB realizes G0 { description "b"; leads_to G1; }
goal G1 at L1 { description "shared"; }
strategy S1 realizes G1 { description "leaf"; }
"#;

    #[test]
    fn diamond_keeps_shared_goal_visible() {
        let grid = parse_grid(DIAMOND).unwrap();
        assert!(collapse_set(&grid, &id("SA")).unwrap().is_empty());
        let hide_root: Vec<String> = collapse_set(&grid, &id("G0")).unwrap().into_iter().collect();
        assert_eq!(hide_root, vec!["G1", "S1", "SA", "SB"]);
    }

    #[test]
    fn diamond_has_two_paths() {
        let grid = parse_grid(DIAMOND).unwrap();
        let paths = trace_up(&grid, &id("S1")).unwrap();
        assert_eq!(
            paths,
            vec![
                vec![id("G0"), id("SA"), id("G1"), id("S1")],
                vec![id("G0"), id("SB"), id("G1"), id("S1")],
            ]
        );
    }

    #[test]
    fn unknown_element() {
        let grid = parse_grid(DIAMOND).unwrap();
        assert_eq!(
            trace_up(&grid, &id("nope")),
            Err(TraceError::UnknownElement(id("nope")))
        );
        assert!(collapse_set(&grid, &id("nope")).is_err());
    }
}

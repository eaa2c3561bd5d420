//! Within-row ordering for crossing reduction.
//!
//! Rows interact only with their neighbours, so the total crossing count is
//! a sum over adjacent row pairs. After the barycenter sweeps, small inputs
//! are refined by an exact dynamic program over row permutations.

use std::collections::BTreeMap;

use crate::exec::{self, Exec};

/// A proper layered graph: every edge joins two adjacent rows.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LayeredGraph {
    /// Node keys per row, in current order.
    pub rows: Vec<Vec<String>>,
    /// `(upper, lower)` pairs; `upper` sits in some row `i`, `lower` in `i + 1`.
    pub edges: Vec<(String, String)>,
}

/// Largest row size the exact refinement will permute.
pub const EXACT_MAX_ROW: usize = 7;
/// Work budget (permutation pairs times edges) for the exact refinement.
const EXACT_BUDGET: u128 = 40_000_000;

impl LayeredGraph {
    fn positions(&self) -> BTreeMap<&str, (usize, usize)> {
        let mut pos = BTreeMap::new();
        for (r, row) in self.rows.iter().enumerate() {
            for (i, k) in row.iter().enumerate() {
                pos.insert(k.as_str(), (r, i));
            }
        }
        pos
    }

    /// Edges between row `r` and `r + 1` as local index pairs.
    fn local_edges(&self) -> Vec<Vec<(usize, usize)>> {
        let pos = self.positions();
        let mut out = vec![Vec::new(); self.rows.len().saturating_sub(1)];
        for (u, v) in &self.edges {
            let (ru, iu) = pos[u.as_str()];
            let (rv, iv) = pos[v.as_str()];
            debug_assert_eq!(ru + 1, rv, "edge {u}->{v} is not between adjacent rows");
            out[ru].push((iu, iv));
        }
        out
    }

    /// Total crossings of the current order.
    pub fn crossings(&self) -> u64 {
        let local = self.local_edges();
        local
            .iter()
            .map(|edges| {
                let ident_u: Vec<usize> = (0..edges.iter().map(|e| e.0 + 1).max().unwrap_or(0)).collect();
                let ident_v: Vec<usize> = (0..edges.iter().map(|e| e.1 + 1).max().unwrap_or(0)).collect();
                pair_crossings(edges, &ident_u, &ident_v)
            })
            .sum()
    }
}

/// Crossings between two rows where `pu[i]` / `pv[j]` give the current
/// position of local node `i` / `j`. Counted as inversions after sorting.
fn pair_crossings(edges: &[(usize, usize)], pu: &[usize], pv: &[usize]) -> u64 {
    let mut seq: Vec<(usize, usize)> = edges.iter().map(|&(u, v)| (pu[u], pv[v])).collect();
    seq.sort_unstable();
    let mut lower: Vec<usize> = seq.into_iter().map(|(_, v)| v).collect();
    let mut buf = vec![0; lower.len()];
    inversions(&mut lower, &mut buf)
}

/// Strict inversions, counted by merge sort.
fn inversions(a: &mut [usize], buf: &mut [usize]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = inversions(&mut a[..mid], &mut buf[..mid]) + inversions(&mut a[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if a[i] <= a[j] {
            buf[k] = a[i];
            i += 1;
        } else {
            buf[k] = a[j];
            count += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&a[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&a[j..n]);
    a.copy_from_slice(&buf[..n]);
    count
}

/// One downward and one upward barycenter sweep. Nodes without neighbours
/// in the reference row keep their position as barycenter; ties go to the
/// smaller key.
pub fn barycenter(graph: &mut LayeredGraph) {
    let n = graph.rows.len();
    let mut up: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut down: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (u, v) in &graph.edges {
        down.entry(u.clone()).or_default().push(v.clone());
        up.entry(v.clone()).or_default().push(u.clone());
    }
    let sweep = |graph: &mut LayeredGraph, r: usize, reference: usize, adj: &BTreeMap<String, Vec<String>>| {
        let index: BTreeMap<&str, usize> =
            graph.rows[reference].iter().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
        let mut keyed: Vec<(f64, String)> = graph.rows[r]
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let ns: Vec<usize> =
                    adj.get(k).into_iter().flatten().filter_map(|m| index.get(m.as_str()).copied()).collect();
                let b = if ns.is_empty() { i as f64 } else { ns.iter().sum::<usize>() as f64 / ns.len() as f64 };
                (b, k.clone())
            })
            .collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        graph.rows[r] = keyed.into_iter().map(|(_, k)| k).collect();
    };
    for r in 1..n {
        sweep(graph, r, r - 1, &up);
    }
    for r in (0..n.saturating_sub(1)).rev() {
        sweep(graph, r, r + 1, &down);
    }
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Next lexicographic permutation in place; false after the last one.
fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// All orders of `0..n` as position arrays (`pos[node] = slot`).
fn all_positions(n: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    loop {
        let mut pos = vec![0; n];
        for (slot, &node) in order.iter().enumerate() {
            pos[node] = slot;
        }
        out.push(pos);
        if !next_permutation(&mut order) {
            break;
        }
    }
    out
}

/// Crossings between two small rows, split so that one side's order can be
/// fixed once and the other side enumerated cheaply. With the lower order
/// fixed, `z[a * nu + b]` counts the crossings caused by upper node `a`
/// sitting left of `b`; an upper order costs the sum over its ordered pairs.
struct PairKernel {
    nu: usize,
    nv: usize,
    /// Edge multiplicity, `w[a * nv + c]`.
    w: Vec<u64>,
}

impl PairKernel {
    fn new(edges: &[(usize, usize)], nu: usize, nv: usize) -> Self {
        let mut w = vec![0; nu * nv];
        for &(a, c) in edges {
            w[a * nv + c] += 1;
        }
        PairKernel { nu, nv, w }
    }

    /// `a * nu + b` for every upper pair with `a` left of `b` under `pu`.
    fn ordered_pairs(&self, pu: &[usize]) -> Vec<usize> {
        let mut out = Vec::new();
        for a in 0..self.nu {
            for b in 0..self.nu {
                if pu[a] < pu[b] {
                    out.push(a * self.nu + b);
                }
            }
        }
        out
    }

    fn left_of_costs(&self, pv: &[usize]) -> Vec<u64> {
        let (nu, nv) = (self.nu, self.nv);
        // t[b][c]: edges from b that land left of c.
        let mut t = vec![0u64; nu * nv];
        for b in 0..nu {
            for c in 0..nv {
                t[b * nv + c] = (0..nv).filter(|&d| pv[d] < pv[c]).map(|d| self.w[b * nv + d]).sum();
            }
        }
        let mut z = vec![0u64; nu * nu];
        for a in 0..nu {
            for b in 0..nu {
                if a != b {
                    z[a * nu + b] = (0..nv).map(|c| self.w[a * nv + c] * t[b * nv + c]).sum();
                }
            }
        }
        z
    }
}

/// Whether [`refine_exact`] will run on this graph.
pub fn exact_feasible(graph: &LayeredGraph) -> bool {
    if graph.rows.iter().any(|r| r.len() > EXACT_MAX_ROW) {
        return false;
    }
    let local = graph.local_edges();
    let work: u128 = local
        .iter()
        .enumerate()
        .map(|(r, e)| factorial(graph.rows[r].len()) * factorial(graph.rows[r + 1].len()) * (e.len() as u128 + 1))
        .sum();
    work <= EXACT_BUDGET
}

/// Replaces the order with a crossing-minimal one when that is strictly
/// better. Returns whether the order changed.
pub fn refine_exact(graph: &mut LayeredGraph, exec: Exec) -> bool {
    let rows = graph.rows.len();
    if rows < 2 || !exact_feasible(graph) {
        return false;
    }
    let current = graph.crossings();
    if current == 0 {
        return false;
    }
    // Local node indices follow the current order, so position array 0 of
    // every row (the identity) reproduces it.
    let local = graph.local_edges();
    let perms: Vec<Vec<Vec<usize>>> = graph.rows.iter().map(|r| all_positions(r.len())).collect();

    // best[r][q]: minimal crossings of rows 0..=r with row r in order q.
    let mut best: Vec<u64> = vec![0; perms[0].len()];
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(rows);
    back.push(vec![0; perms[0].len()]);
    for r in 1..rows {
        let kernel = PairKernel::new(&local[r - 1], graph.rows[r - 1].len(), graph.rows[r].len());
        let before: Vec<Vec<usize>> = perms[r - 1].iter().map(|pu| kernel.ordered_pairs(pu)).collect();
        let step: Vec<(u64, usize)> = exec::map(exec, &perms[r], |pv| {
            let z = kernel.left_of_costs(pv);
            let mut min = (u64::MAX, 0);
            for (pi, pairs) in before.iter().enumerate() {
                let c = best[pi].saturating_add(pairs.iter().map(|&i| z[i]).sum::<u64>());
                if c < min.0 {
                    min = (c, pi);
                }
            }
            min
        });
        best = step.iter().map(|s| s.0).collect();
        back.push(step.iter().map(|s| s.1).collect());
    }
    let (mut q, total) = best.iter().enumerate().min_by_key(|(i, c)| (**c, *i)).map(|(i, c)| (i, *c)).unwrap();
    if total >= current {
        return false;
    }
    for r in (0..rows).rev() {
        let pos = &perms[r][q];
        let mut row = vec![String::new(); pos.len()];
        for (node, &slot) in pos.iter().enumerate() {
            row[slot] = graph.rows[r][node].clone();
        }
        graph.rows[r] = row;
        q = back[r][q];
    }
    debug_assert_eq!(graph.crossings(), total);
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(rows: &[&[&str]], edges: &[(&str, &str)]) -> LayeredGraph {
        LayeredGraph {
            rows: rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
            edges: edges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }

    #[test]
    fn inversion_count() {
        let mut a = vec![3, 1, 2, 0];
        let mut buf = vec![0; 4];
        assert_eq!(inversions(&mut a, &mut buf), 5);
        assert_eq!(a, vec![0, 1, 2, 3]);
    }

    #[test]
    fn counts_simple_cross() {
        let g = graph(&[&["a", "b"], &["c", "d"]], &[("a", "d"), ("b", "c")]);
        assert_eq!(g.crossings(), 1);
        let g = graph(&[&["a", "b"], &["c", "d"]], &[("a", "c"), ("a", "d"), ("b", "c")]);
        assert_eq!(g.crossings(), 1);
    }

    #[test]
    fn barycenter_untangles_pair() {
        let mut g = graph(&[&["a", "b"], &["c", "d"]], &[("a", "d"), ("b", "c")]);
        barycenter(&mut g);
        assert_eq!(g.crossings(), 0);
    }

    #[test]
    fn exact_refinement_beats_sweeps() {
        // A layout where a single sweep gets stuck is refined to optimum.
        let mut g = graph(
            &[&["a", "b", "c"], &["d", "e", "f"], &["g", "h", "i"]],
            &[("a", "f"), ("b", "d"), ("c", "e"), ("d", "i"), ("e", "g"), ("f", "h")],
        );
        let before = g.crossings();
        assert!(before > 0);
        assert!(refine_exact(&mut g, Exec::Sequential));
        assert_eq!(g.crossings(), 0);
    }

    #[test]
    fn pair_kernel_matches_inversion_count() {
        let edges = [(0, 1), (0, 3), (1, 0), (2, 2), (2, 0), (3, 3), (1, 2)];
        let kernel = PairKernel::new(&edges, 4, 4);
        for pu in all_positions(4) {
            let pairs = kernel.ordered_pairs(&pu);
            for pv in all_positions(4) {
                let z = kernel.left_of_costs(&pv);
                let fast: u64 = pairs.iter().map(|&i| z[i]).sum();
                assert_eq!(fast, pair_crossings(&edges, &pu, &pv));
            }
        }
    }

    #[test]
    fn permutations_enumerated() {
        assert_eq!(all_positions(0).len(), 1);
        assert_eq!(all_positions(4).len(), 24);
    }
}

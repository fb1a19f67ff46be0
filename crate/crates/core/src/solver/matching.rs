//! Maximum-weight bipartite matching by successive shortest paths.
//!
//! Only edges with positive value are worth matching, so augmentation stops
//! as soon as the cheapest augmenting path no longer has negative cost.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const EPS: f64 = 1e-12;

#[derive(Clone, Copy)]
struct Arc {
    to: usize,
    cap: u8,
    cost: f64,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Min-heap on distance, ties on node index.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Matched pairs `(left, right, edge index)` and total value.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub pairs: Vec<(usize, usize, usize)>,
    pub value: f64,
}

/// `edges` are `(left, right, value)`; edges with value ≤ 0 are ignored.
pub fn max_weight_matching(n_left: usize, n_right: usize, edges: &[(usize, usize, f64)]) -> Matching {
    let s = 0;
    let t = n_left + n_right + 1;
    let n = t + 1;
    let mut arcs: Vec<Arc> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let add = |arcs: &mut Vec<Arc>, adj: &mut Vec<Vec<usize>>, u: usize, v: usize, cost: f64| -> usize {
        adj[u].push(arcs.len());
        arcs.push(Arc { to: v, cap: 1, cost });
        adj[v].push(arcs.len());
        arcs.push(Arc { to: u, cap: 0, cost: -cost });
        arcs.len() - 2
    };

    let mut pot = vec![0.0f64; n];
    let mut edge_arc = Vec::new();
    let mut useful_left = vec![false; n_left];
    let mut useful_right = vec![false; n_right];
    for (k, &(l, r, v)) in edges.iter().enumerate() {
        if v > EPS {
            let id = add(&mut arcs, &mut adj, 1 + l, 1 + n_left + r, -v);
            edge_arc.push((id, k));
            useful_left[l] = true;
            useful_right[r] = true;
            // Initial potentials: shortest distances in the acyclic graph.
            let node = 1 + n_left + r;
            pot[node] = pot[node].min(-v);
        }
    }
    if edge_arc.is_empty() {
        return Matching { pairs: Vec::new(), value: 0.0 };
    }
    for l in 0..n_left {
        if useful_left[l] {
            add(&mut arcs, &mut adj, s, 1 + l, 0.0);
        }
    }
    for r in 0..n_right {
        if useful_right[r] {
            let node = 1 + n_left + r;
            add(&mut arcs, &mut adj, node, t, 0.0);
            pot[t] = pot[t].min(pot[node]);
        }
    }

    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut total = 0.0;
    loop {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        prev.iter_mut().for_each(|p| *p = usize::MAX);
        done.iter_mut().for_each(|d| *d = false);
        dist[s] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Entry(0.0, s));
        while let Some(Entry(d, u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for &ai in &adj[u] {
                let a = arcs[ai];
                if a.cap == 0 {
                    continue;
                }
                let reduced = (a.cost + pot[u] - pot[a.to]).max(0.0);
                let nd = d + reduced;
                if nd < dist[a.to] - EPS {
                    dist[a.to] = nd;
                    prev[a.to] = ai;
                    heap.push(Entry(nd, a.to));
                }
            }
        }
        if !dist[t].is_finite() {
            break;
        }
        let path_cost = dist[t] + pot[t] - pot[s];
        if path_cost >= -EPS {
            break;
        }
        // Capping at dist[t] keeps every residual reduced cost nonnegative,
        // including arcs into nodes this round did not reach.
        let cap = dist[t];
        for v in 0..n {
            pot[v] += dist[v].min(cap);
        }
        let mut v = t;
        while v != s {
            let ai = prev[v];
            arcs[ai].cap -= 1;
            arcs[ai ^ 1].cap += 1;
            v = arcs[ai ^ 1].to;
        }
        total -= path_cost;
    }

    let mut pairs = Vec::new();
    let mut value = 0.0;
    for (id, k) in edge_arc {
        if arcs[id].cap == 0 {
            let (l, r, v) = edges[k];
            pairs.push((l, r, k));
            value += v;
        }
    }
    debug_assert!((value - total).abs() < 1e-6 * (1.0 + value.abs()));
    Matching { pairs, value }
}

//! Best-first branch and bound with a Lagrangian bound.
//!
//! Relaxing the footprint balance with a multiplier λ ≥ 0 leaves a problem
//! that splits into independent choices per instance plus a maximum-weight
//! bipartite matching over the pairwise edges:
//!
//! * an idle A-instance earns λ·w_a by contributing its footprint,
//! * an uncovered B-instance earns max(0, 1 − λ·w_b) by being paid for,
//! * an edge earns 1 − (what both endpoints give up).
//!
//! The minimum over λ of that value bounds the node from above. Free
//! many-to-many edges are relaxed to "cover their B side for free" until
//! they are branched on; after that, branching happens on footprint
//! variables. Once every footprint variable is fixed the relaxation is
//! exact, so the search is complete.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::matching::max_weight_matching;
use super::{balance, balance_tolerance, ComparisonProblem, Solution};

const LINE_SEARCH_STEPS: usize = 60;
const BOUND_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fix {
    Free,
    Zero,
    One,
}

#[derive(Debug, Clone)]
struct Node {
    ca: Vec<Fix>,
    cb: Vec<Fix>,
    /// Indexed like `Ctx::hyper`.
    hy: Vec<Fix>,
    ub: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    Ca(usize),
    Cb(usize),
    Hyper(usize),
}

pub(crate) struct Outcome {
    pub solution: Solution,
    pub nodes: u64,
    pub optimal: bool,
    pub upper_bound: u32,
}

struct Ctx<'p> {
    p: &'p ComparisonProblem,
    pairwise: Vec<usize>,
    hyper: Vec<usize>,
    tol: f64,
    incumbent: Solution,
    best: u32,
}

/// One evaluation of the relaxation at a fixed λ.
struct Point {
    lambda: f64,
    value: f64,
    g: f64,
    x: Solution,
}

enum Eval {
    Infeasible,
    Bounded { ub: u32, lo: Option<Solution>, hi: Option<Solution> },
}

fn weight(w: Option<f64>) -> f64 {
    w.unwrap_or(0.0)
}

impl<'p> Ctx<'p> {
    fn root(&self) -> Node {
        let fix = |w: &Option<f64>| if w.is_some() { Fix::Free } else { Fix::Zero };
        Node {
            ca: self.p.a.iter().map(|x| fix(&x.weight)).collect(),
            cb: self.p.b.iter().map(|x| fix(&x.weight)).collect(),
            hy: vec![Fix::Free; self.hyper.len()],
            ub: u32::MAX,
        }
    }

    /// A-instances taken by many-to-many edges fixed to 1, or `None` when
    /// the fixings contradict each other.
    fn consumed(&self, node: &Node) -> Option<Vec<bool>> {
        let mut used = vec![false; self.p.a.len()];
        for (k, &e) in self.hyper.iter().enumerate() {
            if node.hy[k] == Fix::One {
                for &i in &self.p.edges[e].a {
                    if used[i] || node.ca[i] == Fix::One {
                        return None;
                    }
                    used[i] = true;
                }
            }
        }
        Some(used)
    }

    /// Free many-to-many edges that can still be switched on.
    fn available_hyper(&self, node: &Node, consumed: &[bool]) -> Vec<usize> {
        (0..self.hyper.len())
            .filter(|&k| {
                node.hy[k] == Fix::Free
                    && self.p.edges[self.hyper[k]]
                        .a
                        .iter()
                        .all(|&i| !consumed[i] && node.ca[i] != Fix::One)
            })
            .collect()
    }

    fn relax(&self, node: &Node, consumed: &[bool], open_hyper: &[usize], lambda: f64) -> Point {
        let p = self.p;
        let mut x = Solution::zeros(p);
        let mut covered = vec![false; p.b.len()];
        for (k, &e) in self.hyper.iter().enumerate() {
            if node.hy[k] == Fix::One || open_hyper.contains(&k) {
                x.h[e] = true;
                p.edges[e].b.iter().for_each(|&j| covered[j] = true);
            }
        }
        let a_ok: Vec<bool> = (0..p.a.len()).map(|i| !consumed[i] && node.ca[i] != Fix::One).collect();
        let b_ok: Vec<bool> = (0..p.b.len()).map(|j| !covered[j] && node.cb[j] != Fix::One).collect();
        let alpha: Vec<f64> = (0..p.a.len())
            .map(|i| if node.ca[i] == Fix::Free { lambda * weight(p.a[i].weight) } else { 0.0 })
            .collect();
        let beta: Vec<f64> = (0..p.b.len())
            .map(|j| {
                if node.cb[j] == Fix::Free {
                    (1.0 - lambda * weight(p.b[j].weight)).max(0.0)
                } else {
                    0.0
                }
            })
            .collect();

        let mut edges = Vec::new();
        let mut edge_ids = Vec::new();
        for &e in &self.pairwise {
            let (i, j) = (p.edges[e].a[0], p.edges[e].b[0]);
            if a_ok[i] && b_ok[j] {
                edges.push((i, j, 1.0 - alpha[i] - beta[j]));
                edge_ids.push(e);
            }
        }
        let m = max_weight_matching(p.a.len(), p.b.len(), &edges);
        let mut matched_a = vec![false; p.a.len()];
        let mut matched_b = vec![false; p.b.len()];
        for &(i, j, k) in &m.pairs {
            x.h[edge_ids[k]] = true;
            matched_a[i] = true;
            matched_b[j] = true;
        }
        for i in 0..p.a.len() {
            x.c_a[i] = match node.ca[i] {
                Fix::One => true,
                Fix::Zero => false,
                Fix::Free => a_ok[i] && !matched_a[i],
            };
        }
        for j in 0..p.b.len() {
            x.c_b[j] = match node.cb[j] {
                Fix::One => true,
                Fix::Zero => false,
                Fix::Free => b_ok[j] && !matched_b[j] && beta[j] > 0.0,
            };
            x.b[j] = covered[j] || matched_b[j] || x.c_b[j];
        }
        let g = balance(p, &x);
        Point {
            lambda,
            value: f64::from(x.objective()) + lambda * g,
            g,
            x,
        }
    }

    /// Turns any relaxed point into a feasible solution and offers it as
    /// incumbent.
    fn repair(&mut self, x: &Solution) {
        let p = self.p;
        let mut s = x.clone();
        let mut used = vec![0u32; p.a.len()];
        // Keep pairwise edges (a matching by construction); keep
        // many-to-many edges only while their A side is untouched.
        for (e, edge) in p.edges.iter().enumerate() {
            if s.h[e] && edge.is_pairwise() {
                used[edge.a[0]] += 1;
            }
        }
        for (e, edge) in p.edges.iter().enumerate() {
            if s.h[e] && !edge.is_pairwise() {
                if edge.a.iter().all(|&i| used[i] == 0 && !s.c_a[i]) {
                    edge.a.iter().for_each(|&i| used[i] += 1);
                } else {
                    s.h[e] = false;
                }
            }
        }
        for i in 0..p.a.len() {
            if used[i] > 0 {
                s.c_a[i] = false;
            } else if p.a[i].weight.is_some() {
                s.c_a[i] = true;
            }
        }
        let mut covered = vec![false; p.b.len()];
        for (e, edge) in p.edges.iter().enumerate() {
            if s.h[e] {
                edge.b.iter().for_each(|&j| covered[j] = true);
            }
        }
        for j in 0..p.b.len() {
            if covered[j] {
                s.c_b[j] = false;
            }
        }
        let mut g = balance(p, &s);
        if g < -self.tol {
            let mut paid: Vec<usize> = (0..p.b.len()).filter(|&j| s.c_b[j]).collect();
            paid.sort_by(|&x, &y| weight(p.b[y].weight).total_cmp(&weight(p.b[x].weight)).then(x.cmp(&y)));
            for j in paid {
                if g >= -self.tol {
                    break;
                }
                s.c_b[j] = false;
                g += weight(p.b[j].weight);
            }
        } else {
            let mut unpaid: Vec<usize> = (0..p.b.len())
                .filter(|&j| !covered[j] && !s.c_b[j] && p.b[j].weight.is_some())
                .collect();
            unpaid.sort_by(|&x, &y| weight(p.b[x].weight).total_cmp(&weight(p.b[y].weight)).then(x.cmp(&y)));
            for j in unpaid {
                let w = weight(p.b[j].weight);
                if g - w >= -self.tol {
                    s.c_b[j] = true;
                    g -= w;
                }
            }
        }
        for j in 0..p.b.len() {
            s.b[j] = covered[j] || s.c_b[j];
        }
        // Footprints of A-instances that are not needed are released so the
        // reported matching stays small.
        self.offer(s);
    }

    fn offer(&mut self, mut s: Solution) {
        let p = self.p;
        let need: f64 = p.b.iter().zip(&s.c_b).filter(|(_, &on)| on).map(|(x, _)| weight(x.weight)).sum();
        let mut have: f64 = p.a.iter().zip(&s.c_a).filter(|(_, &on)| on).map(|(x, _)| weight(x.weight)).sum();
        let mut order: Vec<usize> = (0..p.a.len()).filter(|&i| s.c_a[i]).collect();
        order.sort_by(|&x, &y| weight(p.a[y].weight).total_cmp(&weight(p.a[x].weight)).then(x.cmp(&y)));
        for i in order {
            let w = weight(p.a[i].weight);
            if have - w >= need {
                s.c_a[i] = false;
                have -= w;
            }
        }
        if !s.is_feasible(p) {
            return;
        }
        let obj = s.objective();
        if obj > self.best {
            self.best = obj;
            self.incumbent = s;
        }
    }

    fn evaluate(&mut self, node: &Node) -> Eval {
        let p = self.p;
        let Some(consumed) = self.consumed(node) else {
            return Eval::Infeasible;
        };
        for i in 0..p.a.len() {
            if consumed[i] && node.ca[i] == Fix::One {
                return Eval::Infeasible;
            }
        }
        let open_hyper = self.available_hyper(node, &consumed);

        let mut max_g = 0.0;
        let mut min_pos_w = f64::INFINITY;
        for i in 0..p.a.len() {
            let w = weight(p.a[i].weight);
            match node.ca[i] {
                Fix::One => max_g += w,
                Fix::Free if !consumed[i] => {
                    max_g += w;
                    if w > 0.0 {
                        min_pos_w = min_pos_w.min(w);
                    }
                }
                _ => {}
            }
        }
        for j in 0..p.b.len() {
            let w = weight(p.b[j].weight);
            match node.cb[j] {
                Fix::One => max_g -= w,
                Fix::Free if w > 0.0 => min_pos_w = min_pos_w.min(w),
                _ => {}
            }
        }
        if max_g < -self.tol {
            return Eval::Infeasible;
        }

        let start = self.relax(node, &consumed, &open_hyper, 0.0);
        let mut best_value = start.value;
        if start.g >= -self.tol {
            self.repair(&start.x);
            return Eval::Bounded {
                ub: bound(best_value),
                lo: None,
                hi: None,
            };
        }
        self.repair(&start.x);

        let mut lo = start;
        let mut hi = self.relax(node, &consumed, &open_hyper, 2.0 / min_pos_w);
        best_value = best_value.min(hi.value);
        self.repair(&hi.x);
        if hi.g < -self.tol {
            // Cannot happen for a consistent node: at this λ every free
            // footprint on A is spent and none on B.
            return Eval::Infeasible;
        }
        for _ in 0..LINE_SEARCH_STEPS {
            if bound(best_value) <= self.best {
                break;
            }
            let (o_lo, o_hi) = (lo.value - lo.lambda * lo.g, hi.value - hi.lambda * hi.g);
            let denom = lo.g - hi.g;
            if denom >= 0.0 {
                break;
            }
            let lambda = ((o_hi - o_lo) / denom).clamp(lo.lambda, hi.lambda);
            let mid = self.relax(node, &consumed, &open_hyper, lambda);
            best_value = best_value.min(mid.value);
            self.repair(&mid.x);
            let model = o_lo + lo.g * lambda;
            if mid.value <= model + 1e-9 * (1.0 + model.abs()) || mid.g.abs() <= self.tol {
                break;
            }
            if mid.g >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Eval::Bounded {
            ub: bound(best_value),
            lo: Some(lo.x),
            hi: Some(hi.x),
        }
    }

    fn branch_var(&self, node: &Node, lo: Option<&Solution>, hi: Option<&Solution>) -> Option<Var> {
        let p = self.p;
        if let Some(consumed) = self.consumed(node) {
            if let Some(&k) = self.available_hyper(node, &consumed).first() {
                return Some(Var::Hyper(k));
            }
        }
        let free: Vec<(f64, Var)> = (0..p.a.len())
            .filter(|&i| node.ca[i] == Fix::Free)
            .map(|i| (weight(p.a[i].weight), Var::Ca(i)))
            .chain(
                (0..p.b.len())
                    .filter(|&j| node.cb[j] == Fix::Free)
                    .map(|j| (weight(p.b[j].weight), Var::Cb(j))),
            )
            .collect();
        let pick = |cands: Vec<&(f64, Var)>| -> Option<Var> {
            cands
                .into_iter()
                .max_by(|x, y| x.0.total_cmp(&y.0).then_with(|| var_order(y.1).cmp(&var_order(x.1))))
                .map(|x| x.1)
        };
        if let (Some(lo), Some(hi)) = (lo, hi) {
            let differing: Vec<&(f64, Var)> = free
                .iter()
                .filter(|(_, v)| match *v {
                    Var::Ca(i) => lo.c_a[i] != hi.c_a[i],
                    Var::Cb(j) => lo.c_b[j] != hi.c_b[j],
                    Var::Hyper(_) => false,
                })
                .collect();
            if let Some(v) = pick(differing) {
                return Some(v);
            }
        }
        pick(free.iter().collect())
    }

    fn child(&self, node: &Node, var: Var, value: Fix, ub: u32) -> Node {
        let mut c = node.clone();
        c.ub = ub;
        match var {
            Var::Ca(i) => c.ca[i] = value,
            Var::Cb(j) => c.cb[j] = value,
            Var::Hyper(k) => {
                c.hy[k] = value;
                if value == Fix::One {
                    for &i in &self.p.edges[self.hyper[k]].a {
                        if c.ca[i] == Fix::Free {
                            c.ca[i] = Fix::Zero;
                        }
                    }
                }
            }
        }
        c
    }
}

fn var_order(v: Var) -> (u8, usize) {
    match v {
        Var::Ca(i) => (0, i),
        Var::Cb(j) => (1, j),
        Var::Hyper(k) => (2, k),
    }
}

fn bound(value: f64) -> u32 {
    (value + BOUND_SLACK).floor().max(0.0) as u32
}

pub(crate) fn branch_and_bound(p: &ComparisonProblem, warm: Option<&Solution>, deadline: Instant) -> Outcome {
    let zeros = Solution::zeros(p);
    let start = match warm {
        Some(s) if s.is_feasible(p) => s.clone(),
        _ => zeros,
    };
    let mut ctx = Ctx {
        p,
        pairwise: (0..p.edges.len()).filter(|&e| p.edges[e].is_pairwise()).collect(),
        hyper: (0..p.edges.len()).filter(|&e| !p.edges[e].is_pairwise()).collect(),
        tol: balance_tolerance(p),
        best: start.objective(),
        incumbent: start,
    };
    let trivial_ub = p.b.len() as u32;
    let mut root = ctx.root();
    root.ub = trivial_ub;

    let mut heap: BinaryHeap<(u32, u64, Reverse<u64>)> = BinaryHeap::new();
    let mut store: Vec<Option<Node>> = Vec::new();
    let push = |heap: &mut BinaryHeap<_>, store: &mut Vec<Option<Node>>, node: Node, depth: u64| {
        heap.push((node.ub, depth, Reverse(store.len() as u64)));
        store.push(Some(node));
    };
    push(&mut heap, &mut store, root, 0);

    let mut nodes = 0u64;
    let mut timed_out = false;
    while let Some(&(ub, depth, Reverse(id))) = heap.peek() {
        if ub <= ctx.best {
            break;
        }
        if Instant::now() >= deadline {
            timed_out = true;
            break;
        }
        heap.pop();
        let node = store[id as usize].take().expect("node visited once");
        nodes += 1;
        let (node_ub, lo, hi) = match ctx.evaluate(&node) {
            Eval::Infeasible => continue,
            Eval::Bounded { ub, lo, hi } => (ub.min(node.ub), lo, hi),
        };
        if node_ub <= ctx.best {
            continue;
        }
        let Some(var) = ctx.branch_var(&node, lo.as_ref(), hi.as_ref()) else {
            // Everything is fixed; the relaxation was exact and repair has
            // already offered its solution.
            continue;
        };
        for value in [Fix::Zero, Fix::One] {
            let child = ctx.child(&node, var, value, node_ub);
            push(&mut heap, &mut store, child, depth + 1);
        }
    }

    let open_ub = heap.peek().map(|&(ub, _, _)| ub).unwrap_or(0);
    Outcome {
        nodes,
        optimal: !timed_out,
        upper_bound: if timed_out { open_ub.max(ctx.best) } else { ctx.best },
        solution: ctx.incumbent,
    }
}

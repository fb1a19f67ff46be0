#![allow(dead_code)]

use delta_lca_core::heuristics::{Claim, HeuristicEdge, HeuristicKind};
use delta_lca_core::inventory::InstanceId;
use delta_lca_core::solver::{build_problem, ComparisonProblem, ProblemInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn instance(side: &str, i: usize, weight: Option<f64>) -> ProblemInstance {
    ProblemInstance {
        id: InstanceId(format!("{side}{i}")),
        weight,
    }
}

pub fn edge(id: String, a: &[usize], b: &[usize]) -> HeuristicEdge {
    HeuristicEdge {
        edge_id: id,
        kind: if a.len() == 1 && b.len() == 1 {
            HeuristicKind::DieSize
        } else {
            HeuristicKind::UserRule
        },
        a_instances: a.iter().map(|i| InstanceId(format!("a{i}"))).collect(),
        b_instances: b.iter().map(|j| InstanceId(format!("b{j}"))).collect(),
        claim: Claim::AOverB,
        rationale: String::new(),
    }
}

fn weight(rng: &mut ChaCha8Rng) -> Option<f64> {
    match rng.random_range(0..10) {
        0..=2 => None,
        3..=5 => Some(f64::from(rng.random_range(1..6u32))),
        _ => Some(rng.random_range(0.01..5.0)),
    }
}

/// Random problem with at most `max_vars` variables, including some
/// many-to-many edges.
pub fn random_problem(rng: &mut ChaCha8Rng, max_vars: usize) -> ComparisonProblem {
    loop {
        let na = rng.random_range(1..=6);
        let nb = rng.random_range(1..=5);
        let base = na + 2 * nb;
        if base >= max_vars {
            continue;
        }
        let ne = rng.random_range(0..=(max_vars - base).min(8));
        let a = (0..na).map(|i| instance("a", i, weight(rng))).collect();
        let b = (0..nb).map(|j| instance("b", j, weight(rng))).collect();
        let mut edges = Vec::new();
        for k in 0..ne {
            let (ka, kb) = if rng.random_bool(0.2) {
                (rng.random_range(1..=2.min(na)), rng.random_range(1..=2.min(nb)))
            } else {
                (1, 1)
            };
            let mut av: Vec<usize> = Vec::new();
            while av.len() < ka {
                let i = rng.random_range(0..na);
                if !av.contains(&i) {
                    av.push(i);
                }
            }
            let mut bv: Vec<usize> = Vec::new();
            while bv.len() < kb {
                let j = rng.random_range(0..nb);
                if !bv.contains(&j) {
                    bv.push(j);
                }
            }
            edges.push(edge(format!("e{k}"), &av, &bv));
        }
        return build_problem(a, b, &edges).expect("generated problem is valid");
    }
}

/// Larger problem shaped like a board comparison: many instances, sparse
/// pairwise edges, most instances weighted.
pub fn large_problem(rng: &mut ChaCha8Rng, na: usize, nb: usize, ne: usize) -> ComparisonProblem {
    let w = |rng: &mut ChaCha8Rng| -> Option<f64> {
        if rng.random_bool(0.1) {
            None
        } else {
            Some(rng.random_range(0.05..30.0))
        }
    };
    let a = (0..na).map(|i| instance("a", i, w(rng))).collect();
    let b = (0..nb).map(|j| instance("b", j, w(rng))).collect();
    let mut seen = std::collections::BTreeSet::new();
    let mut edges = Vec::new();
    while edges.len() < ne {
        let (i, j) = (rng.random_range(0..na), rng.random_range(0..nb));
        if seen.insert((i, j)) {
            edges.push(edge(format!("e{i}_{j}"), &[i], &[j]));
        }
    }
    build_problem(a, b, &edges).expect("generated problem is valid")
}

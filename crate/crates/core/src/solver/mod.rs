//! The subsumption integer program.
//!
//! Each B-instance `j` gets a binary `b_j` (counted in the objective), each
//! instance a footprint-use binary `c` and each edge a selection binary `h`:
//!
//! ```text
//! max  Σ b_j
//! s.t. b_j ≤ Σ_{h ∋ j} h + c_bj               for every B-instance
//!      Σ_{h ∋ i} h ≤ 1 − c_ai                 for every A-instance
//!      Σ w_ai·c_ai ≥ Σ w_bj·c_bj
//! ```
//!
//! `c` is fixed to 0 for instances without a known footprint. Many-to-many
//! edges appear in the first constraint of every B-instance they cover and
//! in the second constraint of every A-instance they use.

mod bnb;
mod brute;
mod check;
mod matching;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use brute::{brute_force_optimum, BruteForceError, MAX_BRUTE_FORCE_VARIABLES};
pub use check::check_assignment;
pub use matching::{max_weight_matching, Matching};

use crate::heuristics::{Claim, HeuristicEdge, HeuristicKind};
use crate::inventory::InstanceId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub id: InstanceId,
    /// g CO2-eq, when the footprint is known
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemEdge {
    pub id: String,
    pub kind: HeuristicKind,
    /// Indices into `ComparisonProblem::a`, sorted and unique.
    pub a: Vec<usize>,
    /// Indices into `ComparisonProblem::b`, sorted and unique.
    pub b: Vec<usize>,
}

impl ProblemEdge {
    pub fn is_pairwise(&self) -> bool {
        self.a.len() == 1 && self.b.len() == 1
    }
}

/// Integer program proving that design A subsumes design B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonProblem {
    pub a: Vec<ProblemInstance>,
    pub b: Vec<ProblemInstance>,
    pub edges: Vec<ProblemEdge>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("edge {edge} references unknown instance {instance}")]
    UnknownInstance { edge: String, instance: InstanceId },
    #[error("edge {0} has an empty side")]
    EmptyEdge(String),
    #[error("instance {0} has a negative or non-finite weight")]
    BadWeight(InstanceId),
    #[error("duplicate instance {0}")]
    DuplicateInstance(InstanceId),
    #[error("duplicate edge id {0}")]
    DuplicateEdge(String),
}

impl ComparisonProblem {
    /// One `b` per B-instance, one `c` per instance on either side and one
    /// `h` per edge.
    pub fn variable_count(&self) -> usize {
        2 * self.b.len() + self.a.len() + self.edges.len()
    }

    /// One covering constraint per B-instance, one usage constraint per
    /// A-instance and the footprint balance.
    pub fn constraint_count(&self) -> usize {
        self.b.len() + self.a.len() + 1
    }

    pub fn validate(&self) -> Result<(), BuildError> {
        let mut ids = BTreeSet::new();
        for inst in self.a.iter().chain(&self.b) {
            if !ids.insert(&inst.id) {
                return Err(BuildError::DuplicateInstance(inst.id.clone()));
            }
            if let Some(w) = inst.weight {
                if !(w.is_finite() && w >= 0.0) {
                    return Err(BuildError::BadWeight(inst.id.clone()));
                }
            }
        }
        let mut edge_ids = BTreeSet::new();
        for e in &self.edges {
            if !edge_ids.insert(&e.id) {
                return Err(BuildError::DuplicateEdge(e.id.clone()));
            }
            if e.a.is_empty() || e.b.is_empty() {
                return Err(BuildError::EmptyEdge(e.id.clone()));
            }
            let bad = |side: &[ProblemInstance], idx: &[usize]| idx.iter().any(|&i| i >= side.len());
            if bad(&self.a, &e.a) || bad(&self.b, &e.b) {
                return Err(BuildError::UnknownInstance {
                    edge: e.id.clone(),
                    instance: InstanceId(format!("#{}", e.a.iter().chain(&e.b).max().unwrap())),
                });
            }
        }
        Ok(())
    }

    /// Adds an A ≥ B edge; the previous optimum stays feasible with the new
    /// `h = 0`.
    pub fn push_edge(&mut self, edge: &HeuristicEdge) -> Result<usize, BuildError> {
        let e = resolve_edge(edge, &index_of(&self.a), &index_of(&self.b))?;
        if self.edges.iter().any(|x| x.id == e.id) {
            return Err(BuildError::DuplicateEdge(e.id));
        }
        self.edges.push(e);
        Ok(self.edges.len() - 1)
    }
}

fn index_of(side: &[ProblemInstance]) -> BTreeMap<&InstanceId, usize> {
    side.iter().enumerate().map(|(i, x)| (&x.id, i)).collect()
}

fn resolve_edge(
    e: &HeuristicEdge,
    a_index: &BTreeMap<&InstanceId, usize>,
    b_index: &BTreeMap<&InstanceId, usize>,
) -> Result<ProblemEdge, BuildError> {
    let resolve = |ids: &[InstanceId], index: &BTreeMap<&InstanceId, usize>| -> Result<Vec<usize>, BuildError> {
        let set: BTreeSet<usize> = ids
            .iter()
            .map(|id| {
                index.get(id).copied().ok_or_else(|| BuildError::UnknownInstance {
                    edge: e.edge_id.clone(),
                    instance: id.clone(),
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(set.into_iter().collect())
    };
    let a = resolve(&e.a_instances, a_index)?;
    let b = resolve(&e.b_instances, b_index)?;
    if a.is_empty() || b.is_empty() {
        return Err(BuildError::EmptyEdge(e.edge_id.clone()));
    }
    Ok(ProblemEdge {
        id: e.edge_id.clone(),
        kind: e.kind,
        a,
        b,
    })
}

/// Builds the program. Only edges claiming A ≥ B take part; the others
/// exist for conflict detection.
pub fn build_problem(
    a: Vec<ProblemInstance>,
    b: Vec<ProblemInstance>,
    edges: &[HeuristicEdge],
) -> Result<ComparisonProblem, BuildError> {
    let mut p = ComparisonProblem {
        a,
        b,
        edges: Vec::new(),
    };
    p.validate()?;
    {
        let a_index = index_of(&p.a);
        let b_index = index_of(&p.b);
        let mut seen = BTreeSet::new();
        for e in edges.iter().filter(|e| e.claim == Claim::AOverB) {
            if !seen.insert(e.edge_id.clone()) {
                return Err(BuildError::DuplicateEdge(e.edge_id.clone()));
            }
            let resolved = resolve_edge(e, &a_index, &b_index)?;
            p.edges.push(resolved);
        }
    }
    Ok(p)
}

/// Dense 0/1 assignment in problem order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Solution {
    pub b: Vec<bool>,
    pub c_a: Vec<bool>,
    pub c_b: Vec<bool>,
    pub h: Vec<bool>,
}

impl Solution {
    pub fn zeros(p: &ComparisonProblem) -> Solution {
        Solution {
            b: vec![false; p.b.len()],
            c_a: vec![false; p.a.len()],
            c_b: vec![false; p.b.len()],
            h: vec![false; p.edges.len()],
        }
    }

    pub fn objective(&self) -> u32 {
        self.b.iter().filter(|&&x| x).count() as u32
    }

    /// Re-reads a map-form assignment against `p`; entries missing from the
    /// map (e.g. edges added since) are 0.
    pub fn from_assignment(p: &ComparisonProblem, asg: &Assignment) -> Solution {
        let get = |m: &BTreeMap<InstanceId, u8>, id: &InstanceId| m.get(id).is_some_and(|&v| v == 1);
        Solution {
            b: p.b.iter().map(|x| get(&asg.b, &x.id)).collect(),
            c_a: p.a.iter().map(|x| get(&asg.c_a, &x.id)).collect(),
            c_b: p.b.iter().map(|x| get(&asg.c_b, &x.id)).collect(),
            h: p.edges.iter().map(|e| asg.h.get(&e.id).is_some_and(|&v| v == 1)).collect(),
        }
    }

    pub fn to_assignment(&self, p: &ComparisonProblem) -> Assignment {
        let bit = |x: bool| u8::from(x);
        Assignment {
            b: p.b.iter().zip(&self.b).map(|(i, &x)| (i.id.clone(), bit(x))).collect(),
            c_a: p.a.iter().zip(&self.c_a).map(|(i, &x)| (i.id.clone(), bit(x))).collect(),
            c_b: p.b.iter().zip(&self.c_b).map(|(i, &x)| (i.id.clone(), bit(x))).collect(),
            h: p.edges.iter().zip(&self.h).map(|(e, &x)| (e.id.clone(), bit(x))).collect(),
            objective: self.objective(),
        }
    }

    /// Exact feasibility test in dense form (the solver's own check).
    pub fn is_feasible(&self, p: &ComparisonProblem) -> bool {
        let mut covered = vec![false; p.b.len()];
        let mut used = vec![0u32; p.a.len()];
        for (e, &on) in p.edges.iter().zip(&self.h) {
            if on {
                e.b.iter().for_each(|&j| covered[j] = true);
                e.a.iter().for_each(|&i| used[i] += 1);
            }
        }
        let c_ok = |inst: &[ProblemInstance], c: &[bool]| inst.iter().zip(c).all(|(x, &on)| !on || x.weight.is_some());
        if !c_ok(&p.a, &self.c_a) || !c_ok(&p.b, &self.c_b) {
            return false;
        }
        let c1 = (0..p.b.len()).all(|j| !self.b[j] || covered[j] || self.c_b[j]);
        let c2 = (0..p.a.len()).all(|i| used[i] + u32::from(self.c_a[i]) <= 1);
        c1 && c2 && balance(p, self) >= -balance_tolerance(p)
    }
}

/// Σ w_a·c_a − Σ w_b·c_b
pub(crate) fn balance(p: &ComparisonProblem, s: &Solution) -> f64 {
    let side = |inst: &[ProblemInstance], c: &[bool]| -> f64 {
        inst.iter().zip(c).filter(|(_, &on)| on).map(|(x, _)| x.weight.unwrap_or(0.0)).sum()
    };
    side(&p.a, &s.c_a) - side(&p.b, &s.c_b)
}

/// Absolute slack allowed on the footprint balance to absorb summation
/// rounding.
pub(crate) fn balance_tolerance(p: &ComparisonProblem) -> f64 {
    let total: f64 = p.a.iter().chain(&p.b).filter_map(|x| x.weight).sum();
    1e-9 * (1.0 + total)
}

/// Map-form assignment keyed by instance and edge ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub b: BTreeMap<InstanceId, u8>,
    pub c_a: BTreeMap<InstanceId, u8>,
    pub c_b: BTreeMap<InstanceId, u8>,
    pub h: BTreeMap<String, u8>,
    pub objective: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Every B-instance is matched: EI(A) ≥ EI(B).
    Proven,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes_explored: u64,
    /// False when the time budget ran out before optimality was proven.
    pub optimal: bool,
    /// Best bound on the objective at termination.
    pub upper_bound: u32,
    /// Wall-clock time; not serialized so that identical inputs give
    /// identical documents.
    #[serde(skip)]
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub assignment: Assignment,
    pub a_delta: Vec<InstanceId>,
    pub b_delta: Vec<InstanceId>,
    pub unmatched_a: Vec<InstanceId>,
    pub unmatched_b: Vec<InstanceId>,
    pub verdict: Verdict,
    pub stats: SolveStats,
}

impl MatchResult {
    fn from_solution(p: &ComparisonProblem, s: &Solution, stats: SolveStats) -> MatchResult {
        let mut used_a = s.c_a.clone();
        for (e, &on) in p.edges.iter().zip(&s.h) {
            if on {
                e.a.iter().for_each(|&i| used_a[i] = true);
            }
        }
        let split = |inst: &[ProblemInstance], flags: &[bool]| -> (Vec<InstanceId>, Vec<InstanceId>) {
            let (yes, no): (Vec<_>, Vec<_>) = inst.iter().zip(flags).partition(|(_, &f)| f);
            (
                yes.into_iter().map(|(x, _)| x.id.clone()).collect(),
                no.into_iter().map(|(x, _)| x.id.clone()).collect(),
            )
        };
        let (a_delta, unmatched_a) = split(&p.a, &used_a);
        let (b_delta, unmatched_b) = split(&p.b, &s.b);
        MatchResult {
            assignment: s.to_assignment(p),
            verdict: if unmatched_b.is_empty() {
                Verdict::Proven
            } else {
                Verdict::Inconclusive
            },
            a_delta,
            b_delta,
            unmatched_a,
            unmatched_b,
            stats,
        }
    }

    pub fn objective(&self) -> u32 {
        self.assignment.objective
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub time_budget: Duration,
    /// Feasible starting incumbent, e.g. the optimum before a rule was added.
    pub warm_start: Option<Solution>,
}

impl SolveOptions {
    pub fn with_budget_ms(ms: u64) -> Self {
        SolveOptions {
            time_budget: Duration::from_millis(ms),
            warm_start: None,
        }
    }
}

/// Exact optimum within the budget; on timeout the best incumbent is
/// returned with `stats.optimal == false`.
pub fn solve(p: &ComparisonProblem, time_budget_ms: u64) -> MatchResult {
    solve_with(p, &SolveOptions::with_budget_ms(time_budget_ms))
}

pub fn solve_with(p: &ComparisonProblem, opts: &SolveOptions) -> MatchResult {
    let start = Instant::now();
    let mut out = bnb::branch_and_bound(p, opts.warm_start.as_ref(), start + opts.time_budget);
    spend_free_weight(p, &mut out.solution);
    prefer_edges(p, &mut out.solution);
    debug_assert!(out.solution.is_feasible(p));
    let stats = SolveStats {
        nodes_explored: out.nodes,
        optimal: out.optimal,
        upper_bound: out.upper_bound,
        wall_time_ms: start.elapsed().as_secs_f64() * 1000.0,
    };
    MatchResult::from_solution(p, &out.solution, stats)
}

/// Puts every weighted A-instance that no selected edge uses on the balance.
/// This only grows the left side of the balance, so feasibility and the
/// objective are unchanged, and the reported solution no longer depends on
/// which surplus the search happened to keep.
fn spend_free_weight(p: &ComparisonProblem, s: &mut Solution) {
    let mut used = vec![false; p.a.len()];
    for (e, _) in p.edges.iter().zip(&s.h).filter(|(_, &on)| on) {
        e.a.iter().for_each(|&i| used[i] = true);
    }
    for (i, inst) in p.a.iter().enumerate() {
        if inst.weight.is_some() && !used[i] {
            s.c_a[i] = true;
        }
    }
}

/// Where a B-instance is only paid for through the balance, switches it to
/// an unused pairwise edge whenever the balance still holds afterwards.
/// Same objective, but the result names the evidence instead of leaning on
/// aggregate weight. Greedy in index order, so deterministic.
fn prefer_edges(p: &ComparisonProblem, s: &mut Solution) {
    let tol = balance_tolerance(p);
    let mut used = vec![false; p.a.len()];
    let mut covered = vec![false; p.b.len()];
    for (e, _) in p.edges.iter().zip(&s.h).filter(|(_, &on)| on) {
        e.a.iter().for_each(|&i| used[i] = true);
        e.b.iter().for_each(|&j| covered[j] = true);
    }
    let mut slack = balance(p, s);
    for j in 0..p.b.len() {
        if !(s.b[j] && s.c_b[j]) || covered[j] {
            continue;
        }
        let wb = p.b[j].weight.unwrap_or(0.0);
        for (k, e) in p.edges.iter().enumerate() {
            if !e.is_pairwise() || e.b[0] != j || used[e.a[0]] {
                continue;
            }
            let i = e.a[0];
            let wa = if s.c_a[i] { p.a[i].weight.unwrap_or(0.0) } else { 0.0 };
            if slack - wa + wb >= -tol {
                slack += wb - wa;
                s.h[k] = true;
                s.c_b[j] = false;
                s.c_a[i] = false;
                used[i] = true;
                covered[j] = true;
                break;
            }
        }
    }
}

/// Adds a rule edge, re-solves from the previous assignment and returns the
/// extended problem with its new result. The objective never decreases.
pub fn apply_rule_and_resolve(
    p: &ComparisonProblem,
    previous: &MatchResult,
    rule: &HeuristicEdge,
    time_budget_ms: u64,
) -> Result<(ComparisonProblem, MatchResult), BuildError> {
    let mut next = p.clone();
    next.push_edge(rule)?;
    let mut warm = Solution::from_assignment(&next, &previous.assignment);
    if !warm.is_feasible(&next) {
        warm = Solution::zeros(&next);
    }
    let opts = SolveOptions {
        time_budget: Duration::from_millis(time_budget_ms),
        warm_start: Some(warm),
    };
    let result = solve_with(&next, &opts);
    Ok((next, result))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn inst(side: &str, i: usize, w: Option<f64>) -> ProblemInstance {
        ProblemInstance {
            id: InstanceId(format!("{side}{i}")),
            weight: w,
        }
    }

    fn edge(a: usize, b: usize) -> HeuristicEdge {
        HeuristicEdge {
            edge_id: format!("h{a}{b}"),
            kind: HeuristicKind::DieSize,
            a_instances: vec![InstanceId(format!("a{a}"))],
            b_instances: vec![InstanceId(format!("b{b}"))],
            claim: Claim::AOverB,
            rationale: String::new(),
        }
    }

    /// Five A-parts, four B-parts, weights on a3..a5 and b3, b4, edges
    /// h22, h23, h34, h44.
    pub(crate) fn toy() -> ComparisonProblem {
        let a = (1..=5).map(|i| inst("a", i, (i >= 3).then_some(10.0))).collect();
        let b = (1..=4).map(|i| inst("b", i, (i >= 3).then_some(10.0))).collect();
        build_problem(a, b, &[edge(2, 2), edge(2, 3), edge(3, 4), edge(4, 4)]).unwrap()
    }

    #[test]
    fn toy_dimensions() {
        let p = toy();
        assert_eq!(p.variable_count(), 17);
        assert_eq!(p.constraint_count(), 10);
    }

    #[test]
    fn toy_optimum() {
        let p = toy();
        let r = solve(&p, 1000);
        assert_eq!(r.objective(), 3);
        assert!(r.stats.optimal);
        assert_eq!(r.assignment.b[&InstanceId("b1".into())], 0);
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(r.unmatched_b, vec![InstanceId("b1".into())]);
        check_assignment(&p, &r.assignment).unwrap();
    }

    #[test]
    fn empty_and_unweighted_problems() {
        let p = build_problem(vec![], vec![], &[]).unwrap();
        assert_eq!(solve(&p, 100).objective(), 0);
        assert_eq!(solve(&p, 100).verdict, Verdict::Proven);
        let p = build_problem(vec![inst("a", 1, None)], vec![inst("b", 1, None)], &[]).unwrap();
        assert_eq!(solve(&p, 100).objective(), 0);
        let p = build_problem(vec![inst("a", 1, None)], vec![inst("b", 1, None)], &[edge(1, 1)]).unwrap();
        assert_eq!(p.edges.len(), 1);
        let r = solve(&p, 100);
        assert_eq!(r.objective(), 1);
        assert_eq!(r.verdict, Verdict::Proven);
    }

    #[test]
    fn unknown_instance_is_a_build_error() {
        let err = build_problem(vec![inst("a", 1, None)], vec![inst("b", 1, None)], &[edge(1, 2)]).unwrap_err();
        assert!(matches!(err, BuildError::UnknownInstance { .. }));
    }

    #[test]
    fn b_over_a_edges_are_ignored() {
        let mut e = edge(1, 1);
        e.claim = Claim::BOverA;
        let p = build_problem(vec![inst("a", 1, None)], vec![inst("b", 1, None)], &[e]).unwrap();
        assert!(p.edges.is_empty());
    }

    #[test]
    fn rule_flips_verdict() {
        let p = toy();
        let r = solve(&p, 1000);
        let rule = HeuristicEdge {
            edge_id: "rule:1".into(),
            kind: HeuristicKind::UserRule,
            a_instances: vec![InstanceId("a1".into())],
            b_instances: vec![InstanceId("b1".into())],
            claim: Claim::AOverB,
            rationale: "user".into(),
        };
        let (p2, r2) = apply_rule_and_resolve(&p, &r, &rule, 1000).unwrap();
        assert_eq!(r2.objective(), 4);
        assert_eq!(r2.verdict, Verdict::Proven);
        check_assignment(&p2, &r2.assignment).unwrap();
        // Same rule again is rejected as a duplicate; a redundant one changes nothing.
        assert!(apply_rule_and_resolve(&p2, &r2, &rule, 1000).is_err());
        let mut redundant = rule.clone();
        redundant.edge_id = "rule:2".into();
        let (_, r3) = apply_rule_and_resolve(&p2, &r2, &redundant, 1000).unwrap();
        assert_eq!(r3.objective(), 4);
    }

    #[test]
    fn missing_rule_instance_is_rejected() {
        let p = toy();
        let r = solve(&p, 1000);
        let mut rule = edge(1, 9);
        rule.kind = HeuristicKind::UserRule;
        assert!(matches!(
            apply_rule_and_resolve(&p, &r, &rule, 1000),
            Err(BuildError::UnknownInstance { .. })
        ));
    }
}

//! Human- and machine-readable summary of a comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::footprint::{total_footprint, FootprintTotal};
use crate::heuristics::CancellationReport;
use crate::inventory::{Category, DesignInventory, InstanceId, Part, PartId};
use crate::pipeline::{Comparison, Direction};
use crate::rules::{RuleCancellation, UserRule};
use crate::solver::{SolveStats, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub instance_id: InstanceId,
    pub part_id: PartId,
    pub name: String,
    pub category: Category,
    /// g CO2-eq, when known
    pub footprint: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideTable {
    pub design_id: String,
    /// Unmatched instances come first.
    pub unmatched: Vec<InstanceRow>,
    pub matched: Vec<InstanceRow>,
    pub partial_total: FootprintTotal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub verdict: Verdict,
    pub direction: Direction,
    /// Readable form of the proven (or attempted) inequality.
    pub claim: String,
    /// Tables in problem roles: `a` is the side shown to be at least as large.
    pub a: SideTable,
    pub b: SideTable,
    pub cancellation: CancellationReport,
    pub rule_cancellations: Vec<RuleCancellation>,
    pub rules_applied: Vec<String>,
    pub skipped_rules: Vec<String>,
    pub solver: SolveStats,
    pub warnings: Vec<String>,
}

fn rows(ids: &[InstanceId], inv: &DesignInventory, owner: &BTreeMap<&InstanceId, &PartId>) -> Vec<InstanceRow> {
    let parts: BTreeMap<&PartId, &Part> = inv.parts.iter().map(|p| (&p.part_id, p)).collect();
    ids.iter()
        .filter_map(|id| {
            let part = parts.get(owner.get(id)?)?;
            Some(InstanceRow {
                instance_id: id.clone(),
                part_id: part.part_id.clone(),
                name: part.name.clone(),
                category: part.category,
                footprint: part.known_footprint(),
            })
        })
        .collect()
}

/// Maps instance ids back to part ids by re-expanding the inventory.
fn owners(inv: &DesignInventory, side: crate::inventory::Side) -> BTreeMap<InstanceId, PartId> {
    inv.parts
        .iter()
        .flat_map(|p| {
            (0..p.quantity).map(move |k| {
                (
                    crate::inventory::instance_id(side, &inv.design_id, &p.part_id, k),
                    p.part_id.clone(),
                )
            })
        })
        .collect()
}

impl ComparisonReport {
    /// `a` and `b` are the inventories in the caller's order; the report
    /// swaps them when the comparison ran as B ≥ A.
    pub fn new(
        comparison: &Comparison,
        a: &DesignInventory,
        b: &DesignInventory,
        rules: &[UserRule],
        warnings: Vec<String>,
    ) -> ComparisonReport {
        let (first, second) = match comparison.direction {
            Direction::BGeA => (b, a),
            _ => (a, b),
        };
        let own_a = owners(first, crate::inventory::Side::A);
        let own_b = owners(second, crate::inventory::Side::B);
        let ref_a: BTreeMap<&InstanceId, &PartId> = own_a.iter().collect();
        let ref_b: BTreeMap<&InstanceId, &PartId> = own_b.iter().collect();
        let r = &comparison.result;
        let table = |inv: &DesignInventory, owner, unmatched: &[InstanceId], matched: &[InstanceId]| SideTable {
            design_id: inv.design_id.clone(),
            unmatched: rows(unmatched, inv, owner),
            matched: rows(matched, inv, owner),
            partial_total: total_footprint(inv),
        };
        let claim = match r.verdict {
            Verdict::Proven => format!("EI({}) >= EI({})", first.design_id, second.design_id),
            Verdict::Inconclusive => format!("EI({}) >= EI({}) not shown", first.design_id, second.design_id),
        };
        ComparisonReport {
            verdict: r.verdict,
            direction: comparison.direction,
            claim,
            a: table(first, &ref_a, &r.unmatched_a, &r.a_delta),
            b: table(second, &ref_b, &r.unmatched_b, &r.b_delta),
            cancellation: comparison.cancellation.clone(),
            rule_cancellations: comparison.rule_cancellations.clone(),
            rules_applied: rules
                .iter()
                .map(|x| x.rule_id.clone())
                .filter(|id| !comparison.skipped_rules.contains(id))
                .collect(),
            skipped_rules: comparison.skipped_rules.clone(),
            solver: r.stats.clone(),
            warnings,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text rendering for terminals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let verdict = match self.verdict {
            Verdict::Proven => "PROVEN",
            Verdict::Inconclusive => "INCONCLUSIVE",
        };
        let _ = writeln!(out, "{verdict}: {}", self.claim);
        let _ = writeln!(
            out,
            "cancelled as identical: {} pair(s), {} piece(s) per side",
            self.cancellation.cancelled.len(),
            self.cancellation.total()
        );
        for (label, side) in [("A", &self.a), ("B", &self.b)] {
            let t = &side.partial_total;
            let _ = writeln!(
                out,
                "{label} = {}: partial total {:.3} g CO2-eq over {}/{} parts; {} matched, {} unmatched",
                side.design_id,
                t.total,
                t.covered.len(),
                t.covered.len() + t.uncovered.len(),
                side.matched.len(),
                side.unmatched.len()
            );
            for row in &side.unmatched {
                let fp = row.footprint.map_or("unknown".to_string(), |g| format!("{g:.3} g"));
                let _ = writeln!(out, "  unmatched {} ({}, {fp})", row.instance_id, row.category);
            }
        }
        if !self.rules_applied.is_empty() {
            let _ = writeln!(out, "rules: {}", self.rules_applied.join(", "));
        }
        let _ = writeln!(
            out,
            "solver: {} node(s), optimal: {}, bound {}",
            self.solver.nodes_explored, self.solver.optimal, self.solver.upper_bound
        );
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

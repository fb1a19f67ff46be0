//! User comparison rules and their translation into solver input.
//!
//! A rule names parts and quantities on each side. Directional rules become
//! one many-to-many edge over concrete instances; `Equivalent` rules remove
//! the selected instances from both sides, like automatic cancellation does.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heuristics::{Claim, HeuristicEdge, HeuristicKind};
use crate::inventory::{DesignInventory, InstanceId, PartId, PartInstance, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    AGreaterOrEqual,
    BGreaterOrEqual,
    Equivalent,
}

impl Comparator {
    /// The same claim with the designs' roles exchanged.
    pub fn swapped(self) -> Comparator {
        match self {
            Comparator::AGreaterOrEqual => Comparator::BGreaterOrEqual,
            Comparator::BGreaterOrEqual => Comparator::AGreaterOrEqual,
            Comparator::Equivalent => Comparator::Equivalent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub part_id: PartId,
    pub quantity: u32,
}

impl Selection {
    pub fn new(part_id: impl Into<String>, quantity: u32) -> Self {
        Selection {
            part_id: PartId::new(part_id),
            quantity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRule {
    pub rule_id: String,
    pub a_selection: Vec<Selection>,
    pub b_selection: Vec<Selection>,
    pub comparator: Comparator,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl UserRule {
    /// The rule as seen when design B plays the A role.
    pub fn swapped(&self) -> UserRule {
        UserRule {
            rule_id: self.rule_id.clone(),
            a_selection: self.b_selection.clone(),
            b_selection: self.a_selection.clone(),
            comparator: self.comparator.swapped(),
            note: self.note.clone(),
        }
    }

    pub fn edge_id(&self) -> String {
        format!("{}:{}", HeuristicKind::UserRule.as_str(), self.rule_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("rule `{0}`: rule ids must be nonempty")]
    EmptyId(String),
    #[error("rule `{0}` is defined twice")]
    DuplicateId(String),
    #[error("rule `{rule}`: the {side} selection is empty")]
    EmptySelection { rule: String, side: Side },
    #[error("rule `{rule}`: part `{part}` is selected twice on side {side}")]
    RepeatedPart { rule: String, side: Side, part: PartId },
    #[error("rule `{rule}`: part `{part}` does not exist on side {side}")]
    UnknownPart { rule: String, side: Side, part: PartId },
    #[error("rule `{rule}`: quantity {quantity} of `{part}` is outside 1..={available}")]
    BadQuantity {
        rule: String,
        part: PartId,
        quantity: u32,
        available: u32,
    },
    #[error("rule `{rule}`: only {left} instance(s) of `{part}` remain on side {side}, {wanted} requested")]
    NotEnoughInstances {
        rule: String,
        side: Side,
        part: PartId,
        wanted: u32,
        left: usize,
    },
}

/// Checks a rule against the two inventories it refers to.
pub fn validate_rule(rule: &UserRule, inv_a: &DesignInventory, inv_b: &DesignInventory) -> Result<(), RuleError> {
    if rule.rule_id.trim().is_empty() {
        return Err(RuleError::EmptyId(rule.rule_id.clone()));
    }
    for (side, selection, inv) in [(Side::A, &rule.a_selection, inv_a), (Side::B, &rule.b_selection, inv_b)] {
        if selection.is_empty() {
            return Err(RuleError::EmptySelection {
                rule: rule.rule_id.clone(),
                side,
            });
        }
        let mut seen = BTreeSet::new();
        for s in selection {
            if !seen.insert(&s.part_id) {
                return Err(RuleError::RepeatedPart {
                    rule: rule.rule_id.clone(),
                    side,
                    part: s.part_id.clone(),
                });
            }
            let part = inv.part(&s.part_id).ok_or_else(|| RuleError::UnknownPart {
                rule: rule.rule_id.clone(),
                side,
                part: s.part_id.clone(),
            })?;
            if s.quantity == 0 || s.quantity > part.quantity {
                return Err(RuleError::BadQuantity {
                    rule: rule.rule_id.clone(),
                    part: s.part_id.clone(),
                    quantity: s.quantity,
                    available: part.quantity,
                });
            }
        }
    }
    Ok(())
}

pub fn validate_rules(rules: &[UserRule], inv_a: &DesignInventory, inv_b: &DesignInventory) -> Result<(), RuleError> {
    let mut ids = BTreeSet::new();
    for rule in rules {
        if !ids.insert(rule.rule_id.as_str()) {
            return Err(RuleError::DuplicateId(rule.rule_id.clone()));
        }
        validate_rule(rule, inv_a, inv_b)?;
    }
    Ok(())
}

/// Instances removed from both sides by an `Equivalent` rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCancellation {
    pub rule_id: String,
    pub a_instances: Vec<InstanceId>,
    pub b_instances: Vec<InstanceId>,
}

/// Rules translated against the instances left after automatic
/// cancellation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AppliedRules {
    pub a: Vec<PartInstance>,
    pub b: Vec<PartInstance>,
    pub edges: Vec<HeuristicEdge>,
    pub cancellations: Vec<RuleCancellation>,
    /// Rules that had nothing left to act on.
    pub skipped: Vec<String>,
}

/// Per-part queues of instances not yet claimed by a rule, lowest ordinal
/// first.
struct Pool {
    free: BTreeMap<PartId, Vec<InstanceId>>,
}

impl Pool {
    fn new(instances: &[PartInstance]) -> Pool {
        let mut free: BTreeMap<PartId, Vec<InstanceId>> = BTreeMap::new();
        for inst in instances {
            free.entry(inst.part_id.clone()).or_default().push(inst.instance_id.clone());
        }
        Pool { free }
    }

    fn available(&self, part: &PartId) -> usize {
        self.free.get(part).map_or(0, Vec::len)
    }

    fn take(&mut self, part: &PartId, n: usize) -> Vec<InstanceId> {
        let queue = self.free.entry(part.clone()).or_default();
        let n = n.min(queue.len());
        queue.drain(..n).collect()
    }
}

fn short(rule: &UserRule, side: Side, s: &Selection, left: usize) -> RuleError {
    RuleError::NotEnoughInstances {
        rule: rule.rule_id.clone(),
        side,
        part: s.part_id.clone(),
        wanted: s.quantity,
        left,
    }
}

/// Turns rules into cancellations and edges over the remaining instances.
///
/// Each rule takes its own instances, so two rules on the same part use
/// different pieces. The A side of a rule must be fully available: claiming
/// fewer A-pieces would overstate the rule. On the B side a rule may cover
/// fewer pieces than selected (the rest were already cancelled), which only
/// weakens it; a rule with no B-pieces left is skipped.
pub fn apply_rules(a: &[PartInstance], b: &[PartInstance], rules: &[UserRule]) -> Result<AppliedRules, RuleError> {
    let mut pool_a = Pool::new(a);
    let mut pool_b = Pool::new(b);
    let mut out = AppliedRules::default();
    let mut removed: BTreeSet<InstanceId> = BTreeSet::new();

    // Equivalences first: they shrink both sides before any edge is drawn.
    for rule in rules.iter().filter(|r| r.comparator == Comparator::Equivalent) {
        for (side, selection, pool) in [(Side::A, &rule.a_selection, &pool_a), (Side::B, &rule.b_selection, &pool_b)] {
            for s in selection {
                let left = pool.available(&s.part_id);
                if left < s.quantity as usize {
                    return Err(short(rule, side, s, left));
                }
            }
        }
        let take = |pool: &mut Pool, sel: &[Selection]| -> Vec<InstanceId> {
            sel.iter().flat_map(|s| pool.take(&s.part_id, s.quantity as usize)).collect()
        };
        let c = RuleCancellation {
            rule_id: rule.rule_id.clone(),
            a_instances: take(&mut pool_a, &rule.a_selection),
            b_instances: take(&mut pool_b, &rule.b_selection),
        };
        removed.extend(c.a_instances.iter().cloned());
        removed.extend(c.b_instances.iter().cloned());
        out.cancellations.push(c);
    }

    for rule in rules.iter().filter(|r| r.comparator == Comparator::AGreaterOrEqual) {
        for s in &rule.a_selection {
            let left = pool_a.available(&s.part_id);
            if left < s.quantity as usize {
                return Err(short(rule, Side::A, s, left));
            }
        }
        let b_instances: Vec<InstanceId> = rule
            .b_selection
            .iter()
            .flat_map(|s| pool_b.take(&s.part_id, s.quantity as usize))
            .collect();
        if b_instances.is_empty() {
            out.skipped.push(rule.rule_id.clone());
            continue;
        }
        let a_instances: Vec<InstanceId> = rule
            .a_selection
            .iter()
            .flat_map(|s| pool_a.take(&s.part_id, s.quantity as usize))
            .collect();
        out.edges.push(HeuristicEdge {
            edge_id: rule.edge_id(),
            kind: HeuristicKind::UserRule,
            a_instances,
            b_instances,
            claim: Claim::AOverB,
            rationale: if rule.note.is_empty() {
                format!("user rule {}", rule.rule_id)
            } else {
                rule.note.clone()
            },
        });
    }

    out.a = a.iter().filter(|i| !removed.contains(&i.instance_id)).cloned().collect();
    out.b = b.iter().filter(|i| !removed.contains(&i.instance_id)).cloned().collect();
    Ok(out)
}

//! Dominance heuristics between the parts of two designs.
//!
//! Equivalence heuristics (same passive size, same core, same physical
//! envelope) cancel parts out of both designs. Ordering heuristics (die size,
//! process node, diode size) produce directed edges between the remaining
//! instances; pairs that receive claims in both directions lose all edges.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::inventory::{
    instance_id, ActiveKind, Category, DesignInventory, InstanceId, Part, PartId, PartInstance, Side,
};

/// Relative margin a size must exceed the other by to count as larger.
pub const EPSILON: f64 = 0.10;
/// Relative tolerance for "same dimensions / same weight".
pub const SAME_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeuristicKind {
    PackageSizePassive,
    SameCoreChip,
    EquivalentProcess,
    DieSize,
    ProcessNode,
    DiodeSize,
    UserRule,
}

impl HeuristicKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HeuristicKind::PackageSizePassive => "package_size_passive",
            HeuristicKind::SameCoreChip => "same_core_chip",
            HeuristicKind::EquivalentProcess => "equivalent_process",
            HeuristicKind::DieSize => "die_size",
            HeuristicKind::ProcessNode => "process_node",
            HeuristicKind::DiodeSize => "diode_size",
            HeuristicKind::UserRule => "user_rule",
        }
    }
}

/// Which side a heuristic claims is at least as large.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    #[default]
    AOverB,
    BOverA,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicEdge {
    pub edge_id: String,
    pub kind: HeuristicKind,
    pub a_instances: Vec<InstanceId>,
    pub b_instances: Vec<InstanceId>,
    #[serde(default)]
    pub claim: Claim,
    pub rationale: String,
}

impl HeuristicEdge {
    fn pairwise(kind: HeuristicKind, claim: Claim, a: &InstanceId, b: &InstanceId, rationale: String) -> Self {
        let arrow = match claim {
            Claim::AOverB => "->",
            Claim::BOverA => "<-",
        };
        HeuristicEdge {
            edge_id: format!("{}:{a}{arrow}{b}", kind.as_str()),
            kind,
            a_instances: vec![a.clone()],
            b_instances: vec![b.clone()],
            claim,
            rationale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancelledPair {
    pub a_part: PartId,
    pub b_part: PartId,
    pub quantity: u32,
    /// 1 = same passive size, 2 = same core, 3 = same envelope
    pub kind: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CancellationReport {
    pub cancelled: Vec<CancelledPair>,
}

impl CancellationReport {
    pub fn total(&self) -> u64 {
        self.cancelled.iter().map(|c| u64::from(c.quantity)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cancellation {
    pub a: Vec<PartInstance>,
    pub b: Vec<PartInstance>,
    pub report: CancellationReport,
}

/// Name up to the last `-`, i.e. without the ordering/package suffix.
pub fn name_stem(name: &str) -> &str {
    let name = name.trim();
    match name.rfind('-') {
        Some(i) if i > 0 => &name[..i],
        _ => name,
    }
}

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs())
}

/// Equivalence kind (1–3) under which two parts count as identical.
pub fn equivalence(a: &Part, b: &Part) -> Option<u8> {
    if let (Some(ka), Some(kb)) = (a.category.passive_kind(), b.category.passive_kind()) {
        if ka == kb && !a.package_type.is_empty() && a.package_type == b.package_type {
            return Some(1);
        }
    }
    if let (Some(ca), Some(cb)) = (&a.attributes.core_architecture, &b.attributes.core_architecture) {
        let sa = name_stem(&a.name);
        if a.category == b.category
            && ca.eq_ignore_ascii_case(cb)
            && !sa.is_empty()
            && sa.eq_ignore_ascii_case(name_stem(&b.name))
        {
            return Some(2);
        }
    }
    if a.category == b.category && close(a.package_area, b.package_area, SAME_TOLERANCE) {
        let same_weight = match (a.attributes.mass, b.attributes.mass) {
            (Some(ma), Some(mb)) => close(ma, mb, SAME_TOLERANCE),
            (None, None) => !a.name.trim().is_empty() && a.name.trim().eq_ignore_ascii_case(b.name.trim()),
            _ => false,
        };
        if same_weight {
            return Some(3);
        }
    }
    None
}

/// Removes identical parts from both designs.
///
/// Candidate part pairs are visited by equivalence kind and then by the
/// unordered pair of part ids, so swapping the designs visits the same
/// physical pairs in the same order. Each visited pair cancels as many
/// instances as both parts still have, lowest ordinals first.
pub fn cancel_identical(inv_a: &DesignInventory, inv_b: &DesignInventory) -> Cancellation {
    let mut left_a: Vec<u32> = inv_a.parts.iter().map(|p| p.quantity).collect();
    let mut left_b: Vec<u32> = inv_b.parts.iter().map(|p| p.quantity).collect();

    let mut candidates = Vec::new();
    for (i, pa) in inv_a.parts.iter().enumerate() {
        for (j, pb) in inv_b.parts.iter().enumerate() {
            if let Some(kind) = equivalence(pa, pb) {
                let (x, y) = (&pa.part_id, &pb.part_id);
                let key = (kind, x.min(y).clone(), x.max(y).clone());
                candidates.push((key, i, j));
            }
        }
    }
    candidates.sort_by(|l, r| l.0.cmp(&r.0));

    let mut report = CancellationReport::default();
    for ((kind, _, _), i, j) in candidates {
        let q = left_a[i].min(left_b[j]);
        if q == 0 {
            continue;
        }
        left_a[i] -= q;
        left_b[j] -= q;
        report.cancelled.push(CancelledPair {
            a_part: inv_a.parts[i].part_id.clone(),
            b_part: inv_b.parts[j].part_id.clone(),
            quantity: q,
            kind,
        });
    }

    let remaining = |inv: &DesignInventory, left: &[u32], side: Side| -> Vec<PartInstance> {
        inv.parts
            .iter()
            .zip(left)
            .flat_map(|(p, &keep)| {
                (p.quantity - keep..p.quantity).map(move |ordinal| PartInstance {
                    instance_id: instance_id(side, &inv.design_id, &p.part_id, ordinal),
                    part_id: p.part_id.clone(),
                    design_side: side,
                })
            })
            .collect()
    };
    Cancellation {
        a: remaining(inv_a, &left_a, Side::A),
        b: remaining(inv_b, &left_b, Side::B),
        report,
    }
}

/// Index of the closest entry of the ascending `nodes` list (ties to the
/// smaller node).
fn node_rank(node: u32, nodes: &[u32]) -> Option<usize> {
    (0..nodes.len()).min_by_key(|&i| (nodes[i].abs_diff(node), nodes[i]))
}

fn larger(x: f64, y: f64) -> bool {
    x >= (1.0 + EPSILON) * y
}

/// Directed claims between two parts, using only the attributes each
/// heuristic needs.
fn claims(a: &Part, b: &Part, nodes: &[u32]) -> Vec<(HeuristicKind, Claim, String)> {
    let mut out = Vec::new();
    if let (Some(da), Some(db)) = (a.attributes.die_area, b.attributes.die_area) {
        if da > 0.0 && db > 0.0 {
            if larger(da, db) {
                out.push((HeuristicKind::DieSize, Claim::AOverB, format!("die {da:.3} mm² vs {db:.3} mm²")));
            } else if larger(db, da) {
                out.push((HeuristicKind::DieSize, Claim::BOverA, format!("die {db:.3} mm² vs {da:.3} mm²")));
            }
        }
    }
    if a.category.is_ic() && b.category.is_ic() {
        if let (Some(na), Some(nb)) = (a.attributes.process_node, b.attributes.process_node) {
            if let (Some(ra), Some(rb)) = (node_rank(na, nodes), node_rank(nb, nodes)) {
                if ra < rb {
                    out.push((HeuristicKind::ProcessNode, Claim::AOverB, format!("node {na} nm vs {nb} nm")));
                } else if rb < ra {
                    out.push((HeuristicKind::ProcessNode, Claim::BOverA, format!("node {nb} nm vs {na} nm")));
                }
            }
        }
    }
    let diode = Category::Active(ActiveKind::Diode);
    if a.category == diode && b.category == diode && a.package_area > 0.0 && b.package_area > 0.0 {
        let (pa, pb) = (a.package_area, b.package_area);
        if larger(pa, pb) {
            out.push((HeuristicKind::DiodeSize, Claim::AOverB, format!("diode {pa:.3} mm² vs {pb:.3} mm²")));
        } else if larger(pb, pa) {
            out.push((HeuristicKind::DiodeSize, Claim::BOverA, format!("diode {pb:.3} mm² vs {pa:.3} mm²")));
        }
    }
    out
}

/// Pairwise edges between every remaining A- and B-instance, sorted by id.
/// `nodes` is the ascending list of process nodes that readings are snapped
/// to before ranking.
pub fn generate_edges(
    a: &[PartInstance],
    b: &[PartInstance],
    inv_a: &DesignInventory,
    inv_b: &DesignInventory,
    nodes: &[u32],
) -> Vec<HeuristicEdge> {
    let parts_a: BTreeMap<&PartId, &Part> = inv_a.parts.iter().map(|p| (&p.part_id, p)).collect();
    let parts_b: BTreeMap<&PartId, &Part> = inv_b.parts.iter().map(|p| (&p.part_id, p)).collect();
    let mut cache: BTreeMap<(&PartId, &PartId), Vec<(HeuristicKind, Claim, String)>> = BTreeMap::new();
    let mut edges = Vec::new();
    for ia in a {
        let Some(pa) = parts_a.get(&ia.part_id) else { continue };
        for ib in b {
            let Some(pb) = parts_b.get(&ib.part_id) else { continue };
            let found = cache
                .entry((&ia.part_id, &ib.part_id))
                .or_insert_with(|| claims(pa, pb, nodes));
            for (kind, claim, why) in found.iter() {
                edges.push(HeuristicEdge::pairwise(*kind, *claim, &ia.instance_id, &ib.instance_id, why.clone()));
            }
        }
    }
    edges.sort_by(|x, y| x.edge_id.cmp(&y.edge_id));
    edges
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub a: InstanceId,
    pub b: InstanceId,
    pub rationales: Vec<String>,
}

/// Drops every edge on an (a, b) pair that received claims in both
/// directions. Many-to-many edges are never pruned.
pub fn prune_conflicts(edges: Vec<HeuristicEdge>) -> (Vec<HeuristicEdge>, Vec<Conflict>) {
    let mut directions: BTreeMap<(&InstanceId, &InstanceId), BTreeSet<Claim>> = BTreeMap::new();
    for e in edges.iter().filter(|e| e.a_instances.len() == 1 && e.b_instances.len() == 1) {
        directions
            .entry((&e.a_instances[0], &e.b_instances[0]))
            .or_default()
            .insert(e.claim);
    }
    let conflicted: BTreeSet<(InstanceId, InstanceId)> = directions
        .into_iter()
        .filter(|(_, claims)| claims.len() > 1)
        .map(|((a, b), _)| (a.clone(), b.clone()))
        .collect();

    let mut conflicts: BTreeMap<(InstanceId, InstanceId), Vec<String>> = BTreeMap::new();
    let mut kept = Vec::new();
    for e in edges {
        let pair = (e.a_instances[0].clone(), e.b_instances[0].clone());
        if e.a_instances.len() == 1 && e.b_instances.len() == 1 && conflicted.contains(&pair) {
            conflicts.entry(pair).or_default().push(format!("{}: {}", e.kind.as_str(), e.rationale));
        } else {
            kept.push(e);
        }
    }
    let report = conflicts
        .into_iter()
        .map(|((a, b), rationales)| Conflict { a, b, rationales })
        .collect();
    (kept, report)
}

/// JSON dump consumed by front-ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDump {
    pub edges: Vec<EdgeRow>,
    pub conflicts: Vec<Conflict>,
    pub cancelled: Vec<CancelledPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRow {
    pub id: String,
    pub kind: HeuristicKind,
    pub a: Vec<InstanceId>,
    pub b: Vec<InstanceId>,
    pub claim: Claim,
    pub rationale: String,
}

impl EdgeDump {
    pub fn new(edges: &[HeuristicEdge], conflicts: &[Conflict], cancelled: &CancellationReport) -> Self {
        EdgeDump {
            edges: edges
                .iter()
                .map(|e| EdgeRow {
                    id: e.edge_id.clone(),
                    kind: e.kind,
                    a: e.a_instances.clone(),
                    b: e.b_instances.clone(),
                    claim: e.claim,
                    rationale: e.rationale.clone(),
                })
                .collect(),
            conflicts: conflicts.to_vec(),
            cancelled: cancelled.cancelled.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inventory::{expand_instances, BoardSpec, PassiveKind};
    use proptest::prelude::*;

    const NODES: [u32; 12] = [14, 16, 22, 28, 40, 55, 65, 90, 130, 180, 250, 350];

    fn inv(id: &str, parts: Vec<Part>) -> DesignInventory {
        DesignInventory {
            design_id: id.into(),
            source_file: String::new(),
            board: BoardSpec::new(100.0, 2),
            parts,
        }
    }

    fn resistor(q: u32) -> Part {
        Part::new("R_0402", "resistor 0402", Category::Passive(PassiveKind::Resistor))
            .with_package("0402", 0.5)
            .with_quantity(q)
    }

    fn ic(id: &str, name: &str, area: f64, die: Option<f64>, node: Option<u32>) -> Part {
        let mut p = Part::new(id, name, Category::Ic).with_package("QFN", area);
        p.attributes.die_area = die;
        p.attributes.process_node = node;
        p
    }

    #[test]
    fn passive_cancellation_takes_minimum() {
        let c = cancel_identical(&inv("a", vec![resistor(10)]), &inv("b", vec![resistor(7)]));
        assert_eq!(c.a.len(), 3);
        assert!(c.b.is_empty());
        assert_eq!(c.report.cancelled[0].quantity, 7);
        assert_eq!(c.report.cancelled[0].kind, 1);
        // Lowest ordinals go first.
        assert_eq!(c.a[0].instance_id.as_str(), "A:a/R_0402#7");
    }

    #[test]
    fn same_core_different_package() {
        let mut qfp = ic("U1", "ATMEGA32U4-AU", 100.0, None, None);
        qfp.package_type = "QFP".into();
        qfp.attributes.core_architecture = Some("AVR".into());
        let mut qfn = ic("U1b", "ATMEGA32U4-MU", 49.0, None, None);
        qfn.attributes.core_architecture = Some("AVR".into());
        let c = cancel_identical(&inv("a", vec![qfp]), &inv("b", vec![qfn]));
        assert!(c.a.is_empty() && c.b.is_empty());
        assert_eq!(c.report.cancelled[0].kind, 2);
    }

    #[test]
    fn self_comparison_empties_both_sides() {
        let parts = vec![
            resistor(5),
            ic("U1", "MCU", 49.0, Some(12.0), Some(90)),
            Part::new("J1", "USB", Category::Misc).with_package("USB", 30.0),
        ];
        let d = inv("x", parts);
        let c = cancel_identical(&d, &d);
        assert!(c.a.is_empty() && c.b.is_empty());
    }

    fn edges_for(pa: Part, pb: Part) -> Vec<HeuristicEdge> {
        let (ia, ib) = (inv("a", vec![pa]), inv("b", vec![pb]));
        let a = expand_instances(&ia, Side::A).unwrap();
        let b = expand_instances(&ib, Side::B).unwrap();
        generate_edges(&a, &b, &ia, &ib, &NODES)
    }

    #[test]
    fn die_size_edge() {
        let e = edges_for(ic("U1", "x", 100.0, Some(20.0), Some(90)), ic("U2", "y", 100.0, Some(10.0), Some(90)));
        assert_eq!(e.len(), 1);
        assert_eq!((e[0].kind, e[0].claim), (HeuristicKind::DieSize, Claim::AOverB));
        assert_eq!(e[0].edge_id, "die_size:A:a/U1#0->B:b/U2#0");
    }

    #[test]
    fn process_node_edge() {
        let e = edges_for(ic("U1", "x", 100.0, Some(10.0), Some(28)), ic("U2", "y", 100.0, Some(10.5), Some(90)));
        assert_eq!(e.len(), 1);
        assert_eq!((e[0].kind, e[0].claim), (HeuristicKind::ProcessNode, Claim::AOverB));
    }

    #[test]
    fn missing_die_means_no_die_edge() {
        let e = edges_for(ic("U1", "x", 100.0, None, None), ic("U2", "y", 100.0, Some(1.0), None));
        assert!(e.is_empty());
    }

    #[test]
    fn diode_edges_by_package_area() {
        let d = |id: &str, area| Part::new(id, id, Category::Active(ActiveKind::Diode)).with_package("SOD", area);
        let e = edges_for(d("D1", 4.0), d("D2", 2.0));
        assert_eq!((e[0].kind, e[0].claim), (HeuristicKind::DiodeSize, Claim::AOverB));
        assert!(edges_for(d("D1", 2.1), d("D2", 2.0)).is_empty());
    }

    #[test]
    fn conflicting_pair_loses_all_edges() {
        // Bigger die on A, smaller node on B.
        let e = edges_for(ic("U1", "x", 100.0, Some(20.0), Some(180)), ic("U2", "y", 100.0, Some(10.0), Some(90)));
        assert_eq!(e.len(), 2);
        let (kept, conflicts) = prune_conflicts(e);
        assert!(kept.is_empty());
        assert_eq!(conflicts.len(), 1);
        assert_eq!(conflicts[0].rationales.len(), 2);
    }

    #[test]
    fn conflict_is_pair_local() {
        let pa = ic("U1", "x", 100.0, Some(20.0), Some(180));
        let pb = ic("U2", "y", 100.0, Some(10.0), Some(90));
        let pc = ic("U3", "z", 100.0, Some(10.0), Some(180));
        let ia = inv("a", vec![pa]);
        let ib = inv("b", vec![pb, pc]);
        let a = expand_instances(&ia, Side::A).unwrap();
        let b = expand_instances(&ib, Side::B).unwrap();
        let (kept, conflicts) = prune_conflicts(generate_edges(&a, &b, &ia, &ib, &NODES));
        assert_eq!(conflicts.len(), 1);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].b_instances[0].as_str(), "B:b/U3#0");
    }

    #[test]
    fn single_edge_survives_prune() {
        let e = edges_for(ic("U1", "x", 100.0, Some(20.0), Some(90)), ic("U2", "y", 100.0, Some(10.0), Some(90)));
        let (kept, conflicts) = prune_conflicts(e.clone());
        assert_eq!(kept, e);
        assert!(conflicts.is_empty());
    }

    fn arb_part(id: String) -> impl Strategy<Value = Part> {
        let cat = prop_oneof![
            Just(Category::Ic),
            Just(Category::Active(ActiveKind::Diode)),
            Just(Category::Passive(PassiveKind::Resistor)),
            Just(Category::Misc),
        ];
        (
            cat,
            prop_oneof![Just("0402"), Just("0603"), Just("QFN")],
            prop_oneof![Just(1.0f64), Just(2.0), Just(4.0), Just(25.0)],
            1u32..4,
            proptest::option::of(prop_oneof![Just(2.0f64), Just(5.0), Just(9.0)]),
            proptest::option::of(prop_oneof![Just(40u32), Just(90), Just(180)]),
            proptest::option::of(prop_oneof![Just("AVR"), Just("ARM")]),
            prop_oneof![Just("CHIP-A"), Just("CHIP-B"), Just("OTHER")],
        )
            .prop_map(move |(category, pkg, area, q, die, node, core, name)| {
                let mut p = Part::new(id.clone(), name, category).with_package(pkg, area).with_quantity(q);
                if category.is_ic() {
                    p.attributes.die_area = die.map(|d: f64| d.min(area));
                    p.attributes.process_node = node;
                    p.attributes.core_architecture = core.map(str::to_string);
                }
                p
            })
    }

    fn arb_inv(prefix: &'static str) -> impl Strategy<Value = DesignInventory> {
        (0usize..5).prop_flat_map(move |n| {
            (0..n)
                .map(|i| arb_part(format!("{prefix}{i}")))
                .collect::<Vec<_>>()
                .prop_map(move |parts| inv(prefix, parts))
        })
    }

    fn totals(r: &CancellationReport) -> BTreeMap<(PartId, PartId, u8), u32> {
        r.cancelled.iter().map(|c| ((c.a_part.clone(), c.b_part.clone(), c.kind), c.quantity)).collect()
    }

    proptest! {
        #[test]
        fn cancellation_is_symmetric(a in arb_inv("p"), b in arb_inv("q")) {
            let ab = cancel_identical(&a, &b);
            let ba = cancel_identical(&b, &a);
            prop_assert_eq!(ab.report.total(), ba.report.total());
            let swapped: BTreeMap<_, _> = totals(&ba.report)
                .into_iter()
                .map(|((x, y, k), q)| ((y, x, k), q))
                .collect();
            prop_assert_eq!(totals(&ab.report), swapped);
            for c in &ab.report.cancelled {
                let qa = a.part(&c.a_part).unwrap().quantity;
                let qb = b.part(&c.b_part).unwrap().quantity;
                prop_assert!(c.quantity <= qa.min(qb));
            }
        }

        #[test]
        fn pruned_edges_have_no_bidirectional_pair(a in arb_inv("p"), b in arb_inv("q")) {
            let c = cancel_identical(&a, &b);
            let (kept, _) = prune_conflicts(generate_edges(&c.a, &c.b, &a, &b, &NODES));
            let mut seen: BTreeMap<(InstanceId, InstanceId), BTreeSet<Claim>> = BTreeMap::new();
            for e in &kept {
                seen.entry((e.a_instances[0].clone(), e.b_instances[0].clone())).or_default().insert(e.claim);
            }
            prop_assert!(seen.values().all(|s| s.len() == 1));
        }

        #[test]
        fn generation_is_monotone_in_information(a in arb_inv("p"), b in arb_inv("q"), pick in any::<prop::sample::Index>(), die in 1.0f64..30.0, node in prop_oneof![Just(22u32), Just(65), Just(250)]) {
            let ia = expand_instances(&a, Side::A).unwrap();
            let ib = expand_instances(&b, Side::B).unwrap();
            let before = generate_edges(&ia, &ib, &a, &b, &NODES);
            let mut richer = a.clone();
            if !richer.parts.is_empty() {
                let i = pick.index(richer.parts.len());
                let p = &mut richer.parts[i];
                if p.attributes.die_area.is_none() {
                    p.attributes.die_area = Some(die.min(p.package_area));
                }
                if p.attributes.process_node.is_none() {
                    p.attributes.process_node = Some(node);
                }
            }
            let after: BTreeSet<String> = generate_edges(&ia, &ib, &richer, &b, &NODES).into_iter().map(|e| e.edge_id).collect();
            for e in before {
                prop_assert!(after.contains(&e.edge_id), "lost {}", e.edge_id);
            }
        }
    }
}

//! Core domain types: parts, boards and per-design inventories.
//!
//! Everything here is a plain value object. Inventories are validated with
//! [`validate_inventory`], which reports every violated invariant instead of
//! failing on the first one, and expanded into unit instances with
//! [`expand_instances`] before matching.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartId(pub String);

impl PartId {
    pub fn new(id: impl Into<String>) -> Self {
        PartId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InstanceId(pub String);

impl InstanceId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PassiveKind {
    Resistor,
    Capacitor,
    Inductor,
}

impl PassiveKind {
    pub const ALL: [PassiveKind; 3] = [
        PassiveKind::Resistor,
        PassiveKind::Capacitor,
        PassiveKind::Inductor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PassiveKind::Resistor => "resistor",
            PassiveKind::Capacitor => "capacitor",
            PassiveKind::Inductor => "inductor",
        }
    }

    /// Reference-designator letter conventionally used for this kind.
    pub fn designator_letter(self) -> char {
        match self {
            PassiveKind::Resistor => 'R',
            PassiveKind::Capacitor => 'C',
            PassiveKind::Inductor => 'L',
        }
    }
}

impl FromStr for PassiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "resistor" => Ok(PassiveKind::Resistor),
            "capacitor" => Ok(PassiveKind::Capacitor),
            "inductor" => Ok(PassiveKind::Inductor),
            other => Err(format!("unknown passive kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActiveKind {
    Diode,
    Transistor,
    Other,
}

impl ActiveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ActiveKind::Diode => "diode",
            ActiveKind::Transistor => "transistor",
            ActiveKind::Other => "other",
        }
    }
}

/// Component category. Serialized as a flat token such as `passive:resistor`
/// or `ic`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Passive(PassiveKind),
    Active(ActiveKind),
    Ic,
    Misc,
    BoardSubstrate,
    NonIcAggregate,
}

impl Category {
    pub fn is_ic(self) -> bool {
        self == Category::Ic
    }

    pub fn passive_kind(self) -> Option<PassiveKind> {
        match self {
            Category::Passive(kind) => Some(kind),
            _ => None,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::Passive(kind) => write!(f, "passive:{}", kind.as_str()),
            Category::Active(kind) => write!(f, "active:{}", kind.as_str()),
            Category::Ic => f.write_str("ic"),
            Category::Misc => f.write_str("misc"),
            Category::BoardSubstrate => f.write_str("board_substrate"),
            Category::NonIcAggregate => f.write_str("non_ic_aggregate"),
        }
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ic" => return Ok(Category::Ic),
            "misc" => return Ok(Category::Misc),
            "board_substrate" => return Ok(Category::BoardSubstrate),
            "non_ic_aggregate" => return Ok(Category::NonIcAggregate),
            _ => {}
        }
        match s.split_once(':') {
            Some(("passive", kind)) => Ok(Category::Passive(kind.parse()?)),
            Some(("active", "diode")) => Ok(Category::Active(ActiveKind::Diode)),
            Some(("active", "transistor")) => Ok(Category::Active(ActiveKind::Transistor)),
            Some(("active", "other")) => Ok(Category::Active(ActiveKind::Other)),
            _ => Err(format!("unknown category `{s}`")),
        }
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Where a part's footprint estimate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    TableLookup,
    AreaModel,
    MassModel,
    UserSupplied,
    #[default]
    Unknown,
}

/// Optional typed attributes gathered from the design file, the catalog and
/// the inference stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attributes {
    /// MHz
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_frequency: Option<f64>,
    /// mA/MHz
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_current_per_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pin_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core_architecture: Option<String>,
    /// kB
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_size: Option<f64>,
    /// mm²
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub die_area: Option<f64>,
    /// nm
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process_node: Option<u32>,
    /// g
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    /// Package token reported by the catalog, kept next to the file-derived one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supplier_package: Option<String>,
}

impl Attributes {
    fn numeric(&self) -> [(&'static str, Option<f64>); 5] {
        [
            ("max_frequency", self.max_frequency),
            ("active_current_per_mhz", self.active_current_per_mhz),
            ("memory_size", self.memory_size),
            ("die_area", self.die_area),
            ("mass", self.mass),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub part_id: PartId,
    pub name: String,
    pub designator_prefix: String,
    /// Reference designators merged into this part, in file order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub designators: Vec<String>,
    pub category: Category,
    #[serde(default)]
    pub package_type: String,
    /// mm²
    #[serde(default)]
    pub package_area: f64,
    /// Package body width and height in mm, when measured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub package_dims: Option<[f64; 2]>,
    pub quantity: u32,
    #[serde(default)]
    pub attributes: Attributes,
    /// g CO2-eq per piece
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub footprint_estimate: Option<f64>,
    #[serde(default)]
    pub footprint_provenance: Provenance,
}

impl Part {
    pub fn new(part_id: impl Into<String>, name: impl Into<String>, category: Category) -> Self {
        Part {
            part_id: PartId::new(part_id),
            name: name.into(),
            designator_prefix: String::new(),
            designators: Vec::new(),
            category,
            package_type: String::new(),
            package_area: 0.0,
            package_dims: None,
            quantity: 1,
            attributes: Attributes::default(),
            footprint_estimate: None,
            footprint_provenance: Provenance::Unknown,
        }
    }

    pub fn with_package(mut self, package_type: impl Into<String>, area: f64) -> Self {
        self.package_type = package_type.into();
        self.package_area = area;
        self
    }

    pub fn with_quantity(mut self, quantity: u32) -> Self {
        self.quantity = quantity;
        self
    }

    pub fn with_footprint(mut self, grams: f64, provenance: Provenance) -> Self {
        self.footprint_estimate = Some(grams);
        self.footprint_provenance = provenance;
        self
    }

    /// Footprint per piece when the part is covered by an estimate.
    pub fn known_footprint(&self) -> Option<f64> {
        match self.footprint_provenance {
            Provenance::Unknown => None,
            _ => self.footprint_estimate,
        }
    }
}

fn default_thickness() -> f64 {
    1.0
}

fn default_substrate() -> String {
    "FR-4".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardSpec {
    /// mm²
    #[serde(rename = "area_mm2")]
    pub area: f64,
    #[serde(rename = "layers")]
    pub layer_count: u32,
    /// mm
    #[serde(rename = "layer_thickness_mm", default = "default_thickness")]
    pub layer_thickness: f64,
    #[serde(default = "default_substrate")]
    pub substrate: String,
}

impl BoardSpec {
    pub fn new(area: f64, layer_count: u32) -> Self {
        BoardSpec {
            area,
            layer_count,
            layer_thickness: default_thickness(),
            substrate: default_substrate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignInventory {
    pub design_id: String,
    #[serde(default)]
    pub source_file: String,
    pub board: BoardSpec,
    #[serde(default)]
    pub parts: Vec<Part>,
}

impl DesignInventory {
    pub fn from_json(bytes: &[u8]) -> serde_json::Result<Self> {
        serde_json::from_slice(bytes)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("inventory serializes")
    }

    pub fn part(&self, id: &PartId) -> Option<&Part> {
        self.parts.iter().find(|p| &p.part_id == id)
    }

    pub fn total_quantity(&self) -> u64 {
        self.parts.iter().map(|p| u64::from(p.quantity)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum InvariantRule {
    QuantityZero,
    NegativePackageArea,
    DieExceedsPackage,
    NegativeAttribute { attribute: &'static str },
    ProvenanceMismatch,
    DuplicatePartId,
    IcWithoutPackage,
    BoardArea,
    LayerCount,
    LayerThickness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// `None` for board-level violations.
    pub part_id: Option<PartId>,
    #[serde(flatten)]
    pub rule: InvariantRule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let subject = match &self.part_id {
            Some(id) => format!("part {id}"),
            None => "board".to_string(),
        };
        let what = match &self.rule {
            InvariantRule::QuantityZero => "quantity must be at least 1".to_string(),
            InvariantRule::NegativePackageArea => "package_area must be nonnegative".to_string(),
            InvariantRule::DieExceedsPackage => "die_area exceeds package_area".to_string(),
            InvariantRule::NegativeAttribute { attribute } => {
                format!("attribute {attribute} must be nonnegative")
            }
            InvariantRule::ProvenanceMismatch => {
                "footprint_estimate must be present exactly when provenance is known".to_string()
            }
            InvariantRule::DuplicatePartId => "part_id is not unique".to_string(),
            InvariantRule::IcWithoutPackage => "IC has no package_type".to_string(),
            InvariantRule::BoardArea => "board area must be positive".to_string(),
            InvariantRule::LayerCount => "layer count must be within 1..=64".to_string(),
            InvariantRule::LayerThickness => "layer thickness must be positive".to_string(),
        };
        write!(f, "{subject}: {what}")
    }
}

fn nonneg(value: f64) -> bool {
    value.is_finite() && value >= 0.0
}

/// Checks every invariant of the inventory and returns one entry per
/// violation. An empty report means the inventory is well formed.
pub fn validate_inventory(inv: &DesignInventory) -> Vec<Violation> {
    let mut report = Vec::new();
    let board = &inv.board;
    if !(board.area.is_finite() && board.area > 0.0) {
        report.push(Violation { part_id: None, rule: InvariantRule::BoardArea });
    }
    if !(1..=64).contains(&board.layer_count) {
        report.push(Violation { part_id: None, rule: InvariantRule::LayerCount });
    }
    if !(board.layer_thickness.is_finite() && board.layer_thickness > 0.0) {
        report.push(Violation { part_id: None, rule: InvariantRule::LayerThickness });
    }

    let mut seen = BTreeSet::new();
    for part in &inv.parts {
        let mut flag = |rule| {
            report.push(Violation { part_id: Some(part.part_id.clone()), rule });
        };
        if !seen.insert(&part.part_id) {
            flag(InvariantRule::DuplicatePartId);
        }
        if part.quantity == 0 {
            flag(InvariantRule::QuantityZero);
        }
        if !nonneg(part.package_area) {
            flag(InvariantRule::NegativePackageArea);
        }
        for (attribute, value) in part.attributes.numeric() {
            if let Some(v) = value {
                if !nonneg(v) {
                    flag(InvariantRule::NegativeAttribute { attribute });
                }
            }
        }
        if let Some(die) = part.attributes.die_area {
            if nonneg(die) && die > part.package_area {
                flag(InvariantRule::DieExceedsPackage);
            }
        }
        if let Some(fp) = part.footprint_estimate {
            if !nonneg(fp) {
                flag(InvariantRule::NegativeAttribute { attribute: "footprint_estimate" });
            }
        }
        let known = part.footprint_provenance != Provenance::Unknown;
        if known != part.footprint_estimate.is_some() {
            flag(InvariantRule::ProvenanceMismatch);
        }
        if part.category.is_ic() && part.package_type.trim().is_empty() {
            flag(InvariantRule::IcWithoutPackage);
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Side::A),
            "B" | "b" => Ok(Side::B),
            other => Err(format!("unknown side `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartInstance {
    pub instance_id: InstanceId,
    pub part_id: PartId,
    pub design_side: Side,
}

/// Deterministic instance identifier for the `ordinal`-th piece of a part.
pub fn instance_id(side: Side, design_id: &str, part_id: &PartId, ordinal: u32) -> InstanceId {
    InstanceId(format!("{side}:{design_id}/{part_id}#{ordinal}"))
}

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("invalid inventory: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// Expands each part of quantity `q` into `q` unit instances, in part order.
pub fn expand_instances(inv: &DesignInventory, side: Side) -> Result<Vec<PartInstance>, InventoryError> {
    let report = validate_inventory(inv);
    if !report.is_empty() {
        return Err(InventoryError::Invalid(report));
    }
    Ok(inv
        .parts
        .iter()
        .flat_map(|part| {
            (0..part.quantity).map(move |ordinal| PartInstance {
                instance_id: instance_id(side, &inv.design_id, &part.part_id, ordinal),
                part_id: part.part_id.clone(),
                design_side: side,
            })
        })
        .collect())
}

/// Canonical part id for a merged passive group, e.g. `R_0402`.
pub fn passive_part_id(kind: PassiveKind, size_code: &str) -> PartId {
    PartId(format!("{}_{}", kind.designator_letter(), size_code))
}

/// Merges passives of identical (kind, package size) into one part with the
/// summed quantity. Order follows the first occurrence of each group.
pub fn merge_passives(parts: Vec<Part>) -> Vec<Part> {
    let mut merged: Vec<Part> = Vec::with_capacity(parts.len());
    for part in parts {
        let key = part.category.passive_kind().map(|k| (k, part.package_type.clone()));
        let existing = key.as_ref().and_then(|(kind, size)| {
            merged
                .iter_mut()
                .find(|p| p.category.passive_kind() == Some(*kind) && &p.package_type == size)
        });
        match existing {
            Some(group) => {
                group.quantity += part.quantity;
                group.designators.extend(part.designators);
            }
            None => {
                let mut part = part;
                if let Some((kind, size)) = key {
                    part.part_id = passive_part_id(kind, &size);
                    part.name = format!("{} {}", kind.as_str(), size);
                }
                merged.push(part);
            }
        }
    }
    merged
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> DesignInventory {
        let mut ic = Part::new("U1", "ATMEGA32U4-AU", Category::Ic).with_package("QFP", 100.0);
        ic.attributes.die_area = Some(25.0);
        DesignInventory {
            design_id: "demo".into(),
            source_file: "demo.json".into(),
            board: BoardSpec::new(2000.0, 2),
            parts: vec![
                Part::new("R_0402", "resistor 0402", Category::Passive(PassiveKind::Resistor))
                    .with_package("0402", 0.5)
                    .with_quantity(3)
                    .with_footprint(0.04, Provenance::TableLookup),
                ic,
                Part::new("J1", "USB", Category::Misc).with_package("USB", 30.0),
            ],
        }
    }

    #[test]
    fn well_formed_inventory_has_empty_report() {
        assert!(validate_inventory(&sample()).is_empty());
    }

    #[test]
    fn zero_quantity_is_reported_once() {
        let mut inv = sample();
        inv.parts[2].quantity = 0;
        let report = validate_inventory(&inv);
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].part_id, Some(PartId::new("J1")));
        assert_eq!(report[0].rule, InvariantRule::QuantityZero);
    }

    #[test]
    fn die_larger_than_package_is_reported() {
        let mut inv = sample();
        inv.parts[1].package_area = 25.0;
        inv.parts[1].attributes.die_area = Some(30.0);
        let report = validate_inventory(&inv);
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].rule, InvariantRule::DieExceedsPackage);
    }

    #[test]
    fn provenance_must_match_estimate() {
        let mut inv = sample();
        inv.parts[2].footprint_estimate = Some(1.0);
        let report = validate_inventory(&inv);
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].rule, InvariantRule::ProvenanceMismatch);
    }

    #[test]
    fn board_and_duplicate_violations() {
        let mut inv = sample();
        inv.board.area = 0.0;
        inv.board.layer_count = 65;
        inv.parts[2].part_id = PartId::new("U1");
        let rules: Vec<_> = validate_inventory(&inv).into_iter().map(|v| v.rule).collect();
        assert!(rules.contains(&InvariantRule::BoardArea));
        assert!(rules.contains(&InvariantRule::LayerCount));
        assert!(rules.contains(&InvariantRule::DuplicatePartId));
    }

    #[test]
    fn expansion_counts_and_ids() {
        let mut inv = sample();
        inv.parts = vec![inv.parts[0].clone(), inv.parts[1].clone()];
        let first = expand_instances(&inv, Side::A).unwrap();
        assert_eq!(first.len(), 4);
        assert_eq!(first[0].instance_id.as_str(), "A:demo/R_0402#0");
        assert_eq!(first[3].instance_id.as_str(), "A:demo/U1#0");
        assert_eq!(first, expand_instances(&inv, Side::A).unwrap());

        inv.parts.clear();
        assert!(expand_instances(&inv, Side::B).unwrap().is_empty());
    }

    #[test]
    fn expansion_rejects_invalid_inventory() {
        let mut inv = sample();
        inv.parts[0].quantity = 0;
        assert!(matches!(expand_instances(&inv, Side::A), Err(InventoryError::Invalid(v)) if v.len() == 1));
    }

    #[test]
    fn passives_merge_by_kind_and_size() {
        let r = |d: &str, size: &str| {
            let mut p = Part::new(d, "10k", Category::Passive(PassiveKind::Resistor)).with_package(size, 0.5);
            p.designators = vec![d.to_string()];
            p
        };
        let merged = merge_passives(vec![r("R1", "0402"), r("R2", "0402"), r("R3", "0603")]);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0].part_id.as_str(), "R_0402");
        assert_eq!(merged[0].quantity, 2);
        assert_eq!(merged[0].designators, vec!["R1", "R2"]);
    }

    #[test]
    fn category_tokens_roundtrip() {
        for cat in [
            Category::Passive(PassiveKind::Inductor),
            Category::Active(ActiveKind::Transistor),
            Category::Ic,
            Category::Misc,
            Category::BoardSubstrate,
            Category::NonIcAggregate,
        ] {
            assert_eq!(cat.to_string().parse::<Category>().unwrap(), cat);
        }
        assert!("passive:capacitorx".parse::<Category>().is_err());
    }

    fn arb_category() -> impl Strategy<Value = Category> {
        prop_oneof![
            Just(Category::Passive(PassiveKind::Resistor)),
            Just(Category::Passive(PassiveKind::Capacitor)),
            Just(Category::Active(ActiveKind::Diode)),
            Just(Category::Ic),
            Just(Category::Misc),
            Just(Category::BoardSubstrate),
        ]
    }

    fn arb_part() -> impl Strategy<Value = Part> {
        (
            "[A-Z][A-Z0-9_]{0,8}",
            "[A-Za-z0-9 -]{0,12}",
            arb_category(),
            0.0f64..500.0,
            1u32..50,
            proptest::option::of(0.0f64..1e3),
            proptest::option::of(0u32..400),
            proptest::option::of("[A-Za-z -]{1,10}"),
            proptest::option::of(0.0f64..100.0),
        )
            .prop_map(|(id, name, cat, area, qty, freq, node, core, fp)| {
                let mut part = Part::new(id, name, cat).with_package("QFN", area).with_quantity(qty);
                part.attributes.max_frequency = freq;
                part.attributes.process_node = node;
                part.attributes.core_architecture = core;
                if let Some(fp) = fp {
                    part = part.with_footprint(fp, Provenance::AreaModel);
                }
                part
            })
    }

    proptest! {
        #[test]
        fn json_roundtrip_is_identity(
            parts in proptest::collection::vec(arb_part(), 0..6),
            area in 1.0f64..1e5,
            layers in 1u32..=64,
        ) {
            let inv = DesignInventory {
                design_id: "d".into(),
                source_file: "x.brd".into(),
                board: BoardSpec::new(area, layers),
                parts,
            };
            let text = inv.to_json_pretty();
            let back = DesignInventory::from_json(text.as_bytes()).unwrap();
            prop_assert_eq!(back, inv);
        }
    }
}

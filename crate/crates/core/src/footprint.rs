//! Cradle-to-gate footprint estimates in g CO2-eq.
//!
//! Every estimator either returns a number or an [`EstimateError`] saying why
//! no number exists. A missing estimate is never folded into a zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inventory::{BoardSpec, Category, DesignInventory, PartId, PassiveKind, Provenance};

pub const FR4: &str = "FR-4";

/// Mass-scaling factors for one category: E = m·ef / (m_ref·L).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassFactor {
    /// g CO2-eq per reference mass
    pub ef: f64,
    /// g
    pub m_ref: f64,
    /// material yield, in (0, 1]
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorTables {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// kind → size code → g per piece
    pub passive: BTreeMap<PassiveKind, BTreeMap<String, f64>>,
    /// Optional per-piece values that take precedence over `passive`.
    #[serde(default)]
    pub passive_overrides: BTreeMap<PassiveKind, BTreeMap<String, f64>>,
    /// g per mm² of board per 1 mm-thick layer
    pub substrate_per_mm2_per_mm_layer: f64,
    /// node (nm) → g per mm² of die
    pub ic_per_mm2_by_node: BTreeMap<u32, f64>,
    /// category token (e.g. `passive:capacitor`) → factors
    #[serde(default)]
    pub mass_factors: BTreeMap<String, MassFactor>,
}

impl FactorTables {
    pub fn validate(&self) -> Result<(), String> {
        let passive = self.passive.iter().chain(&self.passive_overrides);
        for (kind, sizes) in passive {
            for (size, &v) in sizes {
                if !(v > 0.0) {
                    return Err(format!("passive factor {}/{size} must be positive", kind.as_str()));
                }
            }
        }
        if !(self.substrate_per_mm2_per_mm_layer > 0.0) {
            return Err("substrate factor must be positive".into());
        }
        for (node, &v) in &self.ic_per_mm2_by_node {
            if !(v > 0.0) {
                return Err(format!("IC factor for {node} nm must be positive"));
            }
        }
        for (cat, f) in &self.mass_factors {
            if !(f.ef > 0.0 && f.m_ref > 0.0) {
                return Err(format!("mass factors for {cat} must be positive"));
            }
            if !(f.loss > 0.0 && f.loss <= 1.0) {
                return Err(format!("loss factor for {cat} must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    /// Process nodes with a per-area factor, ascending.
    pub fn nodes(&self) -> Vec<u32> {
        self.ic_per_mm2_by_node.keys().copied().collect()
    }

    /// Snaps a node to the nearest listed one (ties to the smaller node).
    /// Nodes outside the listed range have no factor.
    pub fn snap_node(&self, node_nm: u32) -> Option<u32> {
        let lo = *self.ic_per_mm2_by_node.keys().next()?;
        let hi = *self.ic_per_mm2_by_node.keys().next_back()?;
        if node_nm < lo || node_nm > hi {
            return None;
        }
        self.ic_per_mm2_by_node
            .keys()
            .copied()
            .min_by_key(|&n| (n.abs_diff(node_nm), n))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("no table entry for {kind} {size}")]
    MissingPassive { kind: &'static str, size: String },
    #[error("substrate `{0}` has no factor")]
    UnsupportedSubstrate(String),
    #[error("no per-area factor for {0} nm")]
    MissingNode(u32),
    #[error("no mass factors for category {0}")]
    MissingMassFactor(String),
    #[error("input must be finite and nonnegative")]
    BadInput,
}

pub fn estimate_passive(kind: PassiveKind, size_code: &str, tables: &FactorTables) -> Result<f64, EstimateError> {
    tables
        .passive_overrides
        .get(&kind)
        .and_then(|m| m.get(size_code))
        .or_else(|| tables.passive.get(&kind).and_then(|m| m.get(size_code)))
        .copied()
        .ok_or_else(|| EstimateError::MissingPassive {
            kind: kind.as_str(),
            size: size_code.to_string(),
        })
}

pub fn estimate_substrate(board: &BoardSpec, tables: &FactorTables) -> Result<f64, EstimateError> {
    if !board.substrate.eq_ignore_ascii_case(FR4) {
        return Err(EstimateError::UnsupportedSubstrate(board.substrate.clone()));
    }
    if !(board.area.is_finite() && board.area > 0.0 && board.layer_thickness > 0.0 && board.layer_count >= 1) {
        return Err(EstimateError::BadInput);
    }
    Ok(board.area * f64::from(board.layer_count) * board.layer_thickness * tables.substrate_per_mm2_per_mm_layer)
}

pub fn estimate_ic(die_area: f64, node_nm: u32, tables: &FactorTables) -> Result<f64, EstimateError> {
    if !(die_area.is_finite() && die_area >= 0.0) {
        return Err(EstimateError::BadInput);
    }
    let node = tables.snap_node(node_nm).ok_or(EstimateError::MissingNode(node_nm))?;
    if die_area == 0.0 {
        log::warn!("zero die area at {node_nm} nm");
    }
    Ok(die_area * tables.ic_per_mm2_by_node[&node])
}

pub fn estimate_by_mass(mass_g: f64, category: Category, tables: &FactorTables) -> Result<f64, EstimateError> {
    if !(mass_g.is_finite() && mass_g >= 0.0) {
        return Err(EstimateError::BadInput);
    }
    let key = category.to_string();
    let f = tables
        .mass_factors
        .get(&key)
        .ok_or(EstimateError::MissingMassFactor(key))?;
    Ok(mass_g * f.ef / (f.m_ref * f.loss))
}

/// Picks the applicable model for a part. Passives use the per-piece table,
/// ICs the area model, anything with a mass and category factors the mass
/// model. `board` is consulted for the substrate part.
pub fn estimate_part(
    part: &crate::inventory::Part,
    board: &BoardSpec,
    tables: &FactorTables,
) -> Result<(f64, Provenance), EstimateError> {
    let mass = |cat| -> Result<(f64, Provenance), EstimateError> {
        match part.attributes.mass {
            Some(m) => Ok((estimate_by_mass(m, cat, tables)?, Provenance::MassModel)),
            None => Err(EstimateError::MissingMassFactor(cat.to_string())),
        }
    };
    match part.category {
        Category::Passive(kind) => match estimate_passive(kind, &part.package_type, tables) {
            Ok(g) => Ok((g, Provenance::TableLookup)),
            Err(e) => mass(part.category).map_err(|_| e),
        },
        Category::BoardSubstrate => Ok((estimate_substrate(board, tables)?, Provenance::AreaModel)),
        Category::Ic => match (part.attributes.die_area, part.attributes.process_node) {
            (Some(die), Some(node)) => match estimate_ic(die, node, tables) {
                Ok(g) => Ok((g, Provenance::AreaModel)),
                Err(e) => mass(part.category).map_err(|_| e),
            },
            _ => mass(part.category),
        },
        other => mass(other),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootprintTotal {
    /// g CO2-eq over covered parts only
    pub total: f64,
    pub covered: Vec<PartId>,
    pub uncovered: Vec<PartId>,
}

impl FootprintTotal {
    pub fn coverage(&self) -> f64 {
        let n = self.covered.len() + self.uncovered.len();
        if n == 0 {
            1.0
        } else {
            self.covered.len() as f64 / n as f64
        }
    }
}

/// Partial total: Σ footprint × quantity over parts with a known estimate.
pub fn total_footprint(inv: &DesignInventory) -> FootprintTotal {
    let mut out = FootprintTotal {
        total: 0.0,
        covered: Vec::new(),
        uncovered: Vec::new(),
    };
    for part in &inv.parts {
        match part.known_footprint() {
            Some(g) => {
                out.total += g * f64::from(part.quantity);
                out.covered.push(part.part_id.clone());
            }
            None => out.uncovered.push(part.part_id.clone()),
        }
    }
    out
}

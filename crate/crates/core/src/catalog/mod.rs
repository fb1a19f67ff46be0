//! Distributor-catalog enrichment.
//!
//! A [`CatalogProvider`] answers keyword searches. [`lookup`] adds the
//! suffix-stripping retry on top of any provider, and [`map_attributes`]
//! turns the free-form attribute names of a record into typed
//! [`Attributes`].

mod fixture;
mod http;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fixture::FixtureProvider;
pub use http::HttpProvider;

use crate::eda::package::PackageAliases;
use crate::fuzzy;
use crate::inventory::Attributes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordSource {
    OfflineFixture,
    LiveHttp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogRecord {
    pub matched_name: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    pub source: RecordSource,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    /// Transport-level failure; the same query may succeed later.
    #[error("catalog unreachable: {0}")]
    Network(String),
    #[error("catalog response invalid: {0}")]
    BadResponse(String),
    #[error("catalog configuration: {0}")]
    Config(String),
}

impl CatalogError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, CatalogError::Network(_))
    }
}

pub trait CatalogProvider: Send + Sync {
    /// Records matching `query`, best first. An empty list means "not found".
    fn search(&self, query: &str) -> Result<Vec<CatalogRecord>, CatalogError>;
}

/// Maximum number of suffix truncations tried after the full name.
pub const MAX_TRUNCATIONS: usize = 3;

/// Queries tried for a part name: the name itself, then up to three
/// progressively shorter prefixes cut at non-alphanumeric boundaries.
pub fn query_sequence(name: &str) -> Vec<String> {
    let mut out = vec![name.trim().to_string()];
    let mut current = name.trim();
    while out.len() <= MAX_TRUNCATIONS {
        let Some(cut) = current.rfind(|c: char| !c.is_alphanumeric()) else { break };
        let shorter = current[..cut].trim_end_matches(|c: char| !c.is_alphanumeric());
        if shorter.is_empty() {
            break;
        }
        out.push(shorter.to_string());
        current = shorter;
    }
    out
}

/// Top match for a part name, retrying with suffix-stripped queries.
pub fn lookup(name: &str, provider: &dyn CatalogProvider) -> Result<Option<CatalogRecord>, CatalogError> {
    if name.trim().is_empty() {
        return Ok(None);
    }
    for query in query_sequence(name) {
        let records = provider.search(&query)?;
        if let Some(first) = records.into_iter().find(|r| !r.matched_name.trim().is_empty()) {
            return Ok(Some(first));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Canonical {
    SupplierPackage,
    PinCount,
    MemorySize,
    MaxFrequency,
    CoreArchitecture,
    CurrentPerMhz,
    Mass,
}

const SYNONYMS: &[(Canonical, &[&str])] = &[
    (
        Canonical::SupplierPackage,
        &["Supplier Device Package", "Package / Case", "Package", "Package Type"],
    ),
    (Canonical::PinCount, &["Number of Pins", "Pin Count", "Pins", "Number of Terminations"]),
    (
        Canonical::MemorySize,
        &["Program Memory Size", "Memory Size", "Flash Size", "Flash Memory Size"],
    ),
    (
        Canonical::MaxFrequency,
        &["Speed", "Max Frequency", "Maximum Clock Frequency", "Clock Frequency", "Frequency - Max"],
    ),
    (Canonical::CoreArchitecture, &["Core Processor", "Core", "Core Architecture"]),
    (
        Canonical::CurrentPerMhz,
        &["Active Current per MHz", "Supply Current per MHz", "Current - Supply per MHz"],
    ),
    (Canonical::Mass, &["Weight", "Unit Weight", "Mass"]),
];

fn canonical_for(raw_name: &str) -> Option<(Canonical, f64)> {
    let mut best: Option<(Canonical, f64)> = None;
    for (key, names) in SYNONYMS {
        if let Some((_, score)) = fuzzy::best_match(raw_name, names.iter().copied()) {
            if best.map_or(true, |(_, s)| score > s) {
                best = Some((*key, score));
            }
        }
    }
    best
}

fn number_and_unit(raw: &str) -> Option<(f64, String)> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"([0-9]+(?:\.[0-9]+)?)\s*([A-Za-zµμ/]*)").unwrap());
    let c = re.captures(raw)?;
    Some((c[1].parse().ok()?, c[2].to_string()))
}

pub fn parse_frequency_mhz(raw: &str) -> Option<f64> {
    let (v, unit) = number_and_unit(raw)?;
    match unit.to_ascii_lowercase().as_str() {
        "ghz" => Some(v * 1000.0),
        "mhz" | "" => Some(v),
        "khz" => Some(v / 1000.0),
        "hz" => Some(v / 1e6),
        _ => None,
    }
}

pub fn parse_memory_kb(raw: &str) -> Option<f64> {
    let (v, unit) = number_and_unit(raw)?;
    match unit.to_ascii_lowercase().as_str() {
        "mb" | "mbyte" => Some(v * 1024.0),
        "kb" | "k" | "kbyte" | "" => Some(v),
        "b" | "byte" | "bytes" => Some(v / 1024.0),
        _ => None,
    }
}

pub fn parse_current_ma_per_mhz(raw: &str) -> Option<f64> {
    let (v, unit) = number_and_unit(raw)?;
    let unit = unit.replace('μ', "µ").to_ascii_lowercase();
    match unit.as_str() {
        "ma/mhz" | "ma" | "" => Some(v),
        "µa/mhz" | "ua/mhz" => Some(v / 1000.0),
        _ => None,
    }
}

pub fn parse_mass_g(raw: &str) -> Option<f64> {
    let (v, unit) = number_and_unit(raw)?;
    match unit.to_ascii_lowercase().as_str() {
        "g" | "" => Some(v),
        "mg" => Some(v / 1000.0),
        "kg" => Some(v * 1000.0),
        _ => None,
    }
}

fn parse_count(raw: &str) -> Option<u32> {
    let (v, unit) = number_and_unit(raw)?;
    (unit.is_empty() && v.fract() == 0.0).then_some(v as u32)
}

/// Leading pin count and body dimensions of supplier package strings such
/// as `44-TQFP (10x10)`.
fn package_hints(raw: &str) -> (Option<u32>, Option<[f64; 2]>) {
    static PINS: OnceLock<Regex> = OnceLock::new();
    static DIMS: OnceLock<Regex> = OnceLock::new();
    let pins = PINS.get_or_init(|| Regex::new(r"^\s*([0-9]+)-").unwrap());
    let dims = DIMS.get_or_init(|| Regex::new(r"\(([0-9.]+)\s*[xX×]\s*([0-9.]+)\)").unwrap());
    let p = pins.captures(raw).and_then(|c| c[1].parse().ok());
    let d = dims
        .captures(raw)
        .and_then(|c| Some([c[1].parse().ok()?, c[2].parse().ok()?]));
    (p, d)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MappedAttributes {
    pub attributes: Attributes,
    /// Package family derived from the supplier package string.
    pub package_type: Option<String>,
    pub pin_hint: Option<u32>,
    /// Package body dimensions in mm, when the catalog states them.
    pub package_dims: Option<[f64; 2]>,
    pub warnings: Vec<String>,
}

/// Maps catalog attribute names onto canonical keys and parses the values.
/// Each canonical key is filled from at most one catalog attribute: the one
/// with the highest name similarity (ties to the lexicographically smaller
/// name).
pub fn map_attributes(rec: &CatalogRecord, aliases: &PackageAliases) -> MappedAttributes {
    let mut out = MappedAttributes::default();
    let mut chosen: BTreeMap<Canonical, (&str, &str, f64)> = BTreeMap::new();
    for (name, value) in &rec.attributes {
        let Some((key, score)) = canonical_for(name) else { continue };
        match chosen.get(&key) {
            Some((prev, _, s)) if *s >= score => {
                out.warnings.push(format!("`{name}` dropped: `{prev}` already maps to the same attribute"));
            }
            Some((prev, _, _)) => {
                out.warnings.push(format!("`{prev}` dropped: `{name}` maps to the same attribute"));
                chosen.insert(key, (name, value, score));
            }
            None => {
                chosen.insert(key, (name, value, score));
            }
        }
    }

    for (key, (name, value, _)) in chosen {
        let a = &mut out.attributes;
        let ok = match key {
            Canonical::SupplierPackage => {
                let value = value.trim();
                a.supplier_package = Some(value.to_string());
                out.package_type = aliases.family(value).map(str::to_string);
                let (pins, dims) = package_hints(value);
                out.pin_hint = pins;
                out.package_dims = dims;
                !value.is_empty()
            }
            Canonical::PinCount => {
                a.pin_count = parse_count(value);
                a.pin_count.is_some()
            }
            Canonical::MemorySize => {
                a.memory_size = parse_memory_kb(value);
                a.memory_size.is_some()
            }
            Canonical::MaxFrequency => {
                a.max_frequency = parse_frequency_mhz(value);
                a.max_frequency.is_some()
            }
            Canonical::CoreArchitecture => {
                let v = value.trim();
                a.core_architecture = (!v.is_empty()).then(|| v.to_string());
                a.core_architecture.is_some()
            }
            Canonical::CurrentPerMhz => {
                a.active_current_per_mhz = parse_current_ma_per_mhz(value);
                a.active_current_per_mhz.is_some()
            }
            Canonical::Mass => {
                a.mass = parse_mass_g(value);
                a.mass.is_some()
            }
        };
        if !ok {
            out.warnings.push(format!("`{name}`: cannot parse `{value}`"));
        }
    }
    if out.attributes.pin_count.is_none() {
        out.attributes.pin_count = out.pin_hint;
    }
    out
}

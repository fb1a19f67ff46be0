//! PCB layout ingestion.
//!
//! [`parse_design`] turns an EAGLE `.brd` or a neutral inventory JSON into a
//! [`DesignInventory`]. Layout files go through three steps: the format
//! reader produces [`RawElement`]s, each element is categorized and measured,
//! and identical elements are merged into parts with a quantity.

pub mod eagle;
pub mod package;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inventory::{
    passive_part_id, ActiveKind, BoardSpec, Category, DesignInventory, Part, PassiveKind,
};
use package::{size_code, PackageAliases};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    EagleBrd,
    NeutralJson,
    Auto,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "eagle" | "brd" | "eagle_brd" => Ok(Format::EagleBrd),
            "json" | "neutral" | "neutral_json" => Ok(Format::NeutralJson),
            "auto" => Ok(Format::Auto),
            other => Err(format!("unknown format `{other}` (expected eagle, json or auto)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("malformed {format} at byte {offset}: {message}")]
    Syntax {
        format: &'static str,
        offset: usize,
        message: String,
    },
    #[error("no outline")]
    NoOutline,
    #[error("unrecognized file format")]
    UnknownFormat,
    #[error("{0}")]
    Structure(String),
}

/// One placed element as read from a layout file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawElement {
    pub designator: String,
    /// Part value / manufacturer name, when the file has one.
    #[serde(default)]
    pub value: String,
    pub library_footprint: String,
    pub pad_count: u32,
    /// Pad centres in footprint coordinates, mm.
    #[serde(default)]
    pub pads: Vec<[f64; 2]>,
    /// (width, height) mm after rotation.
    pub silkscreen_bbox: Option<(f64, f64)>,
    pub position: (f64, f64),
    pub connected_net_count: u32,
}

impl RawElement {
    pub fn designator_prefix(&self) -> String {
        self.designator
            .chars()
            .take_while(|c| c.is_ascii_alphabetic())
            .collect::<String>()
            .to_ascii_uppercase()
    }

    fn bbox_area(&self) -> f64 {
        self.silkscreen_bbox.map(|(w, h)| w * h).unwrap_or(0.0)
    }
}

/// Fiducials and mounting hardware never enter the inventory.
pub fn is_excluded(e: &RawElement) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| {
        Regex::new(r"(?i)fiducial|^fid[0-9]*$|^fid[-_]|mounting|mount[-_]?hole|^hole|^mtg|screw|^h[0-9]+$").unwrap()
    });
    re.is_match(&e.designator) || re.is_match(&e.library_footprint)
}

fn passive_prefix(designator: &str) -> Option<PassiveKind> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"^([RCL])[0-9]+").unwrap());
    re.captures(designator).map(|c| match &c[1] {
        "R" => PassiveKind::Resistor,
        "C" => PassiveKind::Capacitor,
        _ => PassiveKind::Inductor,
    })
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Three pad centres that are not collinear and whose pairwise distances
/// stay within a factor of two of each other.
pub fn is_triangular(pads: &[[f64; 2]]) -> bool {
    let [p, q, r] = match pads {
        [p, q, r] => [*p, *q, *r],
        _ => return false,
    };
    let d = [dist(p, q), dist(q, r), dist(p, r)];
    let max = d.iter().cloned().fold(0.0, f64::max);
    let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || min / max < 0.5 {
        return false;
    }
    let cross = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    cross.abs() > 1e-6 * max * max
}

const COORD_TOL: f64 = 0.01;

/// Eight pads in two parallel rows of four with mirrored positions along
/// the row axis, as on SO-8 and similar dual-row packages.
pub fn is_symmetric_dual_row(pads: &[[f64; 2]]) -> bool {
    if pads.len() != 8 {
        return false;
    }
    (0..2).any(|axis| {
        let along = 1 - axis;
        let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();
        for p in pads {
            match rows.iter_mut().find(|(c, _)| (c - p[axis]).abs() < COORD_TOL) {
                Some((_, members)) => members.push(p[along]),
                None => rows.push((p[axis], vec![p[along]])),
            }
        }
        if rows.len() != 2 || rows.iter().any(|(_, m)| m.len() != 4) {
            return false;
        }
        for (_, m) in rows.iter_mut() {
            m.sort_by(f64::total_cmp);
        }
        rows[0].1.iter().zip(&rows[1].1).all(|(a, b)| (a - b).abs() < COORD_TOL)
    })
}

/// Element with the densest net membership on the board. Ties go to the
/// larger silkscreen area, then to the lexicographically smaller designator.
fn most_connected<'a>(all: &'a [RawElement]) -> Option<&'a RawElement> {
    all.iter().filter(|e| !is_excluded(e)).max_by(|a, b| {
        a.connected_net_count
            .cmp(&b.connected_net_count)
            .then(a.bbox_area().total_cmp(&b.bbox_area()))
            .then(b.designator.cmp(&a.designator))
    })
}

/// Categorizes one element. Rules apply in order: designator prefix,
/// footprint topology, connection density, and Misc as the fallback.
pub fn categorize_element(e: &RawElement, all: &[RawElement]) -> Category {
    let prefix = e.designator_prefix();
    if let Some(kind) = passive_prefix(&e.designator) {
        if size_code(&e.library_footprint).is_some() {
            return Category::Passive(kind);
        }
    }
    if prefix == "J" || prefix == "X" {
        return Category::Misc;
    }

    match e.pad_count {
        2 => {
            return if prefix == "D" {
                Category::Active(ActiveKind::Diode)
            } else {
                Category::Misc
            }
        }
        3 if is_triangular(&e.pads) => return Category::Active(ActiveKind::Transistor),
        n if n >= 16 => return Category::Ic,
        8 if is_symmetric_dual_row(&e.pads) => return Category::Ic,
        _ => {}
    }

    if e.pad_count >= 4 {
        if let Some(top) = most_connected(all) {
            if top.designator == e.designator && top.connected_net_count > 0 {
                return Category::Ic;
            }
        }
    }
    Category::Misc
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackageMeasure {
    pub package_type: String,
    /// mm²
    pub area: f64,
    pub dims: Option<[f64; 2]>,
    /// Set when the silkscreen box is missing or degenerate.
    pub zero_size: bool,
}

/// Package token and silkscreen area of an element.
pub fn measure_package(e: &RawElement, aliases: &PackageAliases) -> PackageMeasure {
    let package_type = match (passive_prefix(&e.designator), size_code(&e.library_footprint)) {
        (Some(_), Some(code)) => code,
        _ => aliases.normalize(&e.library_footprint),
    };
    match e.silkscreen_bbox {
        Some((w, h)) if w > 0.0 && h > 0.0 => PackageMeasure {
            package_type,
            area: w * h,
            dims: Some([w, h]),
            zero_size: false,
        },
        _ => {
            log::warn!("{}: zero-size package outline", e.designator);
            PackageMeasure {
                package_type,
                area: 0.0,
                dims: None,
                zero_size: true,
            }
        }
    }
}

/// Builds the part list from raw elements: exclusion, categorization,
/// measurement, and merging of identical elements into one part.
pub fn elements_to_parts(elements: &[RawElement], aliases: &PackageAliases) -> Vec<Part> {
    let mut parts: Vec<Part> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for e in elements.iter().filter(|e| !is_excluded(e)) {
        let category = categorize_element(e, elements);
        let measure = measure_package(e, aliases);
        let (part_id, name) = match category {
            Category::Passive(kind) => (
                passive_part_id(kind, &measure.package_type).0,
                format!("{} {}", kind.as_str(), measure.package_type),
            ),
            _ => {
                let name = if e.value.trim().is_empty() {
                    e.library_footprint.clone()
                } else {
                    e.value.trim().to_string()
                };
                (format!("{}@{}", name, e.library_footprint), name)
            }
        };
        match index.get(&part_id) {
            Some(&i) => {
                parts[i].quantity += 1;
                parts[i].designators.push(e.designator.clone());
            }
            None => {
                let mut part = Part::new(part_id.clone(), name, category)
                    .with_package(measure.package_type, measure.area);
                part.package_dims = measure.dims;
                part.designator_prefix = e.designator_prefix();
                part.designators.push(e.designator.clone());
                index.insert(part_id, parts.len());
                parts.push(part);
            }
        }
    }
    parts
}

/// File stem used as the design identifier.
pub fn design_id_from_name(source_name: &str) -> String {
    Path::new(source_name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "design".to_string())
}

fn detect(bytes: &[u8]) -> Result<Format, ParseError> {
    let start = bytes
        .iter()
        .position(|b| !b.is_ascii_whitespace() && *b != 0xEF && *b != 0xBB && *b != 0xBF);
    match start.map(|i| bytes[i]) {
        Some(b'{') => Ok(Format::NeutralJson),
        Some(b'<') => Ok(Format::EagleBrd),
        _ => Err(ParseError::UnknownFormat),
    }
}

/// Byte offset of a 1-based (line, column) position.
pub(crate) fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            let col_bytes: usize = l.chars().take(column.saturating_sub(1)).map(char::len_utf8).sum();
            return offset + col_bytes;
        }
        offset += l.len();
    }
    text.len()
}

/// Parses a design file. `source_name` is recorded in the inventory and its
/// stem becomes the design id for layout files.
pub fn parse_design(
    bytes: &[u8],
    format: Format,
    source_name: &str,
    aliases: &PackageAliases,
) -> Result<DesignInventory, ParseError> {
    let format = match format {
        Format::Auto => detect(bytes)?,
        f => f,
    };
    match format {
        Format::NeutralJson => {
            let mut inv = DesignInventory::from_json(bytes).map_err(|e| {
                let text = String::from_utf8_lossy(bytes);
                ParseError::Syntax {
                    format: "JSON",
                    offset: byte_offset(&text, e.line(), e.column()),
                    message: e.to_string(),
                }
            })?;
            if inv.source_file.is_empty() {
                inv.source_file = source_name.to_string();
            }
            Ok(inv)
        }
        Format::EagleBrd => {
            let text = std::str::from_utf8(bytes).map_err(|e| ParseError::Syntax {
                format: "XML",
                offset: e.valid_up_to(),
                message: "invalid UTF-8".into(),
            })?;
            let board = eagle::read_board(text)?;
            Ok(DesignInventory {
                design_id: design_id_from_name(source_name),
                source_file: source_name.to_string(),
                board: BoardSpec::new(board.area, board.layer_count),
                parts: elements_to_parts(&board.elements, aliases),
            })
        }
        Format::Auto => unreachable!(),
    }
}

//! EAGLE 6+ XML board reader.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use roxmltree::{Document, Node};

use super::{byte_offset, ParseError, RawElement};

const OUTLINE_LAYER: &str = "20";
const SILK_LAYERS: [&str; 4] = ["21", "22", "51", "52"];

#[derive(Debug, Clone, PartialEq)]
pub struct EagleBoard {
    /// mm²
    pub area: f64,
    pub layer_count: u32,
    pub elements: Vec<RawElement>,
}

#[derive(Default)]
struct BBox {
    min: [f64; 2],
    max: [f64; 2],
    empty: bool,
}

impl BBox {
    fn new() -> Self {
        BBox {
            min: [f64::INFINITY; 2],
            max: [f64::NEG_INFINITY; 2],
            empty: true,
        }
    }

    fn add(&mut self, x: f64, y: f64) {
        self.min[0] = self.min[0].min(x);
        self.min[1] = self.min[1].min(y);
        self.max[0] = self.max[0].max(x);
        self.max[1] = self.max[1].max(y);
        self.empty = false;
    }

    fn size(&self) -> Option<(f64, f64)> {
        (!self.empty).then(|| (self.max[0] - self.min[0], self.max[1] - self.min[1]))
    }
}

fn num(node: Node, attr: &str) -> Result<f64, ParseError> {
    let raw = node
        .attribute(attr)
        .ok_or_else(|| ParseError::Structure(format!("<{}> without `{attr}`", node.tag_name().name())))?;
    raw.trim()
        .parse()
        .map_err(|_| ParseError::Structure(format!("<{}> has non-numeric `{attr}`: {raw}", node.tag_name().name())))
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|n| n.has_tag_name(name))
}

/// Adds the extremities of drawing primitives on `layers` to `bbox`.
fn collect_shapes(parent: Node, layers: &[&str], bbox: &mut BBox) -> Result<(), ParseError> {
    for n in parent.children().filter(|n| n.is_element()) {
        let on_layer = n.attribute("layer").is_some_and(|l| layers.contains(&l));
        if !on_layer {
            continue;
        }
        match n.tag_name().name() {
            "wire" | "rectangle" => {
                bbox.add(num(n, "x1")?, num(n, "y1")?);
                bbox.add(num(n, "x2")?, num(n, "y2")?);
            }
            "circle" => {
                let (x, y, r) = (num(n, "x")?, num(n, "y")?, num(n, "radius")?);
                bbox.add(x - r, y - r);
                bbox.add(x + r, y + r);
            }
            "polygon" => {
                for v in n.children().filter(|v| v.has_tag_name("vertex")) {
                    bbox.add(num(v, "x")?, num(v, "y")?);
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// Copper layers from the design rules' layer setup string, e.g.
/// `(1*2*15*16)`, or from the active layers 1–16 when absent.
fn copper_layers(board: Node, drawing: Node) -> u32 {
    let setup = child(board, "designrules").and_then(|dr| {
        dr.children()
            .filter(|p| p.has_tag_name("param"))
            .find(|p| p.attribute("name") == Some("layerSetup"))
            .and_then(|p| p.attribute("value"))
    });
    if let Some(setup) = setup {
        let layers: BTreeSet<u32> = setup
            .split(|c: char| !c.is_ascii_digit())
            .filter_map(|t| t.parse().ok())
            .filter(|n| (1..=16).contains(n))
            .collect();
        if !layers.is_empty() {
            return layers.len() as u32;
        }
    }
    let active = child(drawing, "layers")
        .map(|ls| {
            ls.children()
                .filter(|l| l.has_tag_name("layer"))
                .filter(|l| l.attribute("active") != Some("no"))
                .filter_map(|l| l.attribute("number")?.parse::<u32>().ok())
                .filter(|n| (1..=16).contains(n))
                .count() as u32
        })
        .unwrap_or(0);
    if active == 0 {
        2
    } else {
        active
    }
}

struct Footprint {
    pads: Vec<[f64; 2]>,
    silk: Option<(f64, f64)>,
}

fn read_packages(board: Node) -> Result<HashMap<(String, String), Footprint>, ParseError> {
    let mut out = HashMap::new();
    let Some(libraries) = child(board, "libraries") else {
        return Ok(out);
    };
    for lib in libraries.children().filter(|n| n.has_tag_name("library")) {
        let lib_name = lib.attribute("name").unwrap_or_default().to_string();
        let Some(packages) = child(lib, "packages") else { continue };
        for pkg in packages.children().filter(|n| n.has_tag_name("package")) {
            let name = pkg.attribute("name").unwrap_or_default().to_string();
            let mut pads = Vec::new();
            let mut pad_box = BBox::new();
            for p in pkg.children().filter(|n| n.has_tag_name("smd") || n.has_tag_name("pad")) {
                let (x, y) = (num(p, "x")?, num(p, "y")?);
                pads.push([x, y]);
                let (hw, hh) = if p.has_tag_name("smd") {
                    (num(p, "dx")? / 2.0, num(p, "dy")? / 2.0)
                } else {
                    let d = p.attribute("diameter").and_then(|d| d.parse::<f64>().ok()).unwrap_or(0.0);
                    (d / 2.0, d / 2.0)
                };
                pad_box.add(x - hw, y - hh);
                pad_box.add(x + hw, y + hh);
            }
            let mut silk = BBox::new();
            collect_shapes(pkg, &SILK_LAYERS, &mut silk)?;
            let silk = silk.size().or_else(|| pad_box.size());
            out.insert((lib_name.clone(), name), Footprint { pads, silk });
        }
    }
    Ok(out)
}

/// Quarter-turn rotations swap the footprint's width and height.
fn rotation_swaps_axes(rot: Option<&str>) -> bool {
    let Some(rot) = rot else { return false };
    let digits: String = rot.chars().filter(|c| c.is_ascii_digit() || *c == '.').collect();
    let angle: f64 = digits.parse().unwrap_or(0.0);
    let quarter = (angle / 90.0).round() as i64;
    (angle - quarter as f64 * 90.0).abs() < 1e-6 && quarter.rem_euclid(2) == 1
}

pub fn read_board(text: &str) -> Result<EagleBoard, ParseError> {
    let doc = Document::parse_with_options(
        text,
        roxmltree::ParsingOptions {
            allow_dtd: true,
            ..Default::default()
        },
    ).map_err(|e| {
        let pos = e.pos();
        ParseError::Syntax {
            format: "XML",
            offset: byte_offset(text, pos.row as usize, pos.col as usize),
            message: e.to_string(),
        }
    })?;
    let root = doc.root_element();
    if !root.has_tag_name("eagle") {
        return Err(ParseError::Structure(format!("expected <eagle>, found <{}>", root.tag_name().name())));
    }
    let drawing = child(root, "drawing").ok_or_else(|| ParseError::Structure("missing <drawing>".into()))?;
    let board = child(drawing, "board").ok_or_else(|| ParseError::Structure("missing <board>".into()))?;

    let mut outline = BBox::new();
    if let Some(plain) = child(board, "plain") {
        collect_shapes(plain, &[OUTLINE_LAYER], &mut outline)?;
    }
    let area = match outline.size() {
        Some((w, h)) if w > 0.0 && h > 0.0 => w * h,
        _ => return Err(ParseError::NoOutline),
    };
    let layer_count = copper_layers(board, drawing);
    let packages = read_packages(board)?;

    let mut nets: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    if let Some(signals) = child(board, "signals") {
        for sig in signals.children().filter(|n| n.has_tag_name("signal")) {
            let name = sig.attribute("name").unwrap_or_default();
            for cr in sig.children().filter(|n| n.has_tag_name("contactref")) {
                if let Some(el) = cr.attribute("element") {
                    nets.entry(el).or_default().insert(name);
                }
            }
        }
    }

    let mut elements = Vec::new();
    if let Some(els) = child(board, "elements") {
        for e in els.children().filter(|n| n.has_tag_name("element")) {
            let designator = e
                .attribute("name")
                .ok_or_else(|| ParseError::Structure("<element> without `name`".into()))?;
            let library = e.attribute("library").unwrap_or_default();
            let package = e.attribute("package").unwrap_or_default();
            let fp = packages.get(&(library.to_string(), package.to_string()));
            let silk = fp.and_then(|f| f.silk).map(|(w, h)| {
                if rotation_swaps_axes(e.attribute("rot")) {
                    (h, w)
                } else {
                    (w, h)
                }
            });
            let pads = fp.map(|f| f.pads.clone()).unwrap_or_default();
            elements.push(RawElement {
                designator: designator.to_string(),
                value: e.attribute("value").unwrap_or_default().to_string(),
                library_footprint: package.to_string(),
                pad_count: pads.len() as u32,
                pads,
                silkscreen_bbox: silk,
                position: (num(e, "x")?, num(e, "y")?),
                connected_net_count: nets.get(designator).map_or(0, |s| s.len() as u32),
            });
        }
    }

    Ok(EagleBoard {
        area,
        layer_count,
        elements,
    })
}

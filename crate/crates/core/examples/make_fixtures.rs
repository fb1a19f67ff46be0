//! Regenerates the bundled fixtures under `fixtures/`.
//!
//! ```text
//! cargo run -p delta-lca-core --example make_fixtures
//! ```
//!
//! The three development-board layouts mirror the published statistics of
//! well-known boards (outline, layer count, component and IC counts). Their
//! contents are nested so that the expected ordering holds by construction:
//! everything on a smaller board either reappears on the larger one or is
//! dominated by a part that only the larger one has.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use delta_lca_core::catalog::FixtureProvider;
use delta_lca_core::inventory::{Attributes, BoardSpec, Category, DesignInventory, Part};

struct Package {
    name: &'static str,
    pads: Vec<(f64, f64)>,
    /// Silkscreen body, mm. `None` leaves the pads as the only geometry.
    body: Option<(f64, f64)>,
    through_hole: bool,
}

fn two_pad(name: &'static str, w: f64, h: f64) -> Package {
    Package {
        name,
        pads: vec![(-w / 2.0, 0.0), (w / 2.0, 0.0)],
        body: Some((w, h)),
        through_hole: false,
    }
}

/// `n` pads spread evenly over the four sides of a `w`×`h` body.
fn quad(name: &'static str, n: usize, w: f64, h: f64) -> Package {
    let per_side = n / 4;
    let mut pads = Vec::new();
    for side in 0..4 {
        for k in 0..per_side {
            let t = (k as f64 + 0.5) / per_side as f64 - 0.5;
            pads.push(match side {
                0 => (t * w * 0.8, -h / 2.0),
                1 => (w / 2.0, t * h * 0.8),
                2 => (-t * w * 0.8, h / 2.0),
                _ => (-w / 2.0, -t * h * 0.8),
            });
        }
    }
    Package {
        name,
        pads,
        body: Some((w, h)),
        through_hole: false,
    }
}

/// Two rows of `n / 2` pads.
fn dual(name: &'static str, n: usize, w: f64, h: f64) -> Package {
    let per_row = n / 2;
    let pitch = h / per_row as f64;
    let mut pads = Vec::new();
    for row in [-1.0, 1.0] {
        for k in 0..per_row {
            pads.push((row * w / 2.0, (k as f64 - (per_row as f64 - 1.0) / 2.0) * pitch));
        }
    }
    Package {
        name,
        pads,
        body: Some((w, h)),
        through_hole: false,
    }
}

fn row(name: &'static str, n: usize, pitch: f64) -> Package {
    Package {
        name,
        pads: (0..n).map(|k| (k as f64 * pitch, 0.0)).collect(),
        body: Some((n as f64 * pitch, pitch)),
        through_hole: true,
    }
}

fn library() -> BTreeMap<&'static str, Package> {
    let lib = vec![
        two_pad("R0402", 1.0, 0.5),
        two_pad("C0402", 1.0, 0.5),
        two_pad("L0402", 1.0, 0.5),
        two_pad("R0603", 1.6, 0.8),
        two_pad("C0603", 1.6, 0.8),
        two_pad("C0805", 2.0, 1.25),
        two_pad("SOD-123", 2.7, 1.6),
        two_pad("SOD-323", 1.7, 1.25),
        two_pad("SMA", 4.3, 2.6),
        two_pad("LED-0603", 1.6, 0.8),
        two_pad("XTAL-32K", 3.2, 1.5),
        two_pad("BLM-0603", 1.6, 0.8),
        Package {
            name: "SOT-23",
            pads: vec![(-0.95, -1.1), (0.95, -1.1), (0.0, 1.1)],
            body: Some((2.9, 1.3)),
            through_hole: false,
        },
        dual("SOIC-8", 8, 4.9, 3.9),
        dual("UDFN-8", 8, 2.0, 3.0),
        dual("TSSOP-20", 20, 6.5, 4.4),
        quad("QFN-32", 32, 5.0, 5.0),
        quad("QFN-24", 24, 4.0, 4.0),
        quad("QFN-48-7X7", 48, 7.0, 7.0),
        quad("QFN-48-6X6", 48, 6.0, 6.0),
        quad("TQFP-44", 44, 10.0, 10.0),
        quad("TQFP-48", 48, 7.0, 7.0),
        quad("TQFP-32", 32, 7.0, 7.0),
        quad("LGA-24", 24, 3.5, 3.0),
        quad("CRYSTAL-3225", 4, 3.2, 2.5),
        quad("TS-1187", 4, 5.1, 5.1),
        row("USB-MICRO-B", 5, 0.65),
        row("HDR-1X14", 14, 2.54),
        row("HDR-1X8", 8, 2.54),
        row("HDR-2X3", 6, 2.54),
        row("U.FL", 3, 1.0),
        row("DCJACK", 3, 4.5),
        Package {
            name: "FIDUCIAL-1MM",
            pads: vec![(0.0, 0.0)],
            body: None,
            through_hole: false,
        },
        Package {
            name: "MOUNT-HOLE-3.2",
            pads: vec![(0.0, 0.0)],
            body: None,
            through_hole: true,
        },
    ];
    lib.into_iter().map(|p| (p.name, p)).collect()
}

/// (designator prefix, value, package, count)
type Bom = Vec<(&'static str, &'static str, &'static str, usize)>;

fn shared_ics() -> Bom {
    vec![
        ("U", "LMV358IDR", "SOIC-8", 5),
        ("U", "24LC256-I/SN", "SOIC-8", 4),
        ("U", "ATECC508A-MAHDA", "UDFN-8", 2),
    ]
}

fn board2_bom() -> Bom {
    let mut bom = shared_ics();
    bom.extend([
        ("U", "ATSAMD21G18A-AU", "TQFP-48", 1),
        ("U", "ATA8520E-GHQW", "QFN-32", 1),
        ("U", "BQ24195LRGET", "QFN-24", 1),
        ("U", "MP2307DN", "SOIC-8", 6),
        ("J", "USB_MICRO", "USB-MICRO-B", 1),
        ("J", "HEADER14", "HDR-1X14", 2),
        ("J", "ANTENNA", "U.FL", 1),
        ("Y", "32.768kHz", "XTAL-32K", 1),
        ("SW", "RESET", "TS-1187", 1),
        ("FB", "BLM18PG221", "BLM-0603", 1),
        ("Q", "MMBT3904", "SOT-23", 1),
        ("D", "MBR0520", "SOD-123", 1),
        ("D", "GREEN", "LED-0603", 2),
        ("D", "PMEG2010", "SOD-323", 1),
        ("R", "10k", "R0402", 18),
        ("C", "100n", "C0402", 24),
        ("C", "1u", "C0603", 8),
        ("R", "1k", "R0603", 4),
        ("L", "10u", "L0402", 2),
        ("C", "22u", "C0805", 4),
    ]);
    bom
}

fn board1_bom() -> Bom {
    let mut bom = shared_ics();
    bom.extend([
        ("U", "MP2307DN", "SOIC-8", 6),
        ("U", "ATMEGA32U4-AU", "TQFP-44", 1),
        ("U", "ATMEGA16U2-MU", "QFN-32", 1),
        ("U", "ATMEGA328P-AU", "TQFP-32", 1),
        ("J", "USB_MICRO", "USB-MICRO-B", 1),
        ("J", "HEADER14", "HDR-1X14", 2),
        ("J", "ANTENNA", "U.FL", 1),
        ("J", "POWER", "DCJACK", 1),
        ("J", "ICSP", "HDR-2X3", 1),
        ("Y", "32.768kHz", "XTAL-32K", 1),
        ("Y", "16MHz", "CRYSTAL-3225", 1),
        ("SW", "RESET", "TS-1187", 1),
        ("FB", "BLM18PG221", "BLM-0603", 1),
        ("Q", "MMBT3904", "SOT-23", 1),
        ("Q", "FDN340P", "SOT-23", 1),
        ("D", "MBR0520", "SOD-123", 1),
        ("D", "GREEN", "LED-0603", 2),
        ("D", "YELLOW", "LED-0603", 2),
        ("D", "SS14", "SMA", 1),
        ("R", "10k", "R0402", 16),
        ("C", "100n", "C0402", 22),
        ("C", "1u", "C0603", 10),
        ("R", "1k", "R0603", 6),
        ("L", "10u", "L0402", 1),
        ("C", "22u", "C0805", 4),
    ]);
    bom
}

fn board3_bom() -> Bom {
    let mut bom = shared_ics();
    bom.extend([
        ("U", "LMV358IDR", "SOIC-8", 3),
        ("U", "MP2307DN", "SOIC-8", 6),
        ("U", "ATMEGA32U4-AU", "TQFP-44", 1),
        ("U", "ATMEGA4809-MFR", "QFN-48-7X7", 1),
        ("U", "ESP32-D0WDQ6", "QFN-48-6X6", 1),
        ("U", "TXB0108PWR", "TSSOP-20", 2),
        ("U", "LSM9DS1TR", "LGA-24", 1),
        ("J", "USB_MICRO", "USB-MICRO-B", 1),
        ("J", "HEADER14", "HDR-1X14", 2),
        ("J", "HEADER8", "HDR-1X8", 2),
        ("J", "ANTENNA", "U.FL", 1),
        ("J", "POWER", "DCJACK", 1),
        ("J", "ICSP", "HDR-2X3", 1),
        ("Y", "32.768kHz", "XTAL-32K", 1),
        ("Y", "16MHz", "CRYSTAL-3225", 1),
        ("SW", "RESET", "TS-1187", 1),
        ("FB", "BLM18PG221", "BLM-0603", 1),
        ("Q", "MMBT3904", "SOT-23", 1),
        ("Q", "FDN340P", "SOT-23", 2),
        ("D", "MBR0520", "SOD-123", 1),
        ("D", "GREEN", "LED-0603", 2),
        ("D", "YELLOW", "LED-0603", 2),
        ("D", "BLUE", "LED-0603", 1),
        ("D", "SS14", "SMA", 2),
        ("R", "10k", "R0402", 20),
        ("C", "100n", "C0402", 28),
        ("C", "1u", "C0603", 10),
        ("R", "1k", "R0603", 4),
        ("L", "10u", "L0402", 2),
        ("C", "22u", "C0805", 4),
    ]);
    bom
}

struct BoardDef {
    file: &'static str,
    width: f64,
    height: f64,
    layer_setup: &'static str,
    bom: Bom,
}

fn write_package(out: &mut String, p: &Package) {
    let _ = writeln!(out, "<package name=\"{}\">", p.name);
    for (k, (x, y)) in p.pads.iter().enumerate() {
        if p.through_hole {
            let _ = writeln!(out, "<pad name=\"{}\" x=\"{x:.4}\" y=\"{y:.4}\" drill=\"0.8\" diameter=\"1.4\"/>", k + 1);
        } else {
            let _ = writeln!(
                out,
                "<smd name=\"{}\" x=\"{x:.4}\" y=\"{y:.4}\" dx=\"0.3\" dy=\"0.3\" layer=\"1\"/>",
                k + 1
            );
        }
    }
    if let Some((w, h)) = p.body {
        let (x0, y0, x1, y1) = (-w / 2.0, -h / 2.0, w / 2.0, h / 2.0);
        for (a, b, c, d) in [(x0, y0, x1, y0), (x1, y0, x1, y1), (x1, y1, x0, y1), (x0, y1, x0, y0)] {
            let _ = writeln!(
                out,
                "<wire x1=\"{a:.4}\" y1=\"{b:.4}\" x2=\"{c:.4}\" y2=\"{d:.4}\" width=\"0.127\" layer=\"21\"/>"
            );
        }
    }
    out.push_str("</package>\n");
}

fn board_xml(def: &BoardDef, lib: &BTreeMap<&'static str, Package>) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<!DOCTYPE eagle SYSTEM \"eagle.dtd\">\n");
    out.push_str("<eagle version=\"7.7.0\">\n<drawing>\n<layers>\n");
    for (n, name) in [(1, "Top"), (2, "Route2"), (15, "Route15"), (16, "Bottom"), (20, "Dimension"), (21, "tPlace"), (51, "tDocu")] {
        let _ = writeln!(out, "<layer number=\"{n}\" name=\"{name}\" color=\"4\" fill=\"1\" visible=\"yes\" active=\"yes\"/>");
    }
    out.push_str("</layers>\n<board>\n<plain>\n");
    let (w, h) = (def.width, def.height);
    for (a, b, c, d) in [(0.0, 0.0, w, 0.0), (w, 0.0, w, h), (w, h, 0.0, h), (0.0, h, 0.0, 0.0)] {
        let _ = writeln!(out, "<wire x1=\"{a}\" y1=\"{b}\" x2=\"{c}\" y2=\"{d}\" width=\"0\" layer=\"20\"/>");
    }
    out.push_str("</plain>\n<libraries>\n<library name=\"fixture\">\n<packages>\n");
    let mut used: Vec<&str> = def.bom.iter().map(|(_, _, p, _)| *p).collect();
    used.extend(["FIDUCIAL-1MM", "MOUNT-HOLE-3.2"]);
    used.sort();
    used.dedup();
    for name in &used {
        write_package(&mut out, &lib[name]);
    }
    out.push_str("</packages>\n</library>\n</libraries>\n");
    let _ = writeln!(
        out,
        "<designrules name=\"fixture\">\n<param name=\"layerSetup\" value=\"{}\"/>\n</designrules>",
        def.layer_setup
    );

    // Elements in a grid; every pad of every element sits on its own net
    // except that the first pad shares the ground net.
    let mut elements = Vec::new();
    let mut counters: BTreeMap<&str, usize> = BTreeMap::new();
    for (prefix, value, package, count) in &def.bom {
        for _ in 0..*count {
            let n = counters.entry(prefix).or_insert(0);
            *n += 1;
            elements.push((format!("{prefix}{n}"), *value, *package));
        }
    }
    for k in 1..=2 {
        elements.push((format!("FID{k}"), "", "FIDUCIAL-1MM"));
    }
    for k in 1..=4 {
        elements.push((format!("H{k}"), "", "MOUNT-HOLE-3.2"));
    }
    let cols = 14usize;
    out.push_str("<elements>\n");
    for (i, (name, value, package)) in elements.iter().enumerate() {
        let x = 2.0 + (i % cols) as f64 * (w - 4.0) / cols as f64;
        let y = 2.0 + (i / cols) as f64 * (h - 4.0) / (elements.len() / cols + 1) as f64;
        let rot = if i % 5 == 0 { " rot=\"R90\"" } else { "" };
        let _ = writeln!(
            out,
            "<element name=\"{name}\" library=\"fixture\" package=\"{package}\" value=\"{value}\" x=\"{x:.3}\" y=\"{y:.3}\"{rot}/>"
        );
    }
    out.push_str("</elements>\n<signals>\n");
    let _ = writeln!(out, "<signal name=\"GND\">");
    for (name, _, package) in &elements {
        if !lib[package].pads.is_empty() && !name.starts_with("FID") && !name.starts_with('H') {
            let _ = writeln!(out, "<contactref element=\"{name}\" pad=\"1\"/>");
        }
    }
    out.push_str("</signal>\n");
    for (name, _, package) in &elements {
        if name.starts_with("FID") || name.starts_with('H') {
            continue;
        }
        for pad in 2..=lib[package].pads.len() {
            let _ = writeln!(
                out,
                "<signal name=\"N_{name}_{pad}\"><contactref element=\"{name}\" pad=\"{pad}\"/></signal>"
            );
        }
    }
    out.push_str("</signals>\n</board>\n</drawing>\n</eagle>\n");
    out
}

fn simple_board(lib: &BTreeMap<&'static str, Package>) -> String {
    board_xml(
        &BoardDef {
            file: "simple_2layer.brd",
            width: 50.0,
            height: 40.0,
            layer_setup: "(1*16)",
            bom: vec![
                ("U", "ATMEGA328P-AU", "TQFP-32", 1),
                ("R", "10k", "R0402", 2),
                ("C", "100n", "C0603", 1),
                ("Q", "MMBT3904", "SOT-23", 1),
                ("J", "ICSP", "HDR-2X3", 1),
            ],
        },
        lib,
    )
}

fn catalog() -> Vec<(&'static str, Vec<(&'static str, &'static str)>)> {
    vec![
        (
            "ATMEGA32U4",
            vec![
                ("Core Processor", "AVR"),
                ("Speed", "16MHz"),
                ("Program Memory Size", "32KB (16K x 16)"),
                ("Supplier Device Package", "44-TQFP (10x10)"),
                ("Number of I/O", "26"),
                ("Active Current per MHz", "0.55 mA/MHz"),
            ],
        ),
        (
            "ATMEGA16U2",
            vec![
                ("Core Processor", "AVR"),
                ("Speed", "16MHz"),
                ("Program Memory Size", "16KB"),
                ("Supplier Device Package", "32-VQFN (5x5)"),
                ("Supply Current per MHz", "0.55 mA/MHz"),
            ],
        ),
        (
            "ATMEGA328P",
            vec![
                ("Core Processor", "AVR"),
                ("Speed", "20MHz"),
                ("Program Memory Size", "32KB"),
                ("Supplier Device Package", "32-TQFP (7x7)"),
                ("Active Current per MHz", "0.45 mA/MHz"),
            ],
        ),
        (
            "ATMEGA4809",
            vec![
                ("Core Processor", "AVR"),
                ("Speed", "20MHz"),
                ("Program Memory Size", "48KB"),
                ("Supplier Device Package", "48-VQFN (7x7)"),
                ("Active Current per MHz", "0.45 mA/MHz"),
            ],
        ),
        (
            "ATSAMD21G18A",
            vec![
                ("Core Processor", "ARM Cortex-M0+"),
                ("Speed", "48MHz"),
                ("Program Memory Size", "256KB"),
                ("Supplier Device Package", "48-TQFP (7x7)"),
                ("Active Current per MHz", "70 µA/MHz"),
            ],
        ),
        (
            "ESP32-D0WDQ6",
            vec![
                ("Core Processor", "Xtensa LX6"),
                ("Speed", "240MHz"),
                ("Supplier Device Package", "48-QFN (6x6)"),
                ("Active Current per MHz", "0.17 mA/MHz"),
            ],
        ),
        (
            "LMV358IDR",
            vec![("Supplier Device Package", "8-SOIC"), ("Number of Pins", "8")],
        ),
        (
            "BQ24195LRGET",
            vec![("Supplier Device Package", "24-VQFN (4x4)")],
        ),
    ]
}

fn ic(id: &str, die: f64, node: u32) -> Part {
    let mut p = Part::new(id, id, Category::Ic).with_package("QFN", 25.0);
    p.package_dims = Some([5.0, 5.0]);
    p.designator_prefix = "U".into();
    p.attributes = Attributes {
        die_area: Some(die),
        process_node: Some(node),
        ..Attributes::default()
    };
    p
}

fn passive(id: &str, kind: &str, size: &str, qty: u32) -> Part {
    let mut p = Part::new(id, format!("{kind} {size}"), format!("passive:{kind}").parse().unwrap())
        .with_package(size, if size == "0402" { 0.5 } else { 1.28 })
        .with_quantity(qty);
    p.designator_prefix = kind[..1].to_uppercase();
    p
}

fn misc(id: &str, area: f64) -> Part {
    let mut p = Part::new(id, id, Category::Misc).with_package("HDR", area);
    p.designator_prefix = "J".into();
    p
}

fn inventories() -> Vec<(&'static str, DesignInventory)> {
    let base = vec![
        ic("STM32L031K6", 4.0, 90),
        ic("LMV321", 1.2, 180),
        passive("R_0402", "resistor", "0402", 12),
        passive("C_0603", "capacitor", "0603", 6),
        misc("HEADER6", 15.24),
    ];
    let mut superset = base.clone();
    superset.push(ic("NRF52832-QFAA", 9.0, 55));
    let inv = |id: &str, parts: Vec<Part>, board: BoardSpec| DesignInventory {
        design_id: id.into(),
        source_file: format!("{id}.json"),
        board,
        parts,
    };
    let mut flex_a = BoardSpec::new(900.0, 2);
    flex_a.substrate = "polyimide".into();
    let mut flex_b = BoardSpec::new(1200.0, 2);
    flex_b.substrate = "polyimide".into();
    vec![
        ("superset_a.json", inv("superset_a", superset, BoardSpec::new(1600.0, 2))),
        ("superset_b.json", inv("superset_b", base, BoardSpec::new(1600.0, 2))),
        (
            "disjoint_a.json",
            inv("disjoint_a", vec![misc("TERMINAL-2P", 40.0), misc("SWITCH-DPDT", 60.0)], flex_a),
        ),
        (
            "disjoint_b.json",
            inv(
                "disjoint_b",
                vec![misc("BUZZER", 95.0), misc("RELAY-5V", 310.0).with_quantity(2)],
                flex_b,
            ),
        ),
    ]
}

fn main() -> std::io::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let lib = library();
    let boards = [
        BoardDef {
            file: "leonardo_like.brd",
            width: 68.58,
            height: 60.96,
            layer_setup: "(1*16)",
            bom: board1_bom(),
        },
        BoardDef {
            file: "mkr_fox_like.brd",
            width: 50.2,
            height: 33.8,
            layer_setup: "(1*2*15*16)",
            bom: board2_bom(),
        },
        BoardDef {
            file: "uno_wifi_like.brd",
            width: 68.6,
            height: 53.34,
            layer_setup: "(1*16)",
            bom: board3_bom(),
        },
    ];
    fs::create_dir_all(root.join("boards"))?;
    for def in &boards {
        fs::write(root.join("boards").join(def.file), board_xml(def, &lib))?;
    }
    fs::write(root.join("boards/simple_2layer.brd"), simple_board(&lib))?;

    fs::create_dir_all(root.join("catalog"))?;
    for (name, attrs) in catalog() {
        let attributes: BTreeMap<&str, &str> = attrs.into_iter().collect();
        let body = serde_json::json!({ "matched_name": name, "attributes": attributes });
        let text = serde_json::to_string_pretty(&body).expect("json") + "\n";
        fs::write(root.join("catalog").join(FixtureProvider::file_name(name)), text)?;
    }

    fs::create_dir_all(root.join("inventories"))?;
    for (file, inv) in inventories() {
        fs::write(root.join("inventories").join(file), inv.to_json_pretty() + "\n")?;
    }
    println!("fixtures written to {}", root.display());
    Ok(())
}

//! Release acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.
//!
//! ```text
//! cargo test -p delta-lca-core --test acceptance
//! ```

mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use delta_lca_core::config::Config;
use delta_lca_core::eda::Format;
use delta_lca_core::footprint::{estimate_by_mass, estimate_passive, estimate_substrate, FactorTables, MassFactor};
use delta_lca_core::heuristics::{Claim, HeuristicEdge, HeuristicKind};
use delta_lca_core::inventory::{BoardSpec, InstanceId, PassiveKind};
use delta_lca_core::pipeline::{Direction, BOARD_PART_ID};
use delta_lca_core::solver::{
    apply_rule_and_resolve, brute_force_optimum, build_problem, check_assignment, solve, ComparisonProblem,
    MatchResult, ProblemInstance, Verdict,
};
use delta_lca_core::{Category, DesignInventory, Engine};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn engine() -> Engine {
    Engine::new(Config::load(&Config::bundled_path()).expect("bundled config")).expect("engine")
}

fn load(engine: &Engine, rel: &str) -> DesignInventory {
    let path = fixtures().join(rel);
    let bytes = std::fs::read(&path).expect("fixture");
    let name = path.file_name().unwrap().to_string_lossy().into_owned();
    engine.build_inventory(&bytes, Format::Auto, &name).expect("fixture builds").inventory
}

fn balance(p: &ComparisonProblem, r: &MatchResult) -> (f64, f64) {
    let side = |inst: &[ProblemInstance], flags: &BTreeMap<InstanceId, u8>| -> f64 {
        inst.iter()
            .filter(|i| flags.get(&i.id) == Some(&1))
            .map(|i| i.weight.unwrap_or(0.0))
            .sum()
    };
    (side(&p.a, &r.assignment.c_a), side(&p.b, &r.assignment.c_b))
}

fn toy_ip() -> Outcome {
    let inst = |side: &str, i: usize, w: Option<f64>| ProblemInstance {
        id: InstanceId(format!("{side}{i}")),
        weight: w,
    };
    let edge = |a: usize, b: usize| HeuristicEdge {
        edge_id: format!("h{a}{b}"),
        kind: HeuristicKind::DieSize,
        a_instances: vec![InstanceId(format!("a{a}"))],
        b_instances: vec![InstanceId(format!("b{b}"))],
        claim: Claim::AOverB,
        rationale: String::new(),
    };
    let a = (1..=5).map(|i| inst("a", i, (i >= 3).then_some(10.0))).collect();
    let b = (1..=4).map(|i| inst("b", i, (i >= 3).then_some(10.0))).collect();
    let p = build_problem(a, b, &[edge(2, 2), edge(2, 3), edge(3, 4), edge(4, 4)]).unwrap();
    let t = Instant::now();
    let r = solve(&p, 1000);
    let ms = t.elapsed().as_secs_f64() * 1e3;
    let checked = check_assignment(&p, &r.assignment);
    let (wa, wb) = balance(&p, &r);
    outcome(
        r.objective() == 3 && checked.is_ok() && wa == 20.0 && wb == 10.0 && ms < 10.0,
        format!(
            "objective {} (want 3), checker {}, balance {wa} >= {wb} (want 20 >= 10), {ms:.3} ms (< 10 ms), {} vars / {} constraints",
            r.objective(),
            if checked.is_ok() { "ok" } else { "REJECTED" },
            p.variable_count(),
            p.constraint_count()
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = common::rng(20_240_601);
    let t = Instant::now();
    let mut agree = 0;
    let mut largest = 0;
    for _ in 0..200 {
        let p = common::random_problem(&mut rng, 18);
        largest = largest.max(p.variable_count());
        let r = solve(&p, 10_000);
        if p.variable_count() <= 18
            && Ok(r.objective()) == brute_force_optimum(&p)
            && check_assignment(&p, &r.assignment).is_ok()
        {
            agree += 1;
        }
    }
    let s = t.elapsed().as_secs_f64();
    outcome(
        agree == 200 && s < 60.0,
        format!("{agree}/200 optima equal exhaustive search (max {largest} vars), {s:.2} s (< 60 s)"),
    )
}

fn scale_benchmark() -> Outcome {
    let mut rng = common::rng(3);
    let p = common::large_problem(&mut rng, 700, 650, 500);
    let t = Instant::now();
    let r = solve(&p, 30_000);
    let s = t.elapsed().as_secs_f64();
    let ok = r.stats.optimal && r.stats.upper_bound == r.objective() && check_assignment(&p, &r.assignment).is_ok();
    outcome(
        ok && s < 5.0,
        format!(
            "{} variables, optimal {}, {} nodes, {s:.3} s (< 5 s)",
            p.variable_count(),
            r.stats.optimal,
            r.stats.nodes_explored
        ),
    )
}

fn emission_tables() -> Outcome {
    use PassiveKind::*;
    let expected = [
        (Resistor, "0201", 0.010),
        (Resistor, "0402", 0.040),
        (Resistor, "0603", 0.120),
        (Resistor, "0805", 0.600),
        (Capacitor, "0201", 0.036),
        (Capacitor, "0402", 0.146),
        (Capacitor, "0603", 0.611),
        (Capacitor, "0805", 1.067),
        (Inductor, "0201", 0.022),
        (Inductor, "0402", 0.078),
        (Inductor, "0603", 0.330),
        (Inductor, "0805", 1.358),
    ];
    let mut matched = 0;
    let mut substrate_ok = true;
    for config in [Config::builtin(), Config::load(&Config::bundled_path()).unwrap()] {
        let tables = &config.tables.factors;
        matched += expected
            .iter()
            .filter(|(k, size, g)| estimate_passive(*k, size, tables).ok() == Some(*g))
            .count();
        let board = BoardSpec::new(1000.0, 2);
        substrate_ok &= estimate_substrate(&board, tables).ok() == Some(12.25);
    }
    outcome(
        matched == 24 && substrate_ok,
        format!("{}/12 passive values exact (built-in and bundled tables), FR-4 1000 mm² x 2 x 1 mm = 12.25 g: {substrate_ok}", matched / 2),
    )
}

fn mass_formula() -> Outcome {
    // (category, m, ef, m_ref, L, hand-computed E)
    let cases = [
        ("passive:capacitor", 2.5, 97.0, 1.0, 1.0, 242.5),
        ("passive:inductor", 0.8, 50.0, 2.0, 0.8, 25.0),
        ("misc", 0.03, 12.4, 0.5, 0.95, 0.783_157_894_736_842_1),
        ("active:diode", 0.012, 40.0, 0.001, 0.5, 960.0),
    ];
    let mut tables: FactorTables = Config::builtin().tables.factors;
    tables.mass_factors.clear();
    for (cat, _, ef, m_ref, loss, _) in cases {
        tables.mass_factors.insert(cat.to_string(), MassFactor { ef, m_ref, loss });
    }
    let mut worst = 0.0f64;
    let mut all = true;
    for (cat, m, .., want) in cases {
        match estimate_by_mass(m, cat.parse::<Category>().unwrap(), &tables) {
            Ok(got) => worst = worst.max(((got - want) / want).abs()),
            Err(_) => all = false,
        }
    }
    outcome(all && worst < 1e-12, format!("{} triples, worst relative error {worst:.2e} (< 1e-12)", cases.len()))
}

const ALL_FIXTURES: [&str; 8] = [
    "boards/leonardo_like.brd",
    "boards/mkr_fox_like.brd",
    "boards/uno_wifi_like.brd",
    "boards/simple_2layer.brd",
    "inventories/superset_a.json",
    "inventories/superset_b.json",
    "inventories/disjoint_a.json",
    "inventories/disjoint_b.json",
];

fn self_comparison(e: &Engine) -> Outcome {
    let mut ok = 0;
    let mut bad = Vec::new();
    for rel in ALL_FIXTURES {
        let inv = load(e, rel);
        let c = e.compare_directed(&inv, &inv, &[], Direction::AGeB, None).unwrap();
        let r = &c.result;
        if r.verdict == Verdict::Proven && r.unmatched_a.is_empty() && r.unmatched_b.is_empty() && c.skipped_rules.is_empty() {
            ok += 1;
        } else {
            bad.push(rel);
        }
    }
    outcome(
        ok == ALL_FIXTURES.len(),
        format!("{ok}/{} fixtures proven against themselves with nothing unmatched and no rules {bad:?}", ALL_FIXTURES.len()),
    )
}

fn superset(e: &Engine) -> Outcome {
    let a = load(e, "inventories/superset_a.json");
    let b = load(e, "inventories/superset_b.json");
    let fwd = e.compare_directed(&a, &b, &[], Direction::AGeB, None).unwrap();
    let rev = e.compare_directed(&b, &a, &[], Direction::AGeB, None).unwrap();
    let left = fwd.result.a_delta.len();
    outcome(
        fwd.result.verdict == Verdict::Proven && rev.result.verdict == Verdict::Inconclusive,
        format!(
            "A >= B {:?} with {left} A-instance(s) left after cancellation, B >= A {:?}",
            fwd.result.verdict, rev.result.verdict
        ),
    )
}

fn monotonicity() -> Outcome {
    let mut rng = common::rng(99);
    let mut ok = 0;
    for round in 0..100usize {
        let p = common::random_problem(&mut rng, 18);
        let before = solve(&p, 10_000);
        let rule = common::edge(format!("rule{round}"), &[round % p.a.len()], &[(round / 2) % p.b.len()]);
        let (_, after) = apply_rule_and_resolve(&p, &before, &rule, 10_000).unwrap();
        if after.objective() >= before.objective() {
            ok += 1;
        }
    }
    outcome(ok == 100, format!("{ok}/100 objectives non-decreasing after adding a rule"))
}

fn table_a(e: &Engine) -> Outcome {
    let boards = [
        ("boards/leonardo_like.brd", 4180.6368, 2, 97, 20),
        ("boards/mkr_fox_like.brd", 1696.76, 4, 92, 20),
        ("boards/uno_wifi_like.brd", 3659.124, 2, 117, 26),
    ];
    let mut notes = Vec::new();
    let mut pass = true;
    let mut inv = Vec::new();
    for (rel, area, layers, n, n_ic) in boards {
        let d = load(e, rel);
        let parts: u32 = d.parts.iter().filter(|p| p.part_id.as_str() != BOARD_PART_ID).map(|p| p.quantity).sum();
        let ics: u32 = d.parts.iter().filter(|p| p.category == Category::Ic).map(|p| p.quantity).sum();
        let stats_ok = (d.board.area - area).abs() < 1e-6 && d.board.layer_count == layers && parts == n && ics == n_ic;
        pass &= stats_ok;
        notes.push(format!("{}: {parts}/{ics}/{}L/{:.4} mm²", d.design_id, d.board.layer_count, d.board.area));
        inv.push(d);
    }
    // (3) >= (1) >= (2) and (3) >= (2)
    for (x, y) in [(2, 0), (0, 1), (2, 1)] {
        let c = e.compare_directed(&inv[x], &inv[y], &[], Direction::AGeB, None).unwrap();
        let total = c.result.b_delta.len() + c.result.unmatched_b.len();
        let coverage = if total == 0 { 1.0 } else { c.result.b_delta.len() as f64 / total as f64 };
        pass &= c.result.verdict == Verdict::Proven && coverage == 1.0;
        notes.push(format!(
            "{} >= {}: {:?}, coverage {:.0}%",
            inv[x].design_id,
            inv[y].design_id,
            c.result.verdict,
            coverage * 100.0
        ));
    }
    outcome(pass, notes.join("; "))
}

fn main() -> ExitCode {
    let e = engine();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("toy integer program", Box::new(toy_ip)),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("scale benchmark", Box::new(scale_benchmark)),
        ("emission tables", Box::new(emission_tables)),
        ("mass-scaling formula", Box::new(mass_formula)),
        ("self-comparison", Box::new(|| self_comparison(&e))),
        ("superset end-to-end", Box::new(|| superset(&e))),
        ("rule monotonicity", Box::new(monotonicity)),
        ("board statistics and coverage", Box::new(|| table_a(&e))),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

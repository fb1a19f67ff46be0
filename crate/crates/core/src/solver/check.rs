//! Independent feasibility check on the map form of an assignment.

use std::collections::BTreeMap;

use super::{Assignment, ComparisonProblem};

/// Checks every constraint by looking variables up by name. Returns all
/// violations found, not just the first.
pub fn check_assignment(p: &ComparisonProblem, asg: &Assignment) -> Result<(), Vec<String>> {
    let mut errors = Vec::new();
    let value = |map: &str, key: &str, v: Option<&u8>, errors: &mut Vec<String>| -> u32 {
        match v {
            Some(&x) if x <= 1 => u32::from(x),
            Some(&x) => {
                errors.push(format!("{map}[{key}] = {x} is not binary"));
                0
            }
            None => {
                errors.push(format!("{map}[{key}] is missing"));
                0
            }
        }
    };

    let mut b = BTreeMap::new();
    let mut c_b = BTreeMap::new();
    for x in &p.b {
        let key = x.id.0.as_str();
        b.insert(key, value("b", key, asg.b.get(&x.id), &mut errors));
        c_b.insert(key, value("c_b", key, asg.c_b.get(&x.id), &mut errors));
    }
    let mut c_a = BTreeMap::new();
    for x in &p.a {
        let key = x.id.0.as_str();
        c_a.insert(key, value("c_a", key, asg.c_a.get(&x.id), &mut errors));
    }
    let mut h = BTreeMap::new();
    for e in &p.edges {
        h.insert(e.id.as_str(), value("h", &e.id, asg.h.get(&e.id), &mut errors));
    }

    for x in p.a.iter().filter(|x| x.weight.is_none()) {
        if c_a[x.id.0.as_str()] == 1 {
            errors.push(format!("c_a[{}] set without a footprint", x.id.0));
        }
    }
    for x in p.b.iter().filter(|x| x.weight.is_none()) {
        if c_b[x.id.0.as_str()] == 1 {
            errors.push(format!("c_b[{}] set without a footprint", x.id.0));
        }
    }

    for x in &p.b {
        let key = x.id.0.as_str();
        let cover: u32 = p
            .edges
            .iter()
            .filter(|e| e.b.iter().any(|&j| p.b[j].id == x.id))
            .map(|e| h[e.id.as_str()])
            .sum();
        if b[key] > cover + c_b[key] {
            errors.push(format!("b[{key}] = 1 but it is neither covered nor paid for"));
        }
    }
    for x in &p.a {
        let key = x.id.0.as_str();
        let uses: u32 = p
            .edges
            .iter()
            .filter(|e| e.a.iter().any(|&i| p.a[i].id == x.id))
            .map(|e| h[e.id.as_str()])
            .sum();
        if uses + c_a[key] > 1 {
            errors.push(format!("a[{key}] is used {} times", uses + c_a[key]));
        }
    }

    let paid_a: f64 = p.a.iter().filter(|x| c_a[x.id.0.as_str()] == 1).filter_map(|x| x.weight).sum();
    let paid_b: f64 = p.b.iter().filter(|x| c_b[x.id.0.as_str()] == 1).filter_map(|x| x.weight).sum();
    let total: f64 = p.a.iter().chain(&p.b).filter_map(|x| x.weight).sum();
    if paid_a < paid_b - 1e-9 * (1.0 + total) {
        errors.push(format!("footprint balance violated: {paid_a} < {paid_b}"));
    }

    let count: u32 = b.values().sum();
    if count != asg.objective {
        errors.push(format!("objective {} does not match {count} matched B-instances", asg.objective));
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

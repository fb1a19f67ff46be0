//! Exhaustive reference solver for small problems.

use thiserror::Error;

use super::ComparisonProblem;

pub const MAX_BRUTE_FORCE_VARIABLES: usize = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BruteForceError {
    #[error("{0} variables is too many for exhaustive search (limit {MAX_BRUTE_FORCE_VARIABLES})")]
    TooLarge(usize),
}

/// Enumerates every 0/1 assignment of every variable and returns the best
/// objective among the feasible ones.
pub fn brute_force_optimum(p: &ComparisonProblem) -> Result<u32, BruteForceError> {
    let n = p.variable_count();
    if n > MAX_BRUTE_FORCE_VARIABLES {
        return Err(BruteForceError::TooLarge(n));
    }
    let (nb, na, ne) = (p.b.len(), p.a.len(), p.edges.len());
    // Bit layout: b | c_a | c_b | h
    let off_ca = nb;
    let off_cb = nb + na;
    let off_h = nb + na + nb;
    let bit = |mask: u32, k: usize| mask >> k & 1 == 1;

    let mut forbidden = 0u32;
    for (i, x) in p.a.iter().enumerate() {
        if x.weight.is_none() {
            forbidden |= 1 << (off_ca + i);
        }
    }
    for (j, x) in p.b.iter().enumerate() {
        if x.weight.is_none() {
            forbidden |= 1 << (off_cb + j);
        }
    }
    let total: f64 = p.a.iter().chain(&p.b).filter_map(|x| x.weight).sum();
    let slack = 1e-9 * (1.0 + total);

    let mut best = 0u32;
    for mask in 0u32..(1u32 << n) {
        if mask & forbidden != 0 {
            continue;
        }
        let objective = (0..nb).filter(|&j| bit(mask, j)).count() as u32;
        if objective <= best {
            continue;
        }
        let c1 = (0..nb).all(|j| {
            let cover: u32 = (0..ne)
                .filter(|&e| p.edges[e].b.contains(&j) && bit(mask, off_h + e))
                .count() as u32;
            !bit(mask, j) || cover + u32::from(bit(mask, off_cb + j)) >= 1
        });
        let c2 = (0..na).all(|i| {
            let uses: u32 = (0..ne)
                .filter(|&e| p.edges[e].a.contains(&i) && bit(mask, off_h + e))
                .count() as u32;
            uses <= 1 - u32::from(bit(mask, off_ca + i))
        });
        let paid_a: f64 = (0..na).filter(|&i| bit(mask, off_ca + i)).filter_map(|i| p.a[i].weight).sum();
        let paid_b: f64 = (0..nb).filter(|&j| bit(mask, off_cb + j)).filter_map(|j| p.b[j].weight).sum();
        if c1 && c2 && paid_a >= paid_b - slack {
            best = objective;
        }
    }
    Ok(best)
}

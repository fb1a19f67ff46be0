//! Name similarity used wherever free-form vendor terminology has to be
//! mapped onto a fixed vocabulary (catalog attribute names, package types).

/// Minimum similarity for a fuzzy match to be accepted.
pub const ACCEPT_THRESHOLD: f64 = 0.8;

/// Lowercases and drops everything that is not alphanumeric.
pub fn normalize(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Normalized Levenshtein similarity in `[0, 1]` after [`normalize`].
pub fn similarity(a: &str, b: &str) -> f64 {
    strsim::normalized_levenshtein(&normalize(a), &normalize(b))
}

fn common_prefix_len(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).take_while(|(x, y)| x == y).count()
}

/// Best-scoring candidate for `query`, or `None` when nothing reaches
/// [`ACCEPT_THRESHOLD`]. Ties are broken by the longest common prefix with
/// the query and then lexicographically on the normalized candidate.
pub fn best_match<'a, I>(query: &str, candidates: I) -> Option<(&'a str, f64)>
where
    I: IntoIterator<Item = &'a str>,
{
    let q = normalize(query);
    let mut best: Option<(&'a str, f64, usize, String)> = None;
    for cand in candidates {
        let norm = normalize(cand);
        let score = strsim::normalized_levenshtein(&q, &norm);
        if score < ACCEPT_THRESHOLD {
            continue;
        }
        let prefix = common_prefix_len(&q, &norm);
        let better = match &best {
            None => true,
            Some((_, s, p, n)) => {
                score > *s || (score == *s && (prefix > *p || (prefix == *p && norm < *n)))
            }
        };
        if better {
            best = Some((cand, score, prefix, norm));
        }
    }
    best.map(|(cand, score, _, _)| (cand, score))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn punctuation_and_case_are_ignored() {
        assert_eq!(similarity("Number of Pins", "number-of-pins"), 1.0);
    }

    #[test]
    fn threshold_applies() {
        assert!(best_match("QFN", ["BGA", "DIP"]).is_none());
        assert_eq!(best_match("Speeds", ["Speed", "Package"]).unwrap().0, "Speed");
    }

    #[test]
    fn ties_prefer_longer_prefix_then_lexicographic() {
        // Both candidates are one edit away from the query.
        let (hit, _) = best_match("abcde", ["xbcde", "abcdx"]).unwrap();
        assert_eq!(hit, "abcdx");
        let (hit, _) = best_match("abcde", ["abcdz", "abcdy"]).unwrap();
        assert_eq!(hit, "abcdy");
    }
}

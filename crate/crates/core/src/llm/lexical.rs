//! Lexical equivalence: the deterministic grader behind the mock provider and
//! the fallback when the model's verdict is unavailable.

use std::collections::BTreeSet;

pub const JACCARD_THRESHOLD: f64 = 0.5;

/// Lowercase, delete punctuation, split on whitespace.
pub fn normalized_tokens(text: &str) -> BTreeSet<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    cleaned.split_whitespace().map(str::to_owned).collect()
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// A selection matches when its tokens are a subset of the gold tokens or the
/// token Jaccard index reaches [`JACCARD_THRESHOLD`]. Empty selections never match.
pub fn lexically_equivalent(selection: &str, gold: &str) -> bool {
    let sel = normalized_tokens(selection);
    if sel.is_empty() {
        return false;
    }
    let gold = normalized_tokens(gold);
    sel.is_subset(&gold) || jaccard(&sel, &gold) >= JACCARD_THRESHOLD
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_example() {
        assert!(lexically_equivalent("unsafe", "feel unsafe"));
        assert!(lexically_equivalent("I feel unsafe", "feel unsafe"));
        assert!(!lexically_equivalent("jogging nearby", "feel unsafe"));
        assert!(lexically_equivalent("Black man!", "black man"));
    }

    #[test]
    fn normalization() {
        let t = normalized_tokens("They're  NOT, feminine.");
        assert_eq!(t.into_iter().collect::<Vec<_>>(), vec!["feminine", "not", "theyre"]);
        assert!(!lexically_equivalent("...", "anything"));
    }

    #[test]
    fn threshold_boundary() {
        // 1 shared of 2 total → exactly 0.5
        assert!(lexically_equivalent("feel", "feel unsafe"));
        // {a, b} vs {b, c}: 1/3 and not a subset
        assert!(!lexically_equivalent("a b", "b c"));
        // {a, b, c} vs {b, c, d}: 2/4 = 0.5
        assert!(lexically_equivalent("a b c", "b c d"));
        // {a, b, c} vs {c, d, e}: 1/5
        assert!(!lexically_equivalent("a b c", "c d e"));
    }

    fn word() -> impl Strategy<Value = String> {
        "[a-z]{1,5}"
    }

    proptest! {
        #[test]
        fn subset_selections_are_equivalent(gold in prop::collection::vec(word(), 1..8), pick in prop::collection::vec(any::<prop::sample::Index>(), 1..5)) {
            let sel: Vec<&str> = pick.iter().map(|i| gold[i.index(gold.len())].as_str()).collect();
            prop_assert!(lexically_equivalent(&sel.join(" "), &gold.join(" ")));
        }

        #[test]
        fn disjoint_selections_are_not(gold in prop::collection::vec("[a-m]{2,5}", 1..6), sel in prop::collection::vec("[n-z]{2,5}", 1..6)) {
            prop_assert!(!lexically_equivalent(&sel.join(" "), &gold.join(" ")));
        }

        #[test]
        fn verdict_follows_threshold(shared in 1usize..6, extra_sel in 1usize..6, extra_gold in 0usize..6) {
            // sel = shared + extra_sel private tokens, gold = shared + extra_gold private tokens
            let s: Vec<String> = (0..shared).map(|i| format!("s{i}")).chain((0..extra_sel).map(|i| format!("x{i}"))).collect();
            let g: Vec<String> = (0..shared).map(|i| format!("s{i}")).chain((0..extra_gold).map(|i| format!("g{i}"))).collect();
            let j = shared as f64 / (shared + extra_sel + extra_gold) as f64;
            prop_assert_eq!(lexically_equivalent(&s.join(" "), &g.join(" ")), j >= 0.5);
        }
    }
}

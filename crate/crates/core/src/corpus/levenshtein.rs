/// Unit-cost edit distance over Unicode scalar values.
///
/// Two-row dynamic programme; memory is `O(min(|a|, |b|))`.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (long, short) = if a.len() >= b.len() { (&a, &b) } else { (&b, &a) };

    if short.is_empty() {
        return long.len();
    }

    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut curr = vec![0; short.len() + 1];

    for (i, lc) in long.iter().enumerate() {
        curr[0] = i + 1;
        for (j, sc) in short.iter().enumerate() {
            let substitution = prev[j] + usize::from(lc != sc);
            curr[j + 1] = substitution.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }

    prev[short.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Plain recursion over the edit lattice; exponential, only for short inputs.
    fn brute(a: &[char], b: &[char]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((ha, ta)), Some((hb, tb))) => {
                let sub = brute(ta, tb) + usize::from(ha != hb);
                let del = brute(ta, b) + 1;
                let ins = brute(a, tb) + 1;
                sub.min(del).min(ins)
            }
        }
    }

    fn brute_str(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        brute(&a, &b)
    }

    #[test]
    fn basic_cases() {
        assert_eq!(levenshtein("abc", "abc"), 0);
        assert_eq!(levenshtein("a", ""), 1);
        assert_eq!(levenshtein("", ""), 0);
        assert_eq!(brute_str("kitten", "sitting"), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("ab", "ba"), 2);
    }

    #[test]
    fn counts_scalars_not_bytes() {
        assert_eq!(levenshtein("秋元康", "秋本康"), 1);
        assert_eq!(levenshtein("é", "e"), 1);
    }

    proptest! {
        #[test]
        fn matches_brute_force(a in "[abc]{0,6}", b in "[abc]{0,6}") {
            prop_assert_eq!(levenshtein(&a, &b), brute_str(&a, &b));
        }

        #[test]
        fn is_a_metric(a in "[ab愛]{0,6}", b in "[ab愛]{0,6}", c in "[ab愛]{0,6}") {
            let ab = levenshtein(&a, &b);
            prop_assert_eq!(ab, levenshtein(&b, &a));
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(levenshtein(&a, &c) <= ab + levenshtein(&b, &c));
        }
    }
}

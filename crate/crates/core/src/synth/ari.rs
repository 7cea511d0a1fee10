use std::collections::HashMap;

use crate::error::{Error, Result};

fn pairs(x: u64) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index from the pair-counting contingency table.
///
/// Both partitions trivial in the same way (all one cluster, or all
/// singletons) give 1.0.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Data("adjusted Rand index of empty labelings".into()));
    }
    let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = joint.values().map(|&c| pairs(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| pairs(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(a.len() as u64);
    let expected = if total > 0.0 { sum_a * sum_b / total } else { 0.0 };
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return Ok(if index == max { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_and_relabelled() {
        let a = [0, 0, 1, 1, 2, 2, 2];
        assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
        let b = [5, 5, 0, 0, 9, 9, 9];
        assert_eq!(adjusted_rand_index(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn six_point_hand_case() {
        // Enumerate the 15 pairs: same-in-a / same-in-b.
        let a = [0, 0, 0, 1, 1, 1];
        let b = [0, 0, 1, 1, 2, 2];
        let (mut both, mut only_a, mut only_b) = (0.0, 0.0, 0.0);
        for i in 0..6 {
            for j in i + 1..6 {
                let sa = a[i] == a[j];
                let sb = b[i] == b[j];
                match (sa, sb) {
                    (true, true) => both += 1.0,
                    (true, false) => only_a += 1.0,
                    (false, true) => only_b += 1.0,
                    _ => {}
                }
            }
        }
        // both = 2, same-in-a = 6, same-in-b = 3
        assert_eq!((both, both + only_a, both + only_b), (2.0, 6.0, 3.0));
        let expected_index = (both + only_a) * (both + only_b) / 15.0;
        let max_index = 0.5 * ((both + only_a) + (both + only_b));
        let oracle = (both - expected_index) / (max_index - expected_index);
        let ari = adjusted_rand_index(&a, &b).unwrap();
        assert!((ari - oracle).abs() < 1e-15);
        assert!((ari - 0.8 / 3.3).abs() < 1e-12);
    }

    #[test]
    fn errors_and_degenerate() {
        assert!(adjusted_rand_index(&[0, 1], &[0]).is_err());
        assert!(adjusted_rand_index(&[], &[]).is_err());
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[1, 1, 1]).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 1, 2], &[2, 0, 1]).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn symmetric_bounded_permutation_invariant(
            pairs in proptest::collection::vec((0usize..4, 0usize..3), 2..60),
            shift in 1usize..7,
        ) {
            let a: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let ab = adjusted_rand_index(&a, &b).unwrap();
            let ba = adjusted_rand_index(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((-1.0..=1.0 + 1e-12).contains(&ab));
            let relabelled: Vec<usize> = a.iter().map(|&x| (x + shift) * 3 % 17).collect();
            prop_assert!((adjusted_rand_index(&relabelled, &b).unwrap() - ab).abs() < 1e-12);
            prop_assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
        }
    }
}

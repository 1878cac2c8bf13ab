//! Words in a finitely generated free group, with the handful of operations
//! the clause gadgets rely on: iterated commutators, free reduction, and the
//! quotient that deletes a set of generators.
//!
//! A word is a sequence of letters, each letter a nonzero `i32` whose absolute
//! value names a generator and whose sign is the exponent (only ±1 occurs).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A word in the free group on generators `1..=rank`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FreeWord {
    pub letters: Vec<i32>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WordError {
    #[error("letter 0 is not a valid generator")]
    ZeroLetter,
    #[error("commutator triple must have three distinct generators, got ({0}, {1}, {2})")]
    RepeatedGenerator(u32, u32, u32),
}

impl FreeWord {
    pub fn new(letters: Vec<i32>) -> Result<Self, WordError> {
        if letters.contains(&0) {
            return Err(WordError::ZeroLetter);
        }
        Ok(FreeWord { letters })
    }

    pub fn empty() -> Self {
        FreeWord { letters: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    /// Exponent sum of `generator` (counted with signs).
    pub fn exponent_sum(&self, generator: u32) -> i64 {
        let g = generator as i32;
        self.letters
            .iter()
            .map(|&l| {
                if l == g {
                    1
                } else if l == -g {
                    -1
                } else {
                    0
                }
            })
            .sum()
    }
}

/// The 10-letter expansion of the iterated commutator [a, [b, c]]:
///
/// ```text
/// a b c b⁻¹ c⁻¹ a⁻¹ c b c⁻¹ b⁻¹
/// ```
///
/// The three generators must be distinct; the word is then freely reduced as
/// written, every generator has exponent sum zero, and exactly one letter (the
/// leading `a`) starts the word.
pub fn iterated_commutator(a: u32, b: u32, c: u32) -> Result<FreeWord, WordError> {
    if a == 0 || b == 0 || c == 0 {
        return Err(WordError::ZeroLetter);
    }
    if a == b || b == c || a == c {
        return Err(WordError::RepeatedGenerator(a, b, c));
    }
    let (a, b, c) = (a as i32, b as i32, c as i32);
    Ok(FreeWord {
        letters: vec![a, b, c, -b, -c, -a, c, b, -c, -b],
    })
}

/// Freely reduce a word by repeatedly deleting adjacent inverse pairs.
///
/// Single stack pass; free reduction is confluent so this reaches the unique
/// reduced form.
pub fn free_reduce(w: &FreeWord) -> FreeWord {
    let mut stack: Vec<i32> = Vec::with_capacity(w.letters.len());
    for &l in &w.letters {
        if let Some(&top) = stack.last() {
            if top == -l {
                stack.pop();
                continue;
            }
        }
        stack.push(l);
    }
    FreeWord { letters: stack }
}

/// Delete every letter whose generator lies in `delete`, then freely reduce.
///
/// This is the image of the word in the quotient obtained by killing the
/// generators in `delete`, which for a free group is again free on the
/// surviving generators.
pub fn quotient_delete(w: &FreeWord, delete: &std::collections::BTreeSet<u32>) -> FreeWord {
    let kept: Vec<i32> = w
        .letters
        .iter()
        .copied()
        .filter(|&l| !delete.contains(&(l.unsigned_abs())))
        .collect();
    free_reduce(&FreeWord { letters: kept })
}

/// Concatenated product of iterated commutators, one per triple.
///
/// Each triple must consist of three distinct generators; triples are sorted
/// into increasing order internally so that products over many triples stay
/// in the "increasing triple" normal form that keeps the product nontrivial.
/// The concatenation is freely reduced before returning.
pub fn clause_product_word(triples: &[(u32, u32, u32)]) -> Result<FreeWord, WordError> {
    let mut letters = Vec::with_capacity(triples.len() * 10);
    for &(a, b, c) in triples {
        let mut t = [a, b, c];
        t.sort_unstable();
        let w = iterated_commutator(t[0], t[1], t[2])?;
        letters.extend_from_slice(&w.letters);
    }
    Ok(free_reduce(&FreeWord { letters }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    /// Reference reduction: rescan from the top after every deletion until no
    /// adjacent inverse pair remains. Kept deliberately naive so the stack
    /// version in `free_reduce` is checked against something with no shared
    /// logic.
    fn reduce_naive(mut letters: Vec<i32>) -> Vec<i32> {
        loop {
            let mut cancelled = false;
            let mut i = 0;
            while i + 1 < letters.len() {
                if letters[i] == -letters[i + 1] {
                    letters.drain(i..=i + 1);
                    cancelled = true;
                    break;
                }
                i += 1;
            }
            if !cancelled {
                return letters;
            }
        }
    }

    fn set(xs: &[u32]) -> BTreeSet<u32> {
        xs.iter().copied().collect()
    }

    #[test]
    fn commutator_expansion_is_the_ten_letter_word() {
        let w = iterated_commutator(1, 2, 3).unwrap();
        assert_eq!(w.letters, vec![1, 2, 3, -2, -3, -1, 3, 2, -3, -2]);
    }

    #[test]
    fn commutator_is_reduced_and_balanced() {
        for &(a, b, c) in &[(1u32, 2u32, 3u32), (2, 1, 3), (5, 9, 7)] {
            let w = iterated_commutator(a, b, c).unwrap();
            assert_eq!(w.len(), 10);
            assert_eq!(free_reduce(&w), w, "expansion must already be reduced");
            for g in [a, b, c] {
                assert_eq!(w.exponent_sum(g), 0);
            }
        }
    }

    #[test]
    fn commutator_rejects_repeats_and_zero() {
        assert!(iterated_commutator(1, 1, 2).is_err());
        assert!(iterated_commutator(3, 2, 3).is_err());
        assert!(iterated_commutator(0, 1, 2).is_err());
    }

    #[test]
    fn reduce_examples() {
        let w = FreeWord::new(vec![1, -1]).unwrap();
        assert!(free_reduce(&w).is_empty());
        // Cancellation cascades: 2 (1 -1) -2 -> 2 -2 -> empty.
        let w = FreeWord::new(vec![2, 1, -1, -2]).unwrap();
        assert!(free_reduce(&w).is_empty());
        let w = FreeWord::new(vec![1, 2, -2, 1]).unwrap();
        assert_eq!(free_reduce(&w).letters, vec![1, 1]);
    }

    #[test]
    fn quotient_delete_examples() {
        let w = iterated_commutator(1, 2, 3).unwrap();
        // Killing any single generator of the triple trivializes the
        // commutator; killing none of them leaves it intact.
        for g in [1u32, 2, 3] {
            assert!(quotient_delete(&w, &set(&[g])).is_empty());
        }
        assert_eq!(quotient_delete(&w, &set(&[4])), w);
        assert_eq!(quotient_delete(&w, &set(&[])), w);
        // All generators killed: empty.
        assert!(quotient_delete(&w, &set(&[1, 2, 3])).is_empty());
    }

    #[test]
    fn product_of_disjoint_triples_does_not_collapse() {
        let w = clause_product_word(&[(1, 2, 3), (4, 5, 6)]).unwrap();
        assert_eq!(w.len(), 20);
        assert!(!w.is_empty());
    }

    #[test]
    fn product_sorts_triples_before_expanding() {
        let sorted = clause_product_word(&[(1, 2, 3)]).unwrap();
        let shuffled = clause_product_word(&[(3, 1, 2)]).unwrap();
        assert_eq!(sorted, shuffled);
    }

    #[test]
    fn product_trivial_iff_every_triple_hit() {
        // For a product of commutators over increasing triples, deleting a set
        // S of generators kills the word exactly when S meets every triple.
        let triples = [(1u32, 2u32, 3u32), (2, 4, 5), (1, 4, 6)];
        let w = clause_product_word(&triples).unwrap();
        for mask in 0u32..(1 << 6) {
            let s: BTreeSet<u32> = (1..=6).filter(|g| mask & (1 << (g - 1)) != 0).collect();
            let hit_all = triples
                .iter()
                .all(|&(a, b, c)| s.contains(&a) || s.contains(&b) || s.contains(&c));
            let q = quotient_delete(&w, &s);
            assert_eq!(q.is_empty(), hit_all, "delete set {s:?}");
        }
    }

    proptest! {
        #[test]
        fn reduce_matches_naive_oracle(letters in proptest::collection::vec(
            (1i32..=8, proptest::bool::ANY).prop_map(|(g, neg)| if neg { -g } else { g }),
            0..200,
        )) {
            let w = FreeWord::new(letters.clone()).unwrap();
            prop_assert_eq!(free_reduce(&w).letters, reduce_naive(letters));
        }

        #[test]
        fn reduced_words_are_fixpoints(letters in proptest::collection::vec(
            (1i32..=5, proptest::bool::ANY).prop_map(|(g, neg)| if neg { -g } else { g }),
            0..120,
        )) {
            let once = free_reduce(&FreeWord::new(letters).unwrap());
            prop_assert_eq!(free_reduce(&once), once.clone());
        }

        #[test]
        fn increasing_triple_products_stay_nontrivial(
            triples in proptest::collection::vec(
                (1u32..=10, 1u32..=10, 1u32..=10).prop_filter(
                    "distinct",
                    |(a, b, c)| a != b && b != c && a != c,
                ),
                1..=6,
            ),
        ) {
            let w = clause_product_word(&triples).unwrap();
            prop_assert!(!w.is_empty());
            // Adjacent commutators cancel at most two letter pairs at the seam.
            prop_assert!(w.len() >= 10 * triples.len() - 4 * (triples.len() - 1));
        }
    }
}

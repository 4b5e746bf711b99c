//! Combinatorics of multiplicity words.
//!
//! A trajectory of a traversing flow meets the boundary in an ordered list of
//! points, each carrying a tangency multiplicity (1 = transversal crossing,
//! 2 = simple tangency, ...). The ordered multiplicity sequence is the
//! trajectory's *word* `ω`. A word is *admissible* when it is either a single
//! even entry (a boundary singleton) or has odd first and last entries with
//! all interior entries even.

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// Ordered multiplicity word of a trajectory's boundary divisor.
///
/// Value type with canonical ordering (length, then lexicographic) so that
/// enumerations are reproducible.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OmegaWord {
    entries: Vec<u32>,
}

impl OmegaWord {
    /// Panics if any entry is zero; multiplicities are positive.
    pub fn new(entries: Vec<u32>) -> Self {
        assert!(
            entries.iter().all(|&m| m >= 1),
            "multiplicities must be >= 1"
        );
        OmegaWord { entries }
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    /// Number of support points `q = |sup(ω)|`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `|ω| = Σ ω_i`.
    pub fn norm(&self) -> u32 {
        self.entries.iter().sum()
    }

    /// `|ω|' = Σ (ω_i - 1)`.
    pub fn reduced_norm(&self) -> u32 {
        self.entries.iter().map(|&m| m - 1).sum()
    }

    /// A word is admissible iff it is a single even entry, or its first and
    /// last entries are odd and every interior entry is even.
    pub fn is_admissible(&self) -> bool {
        match self.entries.as_slice() {
            [] => false,
            [single] => single % 2 == 0,
            [first, interior @ .., last] => {
                first % 2 == 1 && last % 2 == 1 && interior.iter().all(|m| m % 2 == 0)
            }
        }
    }

    /// Word read against the flow direction; an involution.
    pub fn mirror(&self) -> OmegaWord {
        let mut entries = self.entries.clone();
        entries.reverse();
        OmegaWord { entries }
    }

    /// The orientation-flip exponent `ε(ω) mod 2`.
    ///
    /// `ε(ω) = sign(σ_ω) + Σ_i ⌈(ω_i - 2)/2⌉ (mod 2)`, where `σ_ω` reverses
    /// the order of consecutive index groups of lengths `ω_i - 1` while
    /// keeping the order inside each group. Entries equal to 1 contribute an
    /// empty group and a zero ceiling term.
    pub fn flip_sign_exponent(&self) -> u8 {
        // Reversing the group order inverts exactly the pairs drawn from two
        // distinct groups.
        let lens: Vec<u64> = self.entries.iter().map(|&m| (m - 1) as u64).collect();
        let mut inversions: u64 = 0;
        for i in 0..lens.len() {
            for j in (i + 1)..lens.len() {
                inversions += lens[i] * lens[j];
            }
        }
        let ceil_terms: i64 = self
            .entries
            .iter()
            .map(|&m| {
                let a = m as i64 - 2;
                // integer ceil(a / 2); zero for m = 1 and m = 2
                (a + 1).div_euclid(2)
            })
            .sum();
        (((inversions as i64 + ceil_terms) % 2) & 1) as u8
    }
}

impl PartialOrd for OmegaWord {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OmegaWord {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.entries.cmp(&other.entries))
    }
}

impl fmt::Display for OmegaWord {
    /// Digit string without separators when all entries fit a digit
    /// (`"121"`), comma-separated integers otherwise (`"1,12,1"`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.iter().all(|&m| m <= 9) {
            for m in &self.entries {
                write!(f, "{m}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.entries.iter().map(|m| m.to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WordParseError {
    #[error("empty word")]
    Empty,
    #[error("invalid multiplicity entry {0:?}")]
    BadEntry(String),
}

impl FromStr for OmegaWord {
    type Err = WordParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(WordParseError::Empty);
        }
        let entries: Vec<u32> = if s.contains(',') {
            s.split(',')
                .map(|part| {
                    part.trim()
                        .parse::<u32>()
                        .ok()
                        .filter(|&m| m >= 1)
                        .ok_or_else(|| WordParseError::BadEntry(part.to_string()))
                })
                .collect::<Result<_, _>>()?
        } else {
            s.chars()
                .map(|c| {
                    c.to_digit(10)
                        .filter(|&m| m >= 1)
                        .ok_or_else(|| WordParseError::BadEntry(c.to_string()))
                })
                .collect::<Result<_, _>>()?
        };
        Ok(OmegaWord::new(entries))
    }
}

impl Serialize for OmegaWord {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for OmegaWord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(DeError::custom)
    }
}

/// Maximal number of causality arrows among boundary points in an
/// arbitrarily small neighborhood of a multiplicity-`m` point: `⌊m/2⌋`.
pub fn chain_bound(m: u32) -> u32 {
    assert!(m >= 1);
    m / 2
}

/// All admissible words with `reduced_norm <= max_reduced_norm` and
/// `len <= max_support`, deduplicated, in length-then-lex order.
pub fn enumerate_admissible(max_reduced_norm: u32, max_support: usize) -> Vec<OmegaWord> {
    let mut out = Vec::new();
    for len in 1..=max_support {
        let mut current = Vec::with_capacity(len);
        extend_word(&mut current, len, max_reduced_norm, &mut out);
    }
    out.sort();
    out.dedup();
    out
}

fn extend_word(current: &mut Vec<u32>, len: usize, budget: u32, out: &mut Vec<OmegaWord>) {
    if current.len() == len {
        let w = OmegaWord::new(current.clone());
        debug_assert!(w.is_admissible());
        out.push(w);
        return;
    }
    let position_is_end = current.is_empty() || current.len() == len - 1;
    // Single-entry words must be even; multi-entry words have odd ends and
    // even interiors.
    let want_odd = len > 1 && position_is_end;
    let mut m = if want_odd { 1 } else { 2 };
    while m - 1 <= budget {
        current.push(m);
        extend_word(current, len, budget - (m - 1), out);
        current.pop();
        m += 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn word(entries: &[u32]) -> OmegaWord {
        OmegaWord::new(entries.to_vec())
    }

    #[test]
    fn norms() {
        assert_eq!(word(&[1, 1]).norm(), 2);
        assert_eq!(word(&[1, 2, 1]).norm(), 4);
        assert_eq!(word(&[2]).norm(), 2);
        assert_eq!(word(&[1, 1]).reduced_norm(), 0);
        assert_eq!(word(&[1, 2, 1]).reduced_norm(), 1);
        assert_eq!(word(&[1, 2, 2, 1]).reduced_norm(), 2);
    }

    #[test]
    fn admissibility() {
        assert!(word(&[1, 2, 1]).is_admissible());
        assert!(word(&[2]).is_admissible());
        assert!(!word(&[1, 2]).is_admissible());
        assert!(!word(&[1]).is_admissible());
        assert!(word(&[1, 1]).is_admissible());
        assert!(!word(&[1, 3, 1]).is_admissible());
        assert!(word(&[3, 2, 1]).is_admissible());
    }

    #[test]
    fn mirror_examples() {
        assert_eq!(word(&[1, 2, 1]).mirror(), word(&[1, 2, 1]));
        assert_eq!(word(&[1, 2, 1, 2, 1]).mirror(), word(&[1, 2, 1, 2, 1]));
        assert_eq!(word(&[3, 2, 1]).mirror(), word(&[1, 2, 3]));
    }

    /// Build the group-reversal permutation explicitly and count its parity.
    fn brute_force_exponent(w: &OmegaWord) -> u8 {
        let lens: Vec<usize> = w.entries().iter().map(|&m| (m - 1) as usize).collect();
        let total: usize = lens.iter().sum();
        // Element i of 0..total belongs to a group; the permutation places the
        // groups in reverse order, preserving inner order.
        let mut perm = Vec::with_capacity(total);
        let mut starts = Vec::with_capacity(lens.len());
        let mut acc = 0;
        for &l in &lens {
            starts.push(acc);
            acc += l;
        }
        for gi in (0..lens.len()).rev() {
            for k in 0..lens[gi] {
                perm.push(starts[gi] + k);
            }
        }
        let mut inversions = 0u64;
        for i in 0..perm.len() {
            for j in (i + 1)..perm.len() {
                if perm[i] > perm[j] {
                    inversions += 1;
                }
            }
        }
        let ceil_terms: i64 = w
            .entries()
            .iter()
            .map(|&m| (m as i64 - 2 + 1).div_euclid(2))
            .sum();
        (((inversions as i64 + ceil_terms) % 2) & 1) as u8
    }

    #[test]
    fn flip_sign_examples() {
        assert_eq!(word(&[2]).flip_sign_exponent(), 0);
        assert_eq!(word(&[1, 2, 1]).flip_sign_exponent(), 0);
        assert_eq!(word(&[1, 2, 2, 1]).flip_sign_exponent(), 1);
    }

    #[test]
    fn flip_sign_matches_brute_force_up_to_norm_10() {
        // Every admissible word of norm <= 10 (support <= 10 suffices).
        for w in enumerate_admissible(9, 10) {
            if w.norm() <= 10 {
                assert_eq!(
                    w.flip_sign_exponent(),
                    brute_force_exponent(&w),
                    "mismatch for {w}"
                );
            }
        }
    }

    #[test]
    fn chain_bounds() {
        assert_eq!(chain_bound(2), 1);
        assert_eq!(chain_bound(4), 2);
        assert_eq!(chain_bound(5), 2);
        assert_eq!(chain_bound(1), 0);
    }

    #[test]
    fn enumeration_examples() {
        let words = enumerate_admissible(1, 3);
        assert_eq!(words, vec![word(&[2]), word(&[1, 1]), word(&[1, 2, 1])]);
        assert_eq!(enumerate_admissible(0, 2), vec![word(&[1, 1])]);
        assert_eq!(enumerate_admissible(0, 1), vec![]);
    }

    #[test]
    fn serialization_round_trip() {
        let w = word(&[1, 2, 1]);
        assert_eq!(w.to_string(), "121");
        assert_eq!("121".parse::<OmegaWord>().unwrap(), w);
        let big = word(&[1, 12, 1]);
        assert_eq!(big.to_string(), "1,12,1");
        assert_eq!("1,12,1".parse::<OmegaWord>().unwrap(), big);
        assert!("".parse::<OmegaWord>().is_err());
        assert!("102".parse::<OmegaWord>().is_err());
    }

    proptest! {
        #[test]
        fn mirror_is_involution(entries in proptest::collection::vec(1u32..6, 1..8)) {
            let w = OmegaWord::new(entries);
            prop_assert_eq!(w.mirror().mirror(), w.clone());
            prop_assert_eq!(w.mirror().is_admissible(), w.is_admissible());
        }

        #[test]
        fn reduced_norm_identity(entries in proptest::collection::vec(1u32..6, 1..8)) {
            let w = OmegaWord::new(entries);
            prop_assert_eq!(w.reduced_norm(), w.norm() - w.len() as u32);
        }

        #[test]
        fn enumeration_is_admissible_and_deduped(bound in 0u32..4, support in 1usize..6) {
            let words = enumerate_admissible(bound, support);
            let mut seen = std::collections::HashSet::new();
            for w in &words {
                prop_assert!(w.is_admissible());
                prop_assert!(w.reduced_norm() <= bound);
                prop_assert!(w.len() <= support);
                prop_assert!(seen.insert(w.clone()));
            }
        }
    }
}

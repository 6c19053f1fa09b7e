//! Proof annotations: the bit vector of speedup (`1`) and slowdown (`0`)
//! choices that fixes the shape of a normal-form proof.
//!
//! Validity is a ballot condition on the number of quantifier blocks: the
//! first speedup opens two blocks, every later speedup opens one, every
//! slowdown closes one, and the count must stay positive until the final
//! step brings it back to zero. Valid annotations of length `2k+1` are
//! therefore counted by the Catalan number `C_k`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotationError {
    #[error("annotation is empty")]
    Empty,
    #[error("annotation length {0} is even; valid annotations have odd length")]
    EvenLength(usize),
    #[error("annotation length {0} is too short; the minimum is 3")]
    TooShort(usize),
    #[error("annotation must start with a speedup (1)")]
    BadStart,
    #[error("annotation must end with two slowdowns (0,0)")]
    BadEnd,
    #[error("block count reaches 0 at position {position} (interior DTS line)")]
    InteriorDts { position: usize },
    #[error("block count ends at {0} instead of 0")]
    Unbalanced(usize),
    #[error("invalid character {0:?} in annotation string")]
    BadChar(char),
    #[error("prefix {0} cannot be extended to a valid annotation of length {1}")]
    DeadPrefix(String, usize),
}

/// A validated annotation. Bit `true` is a speedup, `false` a slowdown.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Annotation {
    bits: Vec<bool>,
}

impl Annotation {
    pub fn new(bits: Vec<bool>) -> Result<Self, AnnotationError> {
        validate(&bits)?;
        Ok(Annotation { bits })
    }

    pub fn from_digits(digits: &[u8]) -> Result<Self, AnnotationError> {
        Self::new(digits.iter().map(|&d| d != 0).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of rule applications (`ℓ − 1` for an `ℓ`-line proof).
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn num_lines(&self) -> usize {
        self.bits.len() + 1
    }

    pub fn speedups(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Quantifier blocks on each line, starting with the initial DTS line.
    pub fn block_counts(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.bits.len() + 1);
        let mut k = 0usize;
        out.push(k);
        for &b in &self.bits {
            k = step(k, b).expect("validated annotation never underflows");
            out.push(k);
        }
        out
    }

    pub fn max_blocks(&self) -> usize {
        self.block_counts().into_iter().max().unwrap_or(0)
    }
}

fn step(count: usize, bit: bool) -> Option<usize> {
    match (bit, count) {
        (true, 0) => Some(2),
        (true, k) => Some(k + 1),
        (false, k) => k.checked_sub(1),
    }
}

/// Checks the normal-form rules, reporting the first violated one.
pub fn validate(bits: &[bool]) -> Result<(), AnnotationError> {
    let n = bits.len();
    if n == 0 {
        return Err(AnnotationError::Empty);
    }
    if n.is_multiple_of(2) {
        return Err(AnnotationError::EvenLength(n));
    }
    if n < 3 {
        return Err(AnnotationError::TooShort(n));
    }
    if !bits[0] {
        return Err(AnnotationError::BadStart);
    }
    if bits[n - 1] || bits[n - 2] {
        return Err(AnnotationError::BadEnd);
    }
    let mut k = 0usize;
    for (i, &b) in bits.iter().enumerate() {
        k = step(k, b).ok_or(AnnotationError::InteriorDts { position: i + 1 })?;
        if k == 0 && i + 1 < n {
            return Err(AnnotationError::InteriorDts { position: i + 1 });
        }
    }
    if k != 0 {
        return Err(AnnotationError::Unbalanced(k));
    }
    Ok(())
}

fn check_length(length: usize) -> Result<(), AnnotationError> {
    if length == 0 {
        Err(AnnotationError::Empty)
    } else if length.is_multiple_of(2) {
        Err(AnnotationError::EvenLength(length))
    } else if length < 3 {
        Err(AnnotationError::TooShort(length))
    } else {
        Ok(())
    }
}

/// Whether a partial path at `count` blocks with `remaining` steps left can
/// still finish at zero without touching zero early.
fn completable(count: usize, remaining: usize, started: bool) -> bool {
    if !started {
        // Nothing placed yet: the first step must be a speedup.
        return remaining >= 3 && remaining % 2 == 1;
    }
    if remaining == 0 {
        return count == 0;
    }
    count >= 1 && count <= remaining && (remaining - count).is_multiple_of(2)
}

/// Lexicographic (`0 < 1`) stream of all valid annotations of one length,
/// optionally restricted to those starting with a fixed prefix.
#[derive(Debug, Clone)]
pub struct Enumerator {
    length: usize,
    prefix_len: usize,
    // Current path and block counts after each step; `None` once exhausted.
    path: Option<Vec<bool>>,
    first: bool,
}

impl Enumerator {
    fn new(length: usize, prefix: &[bool]) -> Self {
        let mut path: Vec<bool> = prefix.to_vec();
        let ok = descend(&mut path, length);
        Enumerator {
            length,
            prefix_len: prefix.len(),
            path: ok.then_some(path),
            first: true,
        }
    }
}

fn counts_ok(path: &[bool], length: usize) -> Option<usize> {
    let mut k = 0usize;
    for (i, &b) in path.iter().enumerate() {
        k = step(k, b)?;
        if k == 0 && i + 1 < length {
            return None;
        }
    }
    if completable(k, length - path.len(), !path.is_empty()) {
        Some(k)
    } else {
        None
    }
}

/// Extends `path` with the lexicographically smallest valid completion.
fn descend(path: &mut Vec<bool>, length: usize) -> bool {
    if path.len() > length || counts_ok(path, length).is_none() {
        return false;
    }
    while path.len() < length {
        path.push(false);
        if counts_ok(path, length).is_none() {
            path.pop();
            path.push(true);
            if counts_ok(path, length).is_none() {
                return false;
            }
        }
    }
    true
}

impl Iterator for Enumerator {
    type Item = Annotation;

    fn next(&mut self) -> Option<Annotation> {
        let path = self.path.as_mut()?;
        if self.first {
            self.first = false;
            return Some(Annotation { bits: path.clone() });
        }
        // Backtrack to the deepest 0 (beyond the prefix) that can flip to 1.
        loop {
            if path.len() <= self.prefix_len {
                self.path = None;
                return None;
            }
            let last = path.pop().unwrap();
            if !last {
                path.push(true);
                if descend(path, self.length) {
                    return Some(Annotation { bits: path.clone() });
                }
                path.pop();
            }
        }
    }
}

/// All valid annotations of `length`, in lexicographic order.
pub fn enumerate(length: usize) -> Result<Enumerator, AnnotationError> {
    check_length(length)?;
    Ok(Enumerator::new(length, &[]))
}

/// Valid annotations of `length` that start with `prefix`; used to split an
/// exhaustive search into independent, restartable partitions.
pub fn enumerate_with_prefix(length: usize, prefix: &[bool]) -> Result<Enumerator, AnnotationError> {
    check_length(length)?;
    Ok(Enumerator::new(length, prefix))
}

/// All prefixes of `prefix_len` bits that extend to at least one valid
/// annotation of `length`, lexicographic. Partitions are disjoint and cover
/// the full enumeration.
pub fn partitions(length: usize, prefix_len: usize) -> Result<Vec<Vec<bool>>, AnnotationError> {
    check_length(length)?;
    let prefix_len = prefix_len.min(length);
    let mut out = Vec::new();
    let mut path = Vec::new();
    fn rec(path: &mut Vec<bool>, length: usize, prefix_len: usize, out: &mut Vec<Vec<bool>>) {
        if counts_ok(path, length).is_none() {
            return;
        }
        if path.len() == prefix_len {
            out.push(path.clone());
            return;
        }
        for b in [false, true] {
            path.push(b);
            rec(path, length, prefix_len, out);
            path.pop();
        }
    }
    rec(&mut path, length, prefix_len, &mut out);
    Ok(out)
}

/// Number of valid annotations of `length`, by dynamic programming over
/// (position, block count).
pub fn count(length: usize) -> Result<BigUint, AnnotationError> {
    check_length(length)?;
    // ways[k] = number of valid partial paths currently at k blocks.
    let mut ways = vec![BigUint::zero(); length + 3];
    ways[2] = BigUint::from(1u32);
    for pos in 1..length {
        let last = pos + 1 == length;
        let mut next = vec![BigUint::zero(); length + 3];
        for k in 1..ways.len() {
            if ways[k].is_zero() {
                continue;
            }
            if k + 1 < next.len() {
                next[k + 1] += &ways[k];
            }
            // A slowdown may reach zero only on the final step.
            if k > 1 || last {
                next[k - 1] += &ways[k];
            }
        }
        ways = next;
    }
    Ok(ways[0].clone())
}

/// `1^k 0^(k+1)`: the annotation family whose exponents climb toward the
/// golden ratio.
pub fn family_fvm(k: usize) -> Result<Annotation, AnnotationError> {
    if k == 0 {
        return Err(AnnotationError::TooShort(1));
    }
    let mut bits = vec![true; k];
    bits.extend(std::iter::repeat_n(false, k + 1));
    Annotation::new(bits)
}

/// `1^outer` followed by `outer + 1` copies of the block
/// `1, (0,1)×inner, 0, 0`: the two-stage family whose exponents approach
/// `2cos(π/7)`.
pub fn family_w(outer: usize, inner: usize) -> Result<Annotation, AnnotationError> {
    let mut block = vec![true];
    for _ in 0..inner {
        block.extend([false, true]);
    }
    block.extend([false, false]);
    let mut bits = vec![true; outer];
    for _ in 0..=outer {
        bits.extend_from_slice(&block);
    }
    Annotation::new(bits)
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Parses a raw bit string (`"1100100"`, commas and brackets tolerated)
/// without validating it.
pub fn parse_bits(s: &str) -> Result<Vec<bool>, AnnotationError> {
    s.chars()
        .filter(|c| !matches!(c, ',' | ' ' | '[' | ']'))
        .map(|c| match c {
            '1' => Ok(true),
            '0' => Ok(false),
            other => Err(AnnotationError::BadChar(other)),
        })
        .collect()
}

impl FromStr for Annotation {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Annotation::new(parse_bits(s)?)
    }
}

impl Serialize for Annotation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Annotation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> Annotation {
        s.parse().unwrap()
    }

    /// Brute force over all bit vectors of `length`, filtered by `validate`.
    fn brute_force(length: usize) -> Vec<Vec<bool>> {
        (0u32..1 << length)
            .map(|m| (0..length).rev().map(|i| m >> i & 1 == 1).collect::<Vec<_>>())
            .filter(|v| validate(v).is_ok())
            .collect()
    }

    #[test]
    fn validate_accepts_known_annotations() {
        assert!(validate(&parse_bits("100").unwrap()).is_ok());
        assert!(validate(&parse_bits("1100100").unwrap()).is_ok());
        assert!(validate(&parse_bits("[1,1,0,0,0]").unwrap()).is_ok());
    }

    #[test]
    fn validate_reports_first_violation() {
        assert_eq!(
            validate(&parse_bits("10000").unwrap()),
            Err(AnnotationError::InteriorDts { position: 3 })
        );
        assert_eq!(validate(&[]), Err(AnnotationError::Empty));
        assert_eq!(validate(&[true, false]), Err(AnnotationError::EvenLength(2)));
        assert_eq!(validate(&[false]), Err(AnnotationError::TooShort(1)));
        assert_eq!(validate(&parse_bits("000").unwrap()), Err(AnnotationError::BadStart));
        assert_eq!(validate(&parse_bits("11010").unwrap()), Err(AnnotationError::BadEnd));
        assert_eq!(validate(&parse_bits("1110100").unwrap()), Err(AnnotationError::Unbalanced(2)));
        assert_eq!(
            validate(&parse_bits("1001100").unwrap()),
            Err(AnnotationError::InteriorDts { position: 3 })
        );
        assert_eq!("10x".parse::<Annotation>(), Err(AnnotationError::BadChar('x')));
    }

    #[test]
    fn small_enumerations() {
        let l3: Vec<String> = enumerate(3).unwrap().map(|a| a.to_string()).collect();
        assert_eq!(l3, ["100"]);
        let l5: Vec<String> = enumerate(5).unwrap().map(|a| a.to_string()).collect();
        assert_eq!(l5, ["10100", "11000"]);
        assert_eq!(enumerate(7).unwrap().count(), 5);
        assert!(enumerate(4).is_err());
        assert!(enumerate(1).is_err());
    }

    #[test]
    fn enumerate_matches_brute_force() {
        for length in (3..=15).step_by(2) {
            let got: Vec<Vec<bool>> = enumerate(length).unwrap().map(|a| a.bits).collect();
            assert_eq!(got, brute_force(length), "length {length}");
        }
    }

    #[test]
    fn prefixes_partition_the_enumeration() {
        for length in [7, 9, 11] {
            let all: Vec<Annotation> = enumerate(length).unwrap().collect();
            for plen in 0..=5 {
                let joined: Vec<Annotation> = partitions(length, plen)
                    .unwrap()
                    .iter()
                    .flat_map(|p| enumerate_with_prefix(length, p).unwrap())
                    .collect();
                assert_eq!(joined, all, "length {length} prefix {plen}");
            }
        }
        assert_eq!(enumerate_with_prefix(7, &[false]).unwrap().count(), 0);
    }

    #[test]
    fn counts_are_catalan() {
        let expect = [1u64, 2, 5, 14, 42, 132, 429];
        for (k, &c) in (1..).zip(expect.iter()) {
            assert_eq!(count(2 * k + 1).unwrap(), BigUint::from(c));
        }
        assert!(count(6).is_err());
    }

    #[test]
    fn families_have_expected_shape() {
        assert_eq!(family_fvm(1).unwrap(), a("100"));
        assert_eq!(family_fvm(2).unwrap(), a("11000"));
        assert_eq!(family_fvm(3).unwrap(), a("1110000"));
        assert_eq!(family_w(0, 1).unwrap(), a("10100"));
        assert_eq!(family_w(1, 1).unwrap(), a("11010010100"));
        assert_eq!(family_w(0, 2).unwrap(), a("1010100"));
        for k in 1..=20 {
            assert_eq!(family_fvm(k).unwrap().len(), 2 * k + 1);
        }
        for outer in 0..=6 {
            for inner in 1..=10 {
                assert!(family_w(outer, inner).is_ok(), "w({outer},{inner})");
            }
        }
    }

    #[test]
    fn block_counts_follow_the_rules() {
        assert_eq!(a("1100100").block_counts(), [0, 2, 3, 2, 1, 2, 1, 0]);
        assert_eq!(a("1100100").max_blocks(), 3);
        assert_eq!(a("1100100").speedups(), 3);
    }
}

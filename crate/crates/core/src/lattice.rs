//! Feature subsets and the subset lattice.
//!
//! A [`LatticeSupport`] lists the subsets a decomposition lives on, in the
//! canonical order: by cardinality first, then by the numeric value of the
//! bit pattern. The dense position of a subset is computed arithmetically
//! from its combinatorial rank, so supports never need a lookup table.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use crate::{Error, Result};

/// Widest feature set a mask can represent.
pub const MAX_FEATURES: usize = 64;

/// Largest `n` accepted in [`SupportMode::Full`].
pub const MAX_FULL_FEATURES: usize = 24;

/// Upper bound on the number of subsets in any support.
pub const MAX_SUPPORT_SIZE: usize = 1 << MAX_FULL_FEATURES;

/// A set of feature indices packed into a 64-bit pattern.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubsetMask(u64);

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask(0);

    pub const fn from_bits(bits: u64) -> Self {
        SubsetMask(bits)
    }

    /// Builds a mask from feature indices, rejecting indices `>= n`.
    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I, n: usize) -> Result<Self> {
        let mut bits = 0u64;
        for i in indices {
            if i >= n || i >= MAX_FEATURES {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            bits |= 1 << i;
        }
        Ok(SubsetMask(bits))
    }

    pub fn singleton(i: usize) -> Self {
        debug_assert!(i < MAX_FEATURES);
        SubsetMask(1 << i)
    }

    /// All of `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_FEATURES);
        if n == MAX_FEATURES {
            SubsetMask(u64::MAX)
        } else {
            SubsetMask((1u64 << n) - 1)
        }
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn contains(self, i: usize) -> bool {
        i < MAX_FEATURES && self.0 & (1 << i) != 0
    }

    pub const fn is_subset_of(self, other: SubsetMask) -> bool {
        self.0 & !other.0 == 0
    }

    pub const fn intersects(self, other: SubsetMask) -> bool {
        self.0 & other.0 != 0
    }

    pub const fn union(self, other: SubsetMask) -> Self {
        SubsetMask(self.0 | other.0)
    }

    pub const fn intersection(self, other: SubsetMask) -> Self {
        SubsetMask(self.0 & other.0)
    }

    pub const fn difference(self, other: SubsetMask) -> Self {
        SubsetMask(self.0 & !other.0)
    }

    pub fn with(self, i: usize) -> Self {
        SubsetMask(self.0 | (1 << i))
    }

    pub fn without(self, i: usize) -> Self {
        SubsetMask(self.0 & !(1 << i))
    }

    /// Complement relative to `{0, .., n-1}`.
    pub fn complement(self, n: usize) -> Self {
        SubsetMask::full(n).difference(self)
    }

    /// Smallest member, if any.
    pub fn min_index(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Largest member, if any.
    pub fn max_index(self) -> Option<usize> {
        (self.0 != 0).then(|| 63 - self.0.leading_zeros() as usize)
    }

    /// True when every member is `< n`.
    pub fn fits(self, n: usize) -> bool {
        n >= MAX_FEATURES || self.0 >> n == 0
    }

    /// Member indices in ascending order.
    pub fn indices(self) -> Indices {
        Indices(self.0)
    }

    /// Every subset of `self`, including `∅` and `self`.
    pub fn submasks(self) -> Submasks {
        Submasks {
            full: self.0,
            next: Some(self.0),
        }
    }

    /// Comma-separated ascending indices; `""` for the empty set.
    pub fn key(self) -> String {
        let mut out = String::new();
        for (k, i) in self.indices().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{i}");
        }
        out
    }

    /// Parses the format produced by [`SubsetMask::key`].
    pub fn parse_key(key: &str, n: usize) -> Result<Self> {
        let key = key.trim();
        if key.is_empty() {
            return Ok(SubsetMask::EMPTY);
        }
        let mut indices = Vec::new();
        for part in key.split(',') {
            let part = part.trim();
            let i: usize = part.parse().map_err(|_| Error::Syntax {
                position: 0,
                message: alloc::format!("invalid subset key `{key}`"),
            })?;
            indices.push(i);
        }
        SubsetMask::from_indices(indices, n)
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.key())
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.key())
    }
}

#[derive(Clone, Debug)]
pub struct Indices(u64);

impl Iterator for Indices {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let k = self.0.count_ones() as usize;
        (k, Some(k))
    }
}

impl ExactSizeIterator for Indices {}

/// Descending enumeration of the submasks of a mask.
#[derive(Clone, Debug)]
pub struct Submasks {
    full: u64,
    next: Option<u64>,
}

impl Iterator for Submasks {
    type Item = SubsetMask;

    fn next(&mut self) -> Option<SubsetMask> {
        let cur = self.next?;
        self.next = if cur == 0 {
            None
        } else {
            Some((cur - 1) & self.full)
        };
        Some(SubsetMask(cur))
    }
}

const fn binomial_table() -> [[u64; MAX_FEATURES + 1]; MAX_FEATURES + 1] {
    let mut t = [[0u64; MAX_FEATURES + 1]; MAX_FEATURES + 1];
    let mut n = 0;
    while n <= MAX_FEATURES {
        t[n][0] = 1;
        let mut k = 1;
        while k <= n {
            t[n][k] = t[n - 1][k - 1].wrapping_add(if k < n { t[n - 1][k] } else { 0 });
            k += 1;
        }
        n += 1;
    }
    t
}

static BINOMIAL: [[u64; MAX_FEATURES + 1]; MAX_FEATURES + 1] = binomial_table();

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n || n > MAX_FEATURES {
        0
    } else {
        BINOMIAL[n][k]
    }
}

/// Which subsets a support contains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SupportMode {
    /// All `2^n` subsets.
    Full,
    /// Subsets of cardinality at most `k`.
    Truncated(usize),
}

impl SupportMode {
    pub fn name(self) -> &'static str {
        match self {
            SupportMode::Full => "full",
            SupportMode::Truncated(_) => "truncated",
        }
    }

    pub fn max_order(self) -> Option<usize> {
        match self {
            SupportMode::Full => None,
            SupportMode::Truncated(k) => Some(k),
        }
    }
}

/// An ordered, downward-closed family of subsets of `{0, .., n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSupport {
    n: usize,
    mode: SupportMode,
    max_card: usize,
    offsets: Vec<usize>,
    subsets: Vec<SubsetMask>,
}

impl LatticeSupport {
    /// Enumerates the support in canonical order.
    pub fn enumerate(n: usize, mode: SupportMode) -> Result<Self> {
        if n == 0 || n > MAX_FEATURES {
            return Err(Error::FeatureCountOutOfRange { n });
        }
        let max_card = match mode {
            SupportMode::Full => {
                if n > MAX_FULL_FEATURES {
                    return Err(Error::FullLatticeTooLarge {
                        n,
                        max: MAX_FULL_FEATURES,
                    });
                }
                n
            }
            SupportMode::Truncated(k) => {
                if k < 1 || k > n {
                    return Err(Error::InvalidOrder { k, n });
                }
                k
            }
        };

        let mut offsets = Vec::with_capacity(max_card + 2);
        let mut total: u128 = 0;
        for j in 0..=max_card {
            offsets.push(total as usize);
            total += binomial(n, j) as u128;
            if total > MAX_SUPPORT_SIZE as u128 {
                return Err(Error::SupportTooLarge {
                    size: total,
                    max: MAX_SUPPORT_SIZE,
                });
            }
        }
        offsets.push(total as usize);

        let mut subsets = Vec::with_capacity(total as usize);
        let limit: u128 = 1u128 << n;
        for j in 0..=max_card {
            if j == 0 {
                subsets.push(SubsetMask::EMPTY);
                continue;
            }
            // Gosper's hack walks same-popcount patterns in increasing order.
            let mut x: u128 = (1u128 << j) - 1;
            while x < limit {
                subsets.push(SubsetMask(x as u64));
                let c = x & x.wrapping_neg();
                let r = x + c;
                x = (((r ^ x) >> 2) / c) | r;
            }
        }
        debug_assert_eq!(subsets.len(), total as usize);

        Ok(LatticeSupport {
            n,
            mode,
            max_card,
            offsets,
            subsets,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> SupportMode {
        self.mode
    }

    /// Largest subset cardinality present.
    pub fn max_order(&self) -> usize {
        self.max_card
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    /// True when the support holds every subset of `N`.
    pub fn is_complete(&self) -> bool {
        self.max_card == self.n
    }

    pub fn subsets(&self) -> &[SubsetMask] {
        &self.subsets
    }

    pub fn subset(&self, pos: usize) -> SubsetMask {
        self.subsets[pos]
    }

    pub fn contains(&self, s: SubsetMask) -> bool {
        s.fits(self.n) && s.len() <= self.max_card
    }

    /// Dense position of `s`, or `None` when `s` is not in the support.
    pub fn index_of(&self, s: SubsetMask) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        // colex rank: sum over the i-th smallest member c_i of C(c_i, i)
        let rank: u64 = s
            .indices()
            .enumerate()
            .map(|(i, c)| binomial(c, i + 1))
            .sum();
        Some(self.offsets[s.len()] + rank as usize)
    }

    /// Positions of the subsets of cardinality `j`.
    pub fn order_range(&self, j: usize) -> core::ops::Range<usize> {
        if j > self.max_card {
            return self.len()..self.len();
        }
        self.offsets[j]..self.offsets[j + 1]
    }

    fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                found: values.len(),
            });
        }
        Ok(())
    }

    fn transform(&self, values: &[f64], sign: f64) -> Result<Vec<f64>> {
        self.check_len(values)?;
        if self.mode == SupportMode::Full {
            let mut natural = vec![0.0; 1usize << self.n];
            for (s, &v) in self.subsets.iter().zip(values) {
                natural[s.0 as usize] = v;
            }
            for bit in 0..self.n {
                let step = 1usize << bit;
                for block in natural.chunks_exact_mut(step * 2) {
                    let (lo, hi) = block.split_at_mut(step);
                    for (l, h) in lo.iter().zip(hi.iter_mut()) {
                        *h += sign * *l;
                    }
                }
            }
            Ok(self.subsets.iter().map(|s| natural[s.0 as usize]).collect())
        } else {
            // Downward closure keeps L \ {bit} in the support, and the pass
            // for one bit never writes an entry it later reads.
            let mut out = values.to_vec();
            for bit in 0..self.n {
                for pos in 0..self.subsets.len() {
                    let s = self.subsets[pos];
                    if s.contains(bit) {
                        let lower = self
                            .index_of(s.without(bit))
                            .expect("support is downward closed");
                        out[pos] += sign * out[lower];
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Harsanyi dividends: `μ_L = Σ_{S⊆L} (−1)^{|L|−|S|} values_S` for every `L`
/// in the support.
pub fn mobius_transform(values: &[f64], support: &LatticeSupport) -> Result<Vec<f64>> {
    support.transform(values, -1.0)
}

/// Inverse of [`mobius_transform`]: `v_L = Σ_{S⊆L} μ_S`.
pub fn zeta_transform(mu: &[f64], support: &LatticeSupport) -> Result<Vec<f64>> {
    support.transform(mu, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_mobius(values: &[f64], support: &LatticeSupport) -> Vec<f64> {
        support
            .subsets()
            .iter()
            .map(|&l| {
                l.submasks()
                    .map(|s| {
                        let sign = if (l.len() - s.len()) % 2 == 0 { 1.0 } else { -1.0 };
                        sign * values[support.index_of(s).unwrap()]
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn full_order_n3() {
        let s = LatticeSupport::enumerate(3, SupportMode::Full).unwrap();
        let bits: Vec<u64> = s.subsets().iter().map(|m| m.bits()).collect();
        assert_eq!(bits, vec![0, 1, 2, 4, 3, 5, 6, 7]);
        for (pos, &m) in s.subsets().iter().enumerate() {
            assert_eq!(s.index_of(m), Some(pos));
        }
    }

    #[test]
    fn truncated_counts() {
        let s = LatticeSupport::enumerate(5, SupportMode::Truncated(2)).unwrap();
        assert_eq!(s.len(), 16);
        assert_eq!(s.index_of(SubsetMask::from_bits(0b111)), None);
        let big = LatticeSupport::enumerate(64, SupportMode::Truncated(2)).unwrap();
        assert_eq!(big.len(), 1 + 64 + 2016);
        assert_eq!(big.index_of(SubsetMask::from_bits(1 << 63 | 1 << 62)), Some(big.len() - 1));
    }

    #[test]
    fn guards() {
        assert_eq!(
            LatticeSupport::enumerate(25, SupportMode::Full),
            Err(Error::FullLatticeTooLarge { n: 25, max: 24 })
        );
        assert_eq!(
            LatticeSupport::enumerate(4, SupportMode::Truncated(0)),
            Err(Error::InvalidOrder { k: 0, n: 4 })
        );
        assert_eq!(
            LatticeSupport::enumerate(4, SupportMode::Truncated(5)),
            Err(Error::InvalidOrder { k: 5, n: 4 })
        );
        assert_eq!(
            LatticeSupport::enumerate(0, SupportMode::Full),
            Err(Error::FeatureCountOutOfRange { n: 0 })
        );
        assert!(matches!(
            LatticeSupport::enumerate(64, SupportMode::Truncated(10)),
            Err(Error::SupportTooLarge { .. })
        ));
    }

    #[test]
    fn mobius_two_features() {
        let s = LatticeSupport::enumerate(2, SupportMode::Full).unwrap();
        // order: ∅, {0}, {1}, {0,1}
        let mu = mobius_transform(&[0.0, 1.0, 0.0, 3.0], &s).unwrap();
        assert_eq!(mu, vec![0.0, 1.0, 0.0, 2.0]);
        let v = zeta_transform(&[0.0, 1.0, 0.0, 2.0], &s).unwrap();
        assert_eq!(v, vec![0.0, 1.0, 0.0, 3.0]);
    }

    #[test]
    fn mobius_constant_and_additive() {
        let s = LatticeSupport::enumerate(3, SupportMode::Full).unwrap();
        let mu = mobius_transform(&[2.5; 8], &s).unwrap();
        assert_eq!(mu[0], 2.5);
        assert!(mu[1..].iter().all(|&x| x == 0.0));

        let card: Vec<f64> = s.subsets().iter().map(|m| m.len() as f64).collect();
        let mu = mobius_transform(&card, &s).unwrap();
        for (m, x) in s.subsets().iter().zip(&mu) {
            assert_eq!(*x, if m.len() == 1 { 1.0 } else { 0.0 });
        }
        assert_eq!(mu, brute_mobius(&card, &s));
    }

    #[test]
    fn truncated_matches_brute_force() {
        let s = LatticeSupport::enumerate(7, SupportMode::Truncated(3)).unwrap();
        let values: Vec<f64> = (0..s.len()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let mu = mobius_transform(&values, &s).unwrap();
        let brute = brute_mobius(&values, &s);
        for (a, b) in mu.iter().zip(&brute) {
            assert!((a - b).abs() < 1e-12);
        }
        let back = zeta_transform(&mu, &s).unwrap();
        for (a, b) in back.iter().zip(&values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch() {
        let s = LatticeSupport::enumerate(2, SupportMode::Full).unwrap();
        assert_eq!(
            mobius_transform(&[0.0; 3], &s),
            Err(Error::ShapeMismatch { expected: 4, found: 3 })
        );
        assert!(zeta_transform(&[0.0; 5], &s).is_err());
    }

    #[test]
    fn mask_helpers() {
        let m = SubsetMask::from_indices([2, 0, 5], 6).unwrap();
        assert_eq!(m.key(), "0,2,5");
        assert_eq!(SubsetMask::parse_key("0,2,5", 6).unwrap(), m);
        assert_eq!(SubsetMask::parse_key("", 6).unwrap(), SubsetMask::EMPTY);
        assert_eq!(m.submasks().count(), 8);
        assert_eq!(m.min_index(), Some(0));
        assert_eq!(m.max_index(), Some(5));
        assert!(SubsetMask::from_indices([6], 6).is_err());
        assert_eq!(SubsetMask::full(64).len(), 64);
        assert_eq!(m.complement(6).key(), "1,3,4");
    }
}

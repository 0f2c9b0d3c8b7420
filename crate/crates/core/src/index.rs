//! Moment indices, their conjugation/permutation symmetries and the truncated
//! index sets of the relaxation.
//!
//! A moment `y_{l, n_1..n_k}` is addressed by a time degree `l` and a multiset
//! of Fourier frequencies. Permutation symmetry is absorbed by always storing
//! the multiset sorted; conjugation symmetry (`conj y_{l,n} = y_{l,-n}`) is
//! handled by [`canonicalize`].

use std::cmp::Ordering;
use std::fmt;

use itertools::Itertools;
use num_integer::binomial;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fourier mode index on the torus.
pub type Frequency = i32;

/// Time degree plus a sorted multiset of frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MomentIndex {
    time_degree: u32,
    freqs: Vec<Frequency>,
}

impl MomentIndex {
    /// Builds an index; the frequencies are sorted into canonical multiset order.
    pub fn new(time_degree: u32, mut freqs: Vec<Frequency>) -> Self {
        freqs.sort_unstable();
        Self { time_degree, freqs }
    }

    /// The mass-type index `y_{l, ∅}`.
    pub fn empty(time_degree: u32) -> Self {
        Self {
            time_degree,
            freqs: Vec::new(),
        }
    }

    pub fn time_degree(&self) -> u32 {
        self.time_degree
    }

    pub fn freqs(&self) -> &[Frequency] {
        &self.freqs
    }

    /// Algebraic degree `k`.
    pub fn order(&self) -> usize {
        self.freqs.len()
    }

    pub fn harmonic_degree(&self) -> u32 {
        self.freqs.iter().map(|n| n.unsigned_abs()).max().unwrap_or(0)
    }

    /// `N = Σ n_j²`.
    pub fn squared_norm(&self) -> u64 {
        self.freqs.iter().map(|&n| (n as i64 * n as i64) as u64).sum()
    }

    pub fn is_zero_frequency(&self) -> bool {
        self.freqs.iter().all(|&n| n == 0)
    }

    pub fn with_time_degree(&self, time_degree: u32) -> Self {
        Self {
            time_degree,
            freqs: self.freqs.clone(),
        }
    }

    /// Index with every frequency negated (the conjugate moment).
    pub fn negated(&self) -> Self {
        Self {
            time_degree: self.time_degree,
            freqs: self.freqs.iter().rev().map(|n| -n).collect(),
        }
    }

    /// True when the multiset is invariant under negation, so the moment is real.
    pub fn is_self_conjugate(&self) -> bool {
        self.freqs
            .iter()
            .zip(self.freqs.iter().rev())
            .all(|(a, b)| *a == -*b)
    }

    pub fn fits(&self, deg: &TruncationDegrees) -> bool {
        self.time_degree <= deg.time
            && self.order() <= deg.algebraic as usize
            && self.harmonic_degree() <= deg.harmonic
    }

    /// Pipe-separated frequency list, empty for `k = 0`.
    pub fn freqs_label(&self) -> String {
        self.freqs.iter().join("|")
    }

    /// Inverse of [`MomentIndex::freqs_label`].
    pub fn parse_freqs_label(label: &str) -> std::result::Result<Vec<Frequency>, String> {
        let label = label.trim();
        if label.is_empty() {
            return Ok(Vec::new());
        }
        label
            .split('|')
            .map(|s| {
                s.trim()
                    .parse::<Frequency>()
                    .map_err(|e| format!("bad frequency {s:?}: {e}"))
            })
            .collect()
    }
}

impl Ord for MomentIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time_degree
            .cmp(&other.time_degree)
            .then(self.freqs.len().cmp(&other.freqs.len()))
            .then_with(|| self.freqs.cmp(&other.freqs))
    }
}

impl PartialOrd for MomentIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MomentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y[{}; {}]", self.time_degree, self.freqs.iter().join(","))
    }
}

/// Canonical representative of a conjugate pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalIndex {
    pub index: MomentIndex,
    /// The original index is the negation of `index`; its moment is `conj(y[index])`.
    pub conjugated: bool,
}

/// Picks the lexicographically smaller of the sorted multiset and its negation.
pub fn canonicalize(idx: &MomentIndex) -> CanonicalIndex {
    let neg = idx.negated();
    if neg.freqs < idx.freqs {
        CanonicalIndex {
            index: neg,
            conjugated: true,
        }
    } else {
        CanonicalIndex {
            index: idx.clone(),
            conjugated: false,
        }
    }
}

/// Truncation bounds `(d_t, d_a, d_h)` on time, algebraic and harmonic degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncationDegrees {
    pub time: u32,
    pub algebraic: u32,
    pub harmonic: u32,
}

impl TruncationDegrees {
    /// Time and algebraic degrees must be even.
    pub fn new(time: u32, algebraic: u32, harmonic: u32) -> Result<Self> {
        if !time.is_multiple_of(2) || !algebraic.is_multiple_of(2) {
            return Err(Error::InvalidDegrees(format!(
                "time and algebraic degrees must be even, got ({time},{algebraic},{harmonic})"
            )));
        }
        Ok(Self {
            time,
            algebraic,
            harmonic,
        })
    }

    /// Checks the minimum degrees needed for a relaxation with localizing rows.
    pub fn ensure_solvable(&self) -> Result<()> {
        if self.time < 2 || self.algebraic < 2 {
            return Err(Error::InvalidDegrees(format!(
                "relaxation needs time and algebraic degree >= 2, got {self}"
            )));
        }
        Ok(())
    }

    /// Moment-vector cardinality `(d_t+1) Σ_{k≤d_a} C(2d_h+k, k)`.
    pub fn moment_vector_len(&self) -> u128 {
        (self.time as u128 + 1) * multiset_count(self.harmonic, self.algebraic)
    }

    /// Moment-matrix size `(d_t/2+1) Σ_{k≤d_a/2} C(2d_h+k, k)`.
    pub fn matrix_basis_len(&self) -> u128 {
        (self.time as u128 / 2 + 1) * multiset_count(self.harmonic, self.algebraic / 2)
    }
}

impl fmt::Display for TruncationDegrees {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.time, self.algebraic, self.harmonic)
    }
}

impl std::str::FromStr for TruncationDegrees {
    type Err = Error;

    /// Parses `"dt,da,dh"`, optionally wrapped in parentheses.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<u32> = trimmed
            .split(',')
            .map(|p| p.trim().parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidDegrees(format!("{s:?}: {e}")))?;
        match parts.as_slice() {
            [t, a, h] => Self::new(*t, *a, *h),
            _ => Err(Error::InvalidDegrees(format!("{s:?}: expected three integers"))),
        }
    }
}

/// Number of multisets of size ≤ `max_order` drawn from `2*harmonic + 1` frequencies.
fn multiset_count(harmonic: u32, max_order: u32) -> u128 {
    let alphabet = 2 * harmonic as u128;
    (0..=max_order as u128)
        .map(|k| binomial(alphabet + k, k))
        .sum()
}

/// Sorted frequency multisets of size ≤ `max_order` with `|n| ≤ harmonic`,
/// ordered by size then lexicographically.
pub fn frequency_multisets(harmonic: u32, max_order: u32) -> Vec<Vec<Frequency>> {
    let h = harmonic as Frequency;
    (0..=max_order as usize)
        .flat_map(|k| (-h..=h).combinations_with_replacement(k))
        .collect()
}

/// Every index with `l ≤ d_t`, `k ≤ d_a`, `|n_j| ≤ d_h`, one per multiset.
pub fn enumerate_moment_vector(deg: &TruncationDegrees) -> Vec<MomentIndex> {
    let multisets = frequency_multisets(deg.harmonic, deg.algebraic);
    (0..=deg.time)
        .flat_map(|l| {
            multisets
                .iter()
                .map(move |f| MomentIndex {
                    time_degree: l,
                    freqs: f.clone(),
                })
        })
        .collect()
}

/// Row/column label of a moment or localizing matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisMonomial {
    pub time_half_degree: u32,
    pub freqs: Vec<Frequency>,
}

impl BasisMonomial {
    pub fn new(time_half_degree: u32, mut freqs: Vec<Frequency>) -> Self {
        freqs.sort_unstable();
        Self {
            time_half_degree,
            freqs,
        }
    }
}

/// Basis with time half-degree ≤ `max_time`, order ≤ `max_order`, full harmonic degree.
pub fn basis_monomials(max_time: u32, max_order: u32, harmonic: u32) -> Vec<BasisMonomial> {
    let multisets = frequency_multisets(harmonic, max_order);
    (0..=max_time)
        .flat_map(|l| {
            multisets.iter().map(move |f| BasisMonomial {
                time_half_degree: l,
                freqs: f.clone(),
            })
        })
        .collect()
}

/// Row/column basis of the occupation moment matrix.
pub fn enumerate_matrix_basis(deg: &TruncationDegrees) -> Vec<BasisMonomial> {
    basis_monomials(deg.time / 2, deg.algebraic / 2, deg.harmonic)
}

/// Index of the moment-matrix entry `(row, col)`: `y_{l+l', row ∪ -col}`.
pub fn entry_index(row: &BasisMonomial, col: &BasisMonomial) -> MomentIndex {
    let freqs = row
        .freqs
        .iter()
        .copied()
        .chain(col.freqs.iter().map(|n| -n))
        .collect();
    MomentIndex::new(row.time_half_degree + col.time_half_degree, freqs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(t: u32, a: u32, h: u32) -> TruncationDegrees {
        TruncationDegrees::new(t, a, h).unwrap()
    }

    #[test]
    fn canonicalize_permutation_symmetry() {
        let a = canonicalize(&MomentIndex::new(1, vec![2, -1]));
        let b = canonicalize(&MomentIndex::new(1, vec![-1, 2]));
        assert_eq!(a, b);
    }

    #[test]
    fn canonicalize_conjugation_symmetry() {
        let a = canonicalize(&MomentIndex::new(0, vec![1, -2]));
        let b = canonicalize(&MomentIndex::new(0, vec![-1, 2]));
        assert_eq!(a.index, b.index);
        assert_ne!(a.conjugated, b.conjugated);
    }

    #[test]
    fn canonicalize_self_conjugate() {
        let idx = MomentIndex::new(3, vec![-1, 1]);
        assert!(idx.is_self_conjugate());
        let c = canonicalize(&idx);
        assert!(!c.conjugated);
        assert_eq!(c.index, idx);
    }

    #[test]
    fn moment_vector_sizes() {
        assert_eq!(enumerate_moment_vector(&deg(2, 2, 2)).len(), 63);
        assert_eq!(enumerate_moment_vector(&deg(6, 2, 4)).len(), 385);
        assert_eq!(deg(6, 6, 6).moment_vector_len(), 189924);
    }

    #[test]
    fn matrix_basis_sizes() {
        assert_eq!(enumerate_matrix_basis(&deg(2, 2, 2)).len(), 12);
        assert_eq!(enumerate_matrix_basis(&deg(4, 4, 4)).len(), 165);
        assert_eq!(enumerate_matrix_basis(&deg(6, 6, 4)).len(), 880);
    }

    #[test]
    fn zero_degrees_hold_only_the_mass() {
        let d = deg(0, 0, 0);
        assert_eq!(d.moment_vector_len(), 1);
        assert_eq!(d.matrix_basis_len(), 1);
        assert_eq!(enumerate_moment_vector(&d), vec![MomentIndex::empty(0)]);
    }

    #[test]
    fn entry_index_examples() {
        let e = entry_index(&BasisMonomial::new(1, vec![1]), &BasisMonomial::new(0, vec![2]));
        assert_eq!(e, MomentIndex::new(1, vec![1, -2]));
        let e = entry_index(&BasisMonomial::new(0, vec![]), &BasisMonomial::new(0, vec![]));
        assert_eq!(e, MomentIndex::empty(0));
        let e = entry_index(&BasisMonomial::new(0, vec![1]), &BasisMonomial::new(0, vec![1]));
        assert_eq!(e, MomentIndex::new(0, vec![-1, 1]));
    }

    #[test]
    fn enumeration_is_sorted_and_unique() {
        let v = enumerate_moment_vector(&deg(4, 4, 2));
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn odd_degrees_rejected() {
        assert!(TruncationDegrees::new(3, 2, 2).is_err());
        assert!(TruncationDegrees::new(2, 1, 2).is_err());
        assert!(deg(0, 2, 2).ensure_solvable().is_err());
    }

    #[test]
    fn parse_degrees() {
        let d: TruncationDegrees = "(4, 2, 2)".parse().unwrap();
        assert_eq!(d, deg(4, 2, 2));
        assert!("4,2".parse::<TruncationDegrees>().is_err());
    }

    #[test]
    fn freqs_label_round_trip() {
        let idx = MomentIndex::new(2, vec![1, -2, 0]);
        assert_eq!(idx.freqs_label(), "-2|0|1");
        assert_eq!(MomentIndex::parse_freqs_label("-2|0|1").unwrap(), idx.freqs());
        assert!(MomentIndex::parse_freqs_label("").unwrap().is_empty());
    }
}

//! Validated logit vectors and their descending-sorted view.

use std::cmp::Ordering;

use crate::error::{check_temperature, Error, Result};

/// One decoding step's raw scores over a vocabulary.
///
/// Every value is finite and there are at least two of them. Values are
/// stored as `f64`; vectors read from `f32` sources convert exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector {
    values: Vec<f64>,
}

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooShort { len: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values })
    }

    pub fn from_f32(values: &[f32]) -> Result<Self> {
        Self::new(values.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    /// Returns `l / temperature`.
    pub fn scaled(&self, temperature: f64) -> Result<Self> {
        check_temperature(temperature)?;
        Self::new(self.values.iter().map(|v| v / temperature).collect())
    }

    /// Returns `l + shift`.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v + shift).collect())
    }

    /// Index of the largest logit; the lowest index wins ties.
    ///
    /// Reduces blocks of 8 lane-wise and only searches a block whose
    /// maximum beats the best so far.
    pub fn argmax(&self) -> u32 {
        const BLOCK: usize = 8;
        let values = &self.values;
        let mut best_value = f64::NEG_INFINITY;
        let mut best_block = 0;
        let blocks = values.chunks_exact(BLOCK);
        let tail = blocks.remainder();
        for (b, block) in blocks.enumerate() {
            let x: &[f64; BLOCK] = block.try_into().unwrap();
            let hi = fmax(
                fmax(fmax(x[0], x[4]), fmax(x[2], x[6])),
                fmax(fmax(x[1], x[5]), fmax(x[3], x[7])),
            );
            if hi > best_value {
                best_value = hi;
                best_block = b * BLOCK;
            }
        }
        let offset = values.len() - tail.len();
        for (j, &v) in tail.iter().enumerate() {
            if v > best_value {
                best_value = v;
                best_block = offset + j;
            }
        }
        // The first entry equal to the maximum; -0.0 and +0.0 compare equal.
        let end = (best_block + BLOCK).min(values.len());
        let j = values[best_block..end]
            .iter()
            .position(|&v| v == best_value)
            .unwrap_or(0);
        (best_block + j) as u32
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl TryFrom<Vec<f64>> for LogitVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl AsRef<[f64]> for LogitVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

#[inline(always)]
pub(crate) fn fmax(a: f64, b: f64) -> f64 {
    if a > b {
        a
    } else {
        b
    }
}

#[inline(always)]
pub(crate) fn fmin(a: f64, b: f64) -> f64 {
    if a < b {
        a
    } else {
        b
    }
}

/// Total rank order over `(value, index)` pairs: larger values first, then
/// lower indices. `-0.0` and `+0.0` compare equal.
#[inline]
pub(crate) fn rank_order(a: &(f64, u32), b: &(f64, u32)) -> Ordering {
    b.0.partial_cmp(&a.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
}

/// Logits sorted in descending order together with the permutation that
/// produced them. Ties keep ascending original-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedView {
    perm: Vec<u32>,
    values: Vec<f64>,
}

impl SortedView {
    pub fn perm(&self) -> &[u32] {
        &self.perm
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Vocabulary ids of the first `k` ranks.
    pub fn top_ids(&self, k: usize) -> Vec<u32> {
        self.perm[..k.min(self.perm.len())].to_vec()
    }
}

pub fn sort_descending(logits: &LogitVector) -> SortedView {
    let mut pairs = ranked_pairs(logits.values());
    // The index tie-break makes this total order equivalent to a stable sort.
    pairs.sort_unstable_by(rank_order);
    let (values, perm) = pairs.into_iter().unzip();
    SortedView { perm, values }
}

pub(crate) fn ranked_pairs(values: &[f64]) -> Vec<(f64, u32)> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i as u32))
        .collect()
}

/// The `k` highest-ranked `(value, index)` pairs in rank order.
pub(crate) fn top_pairs(values: &[f64], k: usize) -> Vec<(f64, u32)> {
    let mut pairs = ranked_pairs(values);
    let k = k.min(pairs.len());
    if k == 0 {
        return Vec::new();
    }
    if k < pairs.len() {
        pairs.select_nth_unstable_by(k - 1, rank_order);
        pairs.truncate(k);
    }
    pairs.sort_unstable_by(rank_order);
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(values: &[f64]) -> LogitVector {
        LogitVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn rejects_short_and_non_finite() {
        assert_eq!(LogitVector::new(vec![1.0]), Err(Error::TooShort { len: 1 }));
        assert_eq!(LogitVector::new(vec![]), Err(Error::TooShort { len: 0 }));
        assert_eq!(
            LogitVector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        );
        assert_eq!(
            LogitVector::new(vec![f64::NEG_INFINITY, 0.0]),
            Err(Error::NonFinite { index: 0 })
        );
    }

    #[test]
    fn sorts_descending_with_permutation() {
        let sorted = sort_descending(&lv(&[3.0, 7.0, 5.0]));
        assert_eq!(sorted.values(), &[7.0, 5.0, 3.0]);
        assert_eq!(sorted.perm(), &[1, 2, 0]);
    }

    #[test]
    fn ties_keep_original_order() {
        let sorted = sort_descending(&lv(&[2.0, 2.0, 1.0]));
        assert_eq!(sorted.perm(), &[0, 1, 2]);
        let sorted = sort_descending(&lv(&[1.0, 2.0, 1.0, 2.0]));
        assert_eq!(sorted.perm(), &[1, 3, 0, 2]);
    }

    #[test]
    fn signed_zeros_tie() {
        let sorted = sort_descending(&lv(&[-0.0, 0.0, -1.0]));
        assert_eq!(sorted.perm(), &[0, 1, 2]);
    }

    #[test]
    fn top_pairs_matches_full_sort() {
        let values = [0.5, 3.0, 3.0, -1.0, 2.0, 3.0, 0.5];
        let sorted = sort_descending(&lv(&values));
        for k in 0..=values.len() + 1 {
            let ids: Vec<u32> = top_pairs(&values, k).iter().map(|p| p.1).collect();
            assert_eq!(ids, sorted.top_ids(k), "k = {k}");
        }
    }

    #[test]
    fn scaling_rejects_bad_temperature() {
        let l = lv(&[1.0, 2.0]);
        assert!(l.scaled(0.0).is_err());
        assert!(l.scaled(-1.0).is_err());
        assert!(l.scaled(f64::NAN).is_err());
        assert_eq!(l.scaled(2.0).unwrap().values(), &[0.5, 1.0]);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(lv(&[1.0, 3.0, 2.0]).argmax(), 1);
        assert_eq!(lv(&[3.0, 3.0]).argmax(), 0);
    }
}

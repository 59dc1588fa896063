//! Min-k truncation.
//!
//! The candidate set size comes from the shape of the sorted logits:
//!
//! 1. sort descending, `l_1 >= ... >= l_V`, and take the dynamic range
//!    `R = l_1 - l_V`;
//! 2. score every rank by its weighted relative drop
//!    `w_i = (l_i - l_{i+1}) / (R + eps) * weight(i)`, with `weight(i) = 1/i`
//!    by default;
//! 3. the cliff is the first rank maximising `w_i`;
//! 4. a fallback size `floor(tau / (R + eps))` keeps flat distributions from
//!    collapsing to a single token;
//! 5. keep the top `k = clamp(max(k_cliff, k_fallback), 1, V)` tokens.
//!
//! Scaling every logit by `1/T` scales every drop and `R` alike, so the
//! cliff rank does not move with temperature. The fallback term depends on
//! the absolute range and is only inert once `R` exceeds `tau`.
//!
//! [`min_k_truncate`] avoids the full sort on large vocabularies: it keeps
//! a short sorted head in a single pass and proves that no rank past the
//! head can outscore the best drop inside it, because every later drop is
//! bounded by `l_{m+1} - l_V`. When the proof fails it falls back to the
//! sorted pipeline, which is also exposed as [`min_k_truncate_sorted`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decision::{
    apply_temperature_softmax, sample_token, Method, MinKDiagnostics, SamplingOutcome,
    TruncationDecision,
};
use crate::error::{invalid, Error, Result};
use crate::logits::{fmax, fmin, rank_order, sort_descending, LogitVector, SortedView};
use crate::rng::SamplerRng;

pub const DEFAULT_TAU: f64 = 3.0;
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Positional weighting applied to each rank's normalized drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayKind {
    /// `1`
    PowerZero,
    /// `1 / sqrt(i)`
    PowerHalf,
    /// `1 / i`
    #[default]
    Linear,
    /// `1 / i^2`
    PowerTwo,
    /// `1 / ln(i + 1)`; `1 / ln(i)` is undefined at rank 1.
    LogInverse,
}

impl DecayKind {
    pub const ALL: [DecayKind; 5] = [
        DecayKind::PowerZero,
        DecayKind::PowerHalf,
        DecayKind::Linear,
        DecayKind::PowerTwo,
        DecayKind::LogInverse,
    ];

    /// Weight of 1-based `rank`. Positive and non-increasing in rank.
    #[inline]
    pub fn weight(self, rank: usize) -> f64 {
        let r = rank as f64;
        match self {
            DecayKind::PowerZero => 1.0,
            DecayKind::PowerHalf => 1.0 / r.sqrt(),
            DecayKind::Linear => 1.0 / r,
            DecayKind::PowerTwo => 1.0 / (r * r),
            DecayKind::LogInverse => 1.0 / (r + 1.0).ln(),
        }
    }

    pub fn cli_name(self) -> &'static str {
        match self {
            DecayKind::PowerZero => "pow0",
            DecayKind::PowerHalf => "pow05",
            DecayKind::Linear => "linear",
            DecayKind::PowerTwo => "pow2",
            DecayKind::LogInverse => "log",
        }
    }
}

impl fmt::Display for DecayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for DecayKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DecayKind::ALL
            .into_iter()
            .find(|k| k.cli_name() == s)
            .ok_or_else(|| invalid("decay", format!("unknown decay `{s}`")))
    }
}

/// Min-k hyperparameters and ablation switches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinKParams {
    pub tau: f64,
    pub decay: DecayKind,
    pub use_weight: bool,
    pub use_range_norm: bool,
    pub use_fallback: bool,
    pub epsilon: f64,
}

impl Default for MinKParams {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            decay: DecayKind::Linear,
            use_weight: true,
            use_range_norm: true,
            use_fallback: true,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl MinKParams {
    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_decay(mut self, decay: DecayKind) -> Self {
        self.decay = decay;
        self
    }

    pub fn without_weight(mut self) -> Self {
        self.use_weight = false;
        self
    }

    pub fn without_range_norm(mut self) -> Self {
        self.use_range_norm = false;
        self
    }

    pub fn without_fallback(mut self) -> Self {
        self.use_fallback = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(invalid(
                "tau",
                format!("must be finite and >= 0, got {}", self.tau),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(
                "epsilon",
                format!("must be finite and > 0, got {}", self.epsilon),
            ));
        }
        Ok(())
    }

    #[inline]
    fn rank_weight(&self, rank: usize) -> f64 {
        if self.use_weight {
            self.decay.weight(rank)
        } else {
            1.0
        }
    }

    #[inline]
    fn divisor(&self, r_l: f64) -> f64 {
        if self.use_range_norm {
            range_divisor(r_l, self.epsilon)
        } else {
            1.0
        }
    }
}

/// Weighted relative drops, one per rank `1..V-1` (stored 0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct DecayProfile {
    pub weights: Vec<f64>,
    pub kind: DecayKind,
}

/// `l_1 - l_V` of a sorted view. Never includes epsilon.
pub fn dynamic_range(sorted: &SortedView) -> f64 {
    let values = sorted.values();
    values[0] - values[values.len() - 1]
}

/// The divisor used wherever the range normalizes something.
#[inline]
pub fn range_divisor(r_l: f64, epsilon: f64) -> f64 {
    r_l + epsilon
}

#[inline]
fn weighted_drop(gap: f64, divisor: f64, weight: f64) -> f64 {
    (gap / divisor) * weight
}

pub fn decay_profile(sorted: &SortedView, params: &MinKParams) -> DecayProfile {
    let values = sorted.values();
    let divisor = params.divisor(dynamic_range(sorted));
    let weights = values
        .windows(2)
        .enumerate()
        .map(|(i, pair)| weighted_drop(pair[0] - pair[1], divisor, params.rank_weight(i + 1)))
        .collect();
    DecayProfile {
        weights,
        kind: params.decay,
    }
}

/// 1-based rank of the largest weighted drop; the earliest rank wins ties.
pub fn detect_cliff(profile: &DecayProfile) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut rank = 1;
    for (i, &w) in profile.weights.iter().enumerate() {
        if w > best {
            best = w;
            rank = i + 1;
        }
    }
    rank
}

/// `floor(tau / (R + eps))`, or 0 when the fallback is disabled. Not clamped
/// to the vocabulary.
pub fn fallback_size(r_l: f64, params: &MinKParams) -> usize {
    if !params.use_fallback {
        return 0;
    }
    // Saturating float-to-int cast.
    (params.tau / range_divisor(r_l, params.epsilon)).floor() as usize
}

#[inline]
fn candidate_size(k_cliff: usize, k_fallback: usize, vocab: usize) -> usize {
    k_cliff.max(k_fallback).clamp(1, vocab)
}

/// Min-k over the full sorted view.
pub fn min_k_truncate_sorted(
    sorted: &SortedView,
    params: &MinKParams,
) -> Result<TruncationDecision> {
    params.validate()?;
    let r_l = dynamic_range(sorted);
    let k_cliff = detect_cliff(&decay_profile(sorted, params));
    let k_fallback = fallback_size(r_l, params);
    let k = candidate_size(k_cliff, k_fallback, sorted.len());
    Ok(TruncationDecision {
        method: Method::MinK,
        kept_ids: sorted.top_ids(k),
        min_k: Some(MinKDiagnostics {
            r_l,
            k_cliff,
            k_fallback,
        }),
    })
}

const SCAN_MIN_VOCAB: usize = 512;
/// Ranks resolved by the single-pass head.
const SCAN_HEAD: usize = 64;
/// Buckets in the histogram used to bound drops past the head.
const BUCKETS: usize = 256;
/// Relative margin on the tail bound; covers `ln` not being correctly
/// rounded in the log-decay weight.
const BOUND_SLACK: f64 = 1e-12;

/// Min-k on an unsorted vector.
///
/// Large vocabularies take a scan path: one pass collects the top ranks and
/// the minimum, and the cliff search is cut short once no later drop can
/// outweigh the best one found. The result always equals
/// [`min_k_truncate_sorted`] on the full sort.
pub fn min_k_truncate(logits: &LogitVector, params: &MinKParams) -> Result<TruncationDecision> {
    params.validate()?;
    let values = logits.values();
    if values.len() >= SCAN_MIN_VOCAB {
        if let Some(decision) = scan_truncate(values, params, SCAN_HEAD, true) {
            return Ok(decision);
        }
    }
    min_k_truncate_sorted(&sort_descending(logits), params)
}

/// Min-k searching only the `head` leading ranks for the cliff, or `None`
/// when a later cliff cannot be ruled out. With `histogram` set, a second
/// pass bounds the later drops more tightly before giving up.
pub(crate) fn scan_truncate(
    values: &[f64],
    params: &MinKParams,
    head: usize,
    histogram: bool,
) -> Option<TruncationDecision> {
    let vocab = values.len();
    if head == 0 || head + 1 >= vocab {
        return None;
    }
    let (mut candidates, min) = collect_head(values, head + 1);
    let top = sorted_prefix(&mut candidates, head + 1);
    let r_l = top[0].0 - min;
    let divisor = params.divisor(r_l);

    let mut best = f64::NEG_INFINITY;
    let mut k_cliff = 1;
    for rank in 1..=head {
        let w = weighted_drop(
            top[rank - 1].0 - top[rank].0,
            divisor,
            params.rank_weight(rank),
        );
        if w > best {
            best = w;
            k_cliff = rank;
        }
    }
    // Ties go to the earlier rank, so later drops only need to not exceed
    // `best`. Any drop past the head is at most l_{head+1} - l_V, with a
    // weight no larger than that of rank head+1.
    let settles = |bound: f64| best >= bound * (1.0 + BOUND_SLACK);
    let last = top[head].0;
    let proven = settles(weighted_drop(
        last - min,
        divisor,
        params.rank_weight(head + 1),
    )) || (histogram
        && settles(histogram_bound(
            values,
            last,
            min,
            head + 1,
            divisor,
            params,
        )));
    if !proven {
        return None;
    }

    let k_fallback = fallback_size(r_l, params);
    let k = candidate_size(k_cliff, k_fallback, vocab);
    let kept_ids = if k <= top.len() {
        top[..k].iter().map(|p| p.1).collect()
    } else {
        let mut pairs: Vec<(f64, u32)> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i as u32))
            .collect();
        sorted_prefix(&mut pairs, k).iter().map(|p| p.1).collect()
    };
    Some(TruncationDecision {
        method: Method::MinK,
        kept_ids,
        min_k: Some(MinKDiagnostics {
            r_l,
            k_cliff,
            k_fallback,
        }),
    })
}

/// Upper bound on the weighted drop at every rank `>= first`, where the
/// logit at rank `first` is `last`.
///
/// Values below `last` are counted into equal-width buckets down to `min`.
/// A drop starting in one occupied bucket ends no lower than the bottom of
/// the next occupied one, and its rank is at least the count above its
/// bucket.
fn histogram_bound(
    values: &[f64],
    last: f64,
    min: f64,
    first: usize,
    divisor: f64,
    params: &MinKParams,
) -> f64 {
    let span = last - min;
    if span <= 0.0 {
        return 0.0;
    }
    let scale = BUCKETS as f64 / span;
    let mut counts = [0u32; BUCKETS];
    let mut at_or_above = 0usize;
    for &v in values {
        if v >= last {
            at_or_above += 1;
        } else {
            let b = (((last - v) * scale) as usize).min(BUCKETS - 1);
            counts[b] += 1;
        }
    }

    // Widen every bucket edge to absorb rounding in the bucket index.
    let width = span / BUCKETS as f64;
    let margin = span * 1e-9;
    let top_edge = |b: usize| last - b as f64 * width + margin;
    let bottom_edge = |b: usize| last - (b + 1) as f64 * width - margin;

    // The group in progress: an upper limit on its values and its lowest rank.
    // It starts as the run of values equal to `last`.
    let mut upper = last;
    let mut rank = first;
    let mut seen = at_or_above;
    let mut bound = 0.0f64;
    let mut lowest = None;
    for (b, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let drop = upper - bottom_edge(b);
        bound = bound.max(weighted_drop(drop, divisor, params.rank_weight(rank)));
        upper = top_edge(b);
        rank = seen + 1;
        seen += count as usize;
        lowest = Some(b);
    }
    if let Some(b) = lowest {
        let drop = upper - bottom_edge(b);
        bound = bound.max(weighted_drop(drop, divisor, params.rank_weight(rank)));
    }
    bound
}

/// Move the `n` highest-ranked candidates to the front, sorted.
fn sorted_prefix(candidates: &mut [(f64, u32)], n: usize) -> &[(f64, u32)] {
    let n = n.min(candidates.len());
    if n < candidates.len() {
        candidates.select_nth_unstable_by(n - 1, rank_order);
    }
    let prefix = &mut candidates[..n];
    prefix.sort_unstable_by(rank_order);
    prefix
}

/// One pass over the logits: an unordered candidate list containing the
/// `cap` highest-ranked `(value, index)` pairs, and the minimum value.
///
/// Blocks of 8 are reduced lane-wise; a block is only inspected element by
/// element when its maximum beats the current admission floor. The list is
/// pruned back to `cap` whenever it doubles.
pub(crate) fn collect_head(values: &[f64], cap: usize) -> (Vec<(f64, u32)>, f64) {
    const BLOCK: usize = 8;
    let cap = cap.max(1);
    let mut candidates: Vec<(f64, u32)> = Vec::with_capacity(2 * cap + BLOCK);
    let mut floor = f64::NEG_INFINITY;
    let mut lo = [f64::INFINITY; 4];

    let admit = |candidates: &mut Vec<(f64, u32)>, floor: &mut f64, v: f64, i: usize| {
        // Scanning in index order, so a value equal to the floor ranks
        // below everything already admitted.
        if v > *floor {
            candidates.push((v, i as u32));
            if candidates.len() >= 2 * cap {
                candidates.select_nth_unstable_by(cap - 1, rank_order);
                candidates.truncate(cap);
                *floor = candidates[cap - 1].0;
            }
        }
    };

    let blocks = values.chunks_exact(BLOCK);
    let tail = blocks.remainder();
    for (b, block) in blocks.enumerate() {
        let x: &[f64; BLOCK] = block.try_into().unwrap();
        for j in 0..4 {
            lo[j] = fmin(lo[j], fmin(x[j], x[j + 4]));
        }
        let hi = fmax(
            fmax(fmax(x[0], x[4]), fmax(x[2], x[6])),
            fmax(fmax(x[1], x[5]), fmax(x[3], x[7])),
        );
        if hi > floor {
            for (j, &v) in x.iter().enumerate() {
                admit(&mut candidates, &mut floor, v, b * BLOCK + j);
            }
        }
    }
    let offset = values.len() - tail.len();
    for (j, &v) in tail.iter().enumerate() {
        lo[0] = fmin(lo[0], v);
        admit(&mut candidates, &mut floor, v, offset + j);
    }
    (candidates, fmin(fmin(lo[0], lo[1]), fmin(lo[2], lo[3])))
}

/// Truncate with Min-k, apply the temperature softmax to the survivors, and
/// draw one token.
pub fn min_k_step(
    logits: &LogitVector,
    params: &MinKParams,
    temperature: f64,
    rng: &mut SamplerRng,
) -> Result<SamplingOutcome> {
    let decision = min_k_truncate(logits, params)?;
    let probs = apply_temperature_softmax(&decision, logits, temperature)?;
    let tag = rng.tag();
    let token_id = sample_token(&probs, rng);
    Ok(SamplingOutcome {
        token_id,
        decision,
        temperature,
        rng: Some(tag),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn lv(values: &[f64]) -> LogitVector {
        LogitVector::new(values.to_vec()).unwrap()
    }

    fn sorted(values: &[f64]) -> SortedView {
        sort_descending(&lv(values))
    }

    fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).abs() <= tol, "{actual:?} vs {expected:?}");
        }
    }

    #[test]
    fn dynamic_range_examples() {
        assert_eq!(dynamic_range(&sorted(&[10.0, 9.0, 1.0, 0.0])), 10.0);
        assert_eq!(dynamic_range(&sorted(&[5.0, -5.0])), 10.0);
        let flat = sorted(&[2.5, 2.5, 2.5]);
        assert_eq!(dynamic_range(&flat), 0.0);
        assert_eq!(
            range_divisor(dynamic_range(&flat), DEFAULT_EPSILON),
            DEFAULT_EPSILON
        );
    }

    #[test]
    fn decay_profile_examples() {
        let view = sorted(&[10.0, 9.0, 1.0, 0.0]);
        let params = MinKParams::default();
        let w = decay_profile(&view, &params).weights;
        assert_close(&w, &[0.1, 0.4, 1.0 / 30.0], 1e-9);

        let w = decay_profile(&view, &params.without_weight()).weights;
        assert_close(&w, &[0.1, 0.8, 0.1], 1e-9);

        let flat = sorted(&[-1.0, -1.0, -1.0]);
        for kind in DecayKind::ALL {
            let w = decay_profile(&flat, &params.with_decay(kind)).weights;
            assert_eq!(w, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn decay_weights_are_positive_and_non_increasing() {
        for kind in DecayKind::ALL {
            let mut prev = f64::INFINITY;
            for rank in 1..10_000 {
                let w = kind.weight(rank);
                assert!(w > 0.0 && w <= prev, "{kind:?} at {rank}");
                prev = w;
            }
        }
        assert_eq!(DecayKind::LogInverse.weight(1), 1.0 / 2f64.ln());
    }

    #[test]
    fn linear_drops_never_exceed_their_weight() {
        let mut rng = SamplerRng::seeded(5);
        for _ in 0..200 {
            let values: Vec<f64> = (0..50).map(|_| rng.random_range(-20.0..20.0)).collect();
            let w = decay_profile(&sorted(&values), &MinKParams::default()).weights;
            for (i, &x) in w.iter().enumerate() {
                assert!(x >= 0.0 && x <= 1.0 / (i + 1) as f64);
            }
        }
    }

    #[test]
    fn cliff_examples() {
        let profile = |w: &[f64]| DecayProfile {
            weights: w.to_vec(),
            kind: DecayKind::Linear,
        };
        assert_eq!(detect_cliff(&profile(&[0.1, 0.4, 0.0333])), 2);
        assert_eq!(detect_cliff(&profile(&[0.0, 0.0])), 1);
        assert_eq!(detect_cliff(&profile(&[0.2, 0.5, 0.5])), 2);
    }

    #[test]
    fn cliff_matches_linear_scan_oracle() {
        let mut rng = SamplerRng::seeded(11);
        for _ in 0..10_000 {
            let len = rng.random_range(1..40);
            // Coarse values so exact ties show up.
            let weights: Vec<f64> = (0..len)
                .map(|_| rng.random_range(0..6) as f64 / 4.0)
                .collect();
            let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let oracle = weights.iter().position(|&w| w == max).unwrap() + 1;
            let got = detect_cliff(&DecayProfile {
                weights,
                kind: DecayKind::Linear,
            });
            assert_eq!(got, oracle);
        }
    }

    #[test]
    fn fallback_examples() {
        let params = MinKParams::default();
        // floor(3 / (0.5 + 1e-8)) = floor(5.99999988)
        assert_eq!(fallback_size(0.5, &params), 5);
        assert_eq!(fallback_size(0.5, &params.with_tau(3.0 + 1e-7)), 6);
        assert_eq!(fallback_size(10.0, &params), 0);
        for r in [0.0, 1e-3, 0.5, 7.0] {
            assert_eq!(fallback_size(r, &params.with_tau(0.0)), 0);
            assert_eq!(fallback_size(r, &params.without_fallback()), 0);
        }
        assert_eq!(fallback_size(0.0, &params), 300_000_000);
    }

    #[test]
    fn truncate_clear_cliff() {
        let d = min_k_truncate(&lv(&[10.0, 9.0, 1.0, 0.0]), &MinKParams::default()).unwrap();
        assert_eq!(d.kept_ids, vec![0, 1]);
        let diag = d.min_k.unwrap();
        assert_eq!((diag.k_cliff, diag.k_fallback, diag.r_l), (2, 0, 10.0));
    }

    #[test]
    fn truncate_even_staircase_uses_fallback() {
        let d = min_k_truncate(&lv(&[0.4, 0.3, 0.2, 0.1, 0.0]), &MinKParams::default()).unwrap();
        let diag = d.min_k.unwrap();
        assert_eq!(diag.k_cliff, 1);
        assert_eq!(diag.k_fallback, 7);
        assert_eq!(d.k(), 5);
    }

    #[test]
    fn truncate_uniform_keeps_everything() {
        let d = min_k_truncate(&lv(&[1.5; 5]), &MinKParams::default()).unwrap();
        assert_eq!(d.kept_ids, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn truncate_is_unchanged_by_quarter_scaling() {
        let l = lv(&[2.0, 7.5, -3.0, 7.0, 0.25, -12.0, 4.0, 6.0]);
        let params = MinKParams::default();
        let a = min_k_truncate(&l, &params).unwrap();
        let b = min_k_truncate(&l.scaled(4.0).unwrap(), &params).unwrap();
        assert_eq!(a.kept_ids, b.kept_ids);
    }

    #[test]
    fn rejects_bad_params() {
        let l = lv(&[1.0, 0.0]);
        assert!(min_k_truncate(&l, &MinKParams::default().with_tau(-1.0)).is_err());
        assert!(min_k_truncate(&l, &MinKParams::default().with_tau(f64::NAN)).is_err());
        let params = MinKParams {
            epsilon: 0.0,
            ..MinKParams::default()
        };
        assert!(min_k_truncate(&l, &params).is_err());
    }

    #[test]
    fn decay_names_round_trip() {
        for kind in DecayKind::ALL {
            assert_eq!(kind.cli_name().parse::<DecayKind>().unwrap(), kind);
        }
        assert!("cubic".parse::<DecayKind>().is_err());
    }

    #[test]
    fn step_samples_inside_kept_set() {
        let l = lv(&[10.0, 9.0, 1.0, 0.0]);
        let params = MinKParams::default();
        for seed in 0..64 {
            let out = min_k_step(&l, &params, 1.0, &mut SamplerRng::seeded(seed)).unwrap();
            assert!(out.decision.keeps(out.token_id));
            assert!(out.token_id < 2);
            let hot = min_k_step(&l, &params, 5.0, &mut SamplerRng::seeded(seed)).unwrap();
            assert_eq!(hot.decision.kept_ids, out.decision.kept_ids);
        }
        let flat = lv(&[0.0; 5]);
        let mut seen = [false; 5];
        let mut rng = SamplerRng::seeded(7);
        for _ in 0..500 {
            let out = min_k_step(&flat, &params, 1.0, &mut rng).unwrap();
            assert_eq!(out.decision.k(), 5);
            seen[out.token_id as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    fn vector_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop_oneof![
            prop::collection::vec(-30.0f64..30.0, 600..3000),
            // Bell-shaped, where the head alone rarely settles the cliff.
            prop::collection::vec(
                (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b, c)| a + b + c),
                600..3000
            ),
            // Few distinct values: heavy ties and long flat runs.
            prop::collection::vec((-4i32..4).prop_map(|x| x as f64 * 0.5), 600..3000),
            // A handful of high scores over a near-flat floor.
            (
                prop::collection::vec(0.0f64..1e-3, 600..3000),
                prop::collection::vec(1.0f64..9.0, 1..40)
            )
                .prop_map(|(mut tail, head)| {
                    for (i, h) in head.into_iter().enumerate() {
                        let at = (i * 7919) % tail.len();
                        tail[at] = h;
                    }
                    tail
                }),
        ]
    }

    fn params_strategy() -> impl Strategy<Value = MinKParams> {
        (
            prop::sample::select(DecayKind::ALL.to_vec()),
            any::<bool>(),
            any::<bool>(),
            any::<bool>(),
            prop_oneof![Just(0.0), Just(3.0), 0.0f64..50.0],
        )
            .prop_map(|(decay, w, r, f, tau)| MinKParams {
                tau,
                decay,
                use_weight: w,
                use_range_norm: r,
                use_fallback: f,
                epsilon: DEFAULT_EPSILON,
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn scan_agrees_with_full_sort(values in vector_strategy(), params in params_strategy()) {
            let l = LogitVector::new(values).unwrap();
            let reference = min_k_truncate_sorted(&sort_descending(&l), &params).unwrap();
            prop_assert_eq!(&min_k_truncate(&l, &params).unwrap(), &reference);
            for head in [1, 2, 5, 32] {
                for histogram in [false, true] {
                    if let Some(d) = scan_truncate(l.values(), &params, head, histogram) {
                        prop_assert_eq!(&d, &reference);
                    }
                }
            }
        }
    }
}

//! Truncation results, the masked temperature softmax, and the final draw.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_temperature, Result};
use crate::logits::LogitVector;
use crate::rng::{RngTag, SamplerRng};

/// Which strategy produced a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Greedy,
    TopK,
    TopP,
    MinP,
    TopNSigma,
    Eta,
    Mirostat,
    MinK,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Greedy,
        Method::TopK,
        Method::TopP,
        Method::MinP,
        Method::TopNSigma,
        Method::Eta,
        Method::Mirostat,
        Method::MinK,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::TopK => "top-k",
            Method::TopP => "top-p",
            Method::MinP => "min-p",
            Method::TopNSigma => "top-n-sigma",
            Method::Eta => "eta",
            Method::Mirostat => "mirostat",
            Method::MinK => "min-k",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Cliff-detection diagnostics attached to Min-k decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinKDiagnostics {
    /// Dynamic range `l_1 - l_V`, reported without epsilon.
    pub r_l: f64,
    pub k_cliff: usize,
    pub k_fallback: usize,
}

/// The candidate set chosen by one truncation step.
///
/// `kept_ids` is listed in rank order: descending logit, ties by ascending
/// vocabulary index. Two decisions keep the same set iff their id lists
/// are equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationDecision {
    pub method: Method,
    pub kept_ids: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_k: Option<MinKDiagnostics>,
}

impl TruncationDecision {
    pub(crate) fn new(method: Method, kept_ids: Vec<u32>) -> Self {
        debug_assert!(!kept_ids.is_empty());
        Self {
            method,
            kept_ids,
            min_k: None,
        }
    }

    pub fn k(&self) -> usize {
        self.kept_ids.len()
    }

    pub fn keeps(&self, id: u32) -> bool {
        self.kept_ids.contains(&id)
    }

    pub fn same_set(&self, other: &TruncationDecision) -> bool {
        self.kept_ids == other.kept_ids
    }
}

/// A sampling distribution over the vocabulary, stored sparsely.
///
/// Entries outside `support` are exactly zero. The support is ordered by
/// descending probability, which is the order the inverse-CDF draw walks.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    vocab_size: usize,
    support: Vec<u32>,
    probs: Vec<f64>,
}

impl ProbabilityVector {
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn support_probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, id: u32) -> f64 {
        self.support
            .iter()
            .position(|&s| s == id)
            .map_or(0.0, |i| self.probs[i])
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.vocab_size];
        for (&id, &p) in self.support.iter().zip(&self.probs) {
            dense[id as usize] = p;
        }
        dense
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// `p_i ∝ exp(l_i / T)` over the kept ids, zero elsewhere.
///
/// The kept logits are shifted by their maximum before exponentiating.
pub fn apply_temperature_softmax(
    decision: &TruncationDecision,
    logits: &LogitVector,
    temperature: f64,
) -> Result<ProbabilityVector> {
    check_temperature(temperature)?;
    let values = logits.values();
    let max = decision
        .kept_ids
        .iter()
        .map(|&id| values[id as usize])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = decision
        .kept_ids
        .iter()
        .map(|&id| ((values[id as usize] - max) / temperature).exp())
        .collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(ProbabilityVector {
        vocab_size: logits.len(),
        support: decision.kept_ids.clone(),
        probs,
    })
}

/// Inverse-CDF draw over the support in descending-probability order.
pub fn sample_token(probs: &ProbabilityVector, rng: &mut SamplerRng) -> u32 {
    if probs.support.len() == 1 {
        return probs.support[0];
    }
    let u = rng.next_unit();
    let mut cumulative = 0.0;
    for (&id, &p) in probs.support.iter().zip(&probs.probs) {
        cumulative += p;
        if u < cumulative {
            return id;
        }
    }
    // Rounding left the cumulative sum just under `u`; take the last
    // token that actually carries mass.
    probs
        .support
        .iter()
        .zip(&probs.probs)
        .rev()
        .find(|(_, &p)| p > 0.0)
        .map_or(probs.support[0], |(&id, _)| id)
}

/// A sampled token together with the decision that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingOutcome {
    pub token_id: u32,
    pub decision: TruncationDecision,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<RngTag>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decision(ids: &[u32]) -> TruncationDecision {
        TruncationDecision::new(Method::TopK, ids.to_vec())
    }

    #[test]
    fn softmax_closed_form() {
        let logits = LogitVector::new(vec![2f64.ln(), 1f64.ln(), -3.0, 5.0]).unwrap();
        let p = apply_temperature_softmax(&decision(&[0, 1]), &logits, 1.0).unwrap();
        assert!((p.get(0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.get(1) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(p.get(2), 0.0);
        assert_eq!(p.get(3), 0.0);
        assert_eq!(p.to_dense().len(), 4);
    }

    #[test]
    fn singleton_support_is_point_mass() {
        let logits = LogitVector::new(vec![1.0, 9.0, 3.0]).unwrap();
        for t in [0.01, 1.0, 100.0] {
            let p = apply_temperature_softmax(&decision(&[2]), &logits, t).unwrap();
            assert_eq!(p.get(2), 1.0);
        }
    }

    #[test]
    fn tied_logits_split_evenly() {
        let logits = LogitVector::new(vec![4.0, 4.0, 0.0]).unwrap();
        for t in [0.1, 1.0, 7.0] {
            let p = apply_temperature_softmax(&decision(&[0, 1]), &logits, t).unwrap();
            assert_eq!(p.get(0), 0.5);
            assert_eq!(p.get(1), 0.5);
        }
    }

    #[test]
    fn softmax_survives_extreme_logits() {
        let logits = LogitVector::new(vec![1e4, -1e4, 9_999.0]).unwrap();
        let p = apply_temperature_softmax(&decision(&[0, 2, 1]), &logits, 1e-3).unwrap();
        assert!((p.total() - 1.0).abs() < 1e-9);
        assert_eq!(p.get(0), 1.0);
        assert!(p.support_probs().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn rejects_non_positive_temperature() {
        let logits = LogitVector::new(vec![1.0, 0.0]).unwrap();
        assert!(apply_temperature_softmax(&decision(&[0]), &logits, 0.0).is_err());
        assert!(apply_temperature_softmax(&decision(&[0]), &logits, -2.0).is_err());
    }

    #[test]
    fn point_mass_always_drawn() {
        let logits = LogitVector::new(vec![0.0, 0.0, 0.0]).unwrap();
        let p = apply_temperature_softmax(&decision(&[0]), &logits, 1.0).unwrap();
        for seed in 0..50 {
            assert_eq!(sample_token(&p, &mut SamplerRng::seeded(seed)), 0);
        }
    }

    #[test]
    fn fair_coin_frequency() {
        let logits = LogitVector::new(vec![0.0, 0.0]).unwrap();
        let p = apply_temperature_softmax(&decision(&[0, 1]), &logits, 1.0).unwrap();
        let mut rng = SamplerRng::seeded(42);
        let draws = 100_000;
        let zeros = (0..draws)
            .filter(|_| sample_token(&p, &mut rng) == 0)
            .count();
        let freq = zeros as f64 / draws as f64;
        assert!((freq - 0.5).abs() <= 0.01, "frequency {freq}");
    }

    #[test]
    fn draws_are_reproducible() {
        let logits = LogitVector::new(vec![1.0, 0.5, 0.2, 0.0]).unwrap();
        let p = apply_temperature_softmax(&decision(&[0, 1, 2, 3]), &logits, 1.0).unwrap();
        let run = |seed| {
            let mut rng = SamplerRng::seeded(seed);
            (0..200)
                .map(|_| sample_token(&p, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
    }
}

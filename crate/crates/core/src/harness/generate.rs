//! Synthetic logit vectors with known structure.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::decision::TruncationDecision;
use crate::error::{invalid, Error, Result};
use crate::logits::{sort_descending, LogitVector};
use crate::mink::{decay_profile, detect_cliff, MinKParams};
use crate::par::*;
use crate::rng::SamplerRng;

/// Attempts before a planted-cliff spec is declared infeasible.
pub const MAX_CLIFF_RETRIES: usize = 64;

/// A vocabulary with a head of `cliff_pos` tokens, then a drop of
/// `cliff_gap`, then a decaying tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedCliffSpec {
    pub vocab_size: usize,
    /// Ground-truth head size.
    pub cliff_pos: usize,
    /// Every head logit lies within this distance of the maximum.
    pub head_spread: f64,
    pub cliff_gap: f64,
    /// Per-rank decrement along the tail.
    pub tail_decay: f64,
    /// Each tail logit after the first is lowered by up to this much.
    pub noise_scale: f64,
}

impl PlantedCliffSpec {
    /// Tight head, gap of 5, gently sloping noiseless tail.
    pub fn clean(vocab_size: usize, cliff_pos: usize) -> Self {
        Self {
            vocab_size,
            cliff_pos,
            head_spread: 0.1,
            cliff_gap: 5.0,
            tail_decay: 0.001,
            noise_scale: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 {
            return Err(invalid("vocab_size", "must be at least 2"));
        }
        if self.cliff_pos == 0 || self.cliff_pos >= self.vocab_size {
            return Err(invalid(
                "cliff_pos",
                format!("must lie in 1..{}, got {}", self.vocab_size, self.cliff_pos),
            ));
        }
        for (name, x) in [
            ("head_spread", self.head_spread),
            ("tail_decay", self.tail_decay),
            ("noise_scale", self.noise_scale),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(invalid(name, format!("must be finite and >= 0, got {x}")));
            }
        }
        if !(self.cliff_gap > self.head_spread && self.cliff_gap.is_finite()) {
            return Err(invalid(
                "cliff_gap",
                format!(
                    "must be finite and exceed head_spread ({}), got {}",
                    self.head_spread, self.cliff_gap
                ),
            ));
        }
        Ok(())
    }
}

/// A generated vector and the vocabulary ids of its planted head.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCliff {
    pub logits: LogitVector,
    pub cliff_pos: usize,
    /// Sorted ascending.
    head_ids: Vec<u32>,
}

impl PlantedCliff {
    /// Label an arbitrary vector with a ground-truth head.
    pub fn from_parts(logits: LogitVector, mut head_ids: Vec<u32>) -> Self {
        head_ids.sort_unstable();
        head_ids.dedup();
        Self {
            cliff_pos: head_ids.len(),
            logits,
            head_ids,
        }
    }

    /// Treat every token as head; excess admission is then always zero.
    pub fn unlabeled(logits: LogitVector) -> Self {
        let head = (0..logits.len() as u32).collect();
        Self::from_parts(logits, head)
    }

    pub fn head_ids(&self) -> &[u32] {
        &self.head_ids
    }

    pub fn is_head(&self, id: u32) -> bool {
        self.head_ids.binary_search(&id).is_ok()
    }

    /// Fraction of kept tokens that lie beyond the planted cliff.
    pub fn excess_admission(&self, decision: &TruncationDecision) -> f64 {
        let beyond = decision
            .kept_ids
            .iter()
            .filter(|&&id| !self.is_head(id))
            .count();
        beyond as f64 / decision.k() as f64
    }
}

/// Build a planted-cliff vector whose largest 1/i-weighted drop sits exactly
/// at `cliff_pos`, regenerating up to [`MAX_CLIFF_RETRIES`] times.
pub fn gen_planted_cliff(spec: &PlantedCliffSpec, rng: &mut SamplerRng) -> Result<PlantedCliff> {
    spec.validate()?;
    let check = MinKParams::default();
    for _ in 0..MAX_CLIFF_RETRIES {
        let offset: f64 = rng.random_range(-5.0..5.0);
        let mut head_drops: Vec<f64> = (1..spec.cliff_pos)
            .map(|_| rng.random::<f64>() * spec.head_spread)
            .collect();
        head_drops.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

        let mut ranked = Vec::with_capacity(spec.vocab_size);
        ranked.push(offset);
        ranked.extend(head_drops.iter().map(|d| offset - d));
        let cliff_top = ranked[spec.cliff_pos - 1] - spec.cliff_gap;
        ranked.push(cliff_top);
        for j in 1..spec.vocab_size - spec.cliff_pos {
            let noise = if spec.noise_scale > 0.0 {
                rng.random::<f64>() * spec.noise_scale
            } else {
                0.0
            };
            ranked.push(cliff_top - spec.tail_decay * j as f64 - noise);
        }

        let mut slots: Vec<u32> = (0..spec.vocab_size as u32).collect();
        slots.shuffle(rng);
        let mut values = vec![0.0; spec.vocab_size];
        for (rank, &slot) in slots.iter().enumerate() {
            values[slot as usize] = ranked[rank];
        }
        let logits = LogitVector::new(values)?;
        let cliff = detect_cliff(&decay_profile(&sort_descending(&logits), &check));
        if cliff == spec.cliff_pos {
            return Ok(PlantedCliff::from_parts(
                logits,
                slots[..spec.cliff_pos].to_vec(),
            ));
        }
    }
    Err(Error::SpecInfeasible {
        retries: MAX_CLIFF_RETRIES,
    })
}

/// A nearly uniform vocabulary whose logits span `range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatSpec {
    pub vocab_size: usize,
    pub range: f64,
}

/// Evenly spaced logits over `[0, range]` in shuffled order.
pub fn gen_flat(spec: &FlatSpec, rng: &mut SamplerRng) -> Result<LogitVector> {
    if !(spec.range >= 0.0 && spec.range.is_finite()) {
        return Err(invalid(
            "range",
            format!("must be finite and >= 0, got {}", spec.range),
        ));
    }
    if spec.vocab_size < 2 {
        return Err(Error::TooShort {
            len: spec.vocab_size,
        });
    }
    let last = (spec.vocab_size - 1) as f64;
    let mut values: Vec<f64> = (0..spec.vocab_size)
        .map(|i| spec.range * (i as f64 / last))
        .collect();
    values.shuffle(rng);
    LogitVector::new(values)
}

/// I.i.d. normal logits with standard deviation `scale`.
pub fn gen_gaussian(vocab_size: usize, scale: f64, rng: &mut SamplerRng) -> Result<LogitVector> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(invalid(
            "scale",
            format!("must be finite and > 0, got {scale}"),
        ));
    }
    let values = (0..vocab_size)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    LogitVector::new(values)
}

/// Generate one vector per spec, spec `i` drawing from substream `i`.
pub fn planted_corpus(specs: &[PlantedCliffSpec], seed: u64) -> Result<Vec<PlantedCliff>> {
    (0..specs.len())
        .into_par_iter()
        .map(|i| gen_planted_cliff(&specs[i], &mut SamplerRng::stream(seed, i as u64)))
        .collect()
}

/// `count` clean cliffs with head sizes cycling through `1..=max_cliff`.
pub fn mixed_cliff_specs(
    count: usize,
    vocab_size: usize,
    max_cliff: usize,
) -> Vec<PlantedCliffSpec> {
    (0..count)
        .map(|i| PlantedCliffSpec::clean(vocab_size, 1 + i % max_cliff.max(1)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mink::min_k_truncate;

    #[test]
    fn planted_cliff_recovers_head() {
        let spec = PlantedCliffSpec {
            vocab_size: 100,
            cliff_pos: 3,
            head_spread: 0.1,
            cliff_gap: 5.0,
            tail_decay: 0.01,
            noise_scale: 0.0,
        };
        let mut rng = SamplerRng::seeded(1);
        for _ in 0..50 {
            let plant = gen_planted_cliff(&spec, &mut rng).unwrap();
            let d = min_k_truncate(&plant.logits, &MinKParams::default()).unwrap();
            assert_eq!(d.k(), 3);
            assert_eq!(plant.excess_admission(&d), 0.0);
            assert!(d.kept_ids.iter().all(|&id| plant.is_head(id)));
        }
    }

    #[test]
    fn single_token_head() {
        let spec = PlantedCliffSpec {
            vocab_size: 64,
            cliff_pos: 1,
            head_spread: 0.0,
            cliff_gap: 10.0,
            tail_decay: 0.0,
            noise_scale: 0.0,
        };
        let plant = gen_planted_cliff(&spec, &mut SamplerRng::seeded(2)).unwrap();
        let d = min_k_truncate(&plant.logits, &MinKParams::default()).unwrap();
        assert_eq!(d.k(), 1);
    }

    #[test]
    fn flat_tail_is_exactly_flat() {
        let spec = PlantedCliffSpec {
            tail_decay: 0.0,
            ..PlantedCliffSpec::clean(40, 4)
        };
        let plant = gen_planted_cliff(&spec, &mut SamplerRng::seeded(3)).unwrap();
        let sorted = sort_descending(&plant.logits);
        let tail = &sorted.values()[4..];
        assert!(tail.iter().all(|&v| v == tail[0]));
        let w = decay_profile(&sorted, &MinKParams::default()).weights;
        assert!(w[4..].iter().all(|&x| x == 0.0));
        let gap = sorted.values()[3] - sorted.values()[4];
        assert!((gap - 5.0).abs() < 1e-12);
    }

    #[test]
    fn head_stays_within_spread() {
        let spec = PlantedCliffSpec::clean(500, 12);
        let plant = gen_planted_cliff(&spec, &mut SamplerRng::seeded(4)).unwrap();
        let max = plant.logits.max();
        for &id in plant.head_ids() {
            assert!(max - plant.logits.values()[id as usize] <= spec.head_spread);
        }
        assert_eq!(plant.head_ids().len(), 12);
    }

    #[test]
    fn infeasible_and_invalid_specs() {
        // A steep tail always outweighs the planted drop.
        let spec = PlantedCliffSpec {
            vocab_size: 100,
            cliff_pos: 20,
            head_spread: 0.1,
            cliff_gap: 1.0,
            tail_decay: 100.0,
            noise_scale: 0.0,
        };
        assert_eq!(
            gen_planted_cliff(&spec, &mut SamplerRng::seeded(5)),
            Err(Error::SpecInfeasible {
                retries: MAX_CLIFF_RETRIES
            })
        );
        let mut bad = PlantedCliffSpec::clean(10, 10);
        assert!(bad.validate().is_err());
        bad.cliff_pos = 2;
        bad.cliff_gap = 0.05;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn flat_examples() {
        let mut rng = SamplerRng::seeded(6);
        let zero = gen_flat(
            &FlatSpec {
                vocab_size: 10,
                range: 0.0,
            },
            &mut rng,
        )
        .unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));

        let narrow = gen_flat(
            &FlatSpec {
                vocab_size: 100,
                range: 0.01,
            },
            &mut rng,
        )
        .unwrap();
        assert!(narrow.max() - narrow.min() <= 0.01);
        let d = min_k_truncate(&narrow, &MinKParams::default()).unwrap();
        assert_eq!(d.min_k.unwrap().k_fallback, 299);
        assert_eq!(d.k(), 100);

        let wide = gen_flat(
            &FlatSpec {
                vocab_size: 100,
                range: 10.0,
            },
            &mut rng,
        )
        .unwrap();
        let d = min_k_truncate(&wide, &MinKParams::default()).unwrap();
        assert_eq!(d.min_k.unwrap().k_fallback, 0);
        assert_eq!(d.k(), d.min_k.unwrap().k_cliff);
    }

    #[test]
    fn corpus_is_reproducible() {
        let specs = mixed_cliff_specs(12, 64, 5);
        assert_eq!(
            planted_corpus(&specs, 8).unwrap(),
            planted_corpus(&specs, 8).unwrap()
        );
        let ks: Vec<usize> = specs.iter().map(|s| s.cliff_pos).collect();
        assert_eq!(ks, vec![1, 2, 3, 4, 5, 1, 2, 3, 4, 5, 1, 2]);
    }
}

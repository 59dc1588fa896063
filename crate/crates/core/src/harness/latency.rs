//! Wall-clock cost of one sampler step.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::generate::gen_gaussian;
use crate::baselines::StrategySpec;
use crate::dump::sha256_hex;
use crate::error::{invalid, Result};
use crate::logits::LogitVector;
use crate::rng::SamplerRng;
use crate::session::Sampler;

/// Fewest timed steps accepted.
pub const MIN_STEPS: usize = 100;
/// Distinct input vectors cycled through during a run.
pub const INPUT_POOL: usize = 16;
/// Logit scale of the generated inputs.
pub const INPUT_SCALE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub strategy: StrategySpec,
    pub label: String,
    pub tokens_per_second: f64,
    pub median_ms: f64,
    pub p99_ms: f64,
    pub mean_ms: f64,
    /// `(1 - tps / tps_greedy) * 100`.
    pub slowdown_pct: f64,
    /// `(median / median_greedy - 1) * 100`.
    pub overhead_pct: f64,
    /// sha256 of the sampled token ids, little-endian u32.
    pub token_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub vocab_size: usize,
    pub steps: usize,
    pub warmup_steps: usize,
    pub temperature: f64,
    pub rows: Vec<LatencyRow>,
}

impl LatencyReport {
    pub fn row(&self, strategy: &StrategySpec) -> Option<&LatencyRow> {
        self.rows.iter().find(|r| &r.strategy == strategy)
    }
}

/// Percentile by nearest rank over sorted samples.
fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Time `truncate + softmax + sample` for each strategy on random vectors of
/// size `vocab_size`.
///
/// Greedy is always measured and is the slowdown baseline. Strategies are
/// interleaved step by step in rotating order so drift in machine load hits
/// them evenly. `steps / 10` (rounded up) untimed warmup steps run first.
pub fn latency_bench(
    strategies: &[StrategySpec],
    vocab_size: usize,
    steps: usize,
    seed: u64,
) -> Result<LatencyReport> {
    if steps < MIN_STEPS {
        return Err(invalid(
            "steps",
            format!("must be at least {MIN_STEPS}, got {steps}"),
        ));
    }
    let mut specs = vec![StrategySpec::Greedy];
    specs.extend(
        strategies
            .iter()
            .copied()
            .filter(|s| *s != StrategySpec::Greedy),
    );
    let mut samplers = specs
        .iter()
        .map(|s| Sampler::new(*s, seed))
        .collect::<Result<Vec<_>>>()?;

    let mut pool_rng = SamplerRng::stream(seed, u64::MAX);
    let pool = (0..INPUT_POOL)
        .map(|_| gen_gaussian(vocab_size, INPUT_SCALE, &mut pool_rng))
        .collect::<Result<Vec<LogitVector>>>()?;

    let temperature = 1.0;
    let warmup = steps.div_ceil(10);
    let n = specs.len();
    let mut samples = vec![Vec::with_capacity(steps); n];
    let mut tokens = vec![Vec::with_capacity(steps * 4); n];
    for step in 0..warmup + steps {
        let logits = &pool[step % INPUT_POOL];
        for offset in 0..n {
            let s = (step + offset) % n;
            let start = Instant::now();
            let outcome = samplers[s].step(black_box(logits), temperature)?;
            let elapsed = start.elapsed();
            let token = black_box(outcome.token_id);
            if step >= warmup {
                samples[s].push(elapsed.as_secs_f64() * 1e3);
                tokens[s].extend_from_slice(&token.to_le_bytes());
            }
        }
    }

    let summaries: Vec<(f64, f64, f64, f64)> = samples
        .iter_mut()
        .map(|ms| {
            ms.sort_unstable_by(f64::total_cmp);
            let total: f64 = ms.iter().sum();
            let tps = ms.len() as f64 / (total / 1e3);
            (
                tps,
                median(ms),
                nearest_rank(ms, 0.99),
                total / ms.len() as f64,
            )
        })
        .collect();
    let (greedy_tps, greedy_median, _, _) = summaries[0];
    let rows = specs
        .iter()
        .zip(summaries)
        .zip(&tokens)
        .enumerate()
        .map(|(i, ((spec, (tps, med, p99, mean)), toks))| LatencyRow {
            strategy: *spec,
            label: spec.to_string(),
            tokens_per_second: tps,
            median_ms: med,
            p99_ms: p99,
            mean_ms: mean,
            slowdown_pct: if i == 0 {
                0.0
            } else {
                (1.0 - tps / greedy_tps) * 100.0
            },
            overhead_pct: if i == 0 {
                0.0
            } else {
                (med / greedy_median - 1.0) * 100.0
            },
            token_digest: sha256_hex(toks),
        })
        .collect();
    Ok(LatencyReport {
        vocab_size,
        steps,
        warmup_steps: warmup,
        temperature,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::Method;

    #[test]
    fn percentiles() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(nearest_rank(&xs, 0.99), 99.0);
        assert_eq!(nearest_rank(&xs, 1.0), 100.0);
        assert_eq!(median(&xs), 50.5);
        assert_eq!(median(&[1.0, 2.0, 7.0]), 2.0);
    }

    #[test]
    fn greedy_is_the_baseline_and_tokens_replay() {
        let strategies = [
            StrategySpec::default_for(Method::MinK),
            StrategySpec::default_for(Method::Mirostat),
        ];
        let a = latency_bench(&strategies, 256, 100, 11).unwrap();
        let b = latency_bench(&strategies, 256, 100, 11).unwrap();
        assert_eq!(a.rows.len(), 3);
        assert_eq!(a.rows[0].strategy, StrategySpec::Greedy);
        assert_eq!(a.rows[0].slowdown_pct, 0.0);
        assert_eq!(a.warmup_steps, 10);
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.token_digest, y.token_digest);
            assert!(x.median_ms > 0.0 && x.p99_ms >= x.median_ms);
        }
    }

    #[test]
    fn too_few_steps() {
        assert!(latency_bench(&[], 64, 99, 0).is_err());
    }
}

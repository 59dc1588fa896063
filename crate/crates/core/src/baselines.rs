//! Comparison strategies and the uniform truncation dispatcher.
//!
//! Probability-space strategies (top-p, min-p, eta, mirostat) decide on the
//! temperature-scaled softmax. Logit-space strategies (min-k, top-n-sigma)
//! and top-k decide on raw logits, so temperature cannot move their cut.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::decision::{
    apply_temperature_softmax, sample_token, Method, SamplingOutcome, TruncationDecision,
};
use crate::error::{check_temperature, invalid, Result};
use crate::logits::{rank_order, ranked_pairs, top_pairs, LogitVector};
use crate::mink::{min_k_truncate, MinKParams};
use crate::rng::SamplerRng;

pub const DEFAULT_TOP_K: usize = 20;
pub const DEFAULT_TOP_P: f64 = 0.9;
pub const DEFAULT_MIN_P: f64 = 0.1;
pub const DEFAULT_N_SIGMA: f64 = 1.0;
pub const DEFAULT_ETA: f64 = 9e-4;
pub const DEFAULT_TARGET_SURPRISE: f64 = 5.0;
pub const DEFAULT_MIROSTAT_LR: f64 = 0.1;

/// Relative slack on the eta cutoff so that a token sitting exactly on the
/// threshold survives entropy rounding.
const ETA_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirostatParams {
    pub target_surprise: f64,
    pub learning_rate: f64,
}

impl Default for MirostatParams {
    fn default() -> Self {
        Self {
            target_surprise: DEFAULT_TARGET_SURPRISE,
            learning_rate: DEFAULT_MIROSTAT_LR,
        }
    }
}

/// A sampling strategy and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case")]
pub enum StrategySpec {
    Greedy,
    TopK { k: usize },
    TopP { p: f64 },
    MinP { p_base: f64 },
    TopNSigma { n: f64 },
    Eta { eps: f64 },
    Mirostat(MirostatParams),
    MinK(MinKParams),
}

impl StrategySpec {
    pub fn default_for(method: Method) -> Self {
        match method {
            Method::Greedy => StrategySpec::Greedy,
            Method::TopK => StrategySpec::TopK { k: DEFAULT_TOP_K },
            Method::TopP => StrategySpec::TopP { p: DEFAULT_TOP_P },
            Method::MinP => StrategySpec::MinP {
                p_base: DEFAULT_MIN_P,
            },
            Method::TopNSigma => StrategySpec::TopNSigma { n: DEFAULT_N_SIGMA },
            Method::Eta => StrategySpec::Eta { eps: DEFAULT_ETA },
            Method::Mirostat => StrategySpec::Mirostat(MirostatParams::default()),
            Method::MinK => StrategySpec::MinK(MinKParams::default()),
        }
    }

    pub fn method(&self) -> Method {
        match self {
            StrategySpec::Greedy => Method::Greedy,
            StrategySpec::TopK { .. } => Method::TopK,
            StrategySpec::TopP { .. } => Method::TopP,
            StrategySpec::MinP { .. } => Method::MinP,
            StrategySpec::TopNSigma { .. } => Method::TopNSigma,
            StrategySpec::Eta { .. } => Method::Eta,
            StrategySpec::Mirostat(_) => Method::Mirostat,
            StrategySpec::MinK(_) => Method::MinK,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name, x: f64| {
            if x > 0.0 && x <= 1.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must lie in (0, 1], got {x}")))
            }
        };
        let positive = |name, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and > 0, got {x}")))
            }
        };
        match *self {
            StrategySpec::Greedy => Ok(()),
            StrategySpec::TopK { k: 0 } => Err(invalid("k", "must be at least 1")),
            StrategySpec::TopK { .. } => Ok(()),
            StrategySpec::TopP { p } => unit("p", p),
            StrategySpec::MinP { p_base } => unit("p_base", p_base),
            // n may be +inf (keep everything); NaN and non-positive are rejected.
            StrategySpec::TopNSigma { n } if n > 0.0 => Ok(()),
            StrategySpec::TopNSigma { n } => Err(invalid("n", format!("must be > 0, got {n}"))),
            StrategySpec::Eta { eps } => positive("eps", eps),
            StrategySpec::Mirostat(m) => {
                positive("target_surprise", m.target_surprise)?;
                positive("learning_rate", m.learning_rate)
            }
            StrategySpec::MinK(params) => params.validate(),
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategySpec::Greedy => write!(f, "greedy"),
            StrategySpec::TopK { k } => write!(f, "top-k(k={k})"),
            StrategySpec::TopP { p } => write!(f, "top-p(p={p})"),
            StrategySpec::MinP { p_base } => write!(f, "min-p(p_base={p_base})"),
            StrategySpec::TopNSigma { n } => write!(f, "top-n-sigma(n={n})"),
            StrategySpec::Eta { eps } => write!(f, "eta(eps={eps})"),
            StrategySpec::Mirostat(m) => write!(
                f,
                "mirostat(target={}, lr={})",
                m.target_surprise, m.learning_rate
            ),
            StrategySpec::MinK(p) => {
                write!(f, "min-k(tau={}, decay={}", p.tau, p.decay)?;
                if !p.use_weight {
                    write!(f, ", no-weight")?;
                }
                if !p.use_range_norm {
                    write!(f, ", no-range-norm")?;
                }
                if !p.use_fallback {
                    write!(f, ", no-fallback")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn ids(pairs: &[(f64, u32)]) -> Vec<u32> {
    pairs.iter().map(|p| p.1).collect()
}

/// Pairs satisfying `keep`, in rank order.
fn kept_in_rank_order(values: &[f64], keep: impl Fn(f64) -> bool) -> Vec<u32> {
    let mut kept: Vec<(f64, u32)> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| keep(v))
        .map(|(i, &v)| (v, i as u32))
        .collect();
    kept.sort_unstable_by(rank_order);
    ids(&kept)
}

/// `ln Z` and the entropy (nats) of `softmax(l / T)`, where
/// `Z = sum exp((l_i - max) / T)`.
fn log_partition_and_entropy(values: &[f64], max: f64, temperature: f64) -> (f64, f64) {
    let mut z = 0.0;
    let mut weighted = 0.0;
    for &v in values {
        let s = (v - max) / temperature;
        let e = s.exp();
        z += e;
        weighted += e * s;
    }
    let log_z = z.ln();
    // H = ln Z - E_q[s]
    (log_z, log_z - weighted / z)
}

pub fn top_k_truncate(logits: &LogitVector, k: usize) -> TruncationDecision {
    TruncationDecision::new(Method::TopK, ids(&top_pairs(logits.values(), k.max(1))))
}

/// Smallest descending-probability prefix whose cumulative mass reaches `p`.
pub fn top_p_truncate(
    logits: &LogitVector,
    p: f64,
    temperature: f64,
) -> Result<TruncationDecision> {
    check_temperature(temperature)?;
    StrategySpec::TopP { p }.validate()?;
    let mut pairs = ranked_pairs(logits.values());
    pairs.sort_unstable_by(rank_order);
    let max = pairs[0].0;
    let exps: Vec<f64> = pairs
        .iter()
        .map(|&(v, _)| ((v - max) / temperature).exp())
        .collect();
    let keep = if p >= 1.0 {
        exps.iter().rposition(|&e| e > 0.0).map_or(1, |i| i + 1)
    } else {
        let target = p * exps.iter().sum::<f64>();
        let mut cumulative = 0.0;
        let mut keep = exps.len();
        for (i, e) in exps.iter().enumerate() {
            cumulative += e;
            if cumulative >= target {
                keep = i + 1;
                break;
            }
        }
        keep
    };
    pairs.truncate(keep);
    Ok(TruncationDecision::new(Method::TopP, ids(&pairs)))
}

/// Tokens whose probability is at least `p_base` times the top probability.
pub fn min_p_truncate(
    logits: &LogitVector,
    p_base: f64,
    temperature: f64,
) -> Result<TruncationDecision> {
    check_temperature(temperature)?;
    StrategySpec::MinP { p_base }.validate()?;
    let max = logits.max();
    // p_i / p_max = exp((l_i - max) / T); the partition function cancels.
    let kept = kept_in_rank_order(logits.values(), |v| {
        ((v - max) / temperature).exp() >= p_base
    });
    Ok(TruncationDecision::new(Method::MinP, kept))
}

/// Max, mean and population standard deviation of the raw logits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaStats {
    pub max_logit: f64,
    pub mean: f64,
    pub sigma: f64,
}

impl SigmaStats {
    pub fn compute(logits: &LogitVector) -> Self {
        let values = logits.values();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            max_logit: logits.max(),
            mean,
            sigma: var.sqrt(),
        }
    }
}

/// Tokens within `n` standard deviations of the maximum logit.
pub fn top_n_sigma_truncate(logits: &LogitVector, n: f64) -> TruncationDecision {
    let stats = SigmaStats::compute(logits);
    let margin = if stats.sigma == 0.0 {
        0.0
    } else {
        n * stats.sigma
    };
    let threshold = stats.max_logit - margin;
    TruncationDecision::new(
        Method::TopNSigma,
        kept_in_rank_order(logits.values(), |v| v >= threshold),
    )
}

/// Entropy-dependent cutoff `min(eps, sqrt(eps) * exp(-H))`.
pub fn eta_truncate(
    logits: &LogitVector,
    eps: f64,
    temperature: f64,
) -> Result<TruncationDecision> {
    check_temperature(temperature)?;
    StrategySpec::Eta { eps }.validate()?;
    let values = logits.values();
    let max = logits.max();
    let (log_z, entropy) = log_partition_and_entropy(values, max, temperature);
    let cutoff = eps.min(eps.sqrt() * (-entropy).exp());
    let mut kept = kept_in_rank_order(values, |v| {
        let q = ((v - max) / temperature - log_z).exp();
        q * (1.0 + ETA_SLACK) >= cutoff
    });
    if kept.is_empty() {
        kept.push(logits.argmax());
    }
    Ok(TruncationDecision::new(Method::Eta, kept))
}

/// Per-sequence Mirostat control state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirostatState {
    /// Running surprise bound in bits.
    pub mu: f64,
    pub step: u64,
}

impl MirostatState {
    pub fn new(target_surprise: f64) -> Self {
        Self {
            mu: 2.0 * target_surprise,
            step: 0,
        }
    }
}

pub fn mirostat_update(mu: f64, learning_rate: f64, observed: f64, target: f64) -> f64 {
    mu - learning_rate * (observed - target)
}

/// Tokens whose surprise `-log2 q_i` does not exceed `mu`; the top token if
/// none qualify.
pub fn mirostat_truncate(
    logits: &LogitVector,
    mu: f64,
    temperature: f64,
) -> Result<TruncationDecision> {
    check_temperature(temperature)?;
    let values = logits.values();
    let max = logits.max();
    let (log_z, _) = log_partition_and_entropy(values, max, temperature);
    let floor = -mu * std::f64::consts::LN_2;
    let mut kept = kept_in_rank_order(values, |v| (v - max) / temperature - log_z >= floor);
    if kept.is_empty() {
        kept.push(logits.argmax());
    }
    Ok(TruncationDecision::new(Method::Mirostat, kept))
}

/// One Mirostat v2 step: truncate by surprise, sample from the renormalized
/// survivors, then move `mu` against the surprise error.
pub fn mirostat_step(
    logits: &LogitVector,
    state: MirostatState,
    params: &MirostatParams,
    temperature: f64,
    rng: &mut SamplerRng,
) -> Result<(SamplingOutcome, MirostatState)> {
    StrategySpec::Mirostat(*params).validate()?;
    let decision = mirostat_truncate(logits, state.mu, temperature)?;
    let probs = apply_temperature_softmax(&decision, logits, temperature)?;
    let tag = rng.tag();
    let token_id = sample_token(&probs, rng);
    let observed = -probs.get(token_id).log2();
    let next = MirostatState {
        mu: mirostat_update(
            state.mu,
            params.learning_rate,
            observed,
            params.target_surprise,
        ),
        step: state.step + 1,
    };
    let outcome = SamplingOutcome {
        token_id,
        decision,
        temperature,
        rng: Some(tag),
    };
    Ok((outcome, next))
}

/// Argmax with the lowest index winning ties. Temperature plays no part.
pub fn greedy_select(logits: &LogitVector) -> SamplingOutcome {
    let token_id = logits.argmax();
    SamplingOutcome {
        token_id,
        decision: TruncationDecision::new(Method::Greedy, vec![token_id]),
        temperature: 1.0,
        rng: None,
    }
}

/// Dispatch to the strategy's truncation rule.
///
/// Mirostat truncates with its initial bound `mu = 2 * target`; use
/// [`mirostat_step`] or a [`Sampler`](crate::Sampler) to carry state.
pub fn truncate(
    logits: &LogitVector,
    spec: &StrategySpec,
    temperature: f64,
) -> Result<TruncationDecision> {
    spec.validate()?;
    check_temperature(temperature)?;
    match *spec {
        StrategySpec::Greedy => Ok(TruncationDecision::new(
            Method::Greedy,
            vec![logits.argmax()],
        )),
        StrategySpec::TopK { k } => Ok(top_k_truncate(logits, k)),
        StrategySpec::TopP { p } => top_p_truncate(logits, p, temperature),
        StrategySpec::MinP { p_base } => min_p_truncate(logits, p_base, temperature),
        StrategySpec::TopNSigma { n } => Ok(top_n_sigma_truncate(logits, n)),
        StrategySpec::Eta { eps } => eta_truncate(logits, eps, temperature),
        StrategySpec::Mirostat(m) => mirostat_truncate(
            logits,
            MirostatState::new(m.target_surprise).mu,
            temperature,
        ),
        StrategySpec::MinK(params) => min_k_truncate(logits, &params),
    }
}

//! Min-k truncation sampling.
//!
//! [`min_k_truncate`] picks a candidate set by locating the sharpest
//! rank-weighted drop in the sorted logits, with a range-based fallback for
//! flat distributions. The crate also carries the usual baselines (top-k,
//! top-p, min-p, top-nσ, eta, Mirostat, greedy), a seeded per-position
//! [`Sampler`], a synthetic experiment harness, a binary logit dump format
//! and JSON Lines reports.
//!
//! ```
//! use cliff_sampler::{min_k_truncate, LogitVector, MinKParams};
//!
//! let logits = LogitVector::new(vec![10.0, 9.9, 9.8, 2.0, 1.9, 1.8]).unwrap();
//! let decision = min_k_truncate(&logits, &MinKParams::default()).unwrap();
//! assert_eq!(decision.kept_ids, vec![0, 1, 2]);
//! ```

pub mod baselines;
pub mod decision;
pub mod dump;
pub mod error;
pub mod harness;
pub mod logits;
pub mod mink;
pub mod par;
pub mod report;
pub mod rng;
pub mod session;

pub use baselines::{truncate, MirostatParams, MirostatState, StrategySpec};
pub use decision::{
    apply_temperature_softmax, sample_token, Method, MinKDiagnostics, ProbabilityVector,
    SamplingOutcome, TruncationDecision,
};
pub use error::{Error, Result};
pub use logits::{sort_descending, LogitVector, SortedView};
pub use mink::{min_k_step, min_k_truncate, min_k_truncate_sorted, DecayKind, MinKParams};
pub use rng::{RngTag, SamplerRng};
pub use session::Sampler;

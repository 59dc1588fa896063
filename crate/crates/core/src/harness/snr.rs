//! Length-weighted share of a response that follows its collapse point.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Marks a response with no collapse.
pub const COHERENT: i64 = -1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnrInput {
    /// Per-sentence lengths, all positive.
    pub sentence_lengths: Vec<u64>,
    /// 1-based index of the first collapsed sentence, or [`COHERENT`].
    pub collapse_index: i64,
}

/// `sum(lengths[k..]) / sum(lengths)` for 1-based collapse index `k`, and 0
/// for a coherent response.
pub fn snr(input: &SnrInput) -> Result<f64> {
    let lengths = &input.sentence_lengths;
    if lengths.is_empty() {
        return Err(Error::EmptyInput("sentence_lengths"));
    }
    if let Some(pos) = lengths.iter().position(|&l| l == 0) {
        return Err(invalid(
            "sentence_lengths",
            format!("entry {pos} is zero; lengths must be positive"),
        ));
    }
    let index = input.collapse_index;
    if index == COHERENT {
        return Ok(0.0);
    }
    if index < 1 || index as u64 > lengths.len() as u64 {
        return Err(Error::IndexOutOfRange {
            index,
            sentences: lengths.len(),
        });
    }
    let total: u128 = lengths.iter().map(|&l| u128::from(l)).sum();
    let collapsed: u128 = lengths[(index - 1) as usize..]
        .iter()
        .map(|&l| u128::from(l))
        .sum();
    Ok(collapsed as f64 / total as f64)
}

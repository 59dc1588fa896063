//! Reference implementations used as test oracles.
#![allow(dead_code)]

use cliff_sampler::{DecayKind, MinKParams};

/// Min-k written out directly: rank by counting, then the range, the
/// weighted drops, the first maximum, the fallback and the clamp.
/// Quadratic in V; meant for small vectors only.
pub fn literal_min_k(logits: &[f64], params: &MinKParams) -> Vec<u32> {
    let v = logits.len();
    // rank(j) = #{i : l_i > l_j} + #{i < j : l_i == l_j}
    let mut by_rank = vec![0u32; v];
    for j in 0..v {
        let above = (0..v).filter(|&i| logits[i] > logits[j]).count();
        let tied_before = (0..j).filter(|&i| logits[i] == logits[j]).count();
        by_rank[above + tied_before] = j as u32;
    }
    let sorted: Vec<f64> = by_rank.iter().map(|&j| logits[j as usize]).collect();

    let r = sorted[0] - sorted[v - 1];
    let divisor = if params.use_range_norm {
        r + params.epsilon
    } else {
        1.0
    };

    let mut best = f64::NEG_INFINITY;
    let mut k_cliff = 0;
    for i in 1..v {
        let weight = if params.use_weight {
            literal_weight(params.decay, i)
        } else {
            1.0
        };
        let w = ((sorted[i - 1] - sorted[i]) / divisor) * weight;
        if w > best {
            best = w;
            k_cliff = i;
        }
    }

    let k_fallback = if params.use_fallback {
        (params.tau / (r + params.epsilon)).floor()
    } else {
        0.0
    };
    let k = (k_cliff as f64).max(k_fallback).max(1.0).min(v as f64) as usize;
    by_rank[..k].to_vec()
}

pub fn literal_weight(kind: DecayKind, i: usize) -> f64 {
    let i = i as f64;
    match kind {
        DecayKind::PowerZero => 1.0,
        DecayKind::PowerHalf => 1.0 / i.sqrt(),
        DecayKind::Linear => 1.0 / i,
        DecayKind::PowerTwo => 1.0 / (i * i),
        DecayKind::LogInverse => 1.0 / (i + 1.0).ln(),
    }
}

/// Every parameter combination over decay kinds and ablation flags.
pub fn all_param_variants(tau: f64) -> Vec<MinKParams> {
    let mut out = Vec::new();
    for decay in DecayKind::ALL {
        for mask in 0..8u8 {
            let mut p = MinKParams::default().with_tau(tau).with_decay(decay);
            if mask & 1 != 0 {
                p = p.without_weight();
            }
            if mask & 2 != 0 {
                p = p.without_range_norm();
            }
            if mask & 4 != 0 {
                p = p.without_fallback();
            }
            out.push(p);
        }
    }
    out
}

/// Visit every vector of length `len` over `grid`, in odometer order.
pub fn for_each_grid_vector(grid: &[f64], len: usize, mut f: impl FnMut(&[f64])) {
    let mut digits = vec![0usize; len];
    let mut values = vec![grid[0]; len];
    loop {
        f(&values);
        let mut pos = 0;
        loop {
            if pos == len {
                return;
            }
            digits[pos] += 1;
            if digits[pos] < grid.len() {
                values[pos] = grid[digits[pos]];
                break;
            }
            digits[pos] = 0;
            values[pos] = grid[0];
            pos += 1;
        }
    }
}

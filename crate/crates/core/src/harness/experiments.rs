//! Property experiments over synthetic corpora.
//!
//! Every runner fans out over corpus indices and collects in index order, so
//! reports are identical with and without the `parallel` feature.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::generate::{planted_corpus, PlantedCliff, PlantedCliffSpec};
use crate::baselines::{truncate, StrategySpec};
use crate::decision::TruncationDecision;
use crate::error::{check_temperature, invalid, Error, Result};
use crate::logits::LogitVector;
use crate::mink::MinKParams;
use crate::par::*;

fn check_temperatures(temperatures: &[f64]) -> Result<()> {
    if temperatures.is_empty() {
        return Err(Error::EmptyInput("temperatures"));
    }
    temperatures.iter().try_for_each(|&t| check_temperature(t))
}

fn check_strategies(strategies: &[StrategySpec]) -> Result<()> {
    if strategies.is_empty() {
        return Err(Error::EmptyInput("strategies"));
    }
    strategies.iter().try_for_each(StrategySpec::validate)
}

/// First `(vector, T)` pair whose kept set moved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub vector: usize,
    pub temperature: f64,
    pub k_reference: usize,
    pub k_scaled: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyInvariance {
    pub strategy: StrategySpec,
    pub label: String,
    pub violations: usize,
    /// Violations per entry of the report's temperature list.
    pub by_temperature: Vec<usize>,
    /// Min-k only: violations in which the detected cliff rank itself moved.
    pub cliff_shifts: usize,
    pub first_counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub trials: usize,
    pub temperatures: Vec<f64>,
    /// Total over all strategies.
    pub violations: usize,
    pub rows: Vec<StrategyInvariance>,
}

impl InvarianceReport {
    pub fn row(&self, strategy: &StrategySpec) -> Option<&StrategyInvariance> {
        self.rows.iter().find(|r| &r.strategy == strategy)
    }
}

/// Per vector and strategy: which temperatures moved the set, and whether
/// the cliff moved with it.
type VectorOutcome = Vec<(Vec<Option<Counterexample>>, usize)>;

fn compare_vector(
    index: usize,
    logits: &LogitVector,
    strategies: &[StrategySpec],
    temperatures: &[f64],
) -> Result<VectorOutcome> {
    let references = strategies
        .iter()
        .map(|s| truncate(logits, s, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let mut out: VectorOutcome =
        vec![(Vec::with_capacity(temperatures.len()), 0); strategies.len()];
    for &t in temperatures {
        let scaled = logits.scaled(t)?;
        for (s, spec) in strategies.iter().enumerate() {
            let d = truncate(&scaled, spec, 1.0)?;
            let reference = &references[s];
            if d.kept_ids == reference.kept_ids {
                out[s].0.push(None);
                continue;
            }
            if let (Some(a), Some(b)) = (&reference.min_k, &d.min_k) {
                if a.k_cliff != b.k_cliff {
                    out[s].1 += 1;
                }
            }
            out[s].0.push(Some(Counterexample {
                vector: index,
                temperature: t,
                k_reference: reference.k(),
                k_scaled: d.k(),
            }));
        }
    }
    Ok(out)
}

/// Compare every strategy's kept set on `l / T` against `l` for each vector
/// of `corpus` and each temperature.
pub fn invariance_sweep(
    strategies: &[StrategySpec],
    corpus: &[LogitVector],
    temperatures: &[f64],
) -> Result<InvarianceReport> {
    invariance_sweep_with(strategies, corpus.len(), temperatures, |i| {
        Ok(corpus[i].clone())
    })
}

/// [`invariance_sweep`] over `count` vectors produced on demand by `source`,
/// so large corpora need not be held in memory.
pub fn invariance_sweep_with<F>(
    strategies: &[StrategySpec],
    count: usize,
    temperatures: &[f64],
    source: F,
) -> Result<InvarianceReport>
where
    F: Fn(usize) -> Result<LogitVector> + Sync,
{
    check_strategies(strategies)?;
    check_temperatures(temperatures)?;
    if count == 0 {
        return Err(Error::EmptyInput("corpus"));
    }
    let outcomes = (0..count)
        .into_par_iter()
        .map(|i| compare_vector(i, &source(i)?, strategies, temperatures))
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<StrategyInvariance> = strategies
        .iter()
        .map(|s| StrategyInvariance {
            strategy: *s,
            label: s.to_string(),
            violations: 0,
            by_temperature: vec![0; temperatures.len()],
            cliff_shifts: 0,
            first_counterexample: None,
        })
        .collect();
    for outcome in outcomes {
        for (row, (per_t, shifts)) in rows.iter_mut().zip(outcome) {
            row.cliff_shifts += shifts;
            for (j, hit) in per_t.into_iter().enumerate() {
                if let Some(hit) = hit {
                    row.violations += 1;
                    row.by_temperature[j] += 1;
                    row.first_counterexample.get_or_insert(hit);
                }
            }
        }
    }
    Ok(InvarianceReport {
        trials: count,
        temperatures: temperatures.to_vec(),
        violations: rows.iter().map(|r| r.violations).sum(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissionCell {
    pub strategy: StrategySpec,
    pub label: String,
    pub temperature: f64,
    pub vectors: usize,
    pub mean_excess: f64,
    pub max_excess: f64,
    /// Share of vectors whose excess admission exceeds 0.5.
    pub collapse_fraction: f64,
    pub mean_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissionReport {
    pub vectors: usize,
    pub temperatures: Vec<f64>,
    /// Strategy-major: all temperatures of the first strategy, then the next.
    pub rows: Vec<AdmissionCell>,
}

impl AdmissionReport {
    pub fn cell(&self, strategy: usize, temperature: usize) -> &AdmissionCell {
        &self.rows[strategy * self.temperatures.len() + temperature]
    }

    pub fn cells_for<'a>(
        &'a self,
        strategy: &'a StrategySpec,
    ) -> impl Iterator<Item = &'a AdmissionCell> + 'a {
        self.rows.iter().filter(move |c| &c.strategy == strategy)
    }
}

struct CellStats {
    mean_excess: f64,
    max_excess: f64,
    collapse_fraction: f64,
    mean_k: f64,
}

fn cell_stats(decisions: &[(TruncationDecision, f64)]) -> CellStats {
    let n = decisions.len() as f64;
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    let mut collapsed = 0usize;
    let mut k = 0usize;
    for (d, excess) in decisions {
        sum += excess;
        max = max.max(*excess);
        collapsed += usize::from(*excess > 0.5);
        k += d.k();
    }
    CellStats {
        mean_excess: sum / n,
        max_excess: max,
        collapse_fraction: collapsed as f64 / n,
        mean_k: k as f64 / n,
    }
}

fn truncate_corpus(
    corpus: &[PlantedCliff],
    spec: &StrategySpec,
    temperature: f64,
) -> Result<Vec<(TruncationDecision, f64)>> {
    (0..corpus.len())
        .into_par_iter()
        .map(|i| {
            let d = truncate(&corpus[i].logits, spec, temperature)?;
            let excess = corpus[i].excess_admission(&d);
            Ok((d, excess))
        })
        .collect()
}

/// Generate one planted cliff per spec (spec `i` on substream `i` of `seed`)
/// and measure how much of each strategy's kept set lies past the cliff.
pub fn noise_admission(
    strategies: &[StrategySpec],
    specs: &[PlantedCliffSpec],
    temperatures: &[f64],
    seed: u64,
) -> Result<AdmissionReport> {
    if specs.is_empty() {
        return Err(Error::EmptyInput("specs"));
    }
    admission_on(strategies, &planted_corpus(specs, seed)?, temperatures)
}

/// Excess admission over an already generated corpus.
pub fn admission_on(
    strategies: &[StrategySpec],
    corpus: &[PlantedCliff],
    temperatures: &[f64],
) -> Result<AdmissionReport> {
    check_strategies(strategies)?;
    check_temperatures(temperatures)?;
    if corpus.is_empty() {
        return Err(Error::EmptyInput("corpus"));
    }
    let mut rows = Vec::with_capacity(strategies.len() * temperatures.len());
    for spec in strategies {
        for &t in temperatures {
            let stats = cell_stats(&truncate_corpus(corpus, spec, t)?);
            rows.push(AdmissionCell {
                strategy: *spec,
                label: spec.to_string(),
                temperature: t,
                vectors: corpus.len(),
                mean_excess: stats.mean_excess,
                max_excess: stats.max_excess,
                collapse_fraction: stats.collapse_fraction,
                mean_k: stats.mean_k,
            });
        }
    }
    Ok(AdmissionReport {
        vectors: corpus.len(),
        temperatures: temperatures.to_vec(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCell {
    pub tau: f64,
    pub temperature: f64,
    pub mean_k: f64,
    pub admission: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityGrid {
    pub taus: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub params: MinKParams,
    /// Tau-major: row `i` of the matrix is `rows[i * temperatures.len()..]`.
    pub rows: Vec<SensitivityCell>,
}

impl SensitivityGrid {
    pub fn cell(&self, tau: usize, temperature: usize) -> &SensitivityCell {
        &self.rows[tau * self.temperatures.len() + temperature]
    }

    /// `(max - min) / min` of the per-cell mean k.
    pub fn mean_k_spread(&self) -> f64 {
        let (lo, hi) = self
            .rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                (lo.min(c.mean_k), hi.max(c.mean_k))
            });
        (hi - lo) / lo
    }

    pub fn max_admission(&self) -> f64 {
        self.rows.iter().map(|c| c.admission).fold(0.0, f64::max)
    }
}

/// Min-k mean k and excess admission for every `(tau, T)` pair, on planted
/// cliffs generated from `specs`.
pub fn sensitivity_grid(
    taus: &[f64],
    temperatures: &[f64],
    specs: &[PlantedCliffSpec],
    seed: u64,
    base: MinKParams,
) -> Result<SensitivityGrid> {
    if specs.is_empty() {
        return Err(Error::EmptyInput("specs"));
    }
    sensitivity_on(taus, temperatures, &planted_corpus(specs, seed)?, base)
}

/// [`sensitivity_grid`] over an already generated corpus.
pub fn sensitivity_on(
    taus: &[f64],
    temperatures: &[f64],
    corpus: &[PlantedCliff],
    base: MinKParams,
) -> Result<SensitivityGrid> {
    if taus.is_empty() {
        return Err(Error::EmptyInput("taus"));
    }
    check_temperatures(temperatures)?;
    if corpus.is_empty() {
        return Err(Error::EmptyInput("corpus"));
    }
    if let Some(&bad) = taus.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(invalid(
            "tau",
            format!("must be finite and >= 0, got {bad}"),
        ));
    }
    let mut rows = Vec::with_capacity(taus.len() * temperatures.len());
    for &tau in taus {
        let spec = StrategySpec::MinK(base.with_tau(tau));
        spec.validate()?;
        for &t in temperatures {
            let stats = cell_stats(&truncate_corpus(corpus, &spec, t)?);
            rows.push(SensitivityCell {
                tau,
                temperature: t,
                mean_k: stats.mean_k,
                admission: stats.mean_excess,
            });
        }
    }
    Ok(SensitivityGrid {
        taus: taus.to_vec(),
        temperatures: temperatures.to_vec(),
        params: base,
        rows,
    })
}

/// Counts of kept-set sizes at one temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KHistogram {
    pub temperature: f64,
    pub steps: usize,
    pub counts: BTreeMap<usize, usize>,
}

impl KHistogram {
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts.keys().copied()
    }

    pub fn same_counts(&self, other: &KHistogram) -> bool {
        self.steps == other.steps && self.counts == other.counts
    }
}

/// One histogram of `decision.k` per temperature, in input order.
pub fn k_distribution(
    strategy: &StrategySpec,
    corpus: &[LogitVector],
    temperatures: &[f64],
) -> Result<Vec<KHistogram>> {
    strategy.validate()?;
    check_temperatures(temperatures)?;
    if corpus.is_empty() {
        return Err(Error::EmptyInput("corpus"));
    }
    temperatures
        .iter()
        .map(|&t| {
            let ks = (0..corpus.len())
                .into_par_iter()
                .map(|i| truncate(&corpus[i], strategy, t).map(|d| d.k()))
                .collect::<Result<Vec<_>>>()?;
            let mut counts = BTreeMap::new();
            for k in ks {
                *counts.entry(k).or_insert(0) += 1;
            }
            Ok(KHistogram {
                temperature: t,
                steps: corpus.len(),
                counts,
            })
        })
        .collect()
}

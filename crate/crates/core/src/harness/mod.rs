//! Synthetic corpora and the property experiments run over them.

pub mod experiments;
pub mod generate;
pub mod latency;
pub mod snr;

pub use experiments::{
    admission_on, invariance_sweep, invariance_sweep_with, k_distribution, noise_admission,
    sensitivity_grid, sensitivity_on, AdmissionCell, AdmissionReport, Counterexample,
    InvarianceReport, KHistogram, SensitivityCell, SensitivityGrid, StrategyInvariance,
};
pub use generate::{
    gen_flat, gen_gaussian, gen_planted_cliff, mixed_cliff_specs, planted_corpus, FlatSpec,
    PlantedCliff, PlantedCliffSpec, MAX_CLIFF_RETRIES,
};
pub use latency::{latency_bench, LatencyReport, LatencyRow, MIN_STEPS};
pub use snr::{snr, SnrInput, COHERENT};

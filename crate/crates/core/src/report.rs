//! Line-oriented JSON reports.
//!
//! The first line carries the schema tag, the run manifest and every
//! non-tabular field of the body; each further line is one table row.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::baselines::StrategySpec;
use crate::decision::{Method, SamplingOutcome};
use crate::dump::write_atomic;
use crate::harness::{
    AdmissionReport, InvarianceReport, KHistogram, LatencyReport, SensitivityGrid,
};
use crate::rng::RNG_ALGORITHM;

pub const SCHEMA: &str = "cliff-sampler/report";
pub const SCHEMA_VERSION: u32 = 1;

/// Temperature divides the logits before truncation.
pub const PRE_SCALED: &str = "pre-scaled";
/// Truncation sees raw logits; temperature applies in the softmax.
pub const POST_MASK: &str = "post-mask";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed report: {0}")]
    Schema(String),
}

/// Provenance of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub strategies: Vec<StrategySpec>,
    pub temperatures: Vec<f64>,
    pub seed: Option<u64>,
    pub rng: String,
    /// Hex sha256 of the consumed input file.
    pub input_digest: Option<String>,
    pub temperature_convention: String,
    pub started_at: Option<String>,
    pub finished_at: Option<String>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.into(),
            strategies: Vec::new(),
            temperatures: Vec::new(),
            seed: None,
            rng: RNG_ALGORITHM.to_string(),
            input_digest: None,
            temperature_convention: POST_MASK.to_string(),
            started_at: None,
            finished_at: None,
        }
    }

    /// The manifest with timestamps cleared, for reproducibility checks.
    pub fn without_timestamps(&self) -> Self {
        Self {
            started_at: None,
            finished_at: None,
            ..self.clone()
        }
    }
}

/// One sampled step of a decision log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub step: u64,
    pub method: Method,
    pub token: u32,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_cliff: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_fallback: Option<usize>,
}

impl DecisionRecord {
    pub fn from_outcome(step: u64, outcome: &SamplingOutcome) -> Self {
        let d = &outcome.decision;
        Self {
            step,
            method: d.method,
            token: outcome.token_id,
            k: d.k(),
            r_l: d.min_k.map(|m| m.r_l),
            k_cliff: d.min_k.map(|m| m.k_cliff),
            k_fallback: d.min_k.map(|m| m.k_fallback),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionLog {
    pub strategy: StrategySpec,
    pub temperature: f64,
    pub rows: Vec<DecisionRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KBucket {
    pub temperature: f64,
    pub k: usize,
    pub count: usize,
}

/// Histograms flattened to one row per `(T, k)` bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KDistribution {
    pub strategy: StrategySpec,
    pub temperatures: Vec<f64>,
    pub steps: usize,
    pub rows: Vec<KBucket>,
}

impl KDistribution {
    pub fn new(strategy: StrategySpec, histograms: &[KHistogram]) -> Self {
        Self {
            strategy,
            temperatures: histograms.iter().map(|h| h.temperature).collect(),
            steps: histograms.first().map_or(0, |h| h.steps),
            rows: histograms
                .iter()
                .flat_map(|h| {
                    h.counts.iter().map(|(&k, &count)| KBucket {
                        temperature: h.temperature,
                        k,
                        count,
                    })
                })
                .collect(),
        }
    }

    /// Buckets of one temperature, as `(k, count)`.
    pub fn buckets(&self, temperature: f64) -> Vec<(usize, usize)> {
        self.rows
            .iter()
            .filter(|b| b.temperature == temperature)
            .map(|b| (b.k, b.count))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReportBody {
    DecisionLog(DecisionLog),
    Invariance(InvarianceReport),
    Admission(AdmissionReport),
    Sensitivity(SensitivityGrid),
    KDistribution(KDistribution),
    Latency(LatencyReport),
}

impl ReportBody {
    pub fn kind(&self) -> &'static str {
        match self {
            ReportBody::DecisionLog(_) => "decision-log",
            ReportBody::Invariance(_) => "invariance",
            ReportBody::Admission(_) => "admission",
            ReportBody::Sensitivity(_) => "sensitivity",
            ReportBody::KDistribution(_) => "k-distribution",
            ReportBody::Latency(_) => "latency",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub manifest: RunManifest,
    pub body: ReportBody,
}

impl Report {
    pub fn new(manifest: RunManifest, body: ReportBody) -> Self {
        Self { manifest, body }
    }

    pub fn to_jsonl(&self) -> Result<String, ReportError> {
        let Value::Object(mut meta) = serde_json::to_value(&self.body)? else {
            return Err(ReportError::Schema("body is not an object".into()));
        };
        let rows = match meta.remove("rows") {
            Some(Value::Array(rows)) => rows,
            _ => return Err(ReportError::Schema("body has no row table".into())),
        };
        let mut header = Map::new();
        header.insert("schema".into(), SCHEMA.into());
        header.insert("version".into(), SCHEMA_VERSION.into());
        header.insert("kind".into(), self.body.kind().into());
        header.insert("manifest".into(), serde_json::to_value(&self.manifest)?);
        header.insert("meta".into(), Value::Object(meta));

        let mut out = serde_json::to_string(&header)?;
        out.push('\n');
        for row in rows {
            out.push_str(&serde_json::to_string(&row)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn parse_jsonl(text: &str) -> Result<Self, ReportError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let first = lines
            .next()
            .ok_or_else(|| ReportError::Schema("empty report".into()))?;
        let Value::Object(mut header) = serde_json::from_str(first)? else {
            return Err(ReportError::Schema("header is not an object".into()));
        };
        if header.get("schema").and_then(Value::as_str) != Some(SCHEMA) {
            return Err(ReportError::Schema("unknown schema tag".into()));
        }
        let version = header.get("version").and_then(Value::as_u64);
        if version != Some(u64::from(SCHEMA_VERSION)) {
            return Err(ReportError::Schema(format!(
                "unsupported version {version:?}"
            )));
        }
        let manifest: RunManifest = serde_json::from_value(
            header
                .remove("manifest")
                .ok_or_else(|| ReportError::Schema("missing manifest".into()))?,
        )?;
        let Some(Value::Object(mut meta)) = header.remove("meta") else {
            return Err(ReportError::Schema("missing meta".into()));
        };
        let rows = lines
            .map(serde_json::from_str)
            .collect::<Result<Vec<Value>, _>>()?;
        meta.insert("rows".into(), Value::Array(rows));
        let body = serde_json::from_value(Value::Object(meta))?;
        Ok(Self { manifest, body })
    }

    /// Write atomically to `path`.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ReportError> {
        let text = self.to_jsonl()?;
        write_atomic(path.as_ref(), |w| {
            io::Write::write_all(w, text.as_bytes()).map_err(ReportError::from)
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ReportError> {
        Self::parse_jsonl(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{
        invariance_sweep, k_distribution, latency_bench, mixed_cliff_specs, noise_admission,
        planted_corpus, sensitivity_grid,
    };
    use crate::logits::LogitVector;
    use crate::mink::MinKParams;
    use crate::session::Sampler;

    fn manifest() -> RunManifest {
        let mut m = RunManifest::new("test");
        m.seed = Some(3);
        m.temperatures = vec![1.0, 0.1];
        m.strategies = vec![StrategySpec::MinK(MinKParams::default())];
        m.input_digest = Some("ab".repeat(32));
        m.started_at = Some("2026-01-01T00:00:00Z".into());
        m
    }

    fn round_trip(body: ReportBody) {
        let report = Report::new(manifest(), body);
        let text = report.to_jsonl().unwrap();
        let back = Report::parse_jsonl(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.to_jsonl().unwrap(), text);
        let header: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(header["kind"], report.body.kind());
    }

    fn corpus() -> Vec<LogitVector> {
        planted_corpus(&mixed_cliff_specs(8, 64, 4), 1)
            .unwrap()
            .into_iter()
            .map(|p| p.logits)
            .collect()
    }

    #[test]
    fn every_body_round_trips() {
        let spec = StrategySpec::MinK(MinKParams::default());
        let mut sampler = Sampler::new(spec, 3).unwrap();
        let rows = corpus()
            .iter()
            .enumerate()
            .map(|(i, l)| DecisionRecord::from_outcome(i as u64, &sampler.step(l, 0.7).unwrap()))
            .collect();
        round_trip(ReportBody::DecisionLog(DecisionLog {
            strategy: spec,
            temperature: 0.7,
            rows,
        }));

        let strategies = [spec, StrategySpec::TopP { p: 0.9 }];
        let temps = [0.1, 1.0, 3.3];
        round_trip(ReportBody::Invariance(
            invariance_sweep(&strategies, &corpus(), &temps).unwrap(),
        ));
        let specs = mixed_cliff_specs(6, 64, 3);
        round_trip(ReportBody::Admission(
            noise_admission(&strategies, &specs, &temps, 2).unwrap(),
        ));
        round_trip(ReportBody::Sensitivity(
            sensitivity_grid(&[1.0, 2.5], &temps, &specs, 2, MinKParams::default()).unwrap(),
        ));
        let hists = k_distribution(&spec, &corpus(), &temps).unwrap();
        round_trip(ReportBody::KDistribution(KDistribution::new(spec, &hists)));
        round_trip(ReportBody::Latency(
            latency_bench(&strategies, 64, 100, 0).unwrap(),
        ));
    }

    #[test]
    fn rows_are_one_per_line() {
        let hists = k_distribution(&StrategySpec::Greedy, &corpus(), &[1.0, 2.0]).unwrap();
        let body = KDistribution::new(StrategySpec::Greedy, &hists);
        assert_eq!(body.buckets(2.0), vec![(1, 8)]);
        let text = Report::new(manifest(), ReportBody::KDistribution(body))
            .to_jsonl()
            .unwrap();
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn rejects_foreign_documents() {
        assert!(Report::parse_jsonl("").is_err());
        assert!(Report::parse_jsonl("{\"schema\":\"other\"}").is_err());
        assert!(Report::parse_jsonl("[1,2]").is_err());
        let good = Report::new(
            manifest(),
            ReportBody::DecisionLog(DecisionLog {
                strategy: StrategySpec::Greedy,
                temperature: 1.0,
                rows: vec![],
            }),
        )
        .to_jsonl()
        .unwrap();
        assert!(Report::parse_jsonl(&good).is_ok());
        assert!(Report::parse_jsonl(&good.replace("\"version\":1", "\"version\":9")).is_err());
        assert!(Report::parse_jsonl(&format!("{good}{{\"step\":\"x\"}}\n")).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let report = Report::new(
            manifest(),
            ReportBody::DecisionLog(DecisionLog {
                strategy: StrategySpec::Greedy,
                temperature: 1.0,
                rows: vec![],
            }),
        );
        report.write(&path).unwrap();
        assert_eq!(Report::read(&path).unwrap(), report);
        assert_eq!(manifest().without_timestamps().started_at, None);
    }
}

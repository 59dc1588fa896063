use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cliff_sampler::{DecayKind, Method, MinKParams, MirostatParams, StrategySpec};

use crate::UsageError;

#[derive(Debug, Parser)]
#[command(
    name = "cliff-sampler",
    version,
    about = "Min-k truncation sampling over recorded logits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample one token per step of a logit dump and log every decision.
    Sample(SampleArgs),
    /// Histogram the kept-set size per temperature.
    Analyze(AnalyzeArgs),
    /// Run a grid or sweep experiment on synthetic or recorded logits.
    Sweep(SweepArgs),
    /// Time one sampler step per strategy against greedy.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub strategy: StrategyArgs,
    /// Binary logit dump, or a `.jsonl` fixture with one array per line.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub strategy: StrategyArgs,
    /// Temperatures: `1,5`, `1..10` or a single value.
    #[arg(long, default_value = "1")]
    pub temps: String,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepMode {
    /// Min-k mean k and excess admission over a tau x T grid.
    Sensitivity,
    /// Kept-set changes between l and l/T.
    Invariance,
    /// Tokens kept beyond a planted cliff.
    Admission,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = SweepMode::Sensitivity)]
    pub mode: SweepMode,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    /// Temperatures: `1,5`, `1..10` or a single value.
    #[arg(long)]
    pub temps: String,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[arg(long, default_value_t = 32768)]
    pub vocab: usize,
    #[arg(long, default_value_t = 5000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Read vectors from a dump or `.jsonl` fixture.
    #[arg(long = "in", value_name = "PATH", conflicts_with = "planted")]
    pub input: Option<PathBuf>,
    /// Generate planted-cliff vectors with cliff positions cycling 1..=max-cliff.
    #[arg(long)]
    pub planted: bool,
    /// Generated vectors.
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    /// Vocabulary size of generated vectors.
    #[arg(long, default_value_t = 4096)]
    pub vocab: usize,
    #[arg(long, default_value_t = 20)]
    pub max_cliff: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Report path; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StrategyArgs {
    /// Strategy; sweep and bench take a comma-separated list.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub strategy: Vec<Method>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub p_base: Option<f64>,
    #[arg(long)]
    pub n: Option<f64>,
    /// Eta cutoff.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub target_surprise: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Min-k fallback scale; `sweep --mode sensitivity` takes a list.
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long, value_parser = parse_decay)]
    pub decay: Option<DecayKind>,
    #[arg(long)]
    pub no_weight: bool,
    #[arg(long)]
    pub no_range_norm: bool,
    #[arg(long)]
    pub no_fallback: bool,
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::ALL
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| {
            let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
            format!(
                "unknown strategy `{s}`; expected one of {}",
                names.join(", ")
            )
        })
}

fn parse_decay(s: &str) -> Result<DecayKind, String> {
    s.parse().map_err(|e: cliff_sampler::Error| e.to_string())
}

/// `a..b` (inclusive, unit steps), `x,y,z`, or a single number.
pub fn parse_list(flag: &str, s: &str) -> Result<Vec<f64>, UsageError> {
    let bad = |why: &str| UsageError(format!("--{flag} `{s}`: {why}"));
    let number = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let values = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (number(a)?, number(b)?);
        if a > b || b - a > 10_000.0 {
            return Err(bad("range must run upwards and span at most 10000"));
        }
        let steps = (b - a).floor() as usize;
        (0..=steps).map(|i| a + i as f64).collect()
    } else {
        s.split(',').map(number).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad("values must be finite"));
    }
    Ok(values)
}

impl StrategyArgs {
    /// The Min-k parameters these flags describe, with `tau` if given.
    pub fn min_k_params(&self, tau: Option<f64>) -> MinKParams {
        let mut p = MinKParams::default();
        if let Some(tau) = tau {
            p = p.with_tau(tau);
        }
        if let Some(decay) = self.decay {
            p = p.with_decay(decay);
        }
        if self.no_weight {
            p = p.without_weight();
        }
        if self.no_range_norm {
            p = p.without_range_norm();
        }
        if self.no_fallback {
            p = p.without_fallback();
        }
        p
    }

    /// The single `--tau` value, if any.
    pub fn single_tau(&self) -> Result<Option<f64>, UsageError> {
        match &self.tau {
            None => Ok(None),
            Some(s) => match parse_list("tau", s)?.as_slice() {
                [tau] => Ok(Some(*tau)),
                _ => Err(UsageError("--tau takes a single value here".into())),
            },
        }
    }

    /// Specs for the selected strategies, `default` when none were named.
    /// Rejects parameter flags that no selected strategy reads.
    pub fn specs(&self, default: &[Method]) -> Result<Vec<StrategySpec>, UsageError> {
        let methods = if self.strategy.is_empty() {
            default
        } else {
            &self.strategy[..]
        };
        let uses = |m: Method| methods.contains(&m);
        let given = [
            ("k", self.k.is_some(), Method::TopK),
            ("p", self.p.is_some(), Method::TopP),
            ("p-base", self.p_base.is_some(), Method::MinP),
            ("n", self.n.is_some(), Method::TopNSigma),
            ("eps", self.eps.is_some(), Method::Eta),
            (
                "target-surprise",
                self.target_surprise.is_some(),
                Method::Mirostat,
            ),
            ("lr", self.lr.is_some(), Method::Mirostat),
            ("tau", self.tau.is_some(), Method::MinK),
            ("decay", self.decay.is_some(), Method::MinK),
            ("no-weight", self.no_weight, Method::MinK),
            ("no-range-norm", self.no_range_norm, Method::MinK),
            ("no-fallback", self.no_fallback, Method::MinK),
        ];
        if let Some((flag, _, method)) = given.iter().find(|(_, set, m)| *set && !uses(*m)) {
            return Err(UsageError(format!("--{flag} only applies to {method}")));
        }

        let tau = self.single_tau()?;
        let mut specs = Vec::with_capacity(methods.len());
        for &method in methods {
            let spec = match StrategySpec::default_for(method) {
                StrategySpec::TopK { k } => StrategySpec::TopK {
                    k: self.k.unwrap_or(k),
                },
                StrategySpec::TopP { p } => StrategySpec::TopP {
                    p: self.p.unwrap_or(p),
                },
                StrategySpec::MinP { p_base } => StrategySpec::MinP {
                    p_base: self.p_base.unwrap_or(p_base),
                },
                StrategySpec::TopNSigma { n } => StrategySpec::TopNSigma {
                    n: self.n.unwrap_or(n),
                },
                StrategySpec::Eta { eps } => StrategySpec::Eta {
                    eps: self.eps.unwrap_or(eps),
                },
                StrategySpec::Mirostat(m) => StrategySpec::Mirostat(MirostatParams {
                    target_surprise: self.target_surprise.unwrap_or(m.target_surprise),
                    learning_rate: self.lr.unwrap_or(m.learning_rate),
                }),
                StrategySpec::MinK(_) => StrategySpec::MinK(self.min_k_params(tau)),
                StrategySpec::Greedy => StrategySpec::Greedy,
            };
            spec.validate().map_err(|e| UsageError(e.to_string()))?;
            if !specs.contains(&spec) {
                specs.push(spec);
            }
        }
        Ok(specs)
    }

    /// Exactly one strategy, min-k by default.
    pub fn single_spec(&self) -> Result<StrategySpec, UsageError> {
        match self.specs(&[Method::MinK])?.as_slice() {
            [spec] => Ok(*spec),
            _ => Err(UsageError("this command takes a single --strategy".into())),
        }
    }
}

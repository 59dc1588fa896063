use std::io::Write;
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use cliff_sampler::dump::{file_digest, read_dump, read_jsonl};
use cliff_sampler::harness::{
    gen_gaussian, invariance_sweep, k_distribution, latency_bench, mixed_cliff_specs,
    noise_admission, planted_corpus, sensitivity_grid, MIN_STEPS,
};
use cliff_sampler::report::{
    DecisionLog, DecisionRecord, KDistribution, Report, ReportBody, RunManifest, PRE_SCALED,
};
use cliff_sampler::{LogitVector, Method, Sampler, SamplerRng, StrategySpec};

use crate::cli::{
    parse_list, AnalyzeArgs, BenchArgs, CorpusArgs, OutArgs, SampleArgs, SweepArgs, SweepMode,
};
use crate::{CliError, UsageError};

/// Logit scale of generated Gaussian corpora.
const GAUSSIAN_SCALE: f64 = 3.0;

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn check_temperature(t: f64) -> Result<f64, UsageError> {
    if t > 0.0 && t.is_finite() {
        Ok(t)
    } else {
        Err(UsageError(format!(
            "temperature must be finite and > 0, got {t}"
        )))
    }
}

fn temperatures(s: &str) -> Result<Vec<f64>, UsageError> {
    parse_list("temps", s)?
        .into_iter()
        .map(check_temperature)
        .collect()
}

/// Vectors from a binary dump, or from a `.jsonl` fixture.
fn load(path: &Path) -> Result<(Vec<LogitVector>, String), CliError> {
    let digest =
        file_digest(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    let jsonl = path.extension().is_some_and(|e| e == "jsonl");
    let vectors = if jsonl {
        read_jsonl(path)
    } else {
        read_dump(path)
    }
    .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    Ok((vectors, digest))
}

fn emit(manifest: RunManifest, body: ReportBody, out: &OutArgs) -> Result<(), CliError> {
    let report = Report::new(manifest, body);
    match &out.out {
        Some(path) => report
            .write(path)
            .map_err(|e| CliError::runtime(format!("{}: {e}", path.display()))),
        None => {
            let text = report
                .to_jsonl()
                .map_err(|e| CliError::runtime(e.to_string()))?;
            std::io::stdout()
                .lock()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::runtime(format!("stdout: {e}")))
        }
    }
}

fn manifest(
    command: &str,
    strategies: Vec<StrategySpec>,
    temperatures: Vec<f64>,
    seed: Option<u64>,
) -> RunManifest {
    let mut m = RunManifest::new(command);
    m.strategies = strategies;
    m.temperatures = temperatures;
    m.seed = seed;
    m.started_at = Some(now());
    m
}

fn finish(mut m: RunManifest) -> RunManifest {
    m.finished_at = Some(now());
    m
}

pub fn sample(args: &SampleArgs) -> Result<(), CliError> {
    let spec = args.strategy.single_spec()?;
    let temperature = check_temperature(args.temperature)?;
    let mut m = manifest("sample", vec![spec], vec![temperature], Some(args.seed));
    let (vectors, digest) = load(&args.input)?;
    m.input_digest = Some(digest);

    let mut sampler = Sampler::new(spec, args.seed).map_err(|e| UsageError(e.to_string()))?;
    let rows = vectors
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let outcome = sampler
                .step(l, temperature)
                .map_err(|e| CliError::runtime(format!("step {i}: {e}")))?;
            Ok(DecisionRecord::from_outcome(i as u64, &outcome))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let body = ReportBody::DecisionLog(DecisionLog {
        strategy: spec,
        temperature,
        rows,
    });
    emit(finish(m), body, &args.out)
}

fn check_corpus(c: &CorpusArgs) -> Result<(), UsageError> {
    if c.count == 0 {
        return Err(UsageError("--count must be at least 1".into()));
    }
    if c.vocab < 2 {
        return Err(UsageError("--vocab must be at least 2".into()));
    }
    if !(1..c.vocab).contains(&c.max_cliff) {
        return Err(UsageError("--max-cliff must be in 1..vocab".into()));
    }
    Ok(())
}

/// Vectors from `--in`, planted cliffs with `--planted`, Gaussian otherwise.
fn corpus(c: &CorpusArgs, m: &mut RunManifest) -> Result<Vec<LogitVector>, CliError> {
    if let Some(path) = &c.input {
        let (vectors, digest) = load(path)?;
        m.input_digest = Some(digest);
        return Ok(vectors);
    }
    m.seed = Some(c.seed);
    if c.planted {
        let specs = mixed_cliff_specs(c.count, c.vocab, c.max_cliff);
        let planted =
            planted_corpus(&specs, c.seed).map_err(|e| CliError::runtime(e.to_string()))?;
        return Ok(planted.into_iter().map(|p| p.logits).collect());
    }
    (0..c.count)
        .map(|i| {
            gen_gaussian(
                c.vocab,
                GAUSSIAN_SCALE,
                &mut SamplerRng::stream(c.seed, i as u64),
            )
        })
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::runtime(e.to_string()))
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let spec = args.strategy.single_spec()?;
    let temps = temperatures(&args.temps)?;
    check_corpus(&args.corpus)?;
    let mut m = manifest("analyze", vec![spec], temps.clone(), None);
    let vectors = corpus(&args.corpus, &mut m)?;
    if vectors.is_empty() {
        return Err(CliError::runtime("input holds no vectors"));
    }
    let hists =
        k_distribution(&spec, &vectors, &temps).map_err(|e| CliError::runtime(e.to_string()))?;
    let body = ReportBody::KDistribution(KDistribution::new(spec, &hists));
    emit(finish(m), body, &args.out)
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let temps = temperatures(&args.temps)?;
    check_corpus(&args.corpus)?;
    let c = &args.corpus;
    let runtime = |e: cliff_sampler::Error| CliError::runtime(e.to_string());
    match args.mode {
        SweepMode::Sensitivity => {
            let Some(tau) = &args.strategy.tau else {
                return Err(UsageError("sensitivity needs --tau".into()).into());
            };
            let taus = parse_list("tau", tau)?;
            if taus.iter().any(|t| *t < 0.0) {
                return Err(UsageError("--tau values must be >= 0".into()).into());
            }
            if c.input.is_some() {
                return Err(
                    UsageError("sensitivity runs on planted cliffs; drop --in".into()).into(),
                );
            }
            if !args.strategy.strategy.iter().all(|m| *m == Method::MinK) {
                return Err(UsageError("sensitivity sweeps min-k only".into()).into());
            }
            let base = args.strategy.min_k_params(None);
            let specs = mixed_cliff_specs(c.count, c.vocab, c.max_cliff);
            let strategies = taus
                .iter()
                .map(|&t| StrategySpec::MinK(base.with_tau(t)))
                .collect();
            let m = manifest("sweep sensitivity", strategies, temps.clone(), Some(c.seed));
            let grid = sensitivity_grid(&taus, &temps, &specs, c.seed, base).map_err(runtime)?;
            emit(finish(m), ReportBody::Sensitivity(grid), &args.out)
        }
        SweepMode::Invariance => {
            let strategies =
                args.strategy
                    .specs(&[Method::MinK, Method::TopNSigma, Method::TopP])?;
            let mut m = manifest("sweep invariance", strategies.clone(), temps.clone(), None);
            m.temperature_convention = PRE_SCALED.into();
            let vectors = corpus(c, &mut m)?;
            if vectors.is_empty() {
                return Err(CliError::runtime("input holds no vectors"));
            }
            let report = invariance_sweep(&strategies, &vectors, &temps).map_err(runtime)?;
            emit(finish(m), ReportBody::Invariance(report), &args.out)
        }
        SweepMode::Admission => {
            if c.input.is_some() {
                return Err(
                    UsageError("admission needs planted ground truth; drop --in".into()).into(),
                );
            }
            let strategies =
                args.strategy
                    .specs(&[Method::MinK, Method::TopNSigma, Method::TopP])?;
            let specs = mixed_cliff_specs(c.count, c.vocab, c.max_cliff);
            let m = manifest(
                "sweep admission",
                strategies.clone(),
                temps.clone(),
                Some(c.seed),
            );
            let report = noise_admission(&strategies, &specs, &temps, c.seed).map_err(runtime)?;
            emit(finish(m), ReportBody::Admission(report), &args.out)
        }
    }
}

pub fn bench(args: &BenchArgs) -> Result<(), CliError> {
    let strategies = args.strategy.specs(&Method::ALL)?;
    if args.vocab < 2 {
        return Err(UsageError("--vocab must be at least 2".into()).into());
    }
    if args.steps < MIN_STEPS {
        return Err(UsageError(format!("--steps must be at least {MIN_STEPS}")).into());
    }
    let mut m = manifest("bench", strategies.clone(), vec![1.0], Some(args.seed));
    let report = latency_bench(&strategies, args.vocab, args.steps, args.seed)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    m.strategies = report.rows.iter().map(|r| r.strategy).collect();
    emit(finish(m), ReportBody::Latency(report), &args.out)
}

use crate::baselines::{mirostat_step, mirostat_truncate, truncate, MirostatState, StrategySpec};
use crate::decision::{
    apply_temperature_softmax, sample_token, SamplingOutcome, TruncationDecision,
};
use crate::error::{check_temperature, Result};
use crate::logits::LogitVector;
use crate::rng::SamplerRng;

/// A strategy bound to a seed and one sequence's position.
///
/// Step `n` draws from substream `n` of the seed, so the token chosen at a
/// position depends only on the seed, the position and the inputs. Mirostat
/// state lives here; use one `Sampler` per sequence.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: StrategySpec,
    seed: u64,
    position: u64,
    mirostat: Option<MirostatState>,
}

impl Sampler {
    pub fn new(spec: StrategySpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mirostat = match spec {
            StrategySpec::Mirostat(m) => Some(MirostatState::new(m.target_surprise)),
            _ => None,
        };
        Ok(Self {
            spec,
            seed,
            position: 0,
            mirostat,
        })
    }

    pub fn spec(&self) -> &StrategySpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn mirostat_state(&self) -> Option<MirostatState> {
        self.mirostat
    }

    /// The candidate set the next `step` would sample from.
    pub fn truncate(&self, logits: &LogitVector, temperature: f64) -> Result<TruncationDecision> {
        match self.mirostat {
            Some(state) => mirostat_truncate(logits, state.mu, temperature),
            None => truncate(logits, &self.spec, temperature),
        }
    }

    pub fn step(&mut self, logits: &LogitVector, temperature: f64) -> Result<SamplingOutcome> {
        check_temperature(temperature)?;
        let mut rng = SamplerRng::stream(self.seed, self.position);
        let outcome = match (self.spec, self.mirostat) {
            (StrategySpec::Mirostat(params), Some(state)) => {
                let (outcome, next) = mirostat_step(logits, state, &params, temperature, &mut rng)?;
                self.mirostat = Some(next);
                outcome
            }
            (StrategySpec::Greedy, _) => {
                let decision = truncate(logits, &self.spec, temperature)?;
                SamplingOutcome {
                    token_id: decision.kept_ids[0],
                    decision,
                    temperature,
                    rng: Some(rng.tag()),
                }
            }
            _ => {
                let decision = truncate(logits, &self.spec, temperature)?;
                let probs = apply_temperature_softmax(&decision, logits, temperature)?;
                let tag = rng.tag();
                SamplingOutcome {
                    token_id: sample_token(&probs, &mut rng),
                    decision,
                    temperature,
                    rng: Some(tag),
                }
            }
        };
        self.position += 1;
        Ok(outcome)
    }

    /// Rewind to position 0 and reset any Mirostat state.
    pub fn reset(&mut self) {
        self.position = 0;
        if let StrategySpec::Mirostat(m) = self.spec {
            self.mirostat = Some(MirostatState::new(m.target_surprise));
        }
    }
}

use crate::error::{Error, Result};
use crate::policy::SampleBatch;

pub const ADVANTAGE_EPS: f64 = 1e-8;

/// `(R − mean)/(pop_std + 1e-8)`; a constant reward vector maps to zeros.
pub fn normalize_advantages(rewards: &[f64]) -> Result<Vec<f64>> {
    if rewards.len() < 2 {
        return Err(Error::config(format!(
            "advantage normalisation needs at least 2 rewards, got {}",
            rewards.len()
        )));
    }
    if let Some(j) = rewards.iter().position(|r| !r.is_finite()) {
        return Err(Error::Data(format!("reward {j} is not finite ({})", rewards[j])));
    }
    if rewards.iter().all(|&r| r == rewards[0]) {
        return Ok(vec![0.0; rewards.len()]);
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let denom = var.sqrt() + ADVANTAGE_EPS;
    Ok(rewards.iter().map(|r| (r - mean) / denom).collect())
}

/// One round of samples with their rewards; the unit of data reuse.
#[derive(Clone, Debug)]
pub struct Rollout {
    pub batch: SampleBatch,
    pub rewards: Vec<f64>,
    advantages: Option<Vec<f64>>,
}

impl Rollout {
    pub fn new(batch: SampleBatch, rewards: Vec<f64>) -> Result<Self> {
        if batch.len() != rewards.len() {
            return Err(Error::Data(format!(
                "{} samples but {} rewards",
                batch.len(),
                rewards.len()
            )));
        }
        Ok(Rollout {
            batch,
            rewards,
            advantages: None,
        })
    }

    /// Rollout with advantages already computed.
    pub fn normalized(batch: SampleBatch, rewards: Vec<f64>) -> Result<Self> {
        let mut r = Self::new(batch, rewards)?;
        r.normalize()?;
        Ok(r)
    }

    pub fn normalize(&mut self) -> Result<()> {
        self.advantages = Some(normalize_advantages(&self.rewards)?);
        Ok(())
    }

    /// Install externally computed advantages (e.g. hand-built test cases).
    pub fn with_advantages(mut self, advantages: Vec<f64>) -> Result<Self> {
        if advantages.len() != self.rewards.len() || advantages.iter().any(|a| !a.is_finite()) {
            return Err(Error::Data("advantages must be finite, one per sample".into()));
        }
        self.advantages = Some(advantages);
        Ok(self)
    }

    pub fn advantages(&self) -> Result<&[f64]> {
        self.advantages
            .as_deref()
            .ok_or_else(|| Error::State("rollout advantages have not been normalised".into()))
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn mean_reward(&self) -> f64 {
        self.rewards.iter().sum::<f64>() / self.rewards.len().max(1) as f64
    }
}

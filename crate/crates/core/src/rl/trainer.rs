//! In-situ training loops: sample, measure, normalise, update, repeat.

use std::io::Write;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::advantage::Rollout;
use super::loss::{pg_loss, ppo_loss};
use crate::error::{Error, Result, Shape};
use crate::optics::PhaseMap;
use crate::policy::{kl, GaussianPolicy, INITIAL_SIGMA};

/// What the optimiser sees of a task: a parameter shape, a reward per
/// sampled phase map, and an evaluation metric for the policy mean.
///
/// `rewards` is the only method that may touch the counted instrument; it
/// must consume exactly `phases.len() · measurements_per_sample()`
/// measurements. `metric` evaluates off the books.
pub trait Environment {
    fn shape(&self) -> Shape;

    /// Instrument calls per sampled phase map (the task minibatch size).
    fn measurements_per_sample(&self) -> usize {
        1
    }

    /// Starting policy mean; zeros when `None`.
    fn initial_mean(&self) -> Option<PhaseMap> {
        None
    }

    fn rewards(&mut self, phases: &[PhaseMap], rng: &mut dyn RngCore) -> Result<Vec<f64>>;

    fn metric(&mut self, mean: &PhaseMap) -> Result<f64>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ppo,
    Pg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    /// Samples per round, `M`.
    pub samples: usize,
    /// Surrogate updates per round, `K` (forced to 1 for PG).
    pub reuse: usize,
    /// Clip parameter `ε`; `inf` disables clipping.
    pub epsilon: f64,
    pub adam: AdamConfig,
    pub entropy_coef: f64,
    /// Stop reusing a batch once `KL(new ‖ old)` exceeds this, in nats per
    /// pixel. `inf` never stops early.
    pub kl_stop: f64,
    pub initial_sigma: f64,
    /// Maximum instrument calls; a round that would exceed it is not run.
    pub measurement_budget: u64,
    /// Evaluate the metric every this many rounds (and on the last round).
    pub eval_every: usize,
    /// Camera frame rate used to express measurements as instrument time.
    pub frame_rate_hz: f64,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            samples: 32,
            reuse: 8,
            epsilon: 0.2,
            adam: AdamConfig::default(),
            entropy_coef: 0.0,
            kl_stop: 0.02,
            initial_sigma: INITIAL_SIGMA,
            measurement_budget: 20_000,
            eval_every: 1,
            frame_rate_hz: 60.0,
            seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::config("trainer.samples must be at least 2"));
        }
        if self.reuse < 1 {
            return Err(Error::config("trainer.reuse must be at least 1"));
        }
        if !(self.epsilon > 0.0 && (self.epsilon < 1.0 || self.epsilon == f64::INFINITY)) {
            return Err(Error::config("trainer.epsilon must lie in (0, 1), or be inf to disable clipping"));
        }
        if !(self.entropy_coef.is_finite() && self.initial_sigma > 0.0 && self.initial_sigma.is_finite()) {
            return Err(Error::config("trainer.entropy_coef and initial_sigma must be finite, sigma positive"));
        }
        if !(self.kl_stop > 0.0) {
            return Err(Error::config("trainer.kl_stop must be positive"));
        }
        if self.eval_every == 0 || !(self.frame_rate_hz > 0.0) {
            return Err(Error::config("trainer.eval_every and frame_rate_hz must be positive"));
        }
        self.adam.validate()
    }
}

/// One row of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    /// Cumulative instrument calls.
    pub measurements: u64,
    /// Instrument time implied by `measurements` at the configured frame rate.
    pub seconds: f64,
    /// Elapsed host time; not part of the CSV so that logs stay reproducible.
    pub wall_seconds: f64,
    /// `None` for the round-0 evaluation row.
    pub mean_reward: Option<f64>,
    /// `None` on rounds where the metric was not evaluated.
    pub metric: Option<f64>,
    pub sigma: f64,
    /// Total `KL(new ‖ old)` over all pixels after the last update, in nats.
    pub kl: f64,
    /// Surrogate updates actually taken this round.
    pub updates: usize,
}

#[derive(Clone, Debug)]
pub struct TrainingHistory {
    pub records: Vec<RoundRecord>,
    pub policy: GaussianPolicy,
}

pub const CSV_HEADER: &str = "round,measurements,seconds,mean_reward,metric,sigma,kl";

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.9e}"))
}

impl TrainingHistory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{:.6},{},{},{:.9e},{:.9e}",
                r.round,
                r.measurements,
                r.seconds,
                opt(r.mean_reward),
                opt(r.metric),
                r.sigma,
                r.kl
            )?;
        }
        Ok(())
    }

    /// Last evaluated metric.
    pub fn final_metric(&self) -> Option<f64> {
        self.records.iter().rev().find_map(|r| r.metric)
    }

    pub fn measurements(&self) -> u64 {
        self.records.last().map_or(0, |r| r.measurements)
    }

    /// Last evaluated metric at or before the given measurement count.
    pub fn metric_at(&self, measurements: u64) -> Option<f64> {
        self.records
            .iter()
            .take_while(|r| r.measurements <= measurements)
            .filter_map(|r| r.metric)
            .last()
    }

    /// First measurement count at which the metric reached `threshold`.
    pub fn measurements_to(&self, threshold: f64) -> Option<u64> {
        self.records
            .iter()
            .find(|r| r.metric.is_some_and(|m| m >= threshold))
            .map(|r| r.measurements)
    }
}

/// Called after every record with the policy it describes.
pub type Observer<'a> = dyn FnMut(&RoundRecord, &GaussianPolicy) -> Result<()> + 'a;

pub fn train_ppo<E: Environment + ?Sized>(env: &mut E, config: &TrainerConfig) -> Result<TrainingHistory> {
    train(env, config, Algorithm::Ppo, &mut |_, _| Ok(()))
}

pub fn train_pg<E: Environment + ?Sized>(env: &mut E, config: &TrainerConfig) -> Result<TrainingHistory> {
    train(env, config, Algorithm::Pg, &mut |_, _| Ok(()))
}

/// Shared loop. PG takes exactly one unclipped step per round.
pub fn train<E: Environment + ?Sized>(
    env: &mut E,
    config: &TrainerConfig,
    algorithm: Algorithm,
    observer: &mut Observer<'_>,
) -> Result<TrainingHistory> {
    config.validate()?;
    let shape = env.shape();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mean = match env.initial_mean() {
        Some(m) => {
            Error::check_shape(shape, m.shape())?;
            m
        }
        None => PhaseMap::zeros(shape),
    };
    let mut policy = GaussianPolicy::new(mean, config.initial_sigma.ln())?;
    let mut adam = AdamState::new(shape.len() + 1);
    let per_round = (config.samples * env.measurements_per_sample()) as u64;
    let n = shape.len() as f64;

    let mut record = RoundRecord {
        round: 0,
        measurements: 0,
        seconds: 0.0,
        wall_seconds: 0.0,
        mean_reward: None,
        metric: Some(env.metric(&policy.mean_phase()).map_err(|e| e.in_round(0))?),
        sigma: policy.sigma(),
        kl: 0.0,
        updates: 0,
    };
    observer(&record, &policy)?;
    let mut records = vec![record.clone()];

    let mut round = 0;
    let mut measurements = 0u64;
    while per_round > 0 && measurements + per_round <= config.measurement_budget {
        round += 1;
        let batch = policy.sample(config.samples, &mut rng)?;
        let rewards = env
            .rewards(&batch.phases, &mut rng)
            .map_err(|e| e.in_round(round))?;
        measurements += per_round;
        let rollout = Rollout::normalized(batch, rewards).map_err(|e| e.in_round(round))?;

        let old = policy.clone();
        let mut updates = 0;
        let mut divergence = 0.0;
        let reuse = match algorithm {
            Algorithm::Ppo => config.reuse,
            Algorithm::Pg => 1,
        };
        for _ in 0..reuse {
            let out = match algorithm {
                Algorithm::Ppo => ppo_loss(&rollout, &policy, &old, config.epsilon, config.entropy_coef)?,
                Algorithm::Pg => pg_loss(&rollout, &policy, config.entropy_coef)?,
            };
            let (next, state) = adam_step(&policy, &out.grad, &adam, &config.adam)?;
            policy = next;
            adam = state;
            updates += 1;
            divergence = kl(&policy, &old)?;
            if algorithm == Algorithm::Ppo && divergence / n > config.kl_stop {
                break;
            }
        }

        let last = measurements + per_round > config.measurement_budget;
        let metric = if round % config.eval_every == 0 || last {
            Some(env.metric(&policy.mean_phase()).map_err(|e| e.in_round(round))?)
        } else {
            None
        };
        record = RoundRecord {
            round,
            measurements,
            seconds: measurements as f64 / config.frame_rate_hz,
            wall_seconds: start.elapsed().as_secs_f64(),
            mean_reward: Some(rollout.mean_reward()),
            metric,
            sigma: policy.sigma(),
            kl: divergence,
            updates,
        };
        observer(&record, &policy)?;
        records.push(record);
    }
    Ok(TrainingHistory { records, policy })
}

/// One-parameter toy problem with reward `−(φ − target)²`.
#[derive(Clone, Debug)]
pub struct QuadraticEnv {
    pub target: f64,
    pub calls: u64,
}

impl QuadraticEnv {
    pub fn new(target: f64) -> Self {
        QuadraticEnv { target, calls: 0 }
    }
}

impl Environment for QuadraticEnv {
    fn shape(&self) -> Shape {
        Shape::new(1, 1)
    }

    fn rewards(&mut self, phases: &[PhaseMap], _rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        self.calls += phases.len() as u64;
        Ok(phases.iter().map(|p| -(p.data()[0] - self.target).powi(2)).collect())
    }

    /// The policy mean itself.
    fn metric(&mut self, mean: &PhaseMap) -> Result<f64> {
        Ok(mean.data()[0])
    }
}

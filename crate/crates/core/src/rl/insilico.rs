//! Model-based baseline: adjoint gradients through the noise-free twin.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use crate::error::{Error, Result, Shape};
use crate::optics::{Bench, IntensityImage, PhaseMap};
use crate::tasks::gain_fit;

/// Gradient of the mean gain-fitted squared error between model intensity and
/// target over all `(input, target)` pairs, with respect to the SLM phase.
///
/// The per-pair loss is `(1/P)·‖g*·I − y‖²` with the least-squares gain `g*`;
/// since `∂L/∂g = 0` at `g*`, `∂L/∂I = (2/P)·g*·(g*·I − y)`.
pub fn insilico_gradient(
    bench: &Bench,
    slm: &PhaseMap,
    inputs: &[Option<PhaseMap>],
    targets: &[IntensityImage],
) -> Result<(f64, Vec<f64>)> {
    if inputs.len() != targets.len() || inputs.is_empty() {
        return Err(Error::Data(format!(
            "need matching non-empty inputs and targets, got {} and {}",
            inputs.len(),
            targets.len()
        )));
    }
    let count = inputs.len() as f64;
    let mut total = 0.0;
    let mut grad = vec![0.0; bench.shape().len()];
    for (input, target) in inputs.iter().zip(targets) {
        let (loss, g) = bench.model_gradient(input.as_ref(), slm, |img| gain_mse_grad(img, target))?;
        total += loss / count;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b / count);
    }
    Ok((total, grad))
}

pub(crate) fn gain_mse_grad(img: &IntensityImage, target: &IntensityImage) -> Result<(f64, Vec<f64>)> {
    Error::check_shape(target.shape(), img.shape())?;
    let g = gain_fit(img.data(), target.data());
    let p = img.data().len() as f64;
    let mut loss = 0.0;
    let grad = img
        .data()
        .iter()
        .zip(target.data())
        .map(|(i, y)| {
            let r = g * i - y;
            loss += r * r;
            2.0 * g * r / p
        })
        .collect();
    Ok((loss / p, grad))
}

/// A differentiable task objective on the noise-free twin.
pub trait InSilicoObjective {
    fn shape(&self) -> Shape;

    /// Loss to minimise and its gradient with respect to the SLM phase.
    /// Stochastic objectives draw minibatches from `rng`.
    fn loss_and_grad(&mut self, phase: &PhaseMap, rng: &mut dyn RngCore) -> Result<(f64, Vec<f64>)>;

    /// Task metric, higher is better.
    fn metric(&mut self, phase: &PhaseMap) -> Result<f64>;

    fn initial_phase(&self) -> PhaseMap {
        PhaseMap::zeros(self.shape())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InSilicoConfig {
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
    /// Evaluate the metric every this many steps (and after the last).
    pub eval_every: usize,
}

impl Default for InSilicoConfig {
    fn default() -> Self {
        InSilicoConfig {
            steps: 2000,
            lr: 0.05,
            seed: 0,
            eval_every: 50,
        }
    }
}

#[derive(Clone, Debug)]
pub struct InSilicoResult {
    /// Iterate with the best evaluated metric.
    pub phase: PhaseMap,
    pub metric: f64,
    /// Running minimum of the loss after each step.
    pub best_loss: Vec<f64>,
    /// `(step, metric)` at each evaluation, starting with step 0.
    pub evaluations: Vec<(usize, f64)>,
}

/// Adam descent on the objective's gradient, keeping the best evaluated iterate.
pub fn train_insilico<O: InSilicoObjective + ?Sized>(objective: &mut O, config: &InSilicoConfig) -> Result<InSilicoResult> {
    if config.eval_every == 0 || !(config.lr > 0.0 && config.lr.is_finite()) {
        return Err(Error::config("insilico lr and eval_every must be positive"));
    }
    let shape = objective.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let adam_cfg = AdamConfig {
        lr_mu: config.lr,
        ..AdamConfig::default()
    };
    let mut state = AdamState::new(shape.len());
    let mut params = objective.initial_phase().into_data();
    let metric0 = objective.metric(&PhaseMap::new(shape, params.clone())?)?;
    let mut best = (PhaseMap::new(shape, params.clone())?, metric0);
    let mut evaluations = vec![(0, metric0)];
    let mut best_loss = Vec::with_capacity(config.steps);
    let mut running = f64::INFINITY;
    for step in 1..=config.steps {
        let phase = PhaseMap::new(shape, params.clone())?;
        let (loss, grad) = objective.loss_and_grad(&phase, &mut rng)?;
        running = running.min(loss);
        best_loss.push(running);
        state.update(&mut params, &grad, |_| config.lr, &adam_cfg);
        if step % config.eval_every == 0 || step == config.steps {
            let phase = PhaseMap::new(shape, params.clone())?;
            let m = objective.metric(&phase)?;
            evaluations.push((step, m));
            if m > best.1 {
                best = (phase, m);
            }
        }
    }
    Ok(InSilicoResult {
        phase: best.0,
        metric: best.1,
        best_loss,
        evaluations,
    })
}

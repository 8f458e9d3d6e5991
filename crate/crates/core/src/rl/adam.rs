use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{GaussianPolicy, PolicyGrad};

/// Adam hyperparameters with separate step sizes for `μ` and `log σ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr_mu: f64,
    pub lr_log_sigma: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr_mu: 2e-3,
            lr_log_sigma: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr_mu >= 0.0
            && self.lr_log_sigma >= 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && [self.lr_mu, self.lr_log_sigma, self.eps].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid Adam settings {self:?}")))
        }
    }
}

/// First and second moment estimates; `t` counts completed steps.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    /// State for `n` parameters.
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected update of `params` in place, with per-parameter
    /// step sizes.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64], lr: impl Fn(usize) -> f64, cfg: &AdamConfig) {
        debug_assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        for (i, (p, &g)) in params.iter_mut().zip(grads).enumerate() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            *p -= lr(i) * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

/// Descend `grad` from `policy`; `state` holds `N + 1` moments with `log σ`
/// last. `log σ` is clamped afterwards.
pub fn adam_step(
    policy: &GaussianPolicy,
    grad: &PolicyGrad,
    state: &AdamState,
    cfg: &AdamConfig,
) -> Result<(GaussianPolicy, AdamState)> {
    let n = policy.mu().len();
    if grad.mu.len() != n || state.m.len() != n + 1 {
        return Err(Error::Dimension {
            expected: policy.shape(),
            got: crate::Shape::new(1, grad.mu.len()),
        });
    }
    let mut params: Vec<f64> = policy.mu().to_vec();
    params.push(policy.log_sigma());
    let mut grads = grad.mu.clone();
    grads.push(grad.log_sigma);
    let mut state = state.clone();
    state.update(&mut params, &grads, |i| if i < n { cfg.lr_mu } else { cfg.lr_log_sigma }, cfg);
    let log_sigma = params.pop().unwrap_or_default();
    let mut next = policy.clone();
    next.set_params(params, log_sigma)?;
    Ok((next, state))
}

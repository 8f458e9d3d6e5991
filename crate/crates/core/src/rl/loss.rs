//! Clipped-surrogate and plain policy-gradient losses with analytic gradients.

use super::advantage::Rollout;
use crate::error::{Error, Result};
use crate::policy::{log_ratio, GaussianPolicy, PolicyGrad};

/// Loss value, its parameter gradient, and the fraction of samples whose
/// clipped branch attained the minimum.
#[derive(Clone, Debug)]
pub struct LossOutput {
    pub loss: f64,
    pub grad: PolicyGrad,
    pub clip_fraction: f64,
}

fn check(rollout: &Rollout, policy: &GaussianPolicy) -> Result<()> {
    if rollout.len() < 2 {
        return Err(Error::config("a rollout needs at least 2 samples"));
    }
    match rollout.batch.phases.first() {
        Some(p) => Error::check_shape(policy.shape(), p.shape()),
        None => Ok(()),
    }
}

/// `Σ_j coef_j · ∇log π(φ_j)` plus the entropy term on `log σ`.
fn accumulate(
    policy: &GaussianPolicy,
    rollout: &Rollout,
    coefs: &[f64],
    entropy_coef: f64,
) -> Result<PolicyGrad> {
    let mut grad = PolicyGrad::zeros(policy.shape().len());
    for (phase, &c) in rollout.batch.phases.iter().zip(coefs) {
        if c != 0.0 {
            grad.add_scaled(&policy.grad_log_prob(phase)?, c);
        }
    }
    grad.log_sigma -= entropy_coef * policy.entropy_grad_log_sigma();
    Ok(grad)
}

/// `−(1/M)·Σ min(r·A′, clip(r, 1−ε, 1+ε)·A′) − c·H`.
///
/// A sample contributes `−(1/M)·A′·r·∇log π_new` when its unclipped branch
/// attains the minimum (ties included) and nothing otherwise. `epsilon =
/// f64::INFINITY` disables clipping.
pub fn ppo_loss(
    rollout: &Rollout,
    new: &GaussianPolicy,
    old: &GaussianPolicy,
    epsilon: f64,
    entropy_coef: f64,
) -> Result<LossOutput> {
    check(rollout, new)?;
    let adv = rollout.advantages()?;
    let m = rollout.len() as f64;
    let mut total = 0.0;
    let mut clipped = 0usize;
    let mut coefs = Vec::with_capacity(adv.len());
    for (phase, &a) in rollout.batch.phases.iter().zip(adv) {
        let r = log_ratio(new, old, phase)?.exp();
        let unclipped = r * a;
        let surrogate = r.clamp(1.0 - epsilon, 1.0 + epsilon) * a;
        if unclipped <= surrogate {
            total += unclipped;
            coefs.push(-(a * r) / m);
        } else {
            total += surrogate;
            clipped += 1;
            coefs.push(0.0);
        }
    }
    Ok(LossOutput {
        loss: -total / m - entropy_coef * new.entropy(),
        grad: accumulate(new, rollout, &coefs, entropy_coef)?,
        clip_fraction: clipped as f64 / m,
    })
}

/// `−(1/M)·Σ A′·log π(φ_j) − c·H`.
pub fn pg_loss(rollout: &Rollout, policy: &GaussianPolicy, entropy_coef: f64) -> Result<LossOutput> {
    check(rollout, policy)?;
    let adv = rollout.advantages()?;
    let m = rollout.len() as f64;
    let mut total = 0.0;
    let mut coefs = Vec::with_capacity(adv.len());
    for (phase, &a) in rollout.batch.phases.iter().zip(adv) {
        total += a * policy.log_prob(phase)?;
        coefs.push(-(a * 1.0) / m);
    }
    Ok(LossOutput {
        loss: -total / m - entropy_coef * policy.entropy(),
        grad: accumulate(policy, rollout, &coefs, entropy_coef)?,
        clip_fraction: 0.0,
    })
}

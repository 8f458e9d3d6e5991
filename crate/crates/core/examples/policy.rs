//! The Gaussian phase policy: sampling, log-probabilities and the
//! probability ratio the clipped surrogate works with.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use insitu::optics::PhaseMap;
use insitu::policy::{kl, log_ratio, GaussianPolicy};
use insitu::Shape;

fn main() -> insitu::Result<()> {
    let shape = Shape::new(8, 8);
    let old = GaussianPolicy::zeros(shape);
    let batch = old.sample(4, &mut ChaCha8Rng::seed_from_u64(7))?;
    println!("sigma {:.3}, entropy {:.3} nats", old.sigma(), old.entropy());
    for (phase, lp) in batch.phases.iter().zip(&batch.log_probs) {
        println!("sample log p = {lp:.3}");
        assert!((old.log_prob(phase)? - lp).abs() < 1e-9);
    }

    // Nudge the mean towards the first sample and watch the ratio move.
    let target = &batch.phases[0];
    let mut new = old.clone();
    let mu: Vec<f64> = target.data().iter().map(|t| 0.05 * t).collect();
    new.set_params(mu, old.log_sigma())?;
    for (i, phase) in batch.phases.iter().enumerate() {
        println!("r_{i} = {:.4}", log_ratio(&new, &old, phase)?.exp());
    }
    println!("KL(new || old) = {:.5} nats", kl(&new, &old)?);
    let zero = PhaseMap::zeros(shape);
    println!("log p(mean) = {:.3}", old.log_prob(&zero)?);
    Ok(())
}

//! PPO against plain policy gradient on a one-pixel quadratic bowl.
//!
//! Both see the same number of reward evaluations; PPO reuses each batch
//! for several clipped updates.

use insitu::rl::{train_pg, train_ppo, QuadraticEnv, TrainerConfig};

fn main() -> insitu::Result<()> {
    let target = 1.0;
    let config = TrainerConfig {
        samples: 16,
        reuse: 8,
        measurement_budget: 16 * 200,
        eval_every: 10,
        kl_stop: f64::INFINITY,
        ..TrainerConfig::default()
    };
    let ppo = train_ppo(&mut QuadraticEnv::new(target), &config)?;
    let pg = train_pg(&mut QuadraticEnv::new(target), &config)?;
    println!("measurements   ppo mu    pg mu");
    for (a, b) in ppo.records.iter().zip(&pg.records) {
        if let (Some(x), Some(y)) = (a.metric, b.metric) {
            println!("{:>12} {:>8.4} {:>8.4}", a.measurements, x, y);
        }
    }
    let within = |h: &insitu::rl::TrainingHistory| {
        h.records
            .iter()
            .find(|r| r.metric.is_some_and(|m| (m - target).abs() < 0.05))
            .map_or("never".to_string(), |r| r.measurements.to_string())
    };
    println!("within 0.05 of the optimum: ppo {}, pg {}", within(&ppo), within(&pg));
    Ok(())
}

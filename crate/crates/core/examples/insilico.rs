//! The model-based baseline: adjoint-gradient descent on the noise-free
//! twin of the bench, for every task.

use insitu::experiment::{run_insilico, ExperimentConfig};

fn main() -> insitu::Result<()> {
    for task in ["focus", "diffuser-focus", "hologram", "aberration"] {
        let mut cfg = ExperimentConfig::for_task(task)?;
        cfg.insilico.steps = 500;
        let result = run_insilico(&cfg, 0)?;
        println!(
            "{task:>15}: metric {:.4}, loss {:.3e} -> {:.3e}",
            result.metric,
            result.best_loss.first().copied().unwrap_or(f64::NAN),
            result.best_loss.last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

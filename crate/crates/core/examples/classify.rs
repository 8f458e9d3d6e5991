//! Optical MNIST classification trained in situ.
//!
//! Each digit is written onto the SLM as an input phase pattern; the policy
//! learns the trainable phase on top. A class is read out as the brightest
//! of ten detector regions. The default budget is a short demonstration.
//!
//! `cargo run --release --example classify -- [budget]`

use insitu::experiment::{run_insilico, run_seed, ExperimentConfig, Method};

fn main() -> insitu::Result<()> {
    let budget = std::env::args().nth(1).and_then(|b| b.parse().ok()).unwrap_or(20_000);
    let mut cfg = ExperimentConfig::for_task("classify")?;
    cfg.trainer.measurement_budget = budget;
    cfg.trainer.eval_every = 25;
    cfg.output.dir = "out/classify".into();

    let reference = run_insilico(&cfg, 0)?.metric;
    println!("in-silico test accuracy {reference:.3}");
    let (summary, _) = run_seed(&cfg, Method::Ppo, 0, &cfg.output.dir.join("ppo"))?;
    println!("{summary}");
    Ok(())
}

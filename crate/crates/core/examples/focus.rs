//! Energy focusing on the simulated bench, through the experiment runner.
//!
//! Trains PPO to steer light into detector region 2 and compares the final
//! energy ratio with the model-based optimum on the noise-free twin.
//!
//! `cargo run --release --example focus -- [budget] [--diffuser]`

use insitu::experiment::{run_insilico, run_seed, ExperimentConfig, Method};

fn main() -> insitu::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let budget = args.iter().find_map(|a| a.parse().ok()).unwrap_or(5_000);
    let task = if args.iter().any(|a| a == "--diffuser") { "diffuser-focus" } else { "focus" };

    let mut cfg = ExperimentConfig::for_task(task)?;
    cfg.trainer.measurement_budget = budget;
    cfg.output.dir = format!("out/{task}").into();
    cfg.output.snapshot_every = 50;

    let reference = run_insilico(&cfg, 0)?.metric;
    println!("in-silico energy ratio {reference:.4}");
    for method in [Method::Ppo, Method::Pg] {
        let (summary, _) = run_seed(&cfg, method, 0, &cfg.output.dir.join(method.to_string()))?;
        println!("{summary} ({:.0}% of in silico)", 100.0 * summary.final_metric / reference);
    }
    Ok(())
}

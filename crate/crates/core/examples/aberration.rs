//! Aberration correction: start from the model-based solution for the ideal
//! bench, then fine-tune in situ on the aberrated one.
//!
//! `cargo run --release --example aberration -- [grating|boat|letter|digit] [budget]`

use insitu::blackbox::Instrument;
use insitu::experiment::{ideal_solution, run_seed, task_bench, ExperimentConfig, Method, TaskSpec};
use insitu::tasks::{evaluator, make_target, psnr, TargetKind};

fn main() -> insitu::Result<()> {
    let mut args = std::env::args().skip(1);
    let target: TargetKind = args.next().as_deref().unwrap_or("boat").parse()?;
    let budget = args.next().and_then(|b| b.parse().ok()).unwrap_or(10_000);

    let mut cfg = ExperimentConfig::for_task("aberration")?;
    cfg.task = TaskSpec::Aberration { target };
    cfg.trainer.measurement_budget = budget;
    cfg.output.dir = "out/aberration".into();

    let bench = task_bench(&cfg, 0);
    let reference = make_target(target, bench.shape())?;
    let start = ideal_solution(&cfg, 0)?.phase;
    let ideal = psnr(&evaluator(&bench.ideal())?.measure(None, &start)?, &reference)?;
    let degraded = psnr(&evaluator(&bench)?.measure(None, &start)?, &reference)?;
    println!("ideal bench {ideal:.2} dB, aberrated bench {degraded:.2} dB");

    let (summary, _) = run_seed(&cfg, Method::Ppo, 0, &cfg.output.dir.join("ppo"))?;
    let recovered = (summary.final_metric - degraded) / (ideal - degraded);
    println!("{summary}");
    println!("recovered {:.0}% of the gap", 100.0 * recovered);
    Ok(())
}

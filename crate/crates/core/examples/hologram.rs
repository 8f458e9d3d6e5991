//! Hologram formation: PPO shapes the camera image into a target pattern.
//!
//! `cargo run --release --example hologram -- [grating|boat|letter|digit] [budget]`

use insitu::blackbox::Instrument;
use insitu::experiment::{run_seed, task_bench, ExperimentConfig, Method, RunRecord, TaskSpec};
use insitu::optics::PhaseMap;
use insitu::tasks::{center_contrast, evaluator, make_target, psnr, TargetKind};

fn main() -> insitu::Result<()> {
    let mut args = std::env::args().skip(1);
    let target: TargetKind = args.next().as_deref().unwrap_or("grating").parse()?;
    let budget = args.next().and_then(|b| b.parse().ok()).unwrap_or(20_000);

    let mut cfg = ExperimentConfig::for_task("hologram")?;
    cfg.task = TaskSpec::Hologram { target };
    cfg.trainer.measurement_budget = budget;
    cfg.output.dir = "out/hologram".into();

    let bench = task_bench(&cfg, 0);
    let reference = make_target(target, bench.shape())?;
    let mut camera = evaluator(&bench)?;
    let flat = camera.measure(None, &PhaseMap::zeros(bench.shape()))?;
    println!("uniform phase: PSNR {:.2} dB", psnr(&flat, &reference)?);

    for method in [Method::Ppo, Method::Pg] {
        let (summary, record) = run_seed(&cfg, method, 0, &cfg.output.dir.join(method.to_string()))?;
        let RunRecord::Trained(history) = record else { unreachable!() };
        let image = camera.measure(None, &history.policy.mean_phase())?;
        println!(
            "{method}: PSNR {:.2} dB, centre-row contrast {:.3} after {} measurements",
            summary.final_metric,
            center_contrast(&image)?,
            summary.measurements
        );
    }
    Ok(())
}

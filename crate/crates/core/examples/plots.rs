//! SVG charts from metrics CSVs.
//!
//! Runs two short focus trainings and charts every logged metric against
//! measurements and modelled seconds.

use insitu::experiment::{emit_plots, run_seed, ExperimentConfig, Method};

fn main() -> insitu::Result<()> {
    let mut cfg = ExperimentConfig::for_task("focus")?;
    cfg.trainer.measurement_budget = 1_280;
    let root = std::path::PathBuf::from("out/plots");
    let mut csvs = Vec::new();
    for method in [Method::Ppo, Method::Pg] {
        let (summary, _) = run_seed(&cfg, method, 0, &root.join(method.to_string()).join("seed-0"))?;
        csvs.push(summary.dir.join("metrics.csv"));
    }
    for path in emit_plots(&csvs, &root.join("svg"))? {
        println!("{}", path.display());
    }
    Ok(())
}

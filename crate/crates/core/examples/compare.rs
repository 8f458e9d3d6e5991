//! Matched-budget PPO against PG comparison with a speedup table.
//!
//! `cargo run --release --example compare -- [task] [budget]`

use insitu::experiment::{compare, ExperimentConfig};
use insitu::rl::Algorithm;

fn main() -> insitu::Result<()> {
    let mut args = std::env::args().skip(1);
    let task = args.next().unwrap_or_else(|| "focus".into());
    let budget = args.next().and_then(|b| b.parse().ok()).unwrap_or(5_000);
    let mut cfg = ExperimentConfig::for_task(&task)?;
    cfg.trainer.measurement_budget = budget;
    cfg.output.dir = format!("out/compare-{task}").into();
    let report = compare(&cfg, &[Algorithm::Ppo, Algorithm::Pg], &[0, 1, 2])?;
    print!("{report}");
    println!("merged records in {}", cfg.output.dir.join("merged.csv").display());
    Ok(())
}

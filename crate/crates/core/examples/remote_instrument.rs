//! Driving the simulator over TCP exactly as a real bench would be driven.
//!
//! Starts a loopback server, trains against it, and checks that the remote
//! binding saw the same frames the in-process one would have.

use std::time::Duration;

use insitu::blackbox::{Instrument, LocalInstrument, RemoteInstrument, SimServer};
use insitu::optics::{BenchConfig, DetectorLayout};
use insitu::rl::{train_ppo, TrainerConfig};
use insitu::tasks::{evaluator, FocusEnv};

fn main() -> insitu::Result<()> {
    let bench = BenchConfig::default();
    let server = SimServer::bind(bench.clone(), "127.0.0.1:0")?;
    let served = server.counter();
    let (addr, _thread) = server.spawn()?;
    println!("simulator listening on {addr}");

    let mut remote = RemoteInstrument::connect(addr, Duration::from_secs(5))?;
    let d = remote.descriptor();
    println!("descriptor: slm {} with {} levels, sensor {}, protocol v{}", d.shape, d.levels, d.sensor, d.version);

    let phase = insitu::optics::PhaseMap::zeros(d.shape);
    let a = remote.measure(None, &phase)?;
    let b = LocalInstrument::new(bench.clone())?.measure(None, &phase)?;
    println!("first frame identical to the local binding: {}", a.data() == b.data());

    let layout = DetectorLayout::grid_2x5(d.sensor, 6, 8)?;
    let mut env = FocusEnv::new(Box::new(remote), evaluator(&bench)?, layout, 2)?;
    let config = TrainerConfig {
        measurement_budget: 640,
        ..TrainerConfig::default()
    };
    let history = train_ppo(&mut env, &config)?;
    println!(
        "energy ratio {:.4} after {} measurements; server counted {}",
        history.final_metric().unwrap_or(f64::NAN),
        history.measurements(),
        served.load(std::sync::atomic::Ordering::SeqCst)
    );
    Ok(())
}

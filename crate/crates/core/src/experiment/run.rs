//! Running one configured experiment per seed and writing its artifacts.
//!
//! Each seed gets its own directory holding `metrics.csv`, `config.toml`
//! (the resolved single-seed configuration), `summary.txt`, the final policy
//! checkpoint and a `snapshots/` folder of phase and intensity images.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::blackbox::{Instrument, LocalInstrument, RemoteInstrument, DEFAULT_TIMEOUT};
use crate::error::{Error, Result};
use crate::optics::io::{write_pgm, write_raw, DataKind};
use crate::optics::{BenchConfig, IntensityImage, PhaseMap};
use crate::rl::{train, train_insilico, Environment, InSilicoObjective, InSilicoResult, TrainingHistory};
use crate::tasks::mnist::{bundled_test, bundled_train};
use crate::tasks::{
    evaluator, load_mnist, make_target, ClassifyEnv, ClassifyObjective, EncodedSet, FocusEnv, FocusObjective,
    HologramEnv, HologramObjective, InputEncoder, LabeledDigit,
};

use super::config::{default_aberration, ExperimentConfig, Method, TaskSpec};

/// Outcome line of one seed.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub method: Method,
    pub seed: u64,
    pub final_metric: f64,
    pub measurements: u64,
    pub wall_seconds: f64,
    pub dir: PathBuf,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} seed {}: final metric {:.4} after {} measurements in {:.1} s",
            self.method, self.seed, self.final_metric, self.measurements, self.wall_seconds
        )
    }
}

/// A finished run with its full record.
#[derive(Clone, Debug)]
pub enum RunRecord {
    Trained(TrainingHistory),
    InSilico(InSilicoResult),
}

/// Run every seed of `config` into `config.output.dir/seed-<s>`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunSummary>> {
    config.validate()?;
    config
        .seeds
        .iter()
        .map(|&seed| {
            let dir = config.output.dir.join(format!("seed-{seed}"));
            run_seed(config, config.algorithm, seed, &dir).map(|(s, _)| s)
        })
        .collect()
}

/// Run one `(method, seed)` pair into `dir`.
pub fn run_seed(config: &ExperimentConfig, method: Method, seed: u64, dir: &Path) -> Result<(RunSummary, RunRecord)> {
    config.validate()?;
    let start = Instant::now();
    let snaps = dir.join("snapshots");
    fs::create_dir_all(&snaps).map_err(|e| Error::config(format!("cannot create {}: {e}", snaps.display())))?;
    let resolved = ExperimentConfig {
        algorithm: method,
        seeds: vec![seed],
        ..config.clone()
    };
    fs::write(dir.join("config.toml"), resolved.to_toml()?)?;

    let bench = task_bench(config, seed);
    let mut snapshot = Snapshotter::new(&bench, snapshot_input(config)?, snaps, config.output.snapshot_every)?;
    let (record, final_metric, measurements) = match method.algorithm() {
        Some(algorithm) => {
            let mut env = build_env(config, &bench, seed)?;
            let mut trainer = config.trainer.clone();
            trainer.seed = seed;
            let history = train(env.as_mut(), &trainer, algorithm, &mut |rec, policy| {
                if snapshot.due(rec.round) {
                    snapshot.write(&format!("round-{:05}", rec.round), &policy.mean_phase())?;
                }
                Ok(())
            })?;
            snapshot.write("final", &history.policy.mean_phase())?;
            history.policy.save(&dir.join("policy.opb"), history.measurements())?;
            write_file(&dir.join("metrics.csv"), |w| history.write_csv(w))?;
            let m = history.final_metric().unwrap_or(f64::NAN);
            let n = history.measurements();
            (RunRecord::Trained(history), m, n)
        }
        None => {
            let result = run_insilico(config, seed)?;
            snapshot.write("final", &result.phase)?;
            write_file(&dir.join("metrics.csv"), |w| write_insilico_csv(&result, w))?;
            let m = result.metric;
            (RunRecord::InSilico(result), m, 0)
        }
    };
    let summary = RunSummary {
        method,
        seed,
        final_metric,
        measurements,
        wall_seconds: start.elapsed().as_secs_f64(),
        dir: dir.to_path_buf(),
    };
    fs::write(dir.join("summary.txt"), format!("{summary}\n"))?;
    Ok((summary, record))
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

pub const INSILICO_CSV_HEADER: &str = "step,best_loss,metric";

fn write_insilico_csv<W: Write>(result: &InSilicoResult, mut w: W) -> Result<()> {
    writeln!(w, "{INSILICO_CSV_HEADER}")?;
    let mut evals = result.evaluations.iter().peekable();
    if let Some((0, m)) = evals.peek().copied() {
        writeln!(w, "0,,{m:.9e}")?;
        evals.next();
    }
    for (i, loss) in result.best_loss.iter().enumerate() {
        let step = i + 1;
        let metric = match evals.peek() {
            Some(&&(s, m)) if s == step => {
                evals.next();
                format!("{m:.9e}")
            }
            _ => String::new(),
        };
        writeln!(w, "{step},{loss:.9e},{metric}")?;
    }
    Ok(())
}

/// The bench the task trains on: the configured one, plus the default hidden
/// aberration for the aberration task if none is configured. The noise seed
/// is offset by the run seed.
pub fn task_bench(config: &ExperimentConfig, seed: u64) -> BenchConfig {
    let mut bench = config.bench.clone();
    if matches!(config.task, TaskSpec::Aberration { .. }) && bench.aberration.is_none() {
        bench.aberration = Some(default_aberration());
    }
    bench.seed = bench.seed.wrapping_add(seed);
    bench
}

fn instrument(config: &ExperimentConfig, bench: &BenchConfig) -> Result<Box<dyn Instrument>> {
    if config.instrument == "local" {
        Ok(Box::new(LocalInstrument::new(bench.clone())?))
    } else {
        Ok(Box::new(RemoteInstrument::connect(&config.instrument, DEFAULT_TIMEOUT)?))
    }
}

fn digits(config: &ExperimentConfig) -> Result<(Vec<LabeledDigit>, Vec<LabeledDigit>)> {
    let TaskSpec::Classify {
        train_size,
        test_size,
        mnist_dir,
        ..
    } = &config.task
    else {
        return Err(Error::config("not a classification task"));
    };
    let (mut train, mut test) = match mnist_dir {
        Some(d) => (
            load_mnist(&d.join("train-images-idx3-ubyte"), &d.join("train-labels-idx1-ubyte"))?,
            load_mnist(&d.join("t10k-images-idx3-ubyte"), &d.join("t10k-labels-idx1-ubyte"))?,
        ),
        None => (bundled_train(), bundled_test()),
    };
    if *train_size > train.len() || *test_size > test.len() {
        return Err(Error::config(format!(
            "requested {train_size} training and {test_size} test digits; only {} and {} available",
            train.len(),
            test.len()
        )));
    }
    train.truncate(*train_size);
    test.truncate(*test_size);
    Ok((train, test))
}

fn encoded_sets(config: &ExperimentConfig) -> Result<(EncodedSet, EncodedSet)> {
    let TaskSpec::Classify { window, .. } = &config.task else {
        return Err(Error::config("not a classification task"));
    };
    let encoder = InputEncoder::new(config.bench.shape(), *window)?;
    let (train, test) = digits(config)?;
    Ok((EncodedSet::new(&train, &encoder), EncodedSet::new(&test, &encoder)))
}

/// Input shown during snapshots: the first test digit for classification.
fn snapshot_input(config: &ExperimentConfig) -> Result<Option<PhaseMap>> {
    match &config.task {
        TaskSpec::Classify { window, .. } => {
            let encoder = InputEncoder::new(config.bench.shape(), *window)?;
            Ok(bundled_test().first().map(|d| encoder.encode(d)))
        }
        _ => Ok(None),
    }
}

/// In-silico solution for the ideal (unaberrated) bench, the starting point
/// of aberration correction.
pub fn ideal_solution(config: &ExperimentConfig, seed: u64) -> Result<InSilicoResult> {
    let TaskSpec::Aberration { target } = &config.task else {
        return Err(Error::config("not an aberration task"));
    };
    let bench = task_bench(config, seed).ideal();
    let mut objective = HologramObjective::new(&bench, make_target(*target, bench.shape())?)?;
    train_insilico(&mut objective, &insilico_config(config, seed))
}

fn insilico_config(config: &ExperimentConfig, seed: u64) -> crate::rl::InSilicoConfig {
    crate::rl::InSilicoConfig {
        seed,
        ..config.insilico.clone()
    }
}

/// Training environment for the configured task.
pub fn build_env(config: &ExperimentConfig, bench: &BenchConfig, seed: u64) -> Result<Box<dyn Environment>> {
    let inst = instrument(config, bench)?;
    let eval = evaluator(bench)?;
    Ok(match &config.task {
        TaskSpec::Focus { target_region, layout } => {
            Box::new(FocusEnv::new(inst, eval, layout.build(bench)?, *target_region)?)
        }
        TaskSpec::Hologram { target } => Box::new(HologramEnv::new(inst, eval, make_target(*target, bench.shape())?)?),
        TaskSpec::Aberration { target } => {
            let start = ideal_solution(config, seed)?.phase;
            Box::new(HologramEnv::new(inst, eval, make_target(*target, bench.shape())?)?.with_initial(start)?)
        }
        TaskSpec::Classify { batch_size, layout, .. } => {
            let (train, test) = encoded_sets(config)?;
            Box::new(ClassifyEnv::new(inst, eval, train, test, layout.build(bench)?, *batch_size)?)
        }
    })
}

/// Model-based baseline on the noise-free twin of the task bench.
pub fn build_objective(config: &ExperimentConfig, seed: u64) -> Result<Box<dyn InSilicoObjective>> {
    let bench = task_bench(config, seed);
    Ok(match &config.task {
        TaskSpec::Focus { target_region, layout } => {
            Box::new(FocusObjective::new(&bench, layout.build(&bench)?, *target_region)?)
        }
        TaskSpec::Hologram { target } => Box::new(HologramObjective::new(&bench, make_target(*target, bench.shape())?)?),
        TaskSpec::Aberration { target } => {
            let start = ideal_solution(config, seed)?.phase;
            Box::new(HologramObjective::new(&bench, make_target(*target, bench.shape())?)?.with_initial(start))
        }
        TaskSpec::Classify { batch_size, layout, .. } => {
            let (train, test) = encoded_sets(config)?;
            Box::new(ClassifyObjective::new(&bench, train, test, layout.build(&bench)?, *batch_size)?)
        }
    })
}

pub fn run_insilico(config: &ExperimentConfig, seed: u64) -> Result<InSilicoResult> {
    let mut objective = build_objective(config, seed)?;
    train_insilico(objective.as_mut(), &insilico_config(config, seed))
}

struct Snapshotter {
    evaluator: LocalInstrument,
    input: Option<PhaseMap>,
    dir: PathBuf,
    every: usize,
}

impl Snapshotter {
    fn new(bench: &BenchConfig, input: Option<PhaseMap>, dir: PathBuf, every: usize) -> Result<Self> {
        Ok(Snapshotter {
            evaluator: evaluator(bench)?,
            input,
            dir,
            every,
        })
    }

    fn due(&self, round: usize) -> bool {
        self.every > 0 && round % self.every == 0
    }

    /// Wrapped phase and noise-free intensity, each as PGM and raw grid.
    fn write(&mut self, tag: &str, phase: &PhaseMap) -> Result<()> {
        let image: IntensityImage = self.evaluator.measure(self.input.as_ref(), phase)?;
        let wrapped = phase.wrapped();
        let shape = phase.shape();
        let out = |suffix: &str| self.dir.join(format!("{tag}-{suffix}"));
        write_file(&out("phase.pgm"), |w| write_pgm(w, shape, wrapped.data()))?;
        write_file(&out("phase.opb"), |w| write_raw(w, shape, DataKind::Phase, wrapped.data()))?;
        write_file(&out("intensity.pgm"), |w| write_pgm(w, image.shape(), image.data()))?;
        write_file(&out("intensity.opb"), |w| write_raw(w, image.shape(), DataKind::Intensity, image.data()))
    }
}

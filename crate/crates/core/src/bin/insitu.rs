use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use insitu::blackbox::{SimServer, ADDR_ENV_VAR};
use insitu::experiment::{compare, emit_plots, run_experiment, ExperimentConfig, Method, TaskSpec};
use insitu::rl::Algorithm;
use insitu::tasks::TargetKind;
use insitu::{Error, Result};

/// In-situ training of a simulated (or remote) diffractive optical bench.
#[derive(Parser)]
#[command(name = "insitu", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steer light into one detector region.
    Focus(TaskArgs),
    /// Focusing through the default random diffuser.
    DiffuserFocus(TaskArgs),
    /// Reproduce a target intensity pattern.
    Hologram(TaskArgs),
    /// Correct a hidden aberration, starting from the ideal-bench solution.
    Aberration(TaskArgs),
    /// Train the optical MNIST classifier.
    Classify(TaskArgs),
    /// Model-based baseline on the noise-free twin.
    Insilico(NamedTaskArgs),
    /// Run several algorithms over several seeds at a matched budget.
    Compare(CompareArgs),
    /// Serve the simulator over TCP.
    ServeSim(ServeArgs),
    /// Render SVG charts from metrics CSVs.
    Plot(PlotArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ppo, pg or insilico.
    #[arg(long)]
    algo: Option<Method>,
    /// Run seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    /// Measurement budget per run.
    #[arg(long)]
    budget: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// "local" or host:port of a serve-sim instance.
    #[arg(long, env = ADDR_ENV_VAR)]
    instrument: Option<String>,
    /// Rounds between snapshots.
    #[arg(long)]
    snapshot_every: Option<usize>,
}

#[derive(Args, Clone)]
struct TaskArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Target region (focus tasks).
    #[arg(long)]
    region: Option<usize>,
    /// grating, boat, letter or digit (hologram and aberration).
    #[arg(long)]
    target: Option<TargetKind>,
}

#[derive(Args, Clone)]
struct NamedTaskArgs {
    /// focus, diffuser-focus, hologram, aberration or classify.
    #[arg(long, default_value = "focus")]
    task: String,
    #[command(flatten)]
    inner: TaskArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    task: NamedTaskArgs,
    /// Algorithms to compare, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "ppo,pg")]
    algos: Vec<Method>,
}

#[derive(Args)]
struct ServeArgs {
    /// Bench preset: the bench a task of this name would train on.
    #[arg(long, default_value = "focus")]
    task: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:5555")]
    addr: String,
}

#[derive(Args)]
struct PlotArgs {
    /// metrics.csv files.
    #[arg(required = true)]
    csv: Vec<PathBuf>,
    #[arg(long, default_value = "plots")]
    out: PathBuf,
}

fn resolve(name: &str, args: &TaskArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.common.config {
        Some(path) => {
            let mut cfg = ExperimentConfig::load(path)?;
            let preset = ExperimentConfig::for_task(name)?;
            if cfg.task.name() != preset.task.name() {
                return Err(Error::Config(format!(
                    "{} describes a {} task, not {name}",
                    path.display(),
                    cfg.task.name()
                )));
            }
            if name == "diffuser-focus" && cfg.bench.diffuser.is_none() {
                cfg.bench.diffuser = preset.bench.diffuser;
            }
            cfg
        }
        None => ExperimentConfig::for_task(name)?,
    };
    let c = &args.common;
    if let Some(a) = c.algo {
        cfg.algorithm = a;
    }
    if !c.seed.is_empty() {
        cfg.seeds = c.seed.clone();
    }
    if let Some(b) = c.budget {
        cfg.trainer.measurement_budget = b;
    }
    if let Some(o) = &c.out {
        cfg.output.dir = o.clone();
    }
    if let Some(i) = &c.instrument {
        cfg.instrument = i.clone();
    }
    if let Some(s) = c.snapshot_every {
        cfg.output.snapshot_every = s;
    }
    match (&mut cfg.task, args.region, args.target) {
        (TaskSpec::Focus { target_region, .. }, Some(r), _) => *target_region = r,
        (TaskSpec::Hologram { target } | TaskSpec::Aberration { target }, _, Some(t)) => *target = t,
        (_, None, None) => {}
        _ => return Err(Error::Config(format!("--region/--target do not apply to {name}"))),
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_task(cfg: &ExperimentConfig) -> Result<()> {
    let summaries = run_experiment(cfg)?;
    for s in &summaries {
        println!("{s}");
    }
    let csvs: Vec<PathBuf> = summaries.iter().map(|s| s.dir.join("metrics.csv")).collect();
    emit_plots(&csvs, &cfg.output.dir.join("plots"))?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Focus(a) => run_task(&resolve("focus", &a)?),
        Command::DiffuserFocus(a) => run_task(&resolve("diffuser-focus", &a)?),
        Command::Hologram(a) => run_task(&resolve("hologram", &a)?),
        Command::Aberration(a) => run_task(&resolve("aberration", &a)?),
        Command::Classify(a) => run_task(&resolve("classify", &a)?),
        Command::Insilico(a) => {
            let mut cfg = resolve(&a.task, &a.inner)?;
            cfg.algorithm = Method::Insilico;
            run_task(&cfg)
        }
        Command::Compare(a) => {
            let cfg = resolve(&a.task.task, &a.task.inner)?;
            let algos = a
                .algos
                .iter()
                .map(|m| {
                    m.algorithm()
                        .ok_or_else(|| Error::Config("compare takes trainer algorithms (ppo, pg)".into()))
                })
                .collect::<Result<Vec<Algorithm>>>()?;
            let report = compare(&cfg, &algos, &cfg.seeds)?;
            print!("{report}");
            Ok(())
        }
        Command::ServeSim(a) => {
            let cfg = resolve(
                &a.task,
                &TaskArgs {
                    common: CommonArgs {
                        config: a.config,
                        algo: None,
                        seed: Vec::new(),
                        budget: None,
                        out: None,
                        instrument: None,
                        snapshot_every: None,
                    },
                    region: None,
                    target: None,
                },
            )?;
            let bench = insitu::experiment::task_bench(&cfg, 0);
            let server = SimServer::bind(bench, &a.addr)?;
            println!("listening on {}", server.local_addr()?);
            server.run()
        }
        Command::Plot(a) => {
            for p in emit_plots(&a.csv, &a.out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

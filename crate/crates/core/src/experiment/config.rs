//! TOML experiment configuration.
//!
//! ```toml
//! algorithm = "ppo"          # ppo | pg | insilico
//! seeds = [0, 1, 2]
//! instrument = "local"       # or host:port of a serve-sim instance
//!
//! [bench]                    # optics::BenchConfig, all keys optional
//! distance_mm = 100.0
//!
//! [trainer]                  # rl::TrainerConfig, all keys optional
//! measurement_budget = 20000
//!
//! [insilico]                 # rl::InSilicoConfig, all keys optional
//! steps = 300
//!
//! [task]
//! kind = "focus"             # focus | hologram | aberration | classify
//! target_region = 0
//!
//! [output]
//! dir = "runs/focus"
//! snapshot_every = 50        # rounds; 0 keeps only the final snapshot
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{AberrationConfig, BenchConfig, DetectorLayout, DiffuserConfig};
use crate::rl::{Algorithm, InSilicoConfig, TrainerConfig};
use crate::tasks::{TargetKind, DEFAULT_GRATING_PERIOD};

const ABERRATION_LR: f64 = 0.01;
const ABERRATION_SIGMA: f64 = 0.3;
const CLASSIFY_LR: f64 = 0.02;

/// How the SLM phase is optimised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ppo,
    Pg,
    /// Adjoint-gradient descent on the noise-free twin (the model-based baseline).
    Insilico,
}

impl Method {
    /// The trainer algorithm, or `None` for the model-based baseline.
    pub fn algorithm(self) -> Option<Algorithm> {
        match self {
            Method::Ppo => Some(Algorithm::Ppo),
            Method::Pg => Some(Algorithm::Pg),
            Method::Insilico => None,
        }
    }
}

impl From<Algorithm> for Method {
    fn from(a: Algorithm) -> Self {
        match a {
            Algorithm::Ppo => Method::Ppo,
            Algorithm::Pg => Method::Pg,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ppo => "ppo",
            Method::Pg => "pg",
            Method::Insilico => "insilico",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ppo" => Ok(Method::Ppo),
            "pg" => Ok(Method::Pg),
            "insilico" => Ok(Method::Insilico),
            other => Err(Error::config(format!("unknown algorithm {other:?} (expected ppo, pg or insilico)"))),
        }
    }
}

/// 2×5 grid of square detector regions centred on the sensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub region_size: usize,
    pub region_gap: usize,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            region_size: 6,
            region_gap: 8,
        }
    }
}

impl LayoutConfig {
    pub fn build(&self, bench: &BenchConfig) -> Result<DetectorLayout> {
        DetectorLayout::grid_2x5(bench.shape(), self.region_size, self.region_gap)
    }
}

fn default_target() -> TargetKind {
    TargetKind::Grating {
        period: DEFAULT_GRATING_PERIOD,
    }
}

fn default_batch() -> usize {
    8
}

// The full default SLM. Smaller windows leave most pixels without input
// light and cap the reachable accuracy well below the full-aperture value.
fn default_window() -> usize {
    64
}

fn default_train_size() -> usize {
    1024
}

fn default_test_size() -> usize {
    256
}

fn default_region() -> usize {
    2
}

/// What the optimiser is asked to do.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", deny_unknown_fields)]
pub enum TaskSpec {
    Focus {
        #[serde(default = "default_region")]
        target_region: usize,
        #[serde(default)]
        layout: LayoutConfig,
    },
    Hologram {
        #[serde(default = "default_target")]
        target: TargetKind,
    },
    /// Hologram on the aberrated bench, starting from the in-silico solution
    /// for the ideal bench.
    Aberration {
        #[serde(default = "default_target")]
        target: TargetKind,
    },
    Classify {
        /// Digits per sampled phase map.
        #[serde(default = "default_batch")]
        batch_size: usize,
        /// Side of the square input window the digits are resized into.
        #[serde(default = "default_window")]
        window: usize,
        #[serde(default = "default_train_size")]
        train_size: usize,
        #[serde(default = "default_test_size")]
        test_size: usize,
        /// Directory holding the four official MNIST IDX files; the bundled
        /// subset is used when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mnist_dir: Option<PathBuf>,
        #[serde(default)]
        layout: LayoutConfig,
    },
}

impl Default for TaskSpec {
    fn default() -> Self {
        TaskSpec::Focus {
            target_region: default_region(),
            layout: LayoutConfig::default(),
        }
    }
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Focus { .. } => "focus",
            TaskSpec::Hologram { .. } => "hologram",
            TaskSpec::Aberration { .. } => "aberration",
            TaskSpec::Classify { .. } => "classify",
        }
    }

    /// Default specification for a task name.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "focus" | "diffuser-focus" => Ok(TaskSpec::default()),
            "hologram" => Ok(TaskSpec::Hologram { target: default_target() }),
            "aberration" => Ok(TaskSpec::Aberration { target: default_target() }),
            "classify" => Ok(TaskSpec::Classify {
                batch_size: default_batch(),
                window: default_window(),
                train_size: default_train_size(),
                test_size: default_test_size(),
                mnist_dir: None,
                layout: LayoutConfig::default(),
            }),
            other => Err(Error::config(format!(
                "unknown task {other:?} (expected focus, diffuser-focus, hologram, aberration or classify)"
            ))),
        }
    }
}

/// Hidden aberration used by the aberration task when `[bench.aberration]`
/// is not given.
pub fn default_aberration() -> AberrationConfig {
    AberrationConfig {
        defocus: 0.5,
        astigmatism: 0.3,
        coma: 0.2,
        shift_rows: 0,
        shift_cols: 2,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Rounds (steps, for `insilico`) between snapshots; 0 keeps only the
    /// final one.
    pub snapshot_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("runs"),
            snapshot_every: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Method,
    pub seeds: Vec<u64>,
    /// `"local"` for the in-process simulator, otherwise a `host:port`.
    pub instrument: String,
    pub bench: BenchConfig,
    pub trainer: TrainerConfig,
    pub insilico: InSilicoConfig,
    pub task: TaskSpec,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algorithm: Method::Ppo,
            seeds: vec![0],
            instrument: "local".into(),
            bench: BenchConfig::default(),
            trainer: TrainerConfig::default(),
            insilico: InSilicoConfig::default(),
            task: TaskSpec::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    /// Defaults for one of the named CLI tasks; `diffuser-focus` is focusing
    /// with the default diffuser switched on.
    pub fn for_task(name: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig {
            task: TaskSpec::named(name)?,
            ..ExperimentConfig::default()
        };
        // Tuned on the default bench. The KL stop is off: with 4096 pixels the
        // clip alone keeps the K epochs stable, and the stop only cut them short.
        let t = &mut cfg.trainer;
        t.kl_stop = f64::INFINITY;
        match name {
            "focus" => t.adam.lr_mu = 0.02,
            "diffuser-focus" => {
                t.adam.lr_mu = 0.02;
                cfg.bench.diffuser = Some(DiffuserConfig::default());
            }
            "hologram" => {
                t.adam.lr_mu = 0.01;
                t.initial_sigma = 0.3;
            }
            "aberration" => {
                t.adam.lr_mu = ABERRATION_LR;
                t.initial_sigma = ABERRATION_SIGMA;
                t.measurement_budget = 10_000;
                cfg.bench.aberration = Some(default_aberration());
            }
            "classify" => {
                t.adam.lr_mu = CLASSIFY_LR;
                t.measurement_budget = 200_000;
            }
            _ => {}
        }
        cfg.output.dir = PathBuf::from("runs").join(name);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.bench.validate()?;
        self.trainer.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::config("seeds must not be empty"));
        }
        if self.insilico.eval_every == 0 || !(self.insilico.lr > 0.0) {
            return Err(Error::config("insilico lr and eval_every must be positive"));
        }
        match &self.task {
            TaskSpec::Focus { target_region, layout } => {
                if *target_region >= 10 {
                    return Err(Error::config(format!("target_region {target_region} must be in 0..=9")));
                }
                layout.build(&self.bench)?;
            }
            TaskSpec::Classify {
                batch_size,
                window,
                train_size,
                test_size,
                layout,
                ..
            } => {
                if *batch_size == 0 || batch_size > train_size {
                    return Err(Error::config("classify batch_size must be in 1..=train_size"));
                }
                if *window == 0 || *window > self.bench.rows.min(self.bench.cols) {
                    return Err(Error::config("classify window must fit on the SLM"));
                }
                if *test_size == 0 {
                    return Err(Error::config("classify test_size must be positive"));
                }
                layout.build(&self.bench)?;
            }
            TaskSpec::Hologram { target } | TaskSpec::Aberration { target } => {
                if let TargetKind::Grating { period } = target {
                    if *period < 2 {
                        return Err(Error::config("grating period must be at least 2"));
                    }
                }
            }
        }
        Ok(())
    }
}

//! Matched-budget comparison of training algorithms.

use std::fmt;
use std::fs;
use std::io::Write;

use crate::error::{Error, Result};
use crate::rl::{Algorithm, TrainingHistory};

use super::config::{ExperimentConfig, Method};
use super::run::{run_insilico, run_seed, RunRecord};

/// Threshold as a fraction of the in-silico reference metric.
pub const THRESHOLD_FRACTION: f64 = 0.85;

pub const MERGED_CSV_HEADER: &str = "algorithm,seed,round,measurements,seconds,mean_reward,metric,sigma,kl";

#[derive(Clone, Debug)]
pub struct ComparedRun {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub history: TrainingHistory,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    /// Per seed, in run order; `None` when the threshold was never reached.
    pub to_threshold: Vec<Option<u64>>,
    pub median_to_threshold: Option<f64>,
    pub median_final: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    /// In-silico metric the threshold is derived from.
    pub reference: f64,
    pub threshold: f64,
    pub rows: Vec<AlgorithmSummary>,
}

/// Median of measurements-to-threshold, counting unreached seeds as
/// infinitely slow; `None` when the median itself is unreached.
pub fn median_to_threshold(values: &[Option<u64>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values.iter().map(|x| x.map_or(f64::INFINITY, |n| n as f64)).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    m.is_finite().then_some(m)
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl ComparisonReport {
    /// Summarise finished runs against `THRESHOLD_FRACTION · reference`.
    /// Rows follow `algorithms`, duplicates included.
    pub fn from_runs(algorithms: &[Algorithm], runs: &[ComparedRun], reference: f64) -> Self {
        let threshold = THRESHOLD_FRACTION * reference;
        let rows = algorithms
            .iter()
            .map(|&algorithm| {
                let mine: Vec<_> = runs.iter().filter(|r| r.algorithm == algorithm).collect();
                let to_threshold: Vec<_> = mine.iter().map(|r| r.history.measurements_to(threshold)).collect();
                let mut finals: Vec<f64> = mine.iter().filter_map(|r| r.history.final_metric()).collect();
                AlgorithmSummary {
                    algorithm,
                    median_to_threshold: median_to_threshold(&to_threshold),
                    to_threshold,
                    median_final: median(&mut finals),
                }
            })
            .collect();
        ComparisonReport {
            reference,
            threshold,
            rows,
        }
    }

    pub fn row(&self, algorithm: Algorithm) -> Option<&AlgorithmSummary> {
        self.rows.iter().find(|r| r.algorithm == algorithm)
    }

    /// How many times fewer measurements `fast` needed than `slow`; `None`
    /// when either median was not reached.
    pub fn speedup(&self, fast: Algorithm, slow: Algorithm) -> Option<f64> {
        let f = self.row(fast)?.median_to_threshold?;
        let s = self.row(slow)?.median_to_threshold?;
        Some(s / f.max(1.0))
    }
}

fn reached(v: Option<f64>) -> String {
    v.map_or("not reached".to_string(), |m| format!("{m:.0}"))
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "reference (in silico) {:.6}", self.reference)?;
        writeln!(f, "threshold ({:.0}%) {:.6}", THRESHOLD_FRACTION * 100.0, self.threshold)?;
        writeln!(f, "algorithm,seeds,median_measurements_to_threshold,median_final_metric")?;
        for r in &self.rows {
            writeln!(
                f,
                "{},{},{},{:.6}",
                Method::from(r.algorithm),
                r.to_threshold.len(),
                reached(r.median_to_threshold),
                r.median_final
            )?;
        }
        if let Some(first) = self.rows.first() {
            for other in &self.rows[1..] {
                let s = self
                    .speedup(first.algorithm, other.algorithm)
                    .map_or("not reached".to_string(), |x| format!("{x:.2}x"));
                writeln!(
                    f,
                    "speedup {} over {}: {s}",
                    Method::from(first.algorithm),
                    Method::from(other.algorithm)
                )?;
            }
        }
        Ok(())
    }
}

/// Write every run's records into one CSV.
pub fn write_merged_csv<W: Write>(runs: &[ComparedRun], mut w: W) -> Result<()> {
    writeln!(w, "{MERGED_CSV_HEADER}")?;
    for run in runs {
        let mut buf = Vec::new();
        run.history.write_csv(&mut buf)?;
        let text = String::from_utf8(buf).expect("csv is ascii");
        for line in text.lines().skip(1) {
            writeln!(w, "{},{},{line}", Method::from(run.algorithm), run.seed)?;
        }
    }
    Ok(())
}

/// Train every `(algorithm, seed)` pair on the configured task at the same
/// measurement budget, then report measurements-to-threshold against the
/// in-silico baseline on the same bench.
///
/// Writes per-run directories under `output.dir/<algorithm>/seed-<s>`, plus
/// `merged.csv` and `comparison.txt` in `output.dir`.
pub fn compare(config: &ExperimentConfig, algorithms: &[Algorithm], seeds: &[u64]) -> Result<ComparisonReport> {
    if algorithms.len() < 2 {
        return Err(Error::config("compare needs at least two algorithms"));
    }
    if seeds.is_empty() {
        return Err(Error::config("compare needs at least one seed"));
    }
    config.validate()?;
    let reference = run_insilico(config, seeds[0])?.metric;
    let mut runs = Vec::new();
    for &algorithm in algorithms {
        if runs.iter().any(|r: &ComparedRun| r.algorithm == algorithm) {
            continue;
        }
        for &seed in seeds {
            let dir = config.output.dir.join(Method::from(algorithm).to_string()).join(format!("seed-{seed}"));
            let (_, record) = run_seed(config, algorithm.into(), seed, &dir)?;
            let RunRecord::Trained(history) = record else {
                unreachable!("trainer methods return histories")
            };
            runs.push(ComparedRun {
                algorithm,
                seed,
                history,
            });
        }
    }
    let report = ComparisonReport::from_runs(algorithms, &runs, reference);
    write_merged_csv(&runs, std::io::BufWriter::new(fs::File::create(config.output.dir.join("merged.csv"))?))?;
    fs::write(config.output.dir.join("comparison.txt"), report.to_string())?;
    Ok(report)
}

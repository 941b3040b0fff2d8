//! Parameter sweeps over seeds and schedulers, with CSV output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, SweepAxis};
use crate::error::{Error, Result};
use crate::schedulers::SCHEDULER_NAMES;
use crate::simulator::{run_episode, EpisodeResult};

/// One episode of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub axis_value: Option<f64>,
    pub scheduler: String,
    pub run: usize,
    pub seed: u64,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub axis_value: Option<f64>,
    pub result: EpisodeResult,
    pub runtime: Duration,
}

/// An episode the exact-solver guard refused to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Skipped {
    pub axis_value: Option<f64>,
    pub scheduler: String,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawRow {
    pub axis_value: Option<f64>,
    pub scheduler: String,
    pub seed: u64,
    pub objective: f64,
    /// Empty unless runtimes are recorded.
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub axis_value: Option<f64>,
    pub scheduler: String,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub stddev: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub axis: Option<String>,
    pub episodes: Vec<EpisodeRecord>,
    pub skipped: Vec<Skipped>,
    pub raw: Vec<RawRow>,
    pub summary: Vec<SummaryRow>,
}

/// Episode seed for run `run`; shared by every scheduler and axis value so
/// comparisons are paired.
pub fn episode_seed(master: u64, run: usize) -> u64 {
    master.wrapping_add(run as u64)
}

/// Every episode of the sweep, in output order: axis value, then
/// scheduler, then run.
pub fn plan(config: &ExperimentConfig) -> Result<Vec<Job>> {
    config.validate()?;
    let sweep = &config.experiment;
    if sweep.runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    if sweep.schedulers.is_empty() {
        return Err(Error::Config("no schedulers selected".into()));
    }
    for s in &sweep.schedulers {
        if !SCHEDULER_NAMES.contains(&s.as_str()) {
            return Err(Error::Config(format!(
                "unknown scheduler {s:?}; expected one of {}",
                SCHEDULER_NAMES.join(", ")
            )));
        }
    }
    let points: Vec<(Option<f64>, ExperimentConfig)> = match &sweep.axis {
        None => vec![(None, config.clone())],
        Some(name) => {
            let axis = SweepAxis::parse(name)?;
            if sweep.values.is_empty() {
                return Err(Error::Config(format!("axis {name} has no values")));
            }
            sweep
                .values
                .iter()
                .map(|&v| Ok((Some(v), config.with_axis_value(axis, v)?)))
                .collect::<Result<_>>()?
        }
    };
    let mut jobs = Vec::new();
    for (value, cfg) in points {
        for s in &sweep.schedulers {
            for run in 0..sweep.runs {
                jobs.push(Job {
                    axis_value: value,
                    scheduler: s.clone(),
                    run,
                    seed: episode_seed(sweep.seed, run),
                    config: cfg.clone(),
                });
            }
        }
    }
    Ok(jobs)
}

fn run_job(job: &Job) -> Result<std::result::Result<EpisodeRecord, Skipped>> {
    let start = Instant::now();
    match run_episode(&job.config, &job.scheduler, job.seed) {
        Ok(result) => Ok(Ok(EpisodeRecord {
            axis_value: job.axis_value,
            result,
            runtime: start.elapsed(),
        })),
        Err(e @ Error::ModelTooLarge { .. }) => {
            warn!("skipping {} seed {}: {e}", job.scheduler, job.seed);
            Ok(Err(Skipped {
                axis_value: job.axis_value,
                scheduler: job.scheduler.clone(),
                seed: job.seed,
                reason: e.to_string(),
            }))
        }
        Err(e) => Err(e),
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let jobs = plan(config)?;
    info!("running {} episodes", jobs.len());
    let run_all = || jobs.par_iter().map(run_job).collect::<Result<Vec<_>>>();
    let outcomes = match config.experiment.workers {
        0 => run_all()?,
        n => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?
            .install(run_all)?,
    };
    let mut episodes = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(e) => episodes.push(e),
            Err(s) => skipped.push(s),
        }
    }
    let record = config.experiment.record_runtime;
    let raw: Vec<RawRow> = episodes
        .iter()
        .map(|e| RawRow {
            axis_value: e.axis_value,
            scheduler: e.result.scheduler.clone(),
            seed: e.result.seed,
            objective: e.result.objective,
            runtime_ms: record.then_some(e.runtime.as_secs_f64() * 1e3),
        })
        .collect();
    let summary = aggregate(&raw);
    Ok(ExperimentOutput {
        axis: config.experiment.axis.clone(),
        episodes,
        skipped,
        raw,
        summary,
    })
}

/// Mean, sample deviation and count of the objective per (axis value,
/// scheduler), in order of first appearance.
pub fn aggregate(raw: &[RawRow]) -> Vec<SummaryRow> {
    let mut order: Vec<(Option<f64>, String)> = Vec::new();
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for row in raw {
        let key = (row.axis_value, row.scheduler.clone());
        let idx = match order.iter().position(|k| k.0.map(f64::to_bits) == key.0.map(f64::to_bits) && k.1 == key.1) {
            Some(i) => i,
            None => {
                order.push(key);
                order.len() - 1
            }
        };
        groups.entry(idx).or_default().push(row.objective);
    }
    groups
        .into_iter()
        .map(|(idx, xs)| {
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let stddev = if n > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                axis_value: order[idx].0,
                scheduler: order[idx].1.clone(),
                mean,
                stddev,
                n,
            }
        })
        .collect()
}

/// Raw CSV: `axis_value,scheduler,seed,objective,runtime_ms`.
pub fn write_raw_csv<W: Write>(rows: &[RawRow], writer: W) -> Result<()> {
    write_rows(rows, writer)
}

/// Summary CSV: `axis_value,scheduler,mean,stddev,n`.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], writer: W) -> Result<()> {
    write_rows(rows, writer)
}

fn write_rows<T: Serialize, W: Write>(rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Writes `raw.csv`, `summary.csv` and, for the episodes, `slots.csv`
/// and `episodes.csv` into `dir`.
pub fn write_outputs(output: &ExperimentOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let open = |name: &str| {
        let path = dir.join(name);
        std::fs::File::create(&path)
            .map(std::io::BufWriter::new)
            .map_err(|e| Error::io(path, e))
    };
    write_raw_csv(&output.raw, open("raw.csv")?)?;
    write_summary_csv(&output.summary, open("summary.csv")?)?;
    let results: Vec<EpisodeResult> = output.episodes.iter().map(|e| e.result.clone()).collect();
    crate::simulator::write_slot_csv(&results, open("slots.csv")?)?;
    crate::simulator::write_summary_csv(&results, open("episodes.csv")?)?;
    Ok(())
}

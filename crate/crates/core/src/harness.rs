//! Seeded experiment execution and result emission.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::closed_loop::ClosedLoopController;
use crate::config::ExperimentConfig;
use crate::engine::{step_day, EventLog};
use crate::error::{Error, Result};
use crate::garden::{balance_error, GardenState};
use crate::metrics::{summarize, write_timeseries, DayRecord};
use crate::policy::{IrrigationKind, PolicyBundle};

/// A garden together with everything needed to step it.
pub struct Simulation {
    pub state: GardenState,
    pub policy: PolicyBundle,
    pub controller: Option<ClosedLoopController>,
    pub log: EventLog,
    pub records: Vec<DayRecord>,
    /// Worst relative water-balance error over all steps so far.
    pub max_balance_error: f64,
}

impl Simulation {
    pub fn new(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        let (state, controller) = config.build(seed)?;
        Ok(Self {
            state,
            policy: config.policy.clone(),
            controller,
            log: EventLog::default(),
            records: Vec::new(),
            max_balance_error: 0.0,
        })
    }

    pub fn step(&mut self) -> Result<&DayRecord> {
        let ledger = self.state.ledger;
        let storage = self.state.soil.storage();
        let record = step_day(
            &mut self.state,
            &self.policy,
            self.controller.as_mut(),
            &mut self.log,
        )?;
        let err = balance_error(
            &self.state.ledger.delta(&ledger),
            self.state.soil.storage() - storage,
            storage,
        );
        self.max_balance_error = self.max_balance_error.max(err);
        self.records.push(record);
        Ok(self.records.last().unwrap())
    }

    pub fn run_for(&mut self, days: u32) -> Result<()> {
        for _ in 0..days {
            self.step()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub policy: PolicyBundle,
    pub window: (u32, u32),
    pub mean_coverage: f64,
    pub mean_diversity: f64,
    pub total_water_ml: f64,
    pub max_balance_error: f64,
    pub config: ExperimentConfig,
}

/// Everything one run produces.
pub struct RunArtifacts {
    pub simulation: Simulation,
    pub summary: RunSummary,
}

impl RunArtifacts {
    pub fn records(&self) -> &[DayRecord] {
        &self.simulation.records
    }

    pub fn timeseries_csv(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        write_timeseries(
            &self.simulation.records,
            &self.simulation.state.type_names(),
            &mut buf,
        )?;
        Ok(buf)
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, bytes: &[u8]| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
        };
        write("timeseries.csv", &self.timeseries_csv()?)?;
        let mut events = Vec::new();
        self.simulation.log.write_csv(&mut events)?;
        write("events.csv", &events)?;
        if let Some(ctl) = &self.simulation.controller {
            let mut buf = Vec::new();
            ctl.write_readings_csv(&mut buf)?;
            write("sensors.csv", &buf)?;
            let mut buf = Vec::new();
            ctl.write_firings_csv(&mut buf)?;
            write("firings.csv", &buf)?;
        }
        write("summary.json", &to_json(&self.summary)?)?;
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

/// Runs one full cycle with the given seed.
pub fn run_single(config: &ExperimentConfig, seed: u64) -> Result<RunArtifacts> {
    let mut sim = Simulation::new(config, seed)?;
    sim.run_for(config.cycle_length)?;
    let s = summarize(&sim.records, config.metric_window)?;
    let summary = RunSummary {
        seed,
        policy: sim.policy.clone(),
        window: config.metric_window,
        mean_coverage: s.mean_coverage,
        mean_diversity: s.mean_diversity,
        total_water_ml: s.total_water_ml,
        max_balance_error: sim.max_balance_error,
        config: config.clone(),
    };
    Ok(RunArtifacts {
        simulation: sim,
        summary,
    })
}

/// Mean metrics over replicated trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: Vec<TrialSummary>,
    pub mean_coverage: f64,
    pub mean_diversity: f64,
    pub mean_total_water_ml: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: u32,
    pub seed: u64,
    pub mean_coverage: f64,
    pub mean_diversity: f64,
    pub total_water_ml: f64,
}

impl Aggregate {
    pub fn from_runs(runs: &[RunArtifacts]) -> Self {
        let trials: Vec<TrialSummary> = runs
            .iter()
            .enumerate()
            .map(|(i, r)| TrialSummary {
                trial: i as u32,
                seed: r.summary.seed,
                mean_coverage: r.summary.mean_coverage,
                mean_diversity: r.summary.mean_diversity,
                total_water_ml: r.summary.total_water_ml,
            })
            .collect();
        let n = trials.len().max(1) as f64;
        Self {
            mean_coverage: trials.iter().map(|t| t.mean_coverage).sum::<f64>() / n,
            mean_diversity: trials.iter().map(|t| t.mean_diversity).sum::<f64>() / n,
            mean_total_water_ml: trials.iter().map(|t| t.total_water_ml).sum::<f64>() / n,
            trials,
        }
    }
}

/// Runs every trial (seeds `seed + i`) and writes the artifacts under `out`.
///
/// A single trial writes straight into `out`; several trials each get a
/// `trial_<i>` directory plus `aggregate.json` at the top.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<Vec<RunArtifacts>> {
    let runs = run_trials(config, config.trials)?;
    if let [only] = runs.as_slice() {
        only.write_to(out)?;
    } else {
        for (i, r) in runs.iter().enumerate() {
            r.write_to(&trial_dir(out, i))?;
        }
        let path = out.join("aggregate.json");
        fs::write(&path, to_json(&Aggregate::from_runs(&runs))?)
            .map_err(|e| Error::io(&path, e))?;
    }
    Ok(runs)
}

pub fn trial_dir(out: &Path, trial: usize) -> PathBuf {
    out.join(format!("trial_{trial}"))
}

pub fn run_trials(config: &ExperimentConfig, trials: u32) -> Result<Vec<RunArtifacts>> {
    (0..trials)
        .map(|i| {
            let seed = config.seed.wrapping_add(u64::from(i));
            info!("trial {i} (seed {seed})");
            run_single(config, seed)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub policy: IrrigationKind,
    pub mean_coverage: f64,
    pub mean_diversity: f64,
    pub total_water_ml: f64,
    /// Water relative to the first policy, in percent (negative = saving).
    pub water_vs_first_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seed: u64,
    pub trials: u32,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn row(&self, policy: IrrigationKind) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.policy == policy)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "policy",
            "mean_coverage",
            "mean_diversity",
            "total_water_mL",
            "water_vs_first_pct",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.policy.to_string(),
                format!("{:.6}", r.mean_coverage),
                format!("{:.6}", r.mean_diversity),
                format!("{:.6}", r.total_water_ml),
                format!("{:.6}", r.water_vs_first_pct),
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::io("comparison", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Runs each policy over the same seeds and placements.
///
/// Returns the report together with each arm's runs so callers can check
/// the report against the run artifacts.
pub fn compare_runs(
    config: &ExperimentConfig,
    policies: &[IrrigationKind],
) -> Result<(ComparisonReport, Vec<Vec<RunArtifacts>>)> {
    if policies.len() < 2 {
        return Err(Error::config("compare needs at least two policies"));
    }
    let mut rows = Vec::new();
    let mut arms = Vec::new();
    for &policy in policies {
        let arm = config.with_policy(policy);
        arm.validate()?;
        let runs = run_trials(&arm, config.trials)?;
        let agg = Aggregate::from_runs(&runs);
        rows.push(ComparisonRow {
            policy,
            mean_coverage: agg.mean_coverage,
            mean_diversity: agg.mean_diversity,
            total_water_ml: agg.mean_total_water_ml,
            water_vs_first_pct: 0.0,
        });
        arms.push(runs);
    }
    let first = rows[0].total_water_ml;
    for r in &mut rows {
        r.water_vs_first_pct = if first > 0.0 {
            100.0 * (r.total_water_ml - first) / first
        } else {
            0.0
        };
    }
    Ok((
        ComparisonReport {
            seed: config.seed,
            trials: config.trials,
            rows,
        },
        arms,
    ))
}

pub fn compare(config: &ExperimentConfig, policies: &[IrrigationKind]) -> Result<ComparisonReport> {
    compare_runs(config, policies).map(|(report, _)| report)
}

/// Day on which the staggering headline coverage is read.
pub const STAGGER_REPORT_DAY: u32 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaggerTrial {
    pub seed: u64,
    pub normal_day50_coverage: f64,
    pub staggered_day50_coverage: f64,
    pub normal_diversity: f64,
    pub staggered_diversity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaggerReport {
    pub offset: u32,
    pub trials: Vec<StaggerTrial>,
    pub normal_day50_coverage: f64,
    pub staggered_day50_coverage: f64,
    pub normal_diversity: f64,
    pub staggered_diversity: f64,
}

impl StaggerReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "seed",
            "normal_day50_coverage",
            "staggered_day50_coverage",
            "normal_diversity",
            "staggered_diversity",
        ])?;
        for t in &self.trials {
            w.write_record([
                t.seed.to_string(),
                format!("{:.6}", t.normal_day50_coverage),
                format!("{:.6}", t.staggered_day50_coverage),
                format!("{:.6}", t.normal_diversity),
                format!("{:.6}", t.staggered_diversity),
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::io("stagger", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn coverage_on(records: &[DayRecord], day: u32) -> Result<f64> {
    records
        .iter()
        .find(|r| r.day == day)
        .map(|r| r.coverage)
        .ok_or_else(|| Error::config(format!("cycle_length too short to report day {day}")))
}

/// Normal (offset 0) versus staggered planting over matched seeds.
pub fn stagger_experiment(
    config: &ExperimentConfig,
    offset: u32,
    trials: u32,
) -> Result<StaggerReport> {
    if trials == 0 {
        return Err(Error::config("stagger experiment needs trials >= 1"));
    }
    let normal = config.with_stagger_offset(0)?;
    let staggered = config.with_stagger_offset(offset)?;
    let mut rows = Vec::new();
    for i in 0..trials {
        let seed = config.seed.wrapping_add(u64::from(i));
        let a = run_single(&normal, seed)?;
        let b = run_single(&staggered, seed)?;
        rows.push(StaggerTrial {
            seed,
            normal_day50_coverage: coverage_on(a.records(), STAGGER_REPORT_DAY)?,
            staggered_day50_coverage: coverage_on(b.records(), STAGGER_REPORT_DAY)?,
            normal_diversity: a.summary.mean_diversity,
            staggered_diversity: b.summary.mean_diversity,
        });
    }
    let n = rows.len() as f64;
    let mean = |f: fn(&StaggerTrial) -> f64| rows.iter().map(f).sum::<f64>() / n;
    Ok(StaggerReport {
        offset,
        normal_day50_coverage: mean(|t| t.normal_day50_coverage),
        staggered_day50_coverage: mean(|t| t.staggered_day50_coverage),
        normal_diversity: mean(|t| t.normal_diversity),
        staggered_diversity: mean(|t| t.staggered_diversity),
        trials: rows,
    })
}

//! Experiment harness: deadline intervals, seeded multi-trial runs and
//! convergence curves.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{exhaustive_oracle, greedy_cheapest_feasible, BaselineError, OracleOutcome};
use crate::iwd::{self, fmt6, ConvergenceTrace, IwdError, IwdParams};
use crate::resource::{CloudProfile, DegradationSample, ModelError, Platform, VmType};
use crate::schedule::{materialize, Assignment, NodeId, Schedule, ScheduleError};
use crate::workflow::{ValidationReport, Workflow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("invalid workflow: {0}")]
    InvalidWorkflow(ValidationReport),
    #[error("at least one trial is required")]
    NoTrials,
    #[error("deadline interval must be 1..=4, got {0}")]
    Interval(usize),
    #[error(transparent)]
    Iwd(#[from] IwdError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Four deadlines evenly spaced between the fastest and slowest single-VM runtimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeadlineSet {
    pub fastest: f64,
    pub slowest: f64,
    pub interval: f64,
    pub deadlines: [f64; 4],
}

impl DeadlineSet {
    pub fn from_bounds(fastest: f64, slowest: f64) -> Self {
        let interval = (slowest - fastest) / 5.0;
        let deadlines = [1.0, 2.0, 3.0, 4.0].map(|k| fastest + k * interval);
        DeadlineSet { fastest, slowest, interval, deadlines }
    }

    /// Deadline for interval `k ∈ 1..=4`.
    pub fn deadline(&self, k: usize) -> Result<f64, EvalError> {
        match k {
            1..=4 => Ok(self.deadlines[k - 1]),
            _ => Err(EvalError::Interval(k)),
        }
    }
}

fn single_vm_makespan(workflow: &Workflow, profile: &CloudProfile, vm: &VmType) -> Result<f64, EvalError> {
    let platform = Platform::new(profile.clone(), vec![vm.clone()], DegradationSample::zero(1))?;
    let assignment = Assignment::uniform(workflow.len(), NodeId(0));
    Ok(materialize(workflow, &assignment, &platform)?.makespan)
}

/// Slowest: every task on one VM of the cheapest type; fastest: on one VM of
/// the fastest type. No degradation.
pub fn deadline_set(workflow: &Workflow, profile: &CloudProfile) -> Result<DeadlineSet, EvalError> {
    check(workflow)?;
    profile.validate()?;
    let slowest = single_vm_makespan(workflow, profile, profile.cheapest_type())?;
    let fastest = single_vm_makespan(workflow, profile, profile.fastest_type())?;
    Ok(DeadlineSet::from_bounds(fastest, slowest))
}

fn check(workflow: &Workflow) -> Result<(), EvalError> {
    let report = workflow.validate();
    if report.is_empty() {
        Ok(())
    } else {
        Err(EvalError::InvalidWorkflow(report))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    Iwd,
    Greedy,
    Oracle,
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchedulerKind::Iwd => "iwd",
            SchedulerKind::Greedy => "greedy",
            SchedulerKind::Oracle => "oracle",
        })
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "iwd" => Ok(SchedulerKind::Iwd),
            "greedy" => Ok(SchedulerKind::Greedy),
            "oracle" => Ok(SchedulerKind::Oracle),
            other => Err(format!("unknown scheduler {other}")),
        }
    }
}

/// Knobs shared by every trial.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrialConfig {
    pub params: IwdParams,
    /// Defaults to three nodes per catalog type.
    pub pool_size: Option<usize>,
}

impl TrialConfig {
    pub fn pool_size(&self, profile: &CloudProfile) -> usize {
        self.pool_size.unwrap_or(3 * profile.catalog.len())
    }
}

/// Result of one scheduler run on one sampled platform.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub schedule: Option<Schedule>,
    /// The IWD trace, when the IWD scheduler ran.
    pub trace: Option<ConvergenceTrace>,
    /// Summed execution time of the IWD solution, for comparison with the makespan.
    pub summed_exec_time: Option<f64>,
}

impl Outcome {
    pub fn feasible(&self, deadline: f64) -> bool {
        self.schedule.as_ref().is_some_and(|s| s.is_feasible(deadline))
    }
}

/// Runs `scheduler` once on `platform`.
pub fn schedule_once(
    workflow: &Workflow,
    platform: &Platform,
    scheduler: SchedulerKind,
    deadline: f64,
    seed: u64,
    params: &IwdParams,
) -> Result<Outcome, EvalError> {
    Ok(match scheduler {
        SchedulerKind::Iwd => {
            let out = iwd::run(workflow, platform, params, deadline, seed)?;
            Outcome {
                summed_exec_time: Some(out.solution().exec_time),
                schedule: Some(out.schedule().clone()),
                trace: Some(out.trace),
            }
        }
        SchedulerKind::Greedy => {
            let g = greedy_cheapest_feasible(workflow, platform, deadline)?;
            Outcome { schedule: Some(g.schedule), trace: None, summed_exec_time: None }
        }
        SchedulerKind::Oracle => {
            let o = exhaustive_oracle(workflow, platform, deadline)?;
            let schedule = match o {
                OracleOutcome::Optimal { schedule, .. } => Some(schedule),
                OracleOutcome::Infeasible => None,
            };
            Outcome { schedule, trace: None, summed_exec_time: None }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub feasible: bool,
    /// `None` when the scheduler produced no schedule at all.
    pub tec: Option<f64>,
    pub tet: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub workflow: String,
    pub scheduler: SchedulerKind,
    pub interval: Option<usize>,
    pub deadline: f64,
    pub base_seed: u64,
    pub records: Vec<TrialRecord>,
    pub met_pct: f64,
    /// Means over trials that produced a schedule.
    pub mean_tec: Option<f64>,
    pub mean_tet: Option<f64>,
}

/// `(deadline-met %, mean TEC, mean TET)` over `records`.
pub fn aggregate(records: &[TrialRecord]) -> (f64, Option<f64>, Option<f64>) {
    let met = records.iter().filter(|r| r.feasible).count();
    let met_pct = 100.0 * met as f64 / records.len().max(1) as f64;
    let mean = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
    (
        met_pct,
        mean(records.iter().filter_map(|r| r.tec).collect()),
        mean(records.iter().filter_map(|r| r.tet).collect()),
    )
}

/// `trials` independent runs with seeds `base_seed + i`; each draws its own
/// degradation sample. A trial meets the deadline when its materialized
/// makespan does.
#[allow(clippy::too_many_arguments)]
pub fn run_trials(
    workflow: &Workflow,
    profile: &CloudProfile,
    scheduler: SchedulerKind,
    deadline: f64,
    interval: Option<usize>,
    trials: usize,
    base_seed: u64,
    config: &TrialConfig,
) -> Result<TrialReport, EvalError> {
    if trials == 0 {
        return Err(EvalError::NoTrials);
    }
    check(workflow)?;
    let pool = config.pool_size(profile);
    let records = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i);
            let platform = Platform::sampled(profile.clone(), pool, seed)?;
            let out = schedule_once(workflow, &platform, scheduler, deadline, seed, &config.params)?;
            Ok(TrialRecord {
                seed,
                feasible: out.feasible(deadline),
                tec: out.schedule.as_ref().map(|s| s.total_cost),
                tet: out.schedule.as_ref().map(|s| s.makespan),
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let (met_pct, mean_tec, mean_tet) = aggregate(&records);
    Ok(TrialReport {
        workflow: workflow.name().to_string(),
        scheduler,
        interval,
        deadline,
        base_seed,
        records,
        met_pct,
        mean_tec,
        mean_tet,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub iteration: usize,
    /// `+∞` while any seed still lacks an accepted solution.
    pub mean_best_cost: f64,
    /// `None` while any seed still lacks an accepted solution.
    pub mean_best_makespan: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCurve {
    pub points: Vec<CurvePoint>,
    pub traces: Vec<ConvergenceTrace>,
}

impl ConvergenceCurve {
    pub const CSV_HEADER: &'static str = "iteration,mean_best_cost,mean_best_makespan_s";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{}",
                p.iteration,
                fmt6(p.mean_best_cost),
                p.mean_best_makespan.map(fmt6).unwrap_or_default()
            );
        }
        out
    }
}

/// Mean incumbent cost and makespan per iteration over `seeds` IWD runs.
pub fn convergence_report(
    workflow: &Workflow,
    profile: &CloudProfile,
    deadline: f64,
    seeds: usize,
    base_seed: u64,
    config: &TrialConfig,
) -> Result<ConvergenceCurve, EvalError> {
    if seeds == 0 {
        return Err(EvalError::NoTrials);
    }
    check(workflow)?;
    let pool = config.pool_size(profile);
    let traces = (0..seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i);
            let platform = Platform::sampled(profile.clone(), pool, seed)?;
            Ok(iwd::run(workflow, &platform, &config.params, deadline, seed)?.trace)
        })
        .collect::<Result<Vec<_>, EvalError>>()?;

    let n = seeds as f64;
    let points = (0..config.params.max_iterations)
        .map(|k| {
            let rows = traces.iter().map(|t| t.rows[k]);
            let mean_best_cost = rows.clone().map(|r| r.best_cost).sum::<f64>() / n;
            let mean_best_makespan = rows
                .map(|r| r.best_makespan)
                .sum::<Option<f64>>()
                .map(|s| s / n);
            CurvePoint { iteration: k + 1, mean_best_cost, mean_best_makespan }
        })
        .collect();
    Ok(ConvergenceCurve { points, traces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workflow::{DataEdge, Task};

    fn fork() -> Workflow {
        Workflow::new(
            "fork",
            vec![Task::new("A", 20_000.0), Task::new("B", 40_000.0), Task::new("C", 30_000.0)],
            vec![DataEdge::new("A", "B", 10.0), DataEdge::new("A", "C", 10.0)],
            None,
        )
        .unwrap()
    }

    #[test]
    fn deadline_arithmetic() {
        let d = DeadlineSet::from_bounds(100.0, 600.0);
        assert_eq!(d.interval, 100.0);
        assert_eq!(d.deadlines, [200.0, 300.0, 400.0, 500.0]);
        let same = DeadlineSet::from_bounds(250.0, 250.0);
        assert_eq!(same.deadlines, [250.0; 4]);
        assert!(matches!(d.deadline(5), Err(EvalError::Interval(5))));
        assert_eq!(d.deadline(2).unwrap(), 300.0);
    }

    #[test]
    fn deadline_set_uses_single_vm_runtimes() {
        let profile = CloudProfile::default();
        let d = deadline_set(&fork(), &profile).unwrap();
        // 90 000 MI serial: 90 s on m1.small, 90/3.25 s on m3.xlarge, plus boot.
        assert!((d.slowest - (97.0 + 90.0)).abs() < 1e-9);
        assert!((d.fastest - (97.0 + 90.0 / 3.25)).abs() < 1e-9);
        assert!(d.deadlines[3] < d.slowest);
        assert!(d.fastest <= d.deadlines[0]);

        let mut single = profile.clone();
        single.catalog.truncate(1);
        let d = deadline_set(&fork(), &single).unwrap();
        assert!(d.deadlines.iter().all(|&x| x == d.fastest));
    }

    #[test]
    fn trials_are_reproducible_and_aggregate() {
        let profile = CloudProfile::default();
        let cfg = TrialConfig::default();
        let r1 = run_trials(&fork(), &profile, SchedulerKind::Iwd, 1e5, None, 4, 9, &cfg).unwrap();
        let r2 = run_trials(&fork(), &profile, SchedulerKind::Iwd, 1e5, None, 4, 9, &cfg).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.met_pct, 100.0);
        assert_eq!(aggregate(&r1.records), (r1.met_pct, r1.mean_tec, r1.mean_tet));
        assert_eq!(r1.records.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![9, 10, 11, 12]);

        let zero = run_trials(&fork(), &profile, SchedulerKind::Greedy, 0.0, None, 3, 1, &cfg).unwrap();
        assert_eq!(zero.met_pct, 0.0);
        assert!(matches!(
            run_trials(&fork(), &profile, SchedulerKind::Iwd, 1.0, None, 0, 1, &cfg),
            Err(EvalError::NoTrials)
        ));
    }

    #[test]
    fn convergence_single_seed_matches_trace() {
        let profile = CloudProfile::default();
        let cfg = TrialConfig::default();
        let c = convergence_report(&fork(), &profile, 1e5, 1, 4, &cfg).unwrap();
        assert_eq!(c.points.len(), 20);
        for (p, r) in c.points.iter().zip(&c.traces[0].rows) {
            assert_eq!(p.mean_best_cost, r.best_cost);
            assert_eq!(p.mean_best_makespan, r.best_makespan);
        }
        let one = TrialConfig { params: IwdParams { max_iterations: 1, ..IwdParams::default() }, ..cfg };
        let c = convergence_report(&fork(), &profile, 1e5, 3, 4, &one).unwrap();
        assert_eq!(c.points.len(), 1);
    }
}

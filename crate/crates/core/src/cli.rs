//! Command-line front end. `main.rs` only forwards `std::env::args` here.
//!
//! Exit codes: 0 success (feasible schedule), 2 no feasible schedule found,
//! 1 input or runtime error. Diagnostics go to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::evaluator::{
    convergence_report, deadline_set, run_trials, schedule_once, DeadlineSet, SchedulerKind, TrialConfig,
};
use crate::io::{load_profile, resolve_workflow, BUNDLED_NAMES};
use crate::iwd::IwdParams;
use crate::resource::{CloudProfile, Platform};
use crate::schedule::{billed_periods, Schedule};
use crate::workflow::Workflow;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

pub const REPORT_VERSION: &str = "schedule-report/v1";
pub const BENCH_HEADER: [&str; 10] = [
    "workflow",
    "interval",
    "scheduler",
    "deadline_s",
    "met_pct",
    "mean_tet_s",
    "mean_tec",
    "trials",
    "base_seed",
    "error",
];

#[derive(Debug, Parser)]
#[command(name = "iwd-sched", version, about = "Deadline-constrained, cost-minimizing workflow scheduling")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Options every subcommand understands.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Cloud profile file; the built-in EC2-style profile when omitted.
    #[arg(long, global = true)]
    pub profile: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// VM pool size; three per catalog type when omitted.
    #[arg(long, global = true)]
    pub pool_size: Option<usize>,
    #[command(flatten)]
    pub iwd: IwdOverrides,
}

#[derive(Debug, Clone, Default, Args)]
pub struct IwdOverrides {
    #[arg(long = "iwd.a-v", global = true, help_heading = "Search parameters")]
    /// Velocity update numerator (default 1000)
    pub a_v: Option<f64>,
    #[arg(long = "iwd.b-v", global = true, help_heading = "Search parameters")]
    /// Velocity update offset (default 0.01)
    pub b_v: Option<f64>,
    #[arg(long = "iwd.c-v", global = true, help_heading = "Search parameters")]
    /// Velocity update soil weight (default 1)
    pub c_v: Option<f64>,
    #[arg(long = "iwd.a-s", global = true, help_heading = "Search parameters")]
    /// Soil update numerator (default 1000)
    pub a_s: Option<f64>,
    #[arg(long = "iwd.b-s", global = true, help_heading = "Search parameters")]
    /// Soil update offset (default 0.01)
    pub b_s: Option<f64>,
    #[arg(long = "iwd.c-s", global = true, help_heading = "Search parameters")]
    /// Soil update time weight (default 1)
    pub c_s: Option<f64>,
    #[arg(long = "iwd.max-iter", global = true, help_heading = "Search parameters")]
    /// Iterations (default 20)
    pub max_iterations: Option<usize>,
    #[arg(long = "iwd.init-soil", global = true, help_heading = "Search parameters")]
    /// Soil on every edge at start (default 100)
    pub initial_soil: Option<f64>,
    #[arg(long = "iwd.vm-to-visit", global = true, help_heading = "Search parameters")]
    /// Nodes each drop visits (default 10)
    pub vms_to_visit: Option<usize>,
    #[arg(long = "iwd.init-vel", global = true, help_heading = "Search parameters")]
    /// Initial drop velocity (default 4)
    pub initial_velocity: Option<f64>,
    #[arg(long = "iwd.init-drop-soil", global = true, help_heading = "Search parameters")]
    /// Soil a drop carries at start (default 0)
    pub initial_drop_soil: Option<f64>,
    #[arg(long = "iwd.epsilon", global = true, help_heading = "Search parameters")]
    /// Soil attraction offset and cost floor (default 0.01)
    pub epsilon: Option<f64>,
    #[arg(long = "iwd.rho-n", global = true, help_heading = "Search parameters")]
    /// Local soil update rate (default 0.9)
    pub rho_n: Option<f64>,
    #[arg(long = "iwd.rho-iwd", global = true, help_heading = "Search parameters")]
    /// Global soil update rate (default 0.9)
    pub rho_iwd: Option<f64>,
}

impl IwdOverrides {
    pub fn apply(&self, mut p: IwdParams) -> IwdParams {
        macro_rules! set {
            ($($src:ident => $($dst:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$src { p.$($dst).+ = v; })*
            };
        }
        set!(
            a_v => velocity.a, b_v => velocity.b, c_v => velocity.c,
            a_s => soil.a, b_s => soil.b, c_s => soil.c,
            max_iterations => max_iterations,
            initial_soil => initial_soil,
            vms_to_visit => vms_to_visit,
            initial_velocity => initial_velocity,
            initial_drop_soil => initial_drop_soil,
            epsilon => epsilon,
            rho_n => rho_n,
            rho_iwd => rho_iwd,
        );
        p
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Schedule one workflow and write schedule.json (plus convergence.csv for iwd).
    Schedule(ScheduleArgs),
    /// Run seeded trials over workflows x deadline intervals x schedulers.
    Bench(BenchArgs),
    /// Print the four-interval deadline set of a workflow.
    Deadlines(DeadlinesArgs),
    /// Mean incumbent cost per iteration over several seeds.
    Convergence(ConvergenceArgs),
}

/// A workflow file, a `.dax` file, or `bundled:<name>`.
const WORKFLOW_HELP: &str = "Workflow file, DAX file, or bundled:<name>";

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long, help = WORKFLOW_HELP)]
    pub workflow: String,
    #[arg(long, default_value = "iwd")]
    pub scheduler: SchedulerKind,
    /// Explicit deadline in seconds.
    #[arg(long, conflicts_with = "interval")]
    pub deadline_s: Option<f64>,
    /// Deadline interval 1..=4 from the workflow's deadline set.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub interval: Option<u8>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Also print the report on stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Repeatable; the four bundled benchmark workflows when omitted.
    #[arg(long, help = WORKFLOW_HELP)]
    pub workflow: Vec<String>,
    /// Repeatable; 1..=4 when omitted.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub interval: Vec<u8>,
    /// Repeatable; iwd and greedy when omitted.
    #[arg(long)]
    pub scheduler: Vec<SchedulerKind>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// CSV file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DeadlinesArgs {
    #[arg(long, help = WORKFLOW_HELP)]
    pub workflow: String,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long, help = WORKFLOW_HELP)]
    pub workflow: String,
    #[arg(long, conflicts_with = "interval")]
    pub deadline_s: Option<f64>,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub interval: u8,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub seeds: u64,
    /// CSV file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

type CliResult<T> = Result<T, String>;

/// Parses `args` (program name first) and runs the command.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_ERROR
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<i32> {
    let profile = match &cli.common.profile {
        Some(path) => load_profile(path).map_err(|e| e.to_string())?,
        None => CloudProfile::default(),
    };
    let config = TrialConfig {
        params: cli.common.iwd.apply(IwdParams::default()),
        pool_size: cli.common.pool_size,
    };
    let seed = cli.common.seed;
    match &cli.command {
        Command::Schedule(a) => cmd_schedule(a, &profile, &config, seed),
        Command::Bench(a) => cmd_bench(a, &profile, &config, seed),
        Command::Deadlines(a) => cmd_deadlines(a, &profile),
        Command::Convergence(a) => cmd_convergence(a, &profile, &config, seed),
    }
}

fn load(spec: &str) -> CliResult<Workflow> {
    resolve_workflow(spec).map_err(|e| e.to_string())
}

fn write_out(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

/// Rounds to 6 decimal places for stable JSON output.
pub fn round6(x: f64) -> f64 {
    if x.is_finite() {
        (x * 1e6).round() / 1e6
    } else {
        x
    }
}

#[derive(Debug, Serialize)]
pub struct ResourceRow {
    pub node: String,
    pub vm_type: String,
    pub speed_mips: f64,
    pub degradation: f64,
    pub cost_per_period: f64,
    pub lease_start_s: f64,
    pub lease_end_s: f64,
    pub billed_periods: f64,
    pub cost: f64,
}

#[derive(Debug, Serialize)]
pub struct PlacementRow {
    pub task: String,
    pub node: String,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Serialize)]
pub struct ScheduleReport {
    pub version: &'static str,
    pub workflow: String,
    pub scheduler: SchedulerKind,
    pub seed: u64,
    pub deadline_s: f64,
    pub feasible: bool,
    pub tec: Option<f64>,
    pub tet_s: Option<f64>,
    pub resources: Vec<ResourceRow>,
    pub placements: Vec<PlacementRow>,
}

impl ScheduleReport {
    pub fn new(
        workflow: &Workflow,
        platform: &Platform,
        scheduler: SchedulerKind,
        seed: u64,
        deadline: f64,
        schedule: Option<&Schedule>,
    ) -> Self {
        let tau = platform.profile.billing_period;
        let resources = schedule
            .map(|s| {
                s.resources
                    .iter()
                    .map(|r| {
                        let periods = billed_periods(r.lease_end - r.lease_start, tau);
                        ResourceRow {
                            node: r.node.to_string(),
                            vm_type: r.vm_type.name.clone(),
                            speed_mips: round6(r.vm_type.speed),
                            degradation: round6(platform.degradation.get(r.node)),
                            cost_per_period: round6(r.vm_type.cost_per_period),
                            lease_start_s: round6(r.lease_start),
                            lease_end_s: round6(r.lease_end),
                            billed_periods: periods,
                            cost: round6(periods * r.vm_type.cost_per_period),
                        }
                    })
                    .collect()
            })
            .unwrap_or_default();
        let placements = schedule
            .map(|s| {
                s.placements
                    .iter()
                    .map(|p| PlacementRow {
                        task: p.task.clone(),
                        node: p.node.to_string(),
                        start_s: round6(p.start),
                        end_s: round6(p.end),
                    })
                    .collect()
            })
            .unwrap_or_default();
        ScheduleReport {
            version: REPORT_VERSION,
            workflow: workflow.name().to_string(),
            scheduler,
            seed,
            deadline_s: round6(deadline),
            feasible: schedule.is_some_and(|s| s.is_feasible(deadline)),
            tec: schedule.map(|s| round6(s.total_cost)),
            tet_s: schedule.map(|s| round6(s.makespan)),
            resources,
            placements,
        }
    }
}

fn interval_deadline(workflow: &Workflow, profile: &CloudProfile, k: u8) -> CliResult<f64> {
    deadline_set(workflow, profile)
        .and_then(|d| d.deadline(k as usize))
        .map_err(|e| e.to_string())
}

fn cmd_schedule(a: &ScheduleArgs, profile: &CloudProfile, config: &TrialConfig, seed: u64) -> CliResult<i32> {
    let workflow = load(&a.workflow)?;
    let deadline = match (a.deadline_s, a.interval) {
        (Some(d), _) => d,
        (None, Some(k)) => interval_deadline(&workflow, profile, k)?,
        (None, None) => workflow
            .deadline()
            .ok_or("no deadline: pass --deadline-s or --interval, or set deadline_s in the workflow")?,
    };
    if !(deadline >= 0.0) {
        return Err(format!("deadline must be non-negative, got {deadline}"));
    }
    let platform =
        Platform::sampled(profile.clone(), config.pool_size(profile), seed).map_err(|e| e.to_string())?;
    let outcome = schedule_once(&workflow, &platform, a.scheduler, deadline, seed, &config.params)
        .map_err(|e| e.to_string())?;
    let report = ScheduleReport::new(&workflow, &platform, a.scheduler, seed, deadline, outcome.schedule.as_ref());

    fs::create_dir_all(&a.out).map_err(|e| format!("{}: {e}", a.out.display()))?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())? + "\n";
    write_out(Some(&a.out.join("schedule.json")), &json)?;
    if let Some(trace) = &outcome.trace {
        write_out(Some(&a.out.join("convergence.csv")), &trace.to_csv())?;
    }
    if a.json {
        write_out(None, &json)?;
    }

    if report.feasible {
        eprintln!(
            "{}: {} feasible, TEC {:.6}, TET {:.6} s, deadline {:.6} s",
            workflow.name(),
            a.scheduler,
            report.tec.unwrap_or_default(),
            report.tet_s.unwrap_or_default(),
            deadline
        );
        Ok(EXIT_OK)
    } else {
        eprintln!("{}: {} found no feasible schedule for deadline {:.6} s", workflow.name(), a.scheduler, deadline);
        Ok(EXIT_INFEASIBLE)
    }
}

/// One bench CSV row; numeric fields are empty when `error` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub workflow: String,
    pub interval: u8,
    pub scheduler: SchedulerKind,
    pub deadline_s: Option<f64>,
    pub met_pct: Option<f64>,
    pub mean_tet_s: Option<f64>,
    pub mean_tec: Option<f64>,
    pub trials: u64,
    pub base_seed: u64,
    pub error: Option<String>,
}

impl BenchRow {
    fn record(&self) -> [String; 10] {
        let num = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        [
            self.workflow.clone(),
            self.interval.to_string(),
            self.scheduler.to_string(),
            num(self.deadline_s),
            num(self.met_pct),
            num(self.mean_tet_s),
            num(self.mean_tec),
            self.trials.to_string(),
            self.base_seed.to_string(),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

/// Runs every (workflow, interval, scheduler) cell; failures become error rows.
/// Rows come back sorted by workflow, interval, scheduler.
pub fn bench_rows(
    workflows: &[String],
    intervals: &[u8],
    schedulers: &[SchedulerKind],
    trials: u64,
    base_seed: u64,
    profile: &CloudProfile,
    config: &TrialConfig,
) -> Vec<BenchRow> {
    type Loaded = Result<(Workflow, DeadlineSet), String>;
    let loaded: Vec<(String, Loaded)> = workflows
        .iter()
        .map(|spec| match load(spec) {
            Ok(w) => {
                let set = deadline_set(&w, profile).map_err(|e| e.to_string());
                (w.name().to_string(), set.map(|s| (w, s)))
            }
            Err(e) => (spec.clone(), Err(e)),
        })
        .collect();

    let mut cells = Vec::new();
    for (name, wf) in &loaded {
        for &k in intervals {
            for &s in schedulers {
                cells.push((name, wf, k, s));
            }
        }
    }
    let mut rows: Vec<BenchRow> = cells
        .into_par_iter()
        .map(|(name, wf, k, scheduler)| {
            let mut row = BenchRow {
                workflow: name.clone(),
                interval: k,
                scheduler,
                deadline_s: None,
                met_pct: None,
                mean_tet_s: None,
                mean_tec: None,
                trials,
                base_seed,
                error: None,
            };
            let result = wf.as_ref().map_err(Clone::clone).and_then(|(w, set)| {
                let deadline = set.deadline(k as usize).map_err(|e| e.to_string())?;
                row.deadline_s = Some(deadline);
                run_trials(w, profile, scheduler, deadline, Some(k as usize), trials as usize, base_seed, config)
                    .map_err(|e| e.to_string())
            });
            match result {
                Ok(r) => {
                    row.met_pct = Some(r.met_pct);
                    row.mean_tet_s = r.mean_tet;
                    row.mean_tec = r.mean_tec;
                }
                Err(e) => row.error = Some(e),
            }
            row
        })
        .collect();
    rows.sort_by_cached_key(|r| (r.workflow.clone(), r.interval, r.scheduler.to_string()));
    rows
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BENCH_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record(r.record()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn cmd_bench(a: &BenchArgs, profile: &CloudProfile, config: &TrialConfig, seed: u64) -> CliResult<i32> {
    let workflows: Vec<String> = if a.workflow.is_empty() {
        BUNDLED_NAMES.iter().filter(|n| **n != "diamond").map(|n| format!("bundled:{n}")).collect()
    } else {
        a.workflow.clone()
    };
    let intervals = if a.interval.is_empty() { vec![1, 2, 3, 4] } else { a.interval.clone() };
    let schedulers = if a.scheduler.is_empty() {
        vec![SchedulerKind::Iwd, SchedulerKind::Greedy]
    } else {
        a.scheduler.clone()
    };
    let rows = bench_rows(&workflows, &intervals, &schedulers, a.trials, seed, profile, config);
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("{} interval {} {}: {}", r.workflow, r.interval, r.scheduler, r.error.as_deref().unwrap_or(""));
    }
    write_out(a.out.as_deref(), &bench_csv(&rows))?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct DeadlinesJson<'a> {
    workflow: &'a str,
    fastest_s: f64,
    slowest_s: f64,
    interval_s: f64,
    deadlines_s: [f64; 4],
}

fn cmd_deadlines(a: &DeadlinesArgs, profile: &CloudProfile) -> CliResult<i32> {
    let workflow = load(&a.workflow)?;
    let set = deadline_set(&workflow, profile).map_err(|e| e.to_string())?;
    let text = if a.json {
        let doc = DeadlinesJson {
            workflow: workflow.name(),
            fastest_s: round6(set.fastest),
            slowest_s: round6(set.slowest),
            interval_s: round6(set.interval),
            deadlines_s: set.deadlines.map(round6),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())? + "\n"
    } else {
        let mut s = format!(
            "workflow {}\nfastest_s {:.6}\nslowest_s {:.6}\ninterval_s {:.6}\n",
            workflow.name(),
            set.fastest,
            set.slowest,
            set.interval
        );
        for (k, d) in set.deadlines.iter().enumerate() {
            s += &format!("deadline_{} {:.6}\n", k + 1, d);
        }
        s
    };
    write_out(None, &text)?;
    Ok(EXIT_OK)
}

fn cmd_convergence(a: &ConvergenceArgs, profile: &CloudProfile, config: &TrialConfig, seed: u64) -> CliResult<i32> {
    let workflow = load(&a.workflow)?;
    let deadline = match a.deadline_s {
        Some(d) => d,
        None => interval_deadline(&workflow, profile, a.interval)?,
    };
    let curve = convergence_report(&workflow, profile, deadline, a.seeds as usize, seed, config)
        .map_err(|e| e.to_string())?;
    write_out(a.out.as_deref(), &curve.to_csv())?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_touch_only_given_fields() {
        let cli = Cli::try_parse_from([
            "iwd-sched",
            "deadlines",
            "--workflow",
            "bundled:diamond",
            "--iwd.max-iter",
            "5",
            "--iwd.c-s",
            "2",
        ])
        .unwrap();
        let p = cli.common.iwd.apply(IwdParams::default());
        assert_eq!(p.max_iterations, 5);
        assert_eq!(p.soil.c, 2.0);
        assert_eq!(p.velocity, IwdParams::default().velocity);
    }

    #[test]
    fn interval_range_is_enforced() {
        let r = Cli::try_parse_from(["iwd-sched", "schedule", "--workflow", "x", "--interval", "5"]);
        assert!(r.is_err());
        assert_eq!(main_with(["iwd-sched", "schedule", "--workflow", "x", "--interval", "5"]), EXIT_ERROR);
    }

    #[test]
    fn round6_behaviour() {
        assert_eq!(round6(0.1234564), 0.123456);
        assert_eq!(round6(2.0), 2.0);
        assert!(round6(f64::INFINITY).is_infinite());
    }

    #[test]
    fn bench_error_rows() {
        let rows = bench_rows(
            &["bundled:nope".into(), "bundled:diamond".into()],
            &[2],
            &[SchedulerKind::Greedy],
            2,
            7,
            &CloudProfile::default(),
            &TrialConfig::default(),
        );
        assert_eq!(rows.len(), 2);
        assert!(rows[0].error.is_some() && rows[0].met_pct.is_none());
        assert_eq!(rows[0].workflow, "bundled:nope");
        assert!(rows[1].error.is_none());
        let csv = bench_csv(&rows);
        assert!(csv.starts_with("workflow,interval,scheduler,deadline_s,met_pct,"));
        assert_eq!(csv.lines().count(), 3);
    }
}

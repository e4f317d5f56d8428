//! Intelligent Water Drop resource provisioning and scheduling.
//!
//! Each workflow task is a water drop. In every iteration the drops start on
//! random VM nodes and, in lock-step sweeps, each hop to a new node chosen by
//! soil-weighted roulette until they have seen `vms_to_visit` nodes, noting
//! the execution time and cost of their task on every node. The iteration
//! solution gives each task its cheapest visited node. An iteration solution
//! replaces the incumbent when its summed execution time is under the
//! deadline and it is strictly cheaper; the edges that led drops to their
//! chosen nodes are then reinforced. After the last iteration the incumbent
//! is materialized into a full schedule.

pub mod drop;
pub mod graph;
mod params;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use drop::{advance, heuristic_undesirability, MoveUpdate, VisitRecord, WaterDrop};
pub use graph::{edge_probabilities, g_soil, roulette, soil_attraction, ConstructionGraph};
pub use params::{IwdParams, UpdateCoefficients};

use crate::resource::Platform;
use crate::schedule::{materialize, Assignment, NodeId, Schedule, ScheduleError};
use crate::workflow::{ValidationReport, Workflow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IwdError {
    #[error("invalid workflow: {0}")]
    InvalidWorkflow(ValidationReport),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("pool of {pool} nodes is smaller than vms_to_visit = {vms_to_visit}")]
    PoolTooSmall { pool: usize, vms_to_visit: usize },
    #[error("drop has no unvisited node left")]
    Exhausted,
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Per task, the cheapest visited node, with the summed cost and time.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationSolution {
    pub choices: Vec<NodeId>,
    pub cost: f64,
    pub exec_time: f64,
}

impl IterationSolution {
    pub fn assignment(&self) -> Assignment {
        Assignment(self.choices.clone())
    }
}

/// Incumbents of the search.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BestSolutions {
    pub iteration_best: Option<IterationSolution>,
    pub total_best: Option<IterationSolution>,
}

impl BestSolutions {
    /// Cost of the iteration best, `+∞` before one exists.
    pub fn iteration_best_cost(&self) -> f64 {
        self.iteration_best.as_ref().map_or(f64::INFINITY, |s| s.cost)
    }
}

/// One row per iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    /// 1-based.
    pub iteration: usize,
    pub iter_cost: f64,
    /// `+∞` until the first accepted solution.
    pub best_cost: f64,
    /// Materialized makespan of the incumbent.
    pub best_makespan: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub const CSV_HEADER: &'static str = "iteration,iter_cost,best_cost,best_makespan";

    /// Fixed six-decimal rendering; `inf` for a missing cost, empty for a
    /// missing makespan.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.iteration,
                fmt6(r.iter_cost),
                fmt6(r.best_cost),
                r.best_makespan.map(fmt6).unwrap_or_default()
            );
        }
        out
    }
}

pub(crate) fn fmt6(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IwdResult {
    /// The total best solution and its schedule. Whether the schedule's
    /// makespan meets the deadline is a separate question.
    Scheduled { solution: IterationSolution, schedule: Schedule },
    /// No iteration solution ever passed the summed-time test; carries the
    /// cheapest rejected one.
    NoFeasibleSchedule { best_infeasible: IterationSolution, schedule: Schedule },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IwdOutcome {
    pub result: IwdResult,
    pub trace: ConvergenceTrace,
}

impl IwdOutcome {
    pub fn schedule(&self) -> &Schedule {
        match &self.result {
            IwdResult::Scheduled { schedule, .. } | IwdResult::NoFeasibleSchedule { schedule, .. } => {
                schedule
            }
        }
    }

    pub fn solution(&self) -> &IterationSolution {
        match &self.result {
            IwdResult::Scheduled { solution, .. } => solution,
            IwdResult::NoFeasibleSchedule { best_infeasible, .. } => best_infeasible,
        }
    }

    pub fn found(&self) -> bool {
        matches!(self.result, IwdResult::Scheduled { .. })
    }
}

/// Execution time and cost of every task on every node.
#[derive(Debug, Clone)]
struct CostTable {
    nodes: usize,
    time: Vec<f64>,
    cost: Vec<f64>,
}

impl CostTable {
    fn new(workflow: &Workflow, platform: &Platform) -> Self {
        let nodes = platform.len();
        let mut time = Vec::with_capacity(workflow.len() * nodes);
        let mut cost = Vec::with_capacity(workflow.len() * nodes);
        for task in workflow.tasks() {
            for node in platform.node_ids() {
                time.push(platform.exec_time(task.size, node));
                cost.push(platform.exec_cost(task.size, node));
            }
        }
        CostTable { nodes, time, cost }
    }

    fn record(&self, task: usize, node: NodeId) -> VisitRecord {
        let k = task * self.nodes + node.0;
        VisitRecord { node, exec_time: self.time[k], exec_cost: self.cost[k] }
    }
}

/// A fresh construction graph plus one drop per task on a seeded-random node.
pub fn initialize(
    workflow: &Workflow,
    platform: &Platform,
    params: &IwdParams,
    seed: u64,
) -> Result<(ConstructionGraph, Vec<WaterDrop>), IwdError> {
    params.validate(platform.len())?;
    let table = CostTable::new(workflow, platform);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = ConstructionGraph::new(platform.len(), params.initial_soil);
    let drops = spread_drops(workflow.len(), platform.len(), &table, params, &mut rng);
    Ok((graph, drops))
}

fn spread_drops<R: Rng>(
    tasks: usize,
    pool: usize,
    table: &CostTable,
    params: &IwdParams,
    rng: &mut R,
) -> Vec<WaterDrop> {
    (0..tasks)
        .map(|t| {
            let source = NodeId(rng.random_range(0..pool));
            WaterDrop::new(t, table.record(t, source), params)
        })
        .collect()
}

/// Roulette draw among the drop's unvisited nodes.
pub fn select_next<R: Rng + ?Sized>(
    graph: &ConstructionGraph,
    drop: &WaterDrop,
    params: &IwdParams,
    rng: &mut R,
) -> Result<NodeId, IwdError> {
    if drop.visited.len() >= params.vms_to_visit {
        return Err(IwdError::Exhausted);
    }
    let candidates = drop.unvisited(graph.len());
    if candidates.is_empty() {
        return Err(IwdError::Exhausted);
    }
    let probabilities = edge_probabilities(graph, drop.current(), &candidates, params.epsilon);
    Ok(candidates[roulette(&probabilities, rng.random::<f64>())])
}

/// Probability that `drop` moves to `to` next.
pub fn edge_probability(
    graph: &ConstructionGraph,
    drop: &WaterDrop,
    to: NodeId,
    epsilon: f64,
) -> Result<f64, IwdError> {
    let candidates = drop.unvisited(graph.len());
    let pos = candidates.iter().position(|&c| c == to).ok_or(IwdError::Exhausted)?;
    Ok(edge_probabilities(graph, drop.current(), &candidates, epsilon)[pos])
}

/// Cheapest visited node per drop (ties to the lower node id), summed.
pub fn iteration_solution(drops: &[WaterDrop]) -> IterationSolution {
    let mut choices = vec![NodeId(0); drops.len()];
    let mut cost = 0.0;
    let mut exec_time = 0.0;
    for d in drops {
        let best = d
            .records
            .iter()
            .min_by(|a, b| a.exec_cost.total_cmp(&b.exec_cost).then(a.node.cmp(&b.node)))
            .expect("drop has at least its source record");
        choices[d.task] = best.node;
        cost += best.exec_cost;
        exec_time += best.exec_time;
    }
    IterationSolution { choices, cost, exec_time }
}

/// Installs `candidate` as iteration best if its summed execution time is
/// under `deadline` and it is strictly cheaper. Returns whether it did.
pub fn update_iteration_best(
    candidate: &IterationSolution,
    best: &mut BestSolutions,
    deadline: f64,
) -> bool {
    if candidate.exec_time < deadline && candidate.cost < best.iteration_best_cost() {
        best.iteration_best = Some(candidate.clone());
        true
    } else {
        false
    }
}

/// `(1 + ρ)·soil − ρ·carried / q`.
pub fn reinforced_soil(soil: f64, carried_soil: f64, quality: f64, rho_iwd: f64) -> f64 {
    (1.0 + rho_iwd) * soil - rho_iwd * carried_soil / quality
}

/// Reinforces each hop that brought a drop to the node `best` chose for its task.
pub fn reinforce(
    graph: &mut ConstructionGraph,
    drops: &[WaterDrop],
    best: &IterationSolution,
    params: &IwdParams,
) {
    let quality = best.cost.max(params.epsilon);
    for d in drops {
        let chosen = best.choices[d.task];
        for (from, to) in d.hops().filter(|&(_, to)| to == chosen) {
            let soil = reinforced_soil(graph.soil(from, to), d.carried_soil, quality, params.rho_iwd);
            graph.set_soil(from, to, soil);
        }
    }
}

/// One full search. Deterministic in `seed`.
pub fn run(
    workflow: &Workflow,
    platform: &Platform,
    params: &IwdParams,
    deadline: f64,
    seed: u64,
) -> Result<IwdOutcome, IwdError> {
    let report = workflow.validate();
    if !report.is_empty() {
        return Err(IwdError::InvalidWorkflow(report));
    }
    params.validate(platform.len())?;

    let table = CostTable::new(workflow, platform);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = ConstructionGraph::new(platform.len(), params.initial_soil);
    let mut best = BestSolutions::default();
    let mut best_makespan = None;
    let mut cheapest_rejected: Option<IterationSolution> = None;
    let mut trace = ConvergenceTrace::default();

    for iteration in 1..=params.max_iterations {
        let mut drops = spread_drops(workflow.len(), platform.len(), &table, params, &mut rng);
        for _ in 1..params.vms_to_visit {
            for d in drops.iter_mut() {
                let to = select_next(&graph, d, params, &mut rng)?;
                let arrival = table.record(d.task, to);
                let hud = arrival.exec_time / deadline;
                advance(&mut graph, d, arrival, hud, params);
            }
        }

        let solution = iteration_solution(&drops);
        if update_iteration_best(&solution, &mut best, deadline) {
            reinforce(&mut graph, &drops, &solution, params);
            best_makespan = Some(materialize(workflow, &solution.assignment(), platform)?.makespan);
        } else if cheapest_rejected.as_ref().is_none_or(|c| solution.cost < c.cost) {
            cheapest_rejected = Some(solution.clone());
        }
        trace.rows.push(TraceRow {
            iteration,
            iter_cost: solution.cost,
            best_cost: best.iteration_best_cost(),
            best_makespan,
        });
    }

    best.total_best = best.iteration_best.clone();
    let result = match best.total_best {
        Some(solution) => {
            let schedule = materialize(workflow, &solution.assignment(), platform)?;
            IwdResult::Scheduled { solution, schedule }
        }
        None => {
            let best_infeasible = cheapest_rejected.expect("at least one iteration ran");
            let schedule = materialize(workflow, &best_infeasible.assignment(), platform)?;
            IwdResult::NoFeasibleSchedule { best_infeasible, schedule }
        }
    };
    Ok(IwdOutcome { result, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resource::CloudProfile;
    use crate::workflow::{DataEdge, Task};

    fn record(n: usize, cost: f64) -> VisitRecord {
        VisitRecord { node: NodeId(n), exec_time: cost, exec_cost: cost }
    }

    fn drop_with(task: usize, records: &[VisitRecord]) -> WaterDrop {
        WaterDrop {
            task,
            velocity: 4.0,
            carried_soil: 0.0,
            visited: records.iter().map(|r| r.node).collect(),
            records: records.to_vec(),
        }
    }

    fn nine_task_workflow() -> Workflow {
        let tasks = (1..=9).map(|i| Task::new(format!("t{i}"), 1000.0 * i as f64)).collect();
        let e = |p: usize, c: usize| DataEdge::new(format!("t{p}"), format!("t{c}"), 10.0);
        let edges =
            vec![e(1, 2), e(1, 3), e(2, 4), e(2, 5), e(3, 6), e(4, 7), e(5, 7), e(6, 8), e(7, 9), e(8, 9)];
        Workflow::new("nine", tasks, edges, None).unwrap()
    }

    #[test]
    fn initialize_spreads_one_drop_per_task() {
        let wf = nine_task_workflow();
        let platform = Platform::undegraded(CloudProfile::default(), 18).unwrap();
        let params = IwdParams::default();
        let (g, drops) = initialize(&wf, &platform, &params, 3).unwrap();
        assert_eq!(drops.len(), 9);
        assert!(g.edges().all(|(_, _, s)| s == 100.0));
        for d in &drops {
            assert_eq!(d.visited.len(), 1);
            assert_eq!(d.records.len(), 1);
            assert_eq!(d.velocity, 4.0);
            assert_eq!(d.carried_soil, 0.0);
        }
        let (_, again) = initialize(&wf, &platform, &params, 3).unwrap();
        assert_eq!(drops, again);

        let small = Platform::undegraded(CloudProfile::default(), 5).unwrap();
        assert!(matches!(initialize(&wf, &small, &params, 3), Err(IwdError::PoolTooSmall { .. })));
    }

    #[test]
    fn iteration_solution_picks_cheapest_visited() {
        let d = drop_with(0, &[record(3, 2.0), record(8, 4.0), record(1, 5.0)]);
        let s = iteration_solution(&[d]);
        assert_eq!(s.choices, vec![NodeId(3)]);
        assert_eq!(s.cost, 2.0);

        let s = iteration_solution(&[drop_with(0, &[record(4, 1.0)])]);
        assert_eq!(s.choices, vec![NodeId(4)]);

        let s = iteration_solution(&[drop_with(0, &[record(7, 3.0), record(2, 3.0)])]);
        assert_eq!(s.choices, vec![NodeId(2)]);
    }

    #[test]
    fn iteration_best_guard() {
        let sol = |cost: f64, time: f64| IterationSolution { choices: vec![], cost, exec_time: time };
        let mut best = BestSolutions::default();
        assert!(update_iteration_best(&sol(9.0, 1.0), &mut best, 10.0));
        assert!(!update_iteration_best(&sol(12.0, 1.0), &mut best, 10.0));
        assert!(!update_iteration_best(&sol(7.0, 10.0), &mut best, 10.0));
        assert_eq!(best.iteration_best_cost(), 9.0);
        assert!(update_iteration_best(&sol(7.0, 9.9), &mut best, 10.0));
        assert_eq!(best.iteration_best_cost(), 7.0);
    }

    #[test]
    fn reinforcement_examples() {
        assert!((reinforced_soil(100.0, 0.0, 3.0, 0.9) - 190.0).abs() < 1e-12);
        // 1.9*100 - 0.9*58335.6/10, by hand.
        assert!((reinforced_soil(100.0, 58335.6, 10.0, 0.9) - -5060.204).abs() < 1e-9);
        assert_eq!(reinforced_soil(100.0, 58335.6, 10.0, 0.0), 100.0);
    }

    #[test]
    fn reinforce_touches_only_hops_into_chosen_node() {
        let params = IwdParams::default();
        let mut g = ConstructionGraph::new(4, 100.0);
        let mut d = drop_with(0, &[record(0, 5.0), record(1, 1.0), record(2, 3.0)]);
        d.carried_soil = 50.0;
        let best = IterationSolution { choices: vec![NodeId(1)], cost: 10.0, exec_time: 1.0 };
        reinforce(&mut g, &[d], &best, &params);
        assert!((g.soil(NodeId(0), NodeId(1)) - (190.0 - 0.9 * 50.0 / 10.0)).abs() < 1e-12);
        assert_eq!(g.soil(NodeId(1), NodeId(2)), 100.0);
        assert_eq!(g.soil(NodeId(0), NodeId(3)), 100.0);
    }

    #[test]
    fn select_next_respects_visit_budget() {
        let params = IwdParams { vms_to_visit: 2, ..IwdParams::default() };
        let g = ConstructionGraph::new(3, 100.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = drop_with(0, &[record(0, 1.0), record(2, 1.0)]);
        assert!(matches!(select_next(&g, &d, &params, &mut rng), Err(IwdError::Exhausted)));
        let d = drop_with(0, &[record(0, 1.0), record(2, 1.0)]);
        let wide = IwdParams { vms_to_visit: 3, ..params };
        assert_eq!(select_next(&g, &d, &wide, &mut rng).unwrap(), NodeId(1));
    }

    #[test]
    fn run_finds_schedule_and_handles_zero_deadline() {
        let wf = nine_task_workflow();
        let platform = Platform::sampled(CloudProfile::default(), 18, 5).unwrap();
        let params = IwdParams::default();
        let out = run(&wf, &platform, &params, 1e6, 11).unwrap();
        assert!(out.found());
        assert!(out.schedule().total_cost > 0.0);
        assert_eq!(out.trace.rows.len(), 20);

        let out = run(&wf, &platform, &params, 0.0, 11).unwrap();
        assert!(!out.found());
        assert!(out.trace.rows.iter().all(|r| r.best_cost == f64::INFINITY));
    }

    #[test]
    fn trace_csv_format() {
        let t = ConvergenceTrace {
            rows: vec![
                TraceRow { iteration: 1, iter_cost: 0.5, best_cost: f64::INFINITY, best_makespan: None },
                TraceRow { iteration: 2, iter_cost: 0.25, best_cost: 0.25, best_makespan: Some(120.0) },
            ],
        };
        assert_eq!(
            t.to_csv(),
            "iteration,iter_cost,best_cost,best_makespan\n1,0.500000,inf,\n2,0.250000,0.250000,120.000000\n"
        );
    }
}

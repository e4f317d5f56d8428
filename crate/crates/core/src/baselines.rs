//! Reference schedulers: an exhaustive oracle for small instances and a
//! deterministic greedy heuristic. Both share the schedule model with the
//! water-drop search so comparisons isolate search quality.

use rayon::prelude::*;
use thiserror::Error;

use crate::resource::Platform;
use crate::schedule::{materialize, Assignment, NodeId, Schedule, ScheduleError, Timeline};
use crate::workflow::Workflow;

/// Largest search space the oracle will enumerate.
pub const ORACLE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("{pool}^{tasks} assignments exceed the oracle limit of {limit}")]
    TooLarge { pool: usize, tasks: usize, limit: u64 },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    Optimal { assignment: Assignment, schedule: Schedule },
    Infeasible,
}

impl OracleOutcome {
    pub fn schedule(&self) -> Option<&Schedule> {
        match self {
            OracleOutcome::Optimal { schedule, .. } => Some(schedule),
            OracleOutcome::Infeasible => None,
        }
    }
}

/// Number of total assignments, if within the oracle limit.
pub fn search_space(pool: usize, tasks: usize) -> Option<u64> {
    u32::try_from(tasks)
        .ok()
        .and_then(|t| (pool as u64).checked_pow(t))
        .filter(|&n| n <= ORACLE_LIMIT)
}

/// Decodes the `index`-th assignment in lexicographic order.
pub fn nth_assignment(index: u64, pool: usize, tasks: usize) -> Assignment {
    let mut nodes = vec![NodeId(0); tasks];
    let mut rest = index;
    for slot in nodes.iter_mut().rev() {
        *slot = NodeId((rest % pool as u64) as usize);
        rest /= pool as u64;
    }
    Assignment(nodes)
}

/// Minimum-TEC schedule with makespan within `deadline`, over every total
/// assignment. Ties go to the lexicographically smallest assignment, so the
/// result does not depend on enumeration order.
pub fn exhaustive_oracle(
    workflow: &Workflow,
    platform: &Platform,
    deadline: f64,
) -> Result<OracleOutcome, BaselineError> {
    let (pool, tasks) = (platform.len(), workflow.len());
    let total = search_space(pool, tasks).ok_or(BaselineError::TooLarge {
        pool,
        tasks,
        limit: ORACLE_LIMIT,
    })?;
    // Fail early on a structurally bad workflow.
    workflow.topological_indices().map_err(ScheduleError::from)?;

    let best = (0..total)
        .into_par_iter()
        .filter_map(|i| {
            let a = nth_assignment(i, pool, tasks);
            let s = materialize(workflow, &a, platform).ok()?;
            s.is_feasible(deadline).then_some((s.total_cost, i))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    Ok(match best {
        Some((_, i)) => {
            let assignment = nth_assignment(i, pool, tasks);
            let schedule = materialize(workflow, &assignment, platform)?;
            OracleOutcome::Optimal { assignment, schedule }
        }
        None => OracleOutcome::Infeasible,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyOutcome {
    pub assignment: Assignment,
    pub schedule: Schedule,
    pub feasible: bool,
}

/// Topological pass; each task goes to the node with the lowest projected TEC
/// whose projected makespan stays within the deadline, or failing that to the
/// node with the lowest projected makespan.
pub fn greedy_cheapest_feasible(
    workflow: &Workflow,
    platform: &Platform,
    deadline: f64,
) -> Result<GreedyOutcome, BaselineError> {
    let order = workflow.topological_indices().map_err(ScheduleError::from)?;
    let mut timeline = Timeline::new(workflow, platform);
    let mut nodes = vec![NodeId(0); workflow.len()];

    for task in order {
        let mut within: Option<(f64, f64, NodeId)> = None;
        let mut fastest: Option<(f64, f64, NodeId)> = None;
        for node in platform.node_ids() {
            let mut trial = timeline.clone();
            trial.place(task, node)?;
            let (tec, tet) = (trial.total_cost(), trial.makespan());
            let price = platform.vm(node).cost_per_period;
            if tet <= deadline {
                let key = (tec, price, node);
                if within.is_none_or(|w| lex_less(key, w)) {
                    within = Some(key);
                }
            }
            let key = (tet, tec, node);
            if fastest.is_none_or(|f| lex_less(key, f)) {
                fastest = Some(key);
            }
        }
        let chosen = within.or(fastest).expect("platform has nodes").2;
        timeline.place(task, chosen)?;
        nodes[task] = chosen;
    }

    let schedule = timeline.into_schedule();
    let feasible = schedule.is_feasible(deadline);
    Ok(GreedyOutcome { assignment: Assignment(nodes), schedule, feasible })
}

fn lex_less(a: (f64, f64, NodeId), b: (f64, f64, NodeId)) -> bool {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)).is_lt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resource::CloudProfile;
    use crate::schedule::verify;
    use crate::workflow::{DataEdge, Task};

    fn three_types() -> Platform {
        let profile = CloudProfile::default();
        // m1.small, m1.medium, m1.large
        Platform::undegraded(profile, 3).unwrap()
    }

    #[test]
    fn nth_assignment_is_lexicographic() {
        assert_eq!(nth_assignment(0, 3, 2).0, vec![NodeId(0), NodeId(0)]);
        assert_eq!(nth_assignment(1, 3, 2).0, vec![NodeId(0), NodeId(1)]);
        assert_eq!(nth_assignment(5, 3, 2).0, vec![NodeId(1), NodeId(2)]);
        assert_eq!(search_space(3, 4), Some(81));
        assert_eq!(search_space(18, 30), None);
    }

    #[test]
    fn single_task_goes_to_cheapest_node() {
        let wf = Workflow::new("one", vec![Task::new("T", 5000.0)], vec![], None).unwrap();
        let p = three_types();
        let out = exhaustive_oracle(&wf, &p, 1e9).unwrap();
        let OracleOutcome::Optimal { assignment, schedule } = out else { panic!() };
        assert_eq!(assignment.0, vec![NodeId(0)]);
        assert_eq!(schedule.total_cost, 0.06);
    }

    #[test]
    fn zero_deadline_is_infeasible() {
        let wf = Workflow::new("one", vec![Task::new("T", 5000.0)], vec![], None).unwrap();
        assert_eq!(exhaustive_oracle(&wf, &three_types(), 0.0).unwrap(), OracleOutcome::Infeasible);
    }

    #[test]
    fn refuses_large_instances() {
        let tasks = (0..30).map(|i| Task::new(format!("t{i:02}"), 1.0)).collect();
        let wf = Workflow::new("wide", tasks, vec![], None).unwrap();
        let p = Platform::undegraded(CloudProfile::default(), 18).unwrap();
        assert!(matches!(exhaustive_oracle(&wf, &p, 1.0), Err(BaselineError::TooLarge { .. })));
    }

    #[test]
    fn greedy_uses_cheapest_type_when_unconstrained() {
        let wf = Workflow::new(
            "d",
            vec![Task::new("A", 1e4), Task::new("B", 2e4), Task::new("C", 3e4), Task::new("D", 1e4)],
            vec![
                DataEdge::new("A", "B", 5.0),
                DataEdge::new("A", "C", 5.0),
                DataEdge::new("B", "D", 5.0),
                DataEdge::new("C", "D", 5.0),
            ],
            None,
        )
        .unwrap();
        let p = Platform::undegraded(CloudProfile::default(), 12).unwrap();
        let g = greedy_cheapest_feasible(&wf, &p, 1e9).unwrap();
        assert!(g.feasible);
        assert!(g.assignment.0.iter().all(|&n| p.vm(n).name == "m1.small"));
        assert!(verify(&g.schedule, &wf, &p).is_empty());
        assert_eq!(g, greedy_cheapest_feasible(&wf, &p, 1e9).unwrap());
    }

    #[test]
    fn greedy_falls_back_to_fast_nodes() {
        let wf = Workflow::new("one", vec![Task::new("T", 1e5)], vec![], None).unwrap();
        let p = Platform::undegraded(CloudProfile::default(), 6).unwrap();
        // Nothing meets a 1 s deadline; the fastest node wins.
        let g = greedy_cheapest_feasible(&wf, &p, 1.0).unwrap();
        assert!(!g.feasible);
        assert_eq!(p.vm(g.assignment.node(0)).name, "m3.xlarge");
    }
}

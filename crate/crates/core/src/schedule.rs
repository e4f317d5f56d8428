//! Turning a task→VM assignment into a concrete schedule `S = (R, M, TEC, TET)`.
//!
//! Timing rules:
//! * every VM in the assignment is requested at time 0 and becomes usable
//!   after the profile's boot time; its billed lease is `[0, last task end]`;
//! * tasks are placed in topological order (ties by id) and never overlap on
//!   a node;
//! * a task starts once its node is free and every parent has finished and
//!   shipped its output (no transfer between tasks on the same node);
//! * a task's end is its start plus its processing time, i.e. execution plus
//!   the incoming transfers from parents on other nodes.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::resource::{transfer_time, ModelError, Platform, VmType};
use crate::workflow::{Workflow, WorkflowError};

/// Index of a VM node in a [`Platform`] pool.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("task {0} is not assigned")]
    Unassigned(String),
    #[error("assignment covers {got} tasks, workflow has {expected}")]
    AssignmentSize { expected: usize, got: usize },
    #[error("node {node} is outside the pool of {pool} nodes")]
    UnknownNode { node: NodeId, pool: usize },
    #[error("no placements")]
    Empty,
}

/// Total task→node map, indexed by the workflow's task order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment(pub Vec<NodeId>);

impl Assignment {
    pub fn uniform(tasks: usize, node: NodeId) -> Self {
        Assignment(vec![node; tasks])
    }

    /// Builds from `(task id, node)` pairs; every task must appear.
    pub fn from_pairs<'a>(
        workflow: &Workflow,
        pairs: impl IntoIterator<Item = (&'a str, NodeId)>,
    ) -> Result<Self, ScheduleError> {
        let mut slots = vec![None; workflow.len()];
        for (id, node) in pairs {
            let i = workflow
                .task_index(id)
                .ok_or_else(|| WorkflowError::UnknownTask(id.to_string()))?;
            slots[i] = Some(node);
        }
        slots
            .into_iter()
            .enumerate()
            .map(|(i, n)| n.ok_or_else(|| ScheduleError::Unassigned(workflow.task(i).id.clone())))
            .collect::<Result<Vec<_>, _>>()
            .map(Assignment)
    }

    pub fn node(&self, task: usize) -> NodeId {
        self.0[task]
    }
}

/// `m = (t, r, ST, ET)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPlacement {
    pub task: String,
    pub node: NodeId,
    pub start: f64,
    pub end: f64,
}

/// A VM in `R` with its billed lease window `[LST, LET]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeasedResource {
    pub node: NodeId,
    pub vm_type: VmType,
    pub lease_start: f64,
    pub lease_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Sorted by node.
    pub resources: Vec<LeasedResource>,
    /// In placement (topological) order.
    pub placements: Vec<TaskPlacement>,
    /// TEC.
    pub total_cost: f64,
    /// TET.
    pub makespan: f64,
}

impl Schedule {
    pub fn is_feasible(&self, deadline: f64) -> bool {
        is_feasible(self, deadline)
    }
}

/// Billed cost: every started period is charged in full.
pub fn total_cost(resources: &[LeasedResource], billing_period: f64) -> f64 {
    resources
        .iter()
        .map(|r| r.vm_type.cost_per_period * billed_periods(r.lease_end - r.lease_start, billing_period))
        .sum()
}

pub fn billed_periods(duration: f64, billing_period: f64) -> f64 {
    if duration <= 0.0 {
        0.0
    } else {
        (duration / billing_period).ceil()
    }
}

/// Latest placement end.
pub fn makespan(placements: &[TaskPlacement]) -> Result<f64, ScheduleError> {
    placements.iter().map(|p| p.end).reduce(f64::max).ok_or(ScheduleError::Empty)
}

/// Deadline is inclusive.
pub fn is_feasible(schedule: &Schedule, deadline: f64) -> bool {
    schedule.makespan <= deadline
}

/// Places `assignment` onto the platform and derives the full schedule.
pub fn materialize(
    workflow: &Workflow,
    assignment: &Assignment,
    platform: &Platform,
) -> Result<Schedule, ScheduleError> {
    if assignment.0.len() != workflow.len() {
        return Err(ScheduleError::AssignmentSize {
            expected: workflow.len(),
            got: assignment.0.len(),
        });
    }
    let order = workflow.topological_indices()?;
    let mut timeline = Timeline::new(workflow, platform);
    for task in order {
        timeline.place(task, assignment.node(task))?;
    }
    Ok(timeline.into_schedule())
}

/// Incremental schedule builder. Tasks must be placed parents-first.
#[derive(Debug, Clone)]
pub struct Timeline<'a> {
    workflow: &'a Workflow,
    platform: &'a Platform,
    assigned: Vec<Option<NodeId>>,
    start: Vec<f64>,
    end: Vec<f64>,
    // Time the node is next free; None until its first task.
    node_free: Vec<Option<f64>>,
    order: Vec<usize>,
}

impl<'a> Timeline<'a> {
    pub fn new(workflow: &'a Workflow, platform: &'a Platform) -> Self {
        Timeline {
            workflow,
            platform,
            assigned: vec![None; workflow.len()],
            start: vec![0.0; workflow.len()],
            end: vec![0.0; workflow.len()],
            node_free: vec![None; platform.len()],
            order: Vec::with_capacity(workflow.len()),
        }
    }

    pub fn place(&mut self, task: usize, node: NodeId) -> Result<(), ScheduleError> {
        if node.0 >= self.platform.len() {
            return Err(ScheduleError::UnknownNode { node, pool: self.platform.len() });
        }
        let wf = self.workflow;
        let bandwidth = self.platform.profile.bandwidth;
        let mut ready: f64 = 0.0;
        for &(parent, volume) in wf.parents_of(task) {
            let parent_node = self.assigned[parent].ok_or_else(|| ModelError::UnassignedParent {
                task: wf.task(task).id.clone(),
                parent: wf.task(parent).id.clone(),
            })?;
            ready = ready.max(self.end[parent] + transfer_time(volume, bandwidth, parent_node == node));
        }
        let available = self.node_free[node.0].unwrap_or(self.platform.profile.boot_time);
        self.assigned[task] = Some(node);
        let start = ready.max(available);
        let end = start + self.platform.processing_time(wf, task, &self.assigned)?;
        self.start[task] = start;
        self.end[task] = end;
        self.node_free[node.0] = Some(end);
        self.order.push(task);
        Ok(())
    }

    /// Makespan of what has been placed so far (0 when empty).
    pub fn makespan(&self) -> f64 {
        self.order.iter().map(|&t| self.end[t]).fold(0.0, f64::max)
    }

    pub fn resources(&self) -> Vec<LeasedResource> {
        self.node_free
            .iter()
            .enumerate()
            .filter_map(|(n, free)| {
                free.map(|lease_end| LeasedResource {
                    node: NodeId(n),
                    vm_type: self.platform.nodes[n].clone(),
                    lease_start: 0.0,
                    lease_end,
                })
            })
            .collect()
    }

    /// Billed cost of what has been placed so far.
    pub fn total_cost(&self) -> f64 {
        total_cost(&self.resources(), self.platform.profile.billing_period)
    }

    pub fn into_schedule(self) -> Schedule {
        let resources = self.resources();
        let placements: Vec<TaskPlacement> = self
            .order
            .iter()
            .map(|&t| TaskPlacement {
                task: self.workflow.task(t).id.clone(),
                node: self.assigned[t].expect("placed task is assigned"),
                start: self.start[t],
                end: self.end[t],
            })
            .collect();
        let total_cost = total_cost(&resources, self.platform.profile.billing_period);
        let makespan = makespan(&placements).unwrap_or(0.0);
        Schedule { resources, placements, total_cost, makespan }
    }
}

/// A broken schedule invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleViolation {
    MissingTask(String),
    DuplicatePlacement(String),
    NonPositiveDuration(String),
    Dependency { parent: String, child: String },
    Overlap { node: NodeId, first: String, second: String },
    LeaseCoverage { task: String, node: NodeId },
    UnleasedNode(NodeId),
    CostMismatch { stored: f64, recomputed: f64 },
    MakespanMismatch { stored: f64, recomputed: f64 },
}

/// Checks dependency respect, node exclusivity, lease coverage and the stored
/// TEC/TET against the workflow and platform the schedule was built for.
pub fn verify(schedule: &Schedule, workflow: &Workflow, platform: &Platform) -> Vec<ScheduleViolation> {
    use ScheduleViolation::*;
    let mut out = Vec::new();
    let mut by_task: Vec<Option<&TaskPlacement>> = vec![None; workflow.len()];
    for p in &schedule.placements {
        match workflow.task_index(&p.task) {
            Some(i) if by_task[i].is_none() => by_task[i] = Some(p),
            _ => out.push(DuplicatePlacement(p.task.clone())),
        }
        if !(p.end > p.start && p.start >= 0.0) {
            out.push(NonPositiveDuration(p.task.clone()));
        }
    }
    for (i, p) in by_task.iter().enumerate() {
        if p.is_none() {
            out.push(MissingTask(workflow.task(i).id.clone()));
        }
    }

    for (child, cp) in by_task.iter().enumerate() {
        let Some(cp) = cp else { continue };
        for &(parent, volume) in workflow.parents_of(child) {
            let Some(pp) = by_task[parent] else { continue };
            let ready = pp.end + transfer_time(volume, platform.profile.bandwidth, pp.node == cp.node);
            if cp.start < ready {
                out.push(Dependency { parent: pp.task.clone(), child: cp.task.clone() });
            }
        }
    }

    let mut on_node: Vec<Vec<&TaskPlacement>> = vec![Vec::new(); platform.len()];
    for p in &schedule.placements {
        if let Some(slot) = on_node.get_mut(p.node.0) {
            slot.push(p);
        }
    }
    for (n, list) in on_node.iter_mut().enumerate() {
        list.sort_by(|a, b| a.start.total_cmp(&b.start));
        for w in list.windows(2) {
            if w[1].start < w[0].end {
                out.push(Overlap { node: NodeId(n), first: w[0].task.clone(), second: w[1].task.clone() });
            }
        }
    }

    let boot = platform.profile.boot_time;
    for p in &schedule.placements {
        match schedule.resources.iter().find(|r| r.node == p.node) {
            Some(r) if p.start >= r.lease_start + boot && p.end <= r.lease_end => {}
            Some(_) => out.push(LeaseCoverage { task: p.task.clone(), node: p.node }),
            None => out.push(UnleasedNode(p.node)),
        }
    }

    let tec = total_cost(&schedule.resources, platform.profile.billing_period);
    if tec != schedule.total_cost {
        out.push(CostMismatch { stored: schedule.total_cost, recomputed: tec });
    }
    let tet = makespan(&schedule.placements).unwrap_or(0.0);
    if tet != schedule.makespan {
        out.push(MakespanMismatch { stored: schedule.makespan, recomputed: tet });
    }
    out
}

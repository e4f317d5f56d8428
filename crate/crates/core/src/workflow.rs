//! Workflow applications as directed acyclic graphs of tasks with data-flow edges.
//!
//! A [`Workflow`] can be assembled from arbitrary parts with
//! [`Workflow::from_parts`] and checked with [`Workflow::validate`], or built
//! through [`Workflow::new`], which refuses anything that does not validate.
//! Every scheduling routine in the crate assumes a valid workflow.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};
use std::cmp::Reverse;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A unit of computation. `size` is the work volume in millions of instructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub size: f64,
}

impl Task {
    pub fn new(id: impl Into<String>, size: f64) -> Self {
        Task { id: id.into(), size }
    }
}

/// Data dependency from `parent` to `child`; `volume` is in megabytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataEdge {
    pub parent: String,
    pub child: String,
    pub volume: f64,
}

impl DataEdge {
    pub fn new(parent: impl Into<String>, child: impl Into<String>, volume: f64) -> Self {
        DataEdge { parent: parent.into(), child: child.into(), volume }
    }
}

/// A single broken workflow invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    Empty,
    DuplicateTask { task: String },
    NonPositiveSize { task: String },
    SelfLoop { task: String },
    UnknownEndpoint { parent: String, child: String, missing: String },
    DuplicateEdge { parent: String, child: String },
    NegativeVolume { parent: String, child: String },
    Cycle { tasks: Vec<String> },
    NoEntryTask,
    NoExitTask,
    NonPositiveDeadline,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "workflow has no tasks"),
            Violation::DuplicateTask { task } => write!(f, "duplicate task id {task}"),
            Violation::NonPositiveSize { task } => write!(f, "task {task} has non-positive size"),
            Violation::SelfLoop { task } => write!(f, "self-loop on {task}"),
            Violation::UnknownEndpoint { parent, child, missing } => {
                write!(f, "edge {parent}->{child} names unknown task {missing}")
            }
            Violation::DuplicateEdge { parent, child } => {
                write!(f, "duplicate edge {parent}->{child}")
            }
            Violation::NegativeVolume { parent, child } => {
                write!(f, "edge {parent}->{child} has negative volume")
            }
            Violation::Cycle { tasks } => write!(f, "cycle {{{}}}", tasks.join(",")),
            Violation::NoEntryTask => write!(f, "no entry task"),
            Violation::NoExitTask => write!(f, "no exit task"),
            Violation::NonPositiveDeadline => write!(f, "deadline must be positive"),
        }
    }
}

/// Outcome of [`Workflow::validate`]; empty means the workflow is valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkflowError {
    #[error("invalid workflow: {0}")]
    Invalid(ValidationReport),
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("cycle detected through tasks {{{}}}", .0.join(","))]
    Cycle(Vec<String>),
}

/// Immutable workflow DAG `W = (T, E)` with an optional deadline in seconds.
///
/// Tasks keep the order they were given in; that order defines the task index
/// used by [`crate::schedule::Assignment`].
#[derive(Debug, Clone, PartialEq)]
pub struct Workflow {
    name: String,
    tasks: Vec<Task>,
    edges: Vec<DataEdge>,
    deadline: Option<f64>,
    index: HashMap<String, usize>,
    // Adjacency only covers edges whose endpoints both exist.
    parents: Vec<Vec<(usize, f64)>>,
    children: Vec<Vec<(usize, f64)>>,
}

impl Workflow {
    /// Builds and validates.
    pub fn new(
        name: impl Into<String>,
        tasks: Vec<Task>,
        edges: Vec<DataEdge>,
        deadline: Option<f64>,
    ) -> Result<Self, WorkflowError> {
        let wf = Self::from_parts(name, tasks, edges, deadline);
        let report = wf.validate();
        if report.is_empty() {
            Ok(wf)
        } else {
            Err(WorkflowError::Invalid(report))
        }
    }

    /// Builds without validating. Self-loops and edges naming unknown tasks
    /// are kept but do not enter the adjacency structure.
    pub fn from_parts(
        name: impl Into<String>,
        tasks: Vec<Task>,
        edges: Vec<DataEdge>,
        deadline: Option<f64>,
    ) -> Self {
        let mut index = HashMap::with_capacity(tasks.len());
        for (i, t) in tasks.iter().enumerate() {
            index.entry(t.id.clone()).or_insert(i);
        }
        let mut parents = vec![Vec::new(); tasks.len()];
        let mut children = vec![Vec::new(); tasks.len()];
        for e in &edges {
            if let (Some(&p), Some(&c)) = (index.get(&e.parent), index.get(&e.child)) {
                if p == c {
                    continue;
                }
                parents[c].push((p, e.volume));
                children[p].push((c, e.volume));
            }
        }
        Workflow { name: name.into(), tasks, edges, deadline, index, parents, children }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn edges(&self) -> &[DataEdge] {
        &self.edges
    }

    pub fn deadline(&self) -> Option<f64> {
        self.deadline
    }

    pub fn with_deadline(mut self, deadline: Option<f64>) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn task_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn task(&self, index: usize) -> &Task {
        &self.tasks[index]
    }

    /// Incoming `(parent index, volume MB)` pairs of a task.
    pub fn parents_of(&self, index: usize) -> &[(usize, f64)] {
        &self.parents[index]
    }

    /// Outgoing `(child index, volume MB)` pairs of a task.
    pub fn children_of(&self, index: usize) -> &[(usize, f64)] {
        &self.children[index]
    }

    pub fn parents(&self, id: &str) -> Result<BTreeSet<&str>, WorkflowError> {
        let i = self.task_index(id).ok_or_else(|| WorkflowError::UnknownTask(id.to_string()))?;
        Ok(self.parents[i].iter().map(|&(p, _)| self.tasks[p].id.as_str()).collect())
    }

    pub fn children(&self, id: &str) -> Result<BTreeSet<&str>, WorkflowError> {
        let i = self.task_index(id).ok_or_else(|| WorkflowError::UnknownTask(id.to_string()))?;
        Ok(self.children[i].iter().map(|&(c, _)| self.tasks[c].id.as_str()).collect())
    }

    /// Checks every workflow invariant and lists each violation. Never fails.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.tasks.is_empty() {
            violations.push(Violation::Empty);
        }

        let mut seen = HashSet::new();
        for t in &self.tasks {
            if !seen.insert(t.id.as_str()) {
                violations.push(Violation::DuplicateTask { task: t.id.clone() });
            }
            if !(t.size > 0.0 && t.size.is_finite()) {
                violations.push(Violation::NonPositiveSize { task: t.id.clone() });
            }
        }

        let mut pairs = HashSet::new();
        for e in &self.edges {
            if e.parent == e.child {
                violations.push(Violation::SelfLoop { task: e.parent.clone() });
                continue;
            }
            for end in [&e.parent, &e.child] {
                if !self.index.contains_key(end) {
                    violations.push(Violation::UnknownEndpoint {
                        parent: e.parent.clone(),
                        child: e.child.clone(),
                        missing: end.clone(),
                    });
                }
            }
            if !pairs.insert((e.parent.as_str(), e.child.as_str())) {
                violations.push(Violation::DuplicateEdge {
                    parent: e.parent.clone(),
                    child: e.child.clone(),
                });
            }
            if !(e.volume >= 0.0 && e.volume.is_finite()) {
                violations.push(Violation::NegativeVolume {
                    parent: e.parent.clone(),
                    child: e.child.clone(),
                });
            }
        }

        if !self.tasks.is_empty() {
            if let Err(WorkflowError::Cycle(tasks)) = self.topological_indices() {
                violations.push(Violation::Cycle { tasks });
            }
            if self.parents.iter().all(|p| !p.is_empty()) {
                violations.push(Violation::NoEntryTask);
            }
            if self.children.iter().all(|c| !c.is_empty()) {
                violations.push(Violation::NoExitTask);
            }
        }

        if let Some(d) = self.deadline {
            if !(d > 0.0) {
                violations.push(Violation::NonPositiveDeadline);
            }
        }
        ValidationReport { violations }
    }

    /// Task ids in dependency order, ties broken lexicographically by id.
    pub fn topological_order(&self) -> Result<Vec<&str>, WorkflowError> {
        Ok(self
            .topological_indices()?
            .into_iter()
            .map(|i| self.tasks[i].id.as_str())
            .collect())
    }

    /// Kahn's algorithm over task indices with a min-heap keyed on the id.
    pub fn topological_indices(&self) -> Result<Vec<usize>, WorkflowError> {
        let n = self.tasks.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<(&str, usize)>> = indegree
            .iter()
            .enumerate()
            .filter(|&(_, &d)| d == 0)
            .map(|(i, _)| Reverse((self.tasks[i].id.as_str(), i)))
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse((_, i))) = ready.pop() {
            order.push(i);
            for &(c, _) in &self.children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(Reverse((self.tasks[c].id.as_str(), c)));
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            Err(WorkflowError::Cycle(self.find_cycle(&indegree)))
        }
    }

    /// Every task left with positive in-degree after Kahn's pass has a parent
    /// that is also left over, so walking parents backwards must revisit a task.
    fn find_cycle(&self, indegree: &[usize]) -> Vec<String> {
        let remaining = |i: usize| indegree[i] > 0;
        let start = (0..self.tasks.len())
            .filter(|&i| remaining(i))
            .min_by(|&a, &b| self.tasks[a].id.cmp(&self.tasks[b].id))
            .expect("cycle without remaining tasks");
        let mut position = BTreeMap::new();
        let mut path = Vec::new();
        let mut cur = start;
        while !position.contains_key(&cur) {
            position.insert(cur, path.len());
            path.push(cur);
            cur = self.parents[cur]
                .iter()
                .map(|&(p, _)| p)
                .filter(|&p| remaining(p))
                .min_by(|&a, &b| self.tasks[a].id.cmp(&self.tasks[b].id))
                .expect("remaining task without remaining parent");
        }
        let mut ids: Vec<String> =
            path[position[&cur]..].iter().map(|&i| self.tasks[i].id.clone()).collect();
        ids.sort();
        ids
    }
}

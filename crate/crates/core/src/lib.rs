//! Deadline-constrained, cost-minimizing workflow scheduling on a simulated
//! IaaS cloud, driven by an Intelligent Water Drops search.
//!
//! The modules build on each other bottom-up: [`workflow`] holds the task
//! DAG, [`resource`] the VM catalog and performance model, [`schedule`] turns
//! a task-to-VM assignment into a timed, priced plan. [`iwd`] searches for
//! cheap assignments, [`baselines`] provides an exhaustive oracle and a greedy
//! heuristic, and [`evaluator`] runs seeded trials over deadline sets.

pub mod baselines;
pub mod cli;
pub mod evaluator;
pub mod io;
pub mod iwd;
pub mod resource;
pub mod schedule;
pub mod workflow;

pub use resource::{CloudProfile, Platform, VmType};
pub use schedule::{Assignment, NodeId, Schedule};
pub use workflow::{DataEdge, Task, Workflow};

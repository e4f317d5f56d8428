use crate::resource::{exec_time, ModelError, VmType};
use crate::schedule::NodeId;

use super::graph::ConstructionGraph;
use super::params::IwdParams;

/// Execution time and cost a drop noted on one visited VM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisitRecord {
    pub node: NodeId,
    pub exec_time: f64,
    pub exec_cost: f64,
}

/// One agent per task, walking the construction graph to sample VMs.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterDrop {
    /// Task index in the workflow.
    pub task: usize,
    pub velocity: f64,
    pub carried_soil: f64,
    /// In visit order, source first.
    pub visited: Vec<NodeId>,
    /// One per visited node, same order as `visited`.
    pub records: Vec<VisitRecord>,
}

impl WaterDrop {
    /// A fresh drop sitting on `source`.
    pub fn new(task: usize, source: VisitRecord, params: &IwdParams) -> Self {
        WaterDrop {
            task,
            velocity: params.initial_velocity,
            carried_soil: params.initial_drop_soil,
            visited: vec![source.node],
            records: vec![source],
        }
    }

    pub fn current(&self) -> NodeId {
        *self.visited.last().expect("a drop always has a source node")
    }

    /// Nodes not yet visited, in node order.
    pub fn unvisited(&self, pool: usize) -> Vec<NodeId> {
        (0..pool).map(NodeId).filter(|n| !self.visited.contains(n)).collect()
    }

    /// Edges walked so far as `(from, to)`.
    pub fn hops(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.visited.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Task execution time on a VM relative to the deadline.
pub fn heuristic_undesirability(
    task_size: f64,
    vm: &VmType,
    degradation: f64,
    deadline: f64,
) -> Result<f64, ModelError> {
    Ok(exec_time(task_size, vm, degradation)? / deadline)
}

/// Quantities produced by a single move, for inspection and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveUpdate {
    pub velocity: f64,
    pub travel_time: f64,
    pub delta_soil: f64,
    pub edge_soil: f64,
}

/// Moves `drop` to `arrival.node` and applies, in order, the velocity update,
/// the travel time from the undesirability `hud`, the soil removed from the
/// edge, the local edge soil update and the drop's carried-soil update.
pub fn advance(
    graph: &mut ConstructionGraph,
    drop: &mut WaterDrop,
    arrival: VisitRecord,
    hud: f64,
    params: &IwdParams,
) -> MoveUpdate {
    let from = drop.current();
    let to = arrival.node;
    let soil = graph.soil(from, to);

    let velocity = drop.velocity + params.velocity.apply(soil);
    let travel_time = hud / velocity;
    let delta_soil = params.soil.apply(travel_time);
    let edge_soil = (1.0 - params.rho_n) * soil - params.rho_n * delta_soil;

    graph.set_soil(from, to, edge_soil);
    drop.velocity = velocity;
    drop.carried_soil += delta_soil;
    drop.visited.push(to);
    drop.records.push(arrival);
    MoveUpdate { velocity, travel_time, delta_soil, edge_soil }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(n: usize) -> VisitRecord {
        VisitRecord { node: NodeId(n), exec_time: 1.0, exec_cost: 1.0 }
    }

    #[test]
    fn hud_examples() {
        let vm = VmType::new("v", 1000.0, 0.06);
        assert!((heuristic_undesirability(10_000.0, &vm, 0.0, 100.0).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(heuristic_undesirability(10_000.0, &vm, 0.0, 10.0).unwrap(), 1.0);
        let fast = VmType::new("f", 2000.0, 0.12);
        assert!(
            heuristic_undesirability(500.0, &fast, 0.1, 50.0).unwrap()
                < heuristic_undesirability(500.0, &vm, 0.1, 50.0).unwrap()
        );
    }

    #[test]
    fn advance_matches_hand_evaluation() {
        // vel 4, soil 100, HUD 0.1, default coefficients, rho_n 0.9.
        // Oracle values evaluated independently:
        //   vel' = 4 + 1000/100.01
        //   time = 0.1 / vel'
        //   dsoil = 1000 / (0.01 + time)
        //   soil' = 0.1*100 - 0.9*dsoil
        let params = IwdParams::default();
        let mut g = ConstructionGraph::new(2, 100.0);
        let mut d = WaterDrop::new(0, record(0), &params);
        let u = advance(&mut g, &mut d, record(1), 0.1, &params);
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(u.velocity, 13.99900009999) < 1e-12);
        assert!(rel(u.travel_time, 0.007143367332361933) < 1e-12);
        assert!(rel(u.delta_soil, 58331.59732348946) < 1e-12);
        assert!(rel(u.edge_soil, -52488.437591140515) < 1e-12);
        assert_eq!(g.soil(NodeId(1), NodeId(0)), u.edge_soil);
        assert_eq!(d.carried_soil, u.delta_soil);
        assert_eq!(d.visited, vec![NodeId(0), NodeId(1)]);
        assert_eq!(d.records.len(), 2);
    }

    #[test]
    fn unvisited_and_hops() {
        let params = IwdParams::default();
        let mut g = ConstructionGraph::new(4, 100.0);
        let mut d = WaterDrop::new(0, record(2), &params);
        advance(&mut g, &mut d, record(0), 0.1, &params);
        assert_eq!(d.unvisited(4), vec![NodeId(1), NodeId(3)]);
        assert_eq!(d.hops().collect::<Vec<_>>(), vec![(NodeId(2), NodeId(0))]);
    }
}

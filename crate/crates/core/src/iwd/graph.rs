use crate::schedule::NodeId;

/// Fully connected graph over the VM pool with a symmetric soil matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionGraph {
    nodes: usize,
    soil: Vec<f64>,
}

impl ConstructionGraph {
    pub fn new(nodes: usize, initial_soil: f64) -> Self {
        let mut soil = vec![initial_soil; nodes * nodes];
        for i in 0..nodes {
            soil[i * nodes + i] = 0.0;
        }
        ConstructionGraph { nodes, soil }
    }

    pub fn len(&self) -> usize {
        self.nodes
    }

    pub fn is_empty(&self) -> bool {
        self.nodes == 0
    }

    pub fn soil(&self, from: NodeId, to: NodeId) -> f64 {
        debug_assert_ne!(from, to, "no self-edges");
        self.soil[from.0 * self.nodes + to.0]
    }

    pub fn set_soil(&mut self, a: NodeId, b: NodeId, value: f64) {
        debug_assert_ne!(a, b, "no self-edges");
        self.soil[a.0 * self.nodes + b.0] = value;
        self.soil[b.0 * self.nodes + a.0] = value;
    }

    /// Soil on every edge, each unordered pair once.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        (0..self.nodes).flat_map(move |i| {
            (i + 1..self.nodes).map(move |j| (NodeId(i), NodeId(j), self.soil[i * self.nodes + j]))
        })
    }
}

/// Soil of `from→to` shifted so the smallest candidate soil is zero whenever
/// any candidate soil is negative.
pub fn g_soil(graph: &ConstructionGraph, from: NodeId, candidates: &[NodeId], to: NodeId) -> f64 {
    let min = candidates
        .iter()
        .map(|&l| graph.soil(from, l))
        .fold(f64::INFINITY, f64::min);
    let s = graph.soil(from, to);
    if min >= 0.0 {
        s
    } else {
        s - min
    }
}

/// `1 / (ε + g(soil))`.
pub fn soil_attraction(graph: &ConstructionGraph, from: NodeId, candidates: &[NodeId], to: NodeId, epsilon: f64) -> f64 {
    1.0 / (epsilon + g_soil(graph, from, candidates, to))
}

/// Probability of moving from `from` to each candidate, in candidate order.
pub fn edge_probabilities(
    graph: &ConstructionGraph,
    from: NodeId,
    candidates: &[NodeId],
    epsilon: f64,
) -> Vec<f64> {
    let weights: Vec<f64> = candidates
        .iter()
        .map(|&to| soil_attraction(graph, from, candidates, to, epsilon))
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        // Only reachable once soils overflow; fall back to a uniform choice.
        return vec![1.0 / candidates.len() as f64; candidates.len()];
    }
    weights.into_iter().map(|w| w / total).collect()
}

/// Index of the roulette slot hit by `u ∈ [0, 1)`. Slots are laid out in the
/// given order, so `u = 0` selects the first slot with positive weight.
pub fn roulette(probabilities: &[f64], u: f64) -> usize {
    let total: f64 = probabilities.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, &p) in probabilities.iter().enumerate() {
        acc += p;
        if target < acc {
            return i;
        }
    }
    // Rounding can leave `target` just past the last boundary.
    probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(probabilities.len() - 1)
}

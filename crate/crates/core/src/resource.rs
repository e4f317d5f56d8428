//! IaaS resource model: VM catalog, billing, bandwidth and performance
//! degradation, plus the timing and cost primitives every scheduler shares.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schedule::NodeId;
use crate::workflow::Workflow;

/// MIPS granted per ECU of core speed.
pub const DEFAULT_ECU_TO_MIPS: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("degradation {0} outside [0, 1)")]
    Degradation(f64),
    #[error("parent {parent} of task {task} is not assigned")]
    UnassignedParent { task: String, parent: String },
    #[error("invalid cloud profile: {0}")]
    Profile(String),
}

/// One row of the provider catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmType {
    pub name: String,
    /// MIPS.
    pub speed: f64,
    /// Price of one billing period.
    pub cost_per_period: f64,
    pub cores: u32,
    pub memory_gb: f64,
}

impl VmType {
    pub fn new(name: impl Into<String>, speed: f64, cost_per_period: f64) -> Self {
        VmType { name: name.into(), speed, cost_per_period, cores: 1, memory_gb: 0.0 }
    }
}

/// Capped normal distribution of per-VM performance loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationModel {
    pub mean: f64,
    pub stddev: f64,
    pub cap: f64,
}

impl DegradationModel {
    pub const NONE: DegradationModel = DegradationModel { mean: 0.0, stddev: 0.0, cap: 0.0 };

    fn normal(&self) -> Normal<f64> {
        Normal::new(self.mean, self.stddev).expect("stddev validated non-negative")
    }

    /// One raw draw from the underlying normal, without clamping.
    pub fn draw_unclamped<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.normal().sample(rng)
    }

    /// One draw clamped to `[0, cap]`.
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.draw_unclamped(rng).clamp(0.0, self.cap)
    }
}

/// Everything about the provider that is not a specific leased machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudProfile {
    pub catalog: Vec<VmType>,
    /// MB/s between any two VMs.
    pub bandwidth: f64,
    /// Seconds.
    pub billing_period: f64,
    /// Seconds from lease start until the VM can run tasks.
    pub boot_time: f64,
    pub degradation: DegradationModel,
}

impl Default for CloudProfile {
    /// EC2-style catalog, hourly billing, 97 s boot, degradation N(0.12, 0.10) capped at 0.24.
    fn default() -> Self {
        let row = |name: &str, memory_gb: f64, ecu: f64, cores: u32, cost: f64| VmType {
            name: name.to_string(),
            speed: ecu * DEFAULT_ECU_TO_MIPS,
            cost_per_period: cost,
            cores,
            memory_gb,
        };
        CloudProfile {
            catalog: vec![
                row("m1.small", 1.7, 1.0, 1, 0.06),
                row("m1.medium", 3.75, 2.0, 1, 0.12),
                row("m1.large", 7.5, 2.0, 2, 0.24),
                row("m1.xlarge", 15.0, 2.0, 4, 0.48),
                row("m3.xlarge", 15.0, 3.25, 4, 0.50),
                row("m3.xxlarge", 30.0, 3.25, 8, 1.00),
            ],
            bandwidth: 20.0,
            billing_period: 3600.0,
            boot_time: 97.0,
            degradation: DegradationModel { mean: 0.12, stddev: 0.10, cap: 0.24 },
        }
    }
}

impl CloudProfile {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Profile(m));
        if self.catalog.is_empty() {
            return bad("empty catalog".into());
        }
        for vm in &self.catalog {
            if !(vm.speed > 0.0 && vm.speed.is_finite()) {
                return bad(format!("{}: speed must be positive", vm.name));
            }
            if !(vm.cost_per_period > 0.0 && vm.cost_per_period.is_finite()) {
                return bad(format!("{}: cost must be positive", vm.name));
            }
        }
        if !(self.bandwidth > 0.0) {
            return bad("bandwidth must be positive".into());
        }
        if !(self.billing_period > 0.0) {
            return bad("billing period must be positive".into());
        }
        if !(self.boot_time >= 0.0) {
            return bad("boot time must be non-negative".into());
        }
        let d = self.degradation;
        if !(0.0 <= d.mean && d.mean <= d.cap && d.cap < 1.0) {
            return bad("degradation requires 0 <= mean <= cap < 1".into());
        }
        if !(d.stddev >= 0.0) {
            return bad("degradation stddev must be non-negative".into());
        }
        Ok(())
    }

    /// Lowest price per period; ties go to the slower type.
    pub fn cheapest_type(&self) -> &VmType {
        self.catalog
            .iter()
            .min_by(|a, b| {
                a.cost_per_period
                    .total_cmp(&b.cost_per_period)
                    .then(a.speed.total_cmp(&b.speed))
            })
            .expect("catalog is non-empty")
    }

    /// Highest speed; ties go to the cheaper type.
    pub fn fastest_type(&self) -> &VmType {
        self.catalog
            .iter()
            .max_by(|a, b| {
                a.speed
                    .total_cmp(&b.speed)
                    .then(b.cost_per_period.total_cmp(&a.cost_per_period))
            })
            .expect("catalog is non-empty")
    }

    /// `size` VM nodes cycling through the catalog in order.
    pub fn round_robin_pool(&self, size: usize) -> Vec<VmType> {
        self.catalog.iter().cycle().take(size).cloned().collect()
    }
}

/// Per-node performance loss for one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationSample(Vec<f64>);

impl DegradationSample {
    pub fn zero(nodes: usize) -> Self {
        DegradationSample(vec![0.0; nodes])
    }

    /// Wraps explicit values; each must lie in `[0, 1)`.
    pub fn from_values(values: Vec<f64>) -> Result<Self, ModelError> {
        if let Some(&bad) = values.iter().find(|&&v| !(0.0..1.0).contains(&v)) {
            return Err(ModelError::Degradation(bad));
        }
        Ok(DegradationSample(values))
    }

    pub fn get(&self, node: NodeId) -> f64 {
        self.0[node.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// ChaCha stream reserved for degradation draws, apart from the search's stream 0.
const DEGRADATION_STREAM: u64 = 1;

/// One clamped draw per node, deterministic in `seed`.
pub fn sample_degradation(profile: &CloudProfile, nodes: usize, seed: u64) -> DegradationSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(DEGRADATION_STREAM);
    DegradationSample((0..nodes).map(|_| profile.degradation.draw(&mut rng)).collect())
}

/// Seconds to run `task_size` MI on `vm` slowed by `degradation`.
pub fn exec_time(task_size: f64, vm: &VmType, degradation: f64) -> Result<f64, ModelError> {
    if !(0.0..1.0).contains(&degradation) {
        return Err(ModelError::Degradation(degradation));
    }
    Ok(task_size / (vm.speed * (1.0 - degradation)))
}

/// Seconds to ship `volume` MB; free between tasks on the same VM.
pub fn transfer_time(volume: f64, bandwidth: f64, same_vm: bool) -> f64 {
    if same_vm {
        0.0
    } else {
        volume / bandwidth
    }
}

/// Execution cost of a task, pricing the VM per second of use.
pub fn task_cost(exec_time: f64, vm: &VmType, billing_period: f64) -> f64 {
    exec_time * vm.cost_per_period / billing_period
}

/// The concrete machines available in one trial: a pool of VM nodes with a
/// degradation value each, on top of a provider profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Platform {
    pub profile: CloudProfile,
    pub nodes: Vec<VmType>,
    pub degradation: DegradationSample,
}

impl Platform {
    pub fn new(
        profile: CloudProfile,
        nodes: Vec<VmType>,
        degradation: DegradationSample,
    ) -> Result<Self, ModelError> {
        profile.validate()?;
        if nodes.len() != degradation.len() {
            return Err(ModelError::Profile(format!(
                "{} nodes but {} degradation values",
                nodes.len(),
                degradation.len()
            )));
        }
        Ok(Platform { profile, nodes, degradation })
    }

    /// Round-robin pool with zero degradation.
    pub fn undegraded(profile: CloudProfile, pool_size: usize) -> Result<Self, ModelError> {
        let nodes = profile.round_robin_pool(pool_size);
        Self::new(profile, nodes, DegradationSample::zero(pool_size))
    }

    /// Round-robin pool with degradation sampled from `seed`.
    pub fn sampled(profile: CloudProfile, pool_size: usize, seed: u64) -> Result<Self, ModelError> {
        let nodes = profile.round_robin_pool(pool_size);
        let degradation = sample_degradation(&profile, pool_size, seed);
        Self::new(profile, nodes, degradation)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn vm(&self, node: NodeId) -> &VmType {
        &self.nodes[node.0]
    }

    /// Execution time of `task_size` MI on `node`.
    pub fn exec_time(&self, task_size: f64, node: NodeId) -> f64 {
        exec_time(task_size, self.vm(node), self.degradation.get(node))
            .expect("platform degradation validated")
    }

    /// Per-second-priced cost of running `task_size` MI on `node`.
    pub fn exec_cost(&self, task_size: f64, node: NodeId) -> f64 {
        task_cost(self.exec_time(task_size, node), self.vm(node), self.profile.billing_period)
    }

    /// Execution time plus every incoming transfer from a parent on another node.
    pub fn processing_time(
        &self,
        workflow: &Workflow,
        task: usize,
        assignment: &[Option<NodeId>],
    ) -> Result<f64, ModelError> {
        let node = assignment[task].expect("task itself is assigned");
        let mut total = self.exec_time(workflow.task(task).size, node);
        for &(parent, volume) in workflow.parents_of(task) {
            let parent_node = assignment[parent].ok_or_else(|| ModelError::UnassignedParent {
                task: workflow.task(task).id.clone(),
                parent: workflow.task(parent).id.clone(),
            })?;
            total += transfer_time(volume, self.profile.bandwidth, parent_node == node);
        }
        Ok(total)
    }
}

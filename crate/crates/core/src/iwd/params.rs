use serde::{Deserialize, Serialize};

use super::IwdError;

/// Coefficients `(a, b, c)` of the `a / (b + c·x)` update rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl UpdateCoefficients {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        UpdateCoefficients { a, b, c }
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.a / (self.b + self.c * x)
    }
}

/// Static and dynamic parameters of the water-drop search.
///
/// The number of drops is not a parameter: there is one drop per workflow task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IwdParams {
    /// Velocity update `(a_v, b_v, c_v)`.
    pub velocity: UpdateCoefficients,
    /// Soil update `(a_s, b_s, c_s)`.
    pub soil: UpdateCoefficients,
    pub max_iterations: usize,
    pub initial_soil: f64,
    /// Nodes each drop visits per iteration, source included.
    pub vms_to_visit: usize,
    pub initial_velocity: f64,
    pub initial_drop_soil: f64,
    pub epsilon: f64,
    /// Local soil update weight.
    pub rho_n: f64,
    /// Global (reinforcement) soil update weight.
    pub rho_iwd: f64,
}

impl Default for IwdParams {
    fn default() -> Self {
        IwdParams {
            velocity: UpdateCoefficients::new(1000.0, 0.01, 1.0),
            soil: UpdateCoefficients::new(1000.0, 0.01, 1.0),
            max_iterations: 20,
            initial_soil: 100.0,
            vms_to_visit: 10,
            initial_velocity: 4.0,
            initial_drop_soil: 0.0,
            epsilon: 0.01,
            rho_n: 0.9,
            rho_iwd: 0.9,
        }
    }
}

impl IwdParams {
    /// Checks the parameter ranges against a pool of `pool_size` nodes.
    pub fn validate(&self, pool_size: usize) -> Result<(), IwdError> {
        let bad = |m: &str| Err(IwdError::InvalidParams(m.to_string()));
        let positive = |x: f64| x > 0.0 && x.is_finite();
        for (name, co) in [("velocity", self.velocity), ("soil", self.soil)] {
            if !(positive(co.a) && positive(co.b) && positive(co.c)) {
                return Err(IwdError::InvalidParams(format!(
                    "{name} coefficients must all be positive"
                )));
            }
        }
        if !(self.rho_n > 0.0 && self.rho_n < 1.0) {
            return bad("rho_n must lie in (0, 1)");
        }
        if !(self.rho_iwd > 0.0 && self.rho_iwd.is_finite()) {
            return bad("rho_iwd must be positive");
        }
        if !positive(self.epsilon) {
            return bad("epsilon must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if !self.initial_soil.is_finite()
            || !self.initial_velocity.is_finite()
            || !self.initial_drop_soil.is_finite()
        {
            return bad("initial values must be finite");
        }
        if self.vms_to_visit == 0 {
            return bad("vms_to_visit must be at least 1");
        }
        if pool_size < self.vms_to_visit {
            return Err(IwdError::PoolTooSmall { pool: pool_size, vms_to_visit: self.vms_to_visit });
        }
        Ok(())
    }
}

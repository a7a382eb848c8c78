//! Equilibrium State Manifold: steady-state cornering solutions of the
//! nonlinear single-track model, interpolated over the (β, ψ̇) plane.

mod io;
mod manifold;
mod sampling;
mod solve;

pub use io::param_hash;
pub use manifold::{build_manifold, ESManifold, LatticeSpec};
pub use sampling::{sample_neighborhood, SamplePattern};
pub use solve::{log_radii, residual, solve_at_beta, solve_at_delta, solve_equilibria, EsmBuildConfig};

use serde::{Deserialize, Serialize};

/// Smallest curvature radius the manifold represents (m).
pub const RC_MIN: f64 = 10.0;
/// Residual tolerance in normalized units.
pub const EPS_EQ: f64 = 1e-6;
/// Residual normalization: β̇ is scaled by a speed, ψ̈ by a time.
pub const V_NORM: f64 = 10.0;
pub const T_NORM: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    pub v: f64,
    pub beta: f64,
    pub psidot: f64,
    pub delta: f64,
    pub lambda: f64,
    /// Signed curvature radius; positive for counter-clockwise motion.
    pub rc: f64,
}

impl EquilibriumPoint {
    /// The same motion turning the other way.
    pub fn mirrored(&self) -> Self {
        Self {
            v: self.v,
            beta: -self.beta,
            psidot: -self.psidot,
            delta: -self.delta,
            lambda: self.lambda,
            rc: -self.rc,
        }
    }

    pub fn dyn_state(&self) -> crate::dynamics::DynamicState {
        crate::dynamics::DynamicState::new(self.v, self.beta, self.psidot)
    }

    pub fn input(&self) -> crate::dynamics::ControlInput {
        crate::dynamics::ControlInput::new(self.delta, self.lambda)
    }
}

//! Vehicle physics: combined-slip tire friction, the nonlinear single-track
//! model with longitudinal weight transfer, its semi-linearized counterpart,
//! and kinematic integration of planar motion.

mod kinematics;
mod linear;
mod model;
mod tire;

pub use kinematics::{integrate_primitive, wrap_angle, TrajSample};
pub use linear::{bicycle_derivatives, BicycleParams, LinearFitReport};
pub use model::{
    axle_forces, axle_slips, nonlinear_derivatives, nonlinear_derivatives_with, normal_loads,
    ModelVariant,
};
pub use tire::{mu_combined, TireParams};
pub(crate) use linear::bicycle_unchecked;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub m: f64,
    #[serde(rename = "Jz")]
    pub jz: f64,
    pub lf: f64,
    pub lr: f64,
    pub h_cog: f64,
    pub g: f64,
    /// Speed floor below which slip angles are undefined.
    #[serde(default = "default_v_eps")]
    pub v_eps: f64,
}

fn default_v_eps() -> f64 {
    0.5
}

impl Default for VehicleParams {
    /// A rear-wheel-drive rally car.
    fn default() -> Self {
        Self {
            m: 1300.0,
            jz: 1900.0,
            lf: 1.3,
            lr: 1.3,
            h_cog: 0.5,
            g: 9.81,
            v_eps: default_v_eps(),
        }
    }
}

impl VehicleParams {
    pub fn wheelbase(&self) -> f64 {
        self.lf + self.lr
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.m, self.jz, self.lf, self.lr, self.h_cog, self.g, self.v_eps];
        if all.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidParams(format!(
                "vehicle parameters must be positive and finite: {self:?}"
            )));
        }
        Ok(())
    }
}

/// The dynamic part of the planning state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DynamicState {
    pub v: f64,
    pub beta: f64,
    pub psidot: f64,
}

impl DynamicState {
    pub fn new(v: f64, beta: f64, psidot: f64) -> Self {
        Self { v, beta, psidot }
    }

    pub fn lerp(&self, other: &Self, a: f64) -> Self {
        Self {
            v: self.v + a * (other.v - self.v),
            beta: self.beta + a * (other.beta - self.beta),
            psidot: self.psidot + a * (other.psidot - self.psidot),
        }
    }
}

/// Planar pose; `psi` is kept in [0, 2π).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, psi: f64) -> Self {
        Self { x, y, psi: wrap_angle(psi) }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub delta: f64,
    pub lambda: f64,
}

impl ControlInput {
    pub fn new(delta: f64, lambda: f64) -> Self {
        Self { delta, lambda }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AxleForces {
    pub fxr: f64,
    pub fyf: f64,
    pub fyr: f64,
    pub fzf: f64,
    pub fzr: f64,
}

/// Time derivatives of the dynamic triple.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Derivatives {
    pub v_dot: f64,
    pub beta_dot: f64,
    pub psi_ddot: f64,
}

impl Derivatives {
    pub fn as_array(&self) -> [f64; 3] {
        [self.v_dot, self.beta_dot, self.psi_ddot]
    }
}

/// Everything the models need, as loaded from a vehicle configuration file.
/// `bicycle` is fitted from the tire model when absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VehicleConfig {
    #[serde(default)]
    pub vehicle: VehicleParams,
    #[serde(default)]
    pub tires: TireParams,
    #[serde(default)]
    pub bicycle: Option<BicycleParams>,
}

impl VehicleConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.vehicle.validate()?;
        cfg.tires.validate()?;
        if let Some(b) = &cfg.bicycle {
            b.validate()?;
        }
        Ok(cfg)
    }
}

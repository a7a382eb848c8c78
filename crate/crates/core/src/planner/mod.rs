//! Hybrid-A* planning over two motion modes: steady-state drift primitives
//! sampled on the manifold and semi-linear bicycle-model primitives.

mod config;
mod heuristic;
mod search;

pub use config::{Grid, HeuristicKind, HeuristicWeights, LinSampling, ModePolicy, PlannerConfig};
pub use heuristic::{dstar, heuristic_core, SpeedProfile};
pub use search::{
    step_cost, Expansion, MotionPrimitive, Plan, Planner, PrimitiveSpec, SearchStats, Termination,
};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{BicycleParams, TireParams, VehicleConfig, VehicleParams};
use crate::esm::ESManifold;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "ESM")]
    Esm,
    #[serde(rename = "LIN")]
    Lin,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Esm => "ESM",
            Mode::Lin => "LIN",
        })
    }
}

/// Planning state in road coordinates. `s` is unwrapped: on a closed track
/// it keeps growing past the lap length.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub s: f64,
    pub d: f64,
    pub psi: f64,
    pub v: f64,
    pub beta: f64,
    pub psidot: f64,
    pub t: f64,
}

impl FullState {
    pub fn as_array(&self) -> [f64; 6] {
        [self.s, self.d, self.psi, self.v, self.beta, self.psidot]
    }

    pub fn from_array(a: [f64; 6], t: f64) -> Self {
        Self { s: a[0], d: a[1], psi: a[2], v: a[3], beta: a[4], psidot: a[5], t }
    }
}

/// A trajectory sample: road state, Cartesian position and the mode of the
/// primitive that produced it (`None` for a plan's initial state).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajPoint {
    pub state: FullState,
    pub x: f64,
    pub y: f64,
    pub mode: Option<Mode>,
}

/// Hybrid-A* node: the 20 numeric fields (grid indices, parent indices,
/// continuous remainders, g, f) plus the layer and incoming mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub idx: [i64; 6],
    pub parent_idx: [i64; 6],
    pub rem: [f64; 6],
    pub g: f64,
    pub f: f64,
    pub k: usize,
    pub mode: Option<Mode>,
}

impl Node {
    /// Continuous state `index·step + remainder` per dimension.
    pub fn values(&self, grid: &Grid) -> [f64; 6] {
        let st = grid.steps();
        std::array::from_fn(|i| self.idx[i] as f64 * st[i] + self.rem[i])
    }
}

/// Splits `x` into a grid index and a remainder in [0, step) such that the
/// reconstruction `index·step + remainder` discretizes back to the same index.
pub fn discretize(x: f64, step: f64) -> (i64, f64) {
    let mut i = (x / step).floor() as i64;
    let mut r = x - i as f64 * step;
    for _ in 0..4 {
        if r < 0.0 {
            i -= 1;
        } else if r >= step {
            i += 1;
        } else {
            break;
        }
        r = x - i as f64 * step;
    }
    r = r.clamp(0.0, step.next_down());
    for _ in 0..64 {
        let back = ((i as f64 * step + r) / step).floor() as i64;
        if back == i {
            break;
        }
        r = if back > i { r.next_down() } else { r.next_up() };
    }
    (i, r)
}

/// Grid indices, remainders and the reconstructed continuous state.
pub fn snap(values: [f64; 6], grid: &Grid) -> ([i64; 6], [f64; 6], [f64; 6]) {
    let st = grid.steps();
    let mut idx = [0; 6];
    let mut rem = [0.0; 6];
    let mut out = [0.0; 6];
    for i in 0..6 {
        let (a, b) = discretize(values[i], st[i]);
        idx[i] = a;
        rem[i] = b;
        out[i] = a as f64 * st[i] + b;
    }
    (idx, rem, out)
}

/// Physical models shared by planning and simulation.
#[derive(Clone, Debug)]
pub struct Models {
    pub vehicle: VehicleParams,
    pub tires: TireParams,
    pub bicycle: BicycleParams,
    pub manifold: Option<Arc<ESManifold>>,
}

impl Models {
    pub fn new(cfg: &VehicleConfig, manifold: Option<Arc<ESManifold>>) -> Self {
        let bicycle = cfg
            .bicycle
            .unwrap_or_else(|| BicycleParams::fitted_default(&cfg.vehicle, &cfg.tires));
        Self { vehicle: cfg.vehicle, tires: cfg.tires, bicycle, manifold }
    }

    /// Maximum longitudinal acceleration the road surface allows, D·g.
    pub fn friction_accel(&self) -> f64 {
        self.tires.d * self.vehicle.g
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ModeSet {
    pub lin: bool,
    pub esm: bool,
}

impl ModeSet {
    pub fn is_empty(&self) -> bool {
        !self.lin && !self.esm
    }

    pub fn contains(&self, m: Mode) -> bool {
        match m {
            Mode::Lin => self.lin,
            Mode::Esm => self.esm,
        }
    }
}

/// Where each mode may generate primitives in the (β, ψ̇) plane.
#[derive(Clone, Copy, Debug)]
pub struct ModeFeasibilityMap<'a> {
    pub beta_lin: f64,
    pub psidot_lin: f64,
    pub manifold: Option<&'a ESManifold>,
}

impl<'a> ModeFeasibilityMap<'a> {
    pub fn new(bicycle: &BicycleParams, manifold: Option<&'a ESManifold>) -> Self {
        Self { beta_lin: bicycle.beta_lin, psidot_lin: bicycle.psidot_lin, manifold }
    }
}

pub fn mode_feasibility(beta: f64, psidot: f64, map: &ModeFeasibilityMap<'_>) -> ModeSet {
    ModeSet {
        lin: beta.abs() < map.beta_lin && psidot.abs() < map.psidot_lin,
        esm: map.manifold.is_some_and(|m| m.contains(beta, psidot)),
    }
}

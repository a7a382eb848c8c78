use serde::{Deserialize, Serialize};

use crate::esm::SamplePattern;
use crate::error::{Error, Result};
use crate::track::FootprintCircles;

/// Which motion modes the planner may use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModePolicy {
    #[default]
    Both,
    LinOnly,
}

/// Discretization steps; time is discretized by the search layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub ds: f64,
    pub dd: f64,
    pub dpsi: f64,
    pub dv: f64,
    pub dbeta: f64,
    pub dpsidot: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Self { ds: 2.0, dd: 0.5, dpsi: 0.1, dv: 0.5, dbeta: 0.05, dpsidot: 0.1 }
    }
}

impl Grid {
    pub fn steps(&self) -> [f64; 6] {
        [self.ds, self.dd, self.dpsi, self.dv, self.dbeta, self.dpsidot]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeuristicWeights {
    pub smooth: f64,
    pub edge: f64,
    pub sibling: f64,
    /// Blend from the admissible envelope bound (0) to the track speed-profile
    /// estimate of remaining progress (1).
    pub profile: f64,
    /// Weight on the lateral-risk term (see `Planner::lateral_risk`).
    pub lateral: f64,
}

impl Default for HeuristicWeights {
    fn default() -> Self {
        Self { smooth: 0.1, edge: 0.5, sibling: 0.05, profile: 1.0, lateral: 10.0 }
    }
}

impl HeuristicWeights {
    pub fn zero() -> Self {
        Self { smooth: 0.0, edge: 0.0, sibling: 0.0, profile: 0.0, lateral: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeuristicKind {
    /// Envelope bound plus the weighted augmentation terms.
    #[default]
    Core,
    /// h ≡ 0 (uniform-cost search).
    Zero,
}

/// Equidistant input grid for the linear mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinSampling {
    pub n_delta: usize,
    pub n_lambda: usize,
    pub delta_range: (f64, f64),
    pub lambda_range: (f64, f64),
}

impl Default for LinSampling {
    fn default() -> Self {
        Self { n_delta: 9, n_lambda: 5, delta_range: (-0.3, 0.3), lambda_range: (-0.3, 0.5) }
    }
}

impl LinSampling {
    fn axis(n: usize, r: (f64, f64)) -> Vec<f64> {
        (0..n)
            .map(|i| if n == 1 { 0.5 * (r.0 + r.1) } else { r.0 + (r.1 - r.0) * i as f64 / (n - 1) as f64 })
            .collect()
    }

    pub fn deltas(&self) -> Vec<f64> {
        Self::axis(self.n_delta, self.delta_range)
    }

    pub fn lambdas(&self) -> Vec<f64> {
        Self::axis(self.n_lambda, self.lambda_range)
    }

    pub fn count(&self) -> usize {
        self.n_delta * self.n_lambda
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub k_hor: usize,
    pub t_hor: f64,
    /// Integration substeps per primitive.
    pub substeps: usize,
    /// Budget on expanded nodes.
    pub n_timeout: usize,
    /// Cap on the OPEN list size.
    pub open_cap: usize,
    pub grid: Grid,
    pub pattern: SamplePattern,
    pub weights: HeuristicWeights,
    pub heuristic: HeuristicKind,
    pub v_max: f64,
    /// Longitudinal acceleration bound; `None` means D·g.
    pub a_max: Option<f64>,
    pub beta_bounds: (f64, f64),
    pub psidot_bounds: (f64, f64),
    pub lin: LinSampling,
    pub policy: ModePolicy,
    /// Allow a strictly better child to reopen a closed cell.
    pub reopen: bool,
    pub footprint: FootprintCircles,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            k_hor: 8,
            t_hor: 4.0,
            substeps: 10,
            n_timeout: 3500,
            open_cap: 200_000,
            grid: Grid::default(),
            pattern: SamplePattern::default(),
            weights: HeuristicWeights::default(),
            heuristic: HeuristicKind::Core,
            v_max: 30.0,
            a_max: None,
            beta_bounds: (-1.0, 1.0),
            psidot_bounds: (-1.5, 1.5),
            lin: LinSampling::default(),
            policy: ModePolicy::Both,
            reopen: false,
            footprint: FootprintCircles::default(),
        }
    }
}

impl PlannerConfig {
    /// Primitive duration Ts = T_hor / k_hor.
    pub fn ts(&self) -> f64 {
        self.t_hor / self.k_hor as f64
    }

    pub fn dt(&self) -> f64 {
        self.ts() / self.substeps as f64
    }

    pub fn with_horizon(mut self, k_hor: usize) -> Self {
        self.k_hor = k_hor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.k_hor < 1 || !(self.t_hor > 0.0) || self.substeps < 1 {
            return bad("k_hor, t_hor and substeps must be positive");
        }
        if self.grid.steps().iter().any(|s| !(*s > 0.0)) {
            return bad("grid steps must be positive");
        }
        if self.n_timeout < 1 || self.open_cap < 1 {
            return bad("node budgets must be positive");
        }
        if !(self.v_max > 0.0) || self.a_max.is_some_and(|a| !(a > 0.0)) {
            return bad("v_max and a_max must be positive");
        }
        if self.lin.n_delta < 1 || self.lin.n_lambda < 1 {
            return bad("linear-mode input grid must be non-empty");
        }
        if self.lin.lambda_range.0 <= -1.0 {
            return bad("lambda range must stay above -1");
        }
        self.pattern.validate()?;
        Ok(())
    }
}

use serde::{Deserialize, Serialize};

use super::model::{balance, ModelVariant};
use super::tire::mu_combined_unchecked;
use super::{AxleForces, ControlInput, Derivatives, DynamicState, TireParams, VehicleParams};
use crate::error::{Error, Result};

/// Linearized tire stiffnesses and the (β, ψ̇) box in which they are trusted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BicycleParams {
    #[serde(rename = "Cf")]
    pub cf: f64,
    #[serde(rename = "Cr")]
    pub cr: f64,
    #[serde(rename = "Cx")]
    pub cx: f64,
    pub beta_lin: f64,
    pub psidot_lin: f64,
}

/// Outcome of fitting stiffnesses against the Magic Formula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFitReport {
    pub params: BicycleParams,
    /// Slip extents used for the lateral and longitudinal fits.
    pub alpha_box: f64,
    pub lambda_box: f64,
    /// Relative deviation |F_lin − F_mf| / |F_mf| at the edge of the fit range,
    /// per (front, rear, longitudinal).
    pub boundary_deviation: [f64; 3],
}

impl BicycleParams {
    /// Speed at which the yaw-rate contribution to the slip angle is sized.
    pub const FIT_SPEED: f64 = 10.0;
    /// Longitudinal slip extent of the longitudinal fit.
    pub const FIT_LAMBDA: f64 = 0.2;
    pub const DEFAULT_BETA_LIN: f64 = 0.15;
    pub const DEFAULT_PSIDOT_LIN: f64 = 0.3;

    pub fn validate(&self) -> Result<()> {
        let all = [self.cf, self.cr, self.cx, self.beta_lin, self.psidot_lin];
        if all.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidParams(format!("bicycle parameters must be positive: {self:?}")));
        }
        Ok(())
    }

    /// Least-squares stiffnesses through the origin, fitted to pure-slip
    /// Magic Formula forces at static loads over the slip ranges the validity
    /// box can produce.
    pub fn fit(params: &VehicleParams, tires: &TireParams, beta_lin: f64, psidot_lin: f64) -> LinearFitReport {
        let l = params.wheelbase();
        let fzf = params.m * params.g * params.lr / l;
        let fzr = params.m * params.g * params.lf / l;
        let alpha_box = beta_lin + params.lf.max(params.lr) * psidot_lin / Self::FIT_SPEED;
        let lambda_box = Self::FIT_LAMBDA;

        let lateral = |a: f64| mu_combined_unchecked(0.0, a, tires).1;
        let longitudinal = |x: f64| mu_combined_unchecked(x, 0.0, tires).0;
        let slope = |f: &dyn Fn(f64) -> f64, extent: f64| {
            let n = 400;
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..=n {
                let x = -extent + 2.0 * extent * i as f64 / n as f64;
                num += f(x) * x;
                den += x * x;
            }
            num / den
        };
        let kf = slope(&lateral, alpha_box);
        let kx = slope(&longitudinal, lambda_box);
        let p = BicycleParams {
            cf: fzf * kf,
            cr: fzr * kf,
            cx: fzr * kx,
            beta_lin,
            psidot_lin,
        };
        let dev = |k: f64, f: &dyn Fn(f64) -> f64, x: f64| ((k * x - f(x)) / f(x)).abs();
        LinearFitReport {
            params: p,
            alpha_box,
            lambda_box,
            boundary_deviation: [
                dev(kf, &lateral, alpha_box),
                dev(kf, &lateral, alpha_box),
                dev(kx, &longitudinal, -lambda_box).max(dev(kx, &longitudinal, lambda_box)),
            ],
        }
    }

    pub fn fitted_default(params: &VehicleParams, tires: &TireParams) -> Self {
        Self::fit(params, tires, Self::DEFAULT_BETA_LIN, Self::DEFAULT_PSIDOT_LIN).params
    }

    #[inline]
    pub fn contains(&self, beta: f64, psidot: f64) -> bool {
        beta.abs() < self.beta_lin && psidot.abs() < self.psidot_lin
    }
}

/// Semi-linearized single-track dynamics. Below the speed floor the slip
/// angles are treated as zero, so only the drive force acts.
pub fn bicycle_derivatives(
    state: &DynamicState,
    input: &ControlInput,
    params: &VehicleParams,
    bike: &BicycleParams,
) -> Result<Derivatives> {
    if !bike.contains(state.beta, state.psidot) {
        return Err(Error::OutsideLinearBox { beta: state.beta, psidot: state.psidot });
    }
    Ok(bicycle_unchecked(state, input, params, bike))
}

#[inline]
pub(crate) fn bicycle_unchecked(
    state: &DynamicState,
    input: &ControlInput,
    p: &VehicleParams,
    bike: &BicycleParams,
) -> Derivatives {
    let fxr = -bike.cx * input.lambda;
    if state.v <= p.v_eps {
        return Derivatives {
            v_dot: fxr / p.m,
            beta_dot: 0.0,
            psi_ddot: 0.0,
        };
    }
    let f = AxleForces {
        fxr,
        fyf: -bike.cf * (state.beta + p.lf * state.psidot / state.v - input.delta),
        fyr: -bike.cr * (state.beta - p.lr * state.psidot / state.v),
        ..Default::default()
    };
    balance(state, input.delta, &f, p, ModelVariant::AsPrinted)
}

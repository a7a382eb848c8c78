use super::tire::mu_combined_unchecked;
use super::{mu_combined, AxleForces, ControlInput, Derivatives, DynamicState, TireParams, VehicleParams};
use crate::error::{Error, Result};

/// Which form of the single-track balance equations to evaluate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ModelVariant {
    /// Small-angle form: `v̇ = ψ̇vβ + Fxr/m`, front lateral force unprojected.
    #[default]
    AsPrinted,
    /// Full body-frame projection of all axle forces onto the velocity frame.
    BodyFrame,
}

/// Lateral slip angles of the front and rear axle.
pub fn axle_slips(state: &DynamicState, input: &ControlInput, params: &VehicleParams) -> Result<(f64, f64)> {
    if !(state.v > params.v_eps) {
        return Err(Error::DegenerateSpeed { v: state.v, v_eps: params.v_eps });
    }
    Ok(slips_unchecked(state, input, params))
}

#[inline]
fn slips_unchecked(state: &DynamicState, input: &ControlInput, p: &VehicleParams) -> (f64, f64) {
    let (sb, cb) = state.beta.sin_cos();
    let vx = state.v * cb;
    let vy = state.v * sb;
    let af = ((vy + p.lf * state.psidot) / vx).atan() - input.delta;
    let ar = ((vy - p.lr * state.psidot) / vx).atan();
    (af, ar)
}

/// Quasi-static longitudinal load transfer.
pub fn normal_loads(params: &VehicleParams, ax: f64) -> Result<(f64, f64)> {
    let (fzf, fzr) = loads_unchecked(params, ax);
    if fzf < 0.0 {
        return Err(Error::WheelLift { axle: "front", load: fzf });
    }
    if fzr < 0.0 {
        return Err(Error::WheelLift { axle: "rear", load: fzr });
    }
    Ok((fzf, fzr))
}

#[inline]
fn loads_unchecked(p: &VehicleParams, ax: f64) -> (f64, f64) {
    let l = p.wheelbase();
    let transfer = p.m * ax * p.h_cog / l;
    (p.m * p.g * p.lr / l - transfer, p.m * p.g * p.lf / l + transfer)
}

/// Axle forces with one fixed-point pass of weight transfer: loads at
/// `ax = 0` give a first rear drive force, `ax = Fxr/m` then sets the loads
/// used for the returned forces. The front axle is undriven.
pub fn axle_forces(
    state: &DynamicState,
    input: &ControlInput,
    params: &VehicleParams,
    tires: &TireParams,
) -> Result<AxleForces> {
    let (af, ar) = axle_slips(state, input, params)?;
    // Validate the slip domain once; the rest runs unchecked.
    mu_combined(input.lambda, ar, tires)?;
    mu_combined(0.0, af, tires)?;
    let (_, fzr0) = normal_loads(params, 0.0)?;
    let (mxr, myr) = mu_combined_unchecked(input.lambda, ar, tires);
    let ax = -fzr0 * mxr / params.m;
    let (fzf, fzr) = normal_loads(params, ax)?;
    let (_, myf) = mu_combined_unchecked(0.0, af, tires);
    Ok(AxleForces {
        fxr: -fzr * mxr,
        fyf: -fzf * myf,
        fyr: -fzr * myr,
        fzf,
        fzr,
    })
}

pub fn nonlinear_derivatives(
    state: &DynamicState,
    input: &ControlInput,
    params: &VehicleParams,
    tires: &TireParams,
) -> Result<Derivatives> {
    nonlinear_derivatives_with(state, input, params, tires, ModelVariant::AsPrinted)
}

pub fn nonlinear_derivatives_with(
    state: &DynamicState,
    input: &ControlInput,
    params: &VehicleParams,
    tires: &TireParams,
    variant: ModelVariant,
) -> Result<Derivatives> {
    let f = axle_forces(state, input, params, tires)?;
    Ok(balance(state, input.delta, &f, params, variant))
}

/// Balance equations shared by the nonlinear and linearized force models.
#[inline]
pub(crate) fn balance(
    state: &DynamicState,
    delta: f64,
    f: &AxleForces,
    p: &VehicleParams,
    variant: ModelVariant,
) -> Derivatives {
    let (v, beta, r) = (state.v, state.beta, state.psidot);
    match variant {
        ModelVariant::AsPrinted => Derivatives {
            v_dot: r * v * beta + f.fxr / p.m,
            beta_dot: (f.fyf + f.fyr) / (p.m * v) - r,
            psi_ddot: (p.lf * f.fyf - p.lr * f.fyr) / p.jz,
        },
        ModelVariant::BodyFrame => {
            let (sd, cd) = delta.sin_cos();
            let (sb, cb) = beta.sin_cos();
            let fx = f.fxr - f.fyf * sd;
            let fy = f.fyr + f.fyf * cd;
            Derivatives {
                v_dot: (fx * cb + fy * sb) / p.m,
                beta_dot: (fy * cb - fx * sb) / (p.m * v) - r,
                psi_ddot: (p.lf * f.fyf * cd - p.lr * f.fyr) / p.jz,
            }
        }
    }
}

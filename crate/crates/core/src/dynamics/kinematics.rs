use std::f64::consts::TAU;

use super::{DynamicState, Pose};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajSample {
    pub pose: Pose,
    pub dyn_state: DynamicState,
    pub t: f64,
}

#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Explicit-Euler integration of the planar kinematics while the dynamic
/// triple follows `profile`. `profile[i]` is the dynamic state at the end of
/// step `i`; each step uses the state at its start. Returns `steps + 1`
/// samples, the first being `start` at `t0`.
pub fn integrate_primitive(
    start: (Pose, DynamicState),
    t0: f64,
    profile: &[DynamicState],
    dt: f64,
    steps: usize,
) -> Result<Vec<TrajSample>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    if profile.len() != steps {
        return Err(Error::InvalidParams(format!(
            "profile has {} entries for {steps} steps",
            profile.len()
        )));
    }
    let mut out = Vec::with_capacity(steps + 1);
    let (mut pose, mut dy) = start;
    // Heading is integrated unwrapped and wrapped per sample.
    let mut psi = pose.psi;
    out.push(TrajSample { pose, dyn_state: dy, t: t0 });
    for (i, next) in profile.iter().enumerate() {
        let (s, c) = (psi + dy.beta).sin_cos();
        pose.x += dt * dy.v * c;
        pose.y += dt * dy.v * s;
        psi += dt * dy.psidot;
        pose.psi = wrap_angle(psi);
        dy = *next;
        out.push(TrajSample {
            pose,
            dyn_state: dy,
            t: t0 + dt * (i + 1) as f64,
        });
    }
    Ok(out)
}

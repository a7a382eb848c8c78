use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pacejka Magic Formula coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TireParams {
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "E")]
    pub e: f64,
}

impl Default for TireParams {
    /// Gravel.
    fn default() -> Self {
        Self {
            b: 1.5289,
            c: 1.0901,
            d: 0.6,
            e: -0.95084,
        }
    }
}

impl TireParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.d > 0.0 && self.c.is_finite() && self.e.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "tire parameters need B > 0 and D > 0: {self:?}"
            )));
        }
        Ok(())
    }

    /// Scalar friction coefficient for theoretical slip magnitude `sigma`.
    #[inline]
    pub fn mu(&self, sigma: f64) -> f64 {
        let sb = sigma * self.b;
        self.d * (self.c * (sb - self.e * (sb - sb.atan())).atan()).sin()
    }
}

/// Combined-slip friction coefficients `(μx, μy)` for longitudinal slip `lambda`
/// and lateral slip angle `alpha`. The friction vector is parallel to the
/// theoretical slip vector; forces oppose it (see `axle_forces`).
pub fn mu_combined(lambda: f64, alpha: f64, tires: &TireParams) -> Result<(f64, f64)> {
    if !(lambda > -1.0) {
        return Err(Error::SlipDomain(format!("lambda = {lambda} must exceed -1")));
    }
    if !(alpha.abs() < FRAC_PI_2) {
        return Err(Error::SlipDomain(format!("|alpha| = {} must be below pi/2", alpha.abs())));
    }
    Ok(mu_combined_unchecked(lambda, alpha, tires))
}

#[inline]
pub(crate) fn mu_combined_unchecked(lambda: f64, alpha: f64, tires: &TireParams) -> (f64, f64) {
    let sx = lambda / (1.0 + lambda);
    let sy = alpha.tan() / (1.0 + lambda);
    let sigma = sx.hypot(sy);
    if sigma == 0.0 {
        return (0.0, 0.0);
    }
    let mu = tires.mu(sigma);
    (sx / sigma * mu, sy / sigma * mu)
}

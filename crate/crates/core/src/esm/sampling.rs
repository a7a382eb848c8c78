use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{ESManifold, EquilibriumPoint};
use crate::error::{Error, Result};

/// Rings of samples around a steady state, in range-normalized (β, ψ̇)
/// distance, plus the per-primitive rate caps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePattern {
    pub ring_radii: Vec<f64>,
    pub ring_counts: Vec<usize>,
    pub dv_max: f64,
    pub dbeta_max: f64,
    pub dpsidot_max: f64,
}

impl Default for SamplePattern {
    fn default() -> Self {
        Self {
            ring_radii: vec![0.04, 0.09, 0.16],
            ring_counts: vec![8, 8, 8],
            dv_max: 3.0,
            dbeta_max: 0.4,
            dpsidot_max: 0.6,
        }
    }
}

impl SamplePattern {
    pub fn validate(&self) -> Result<()> {
        if self.ring_radii.len() != self.ring_counts.len() {
            return Err(Error::InvalidParams("ring radii and counts differ in length".into()));
        }
        if self.ring_radii.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::InvalidParams("ring radii must be non-negative".into()));
        }
        if !(self.dv_max > 0.0 && self.dbeta_max > 0.0 && self.dpsidot_max > 0.0) {
            return Err(Error::InvalidParams("rate caps must be positive".into()));
        }
        let density: Vec<f64> = self
            .ring_radii
            .iter()
            .zip(&self.ring_counts)
            .filter(|(r, _)| **r > 0.0)
            .map(|(r, n)| *n as f64 / (TAU * r))
            .collect();
        let radii: Vec<f64> = self.ring_radii.iter().cloned().filter(|r| *r > 0.0).collect();
        let sorted = radii.windows(2).all(|w| w[0] < w[1]);
        if !sorted || density.windows(2).any(|w| w[1] > w[0] + 1e-12) {
            return Err(Error::InvalidParams(
                "rings must be ascending with non-increasing sample density".into(),
            ));
        }
        Ok(())
    }

    pub fn max_samples(&self) -> usize {
        1 + self.ring_counts.iter().sum::<usize>()
    }

    /// Whether `to` is reachable from `from` within one primitive.
    #[inline]
    pub fn within_caps(&self, from: (f64, f64, f64), to: (f64, f64, f64), ts: f64, a_max: f64) -> bool {
        let dv = (to.0 - from.0).abs();
        dv <= self.dv_max
            && (to.1 - from.1).abs() <= self.dbeta_max
            && (to.2 - from.2).abs() <= self.dpsidot_max
            && dv / ts < a_max
    }
}

/// Ring positions of the pattern around `(beta, psidot)`, center excluded.
pub(crate) fn ring_points<'a>(
    beta: f64,
    psidot: f64,
    pattern: &'a SamplePattern,
    manifold: &'a ESManifold,
) -> impl Iterator<Item = (f64, f64)> + 'a {
    let (wb, wr) = (manifold.lattice.beta_width(), manifold.lattice.psidot_width());
    pattern
        .ring_radii
        .iter()
        .zip(&pattern.ring_counts)
        .enumerate()
        .filter(|(_, (r, n))| **r > 0.0 && **n > 0)
        .flat_map(move |(k, (r, n))| {
            // Alternate rings are rotated by half a slot.
            let offset = if k % 2 == 1 { 0.5 } else { 0.0 };
            (0..*n).map(move |m| {
                let th = TAU * (m as f64 + offset) / *n as f64;
                (beta + r * th.cos() * wb, psidot + r * th.sin() * wr)
            })
        })
}

/// The center followed by every in-domain ring sample that satisfies the
/// rate caps relative to the center.
pub fn sample_neighborhood(
    center: &EquilibriumPoint,
    pattern: &SamplePattern,
    manifold: &ESManifold,
    ts: f64,
    a_max: f64,
) -> Vec<EquilibriumPoint> {
    let c = (center.v, center.beta, center.psidot);
    let mut out = vec![*center];
    for (b, r) in ring_points(center.beta, center.psidot, pattern, manifold) {
        if let Some(p) = manifold.query(b, r) {
            if pattern.within_caps(c, (p.v, p.beta, p.psidot), ts, a_max) {
                out.push(p);
            }
        }
    }
    out
}

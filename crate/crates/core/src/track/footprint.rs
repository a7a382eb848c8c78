use serde::{Deserialize, Serialize};

use super::Track;
use crate::dynamics::Pose;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    /// Longitudinal offset from the center of gravity (m), forward positive.
    pub offset: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FootprintCircles {
    pub circles: Vec<Circle>,
}

impl Default for FootprintCircles {
    fn default() -> Self {
        Self {
            circles: [-1.3, 0.0, 1.3]
                .iter()
                .map(|&offset| Circle { offset, radius: 1.0 })
                .collect(),
        }
    }
}

impl FootprintCircles {
    /// Vehicle body the default circles are checked against (length, width).
    pub const DEFAULT_BODY: (f64, f64) = (3.9, 1.5);

    pub fn new(circles: Vec<Circle>) -> Result<Self> {
        if circles.is_empty() || circles.iter().any(|c| !(c.radius > 0.0 && c.offset.is_finite())) {
            return Err(Error::InvalidParams("footprint needs at least one circle with positive radius".into()));
        }
        Ok(Self { circles })
    }

    /// Checks that the union of circles covers a centered `length × width`
    /// rectangle, sampled on a fine grid.
    pub fn covers_rectangle(&self, length: f64, width: f64) -> bool {
        let n = 60;
        (0..=n).all(|i| {
            let x = -length / 2.0 + length * i as f64 / n as f64;
            (0..=n).all(|j| {
                let y = -width / 2.0 + width * j as f64 / n as f64;
                self.circles
                    .iter()
                    .any(|c| (x - c.offset).hypot(y) <= c.radius + 1e-12)
            })
        })
    }

    pub fn max_extent(&self) -> f64 {
        self.circles
            .iter()
            .map(|c| c.offset.abs() + c.radius)
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoadCheck {
    pub on_road: bool,
    /// min over circles of (w/2 − r − |d|); −∞ outside the corridor.
    pub margin: f64,
}

/// Multi-circle on-road test; `seed` is an arc-length hint for the lookups.
pub fn on_road(pose: &Pose, circles: &FootprintCircles, track: &Track, seed: Option<f64>) -> RoadCheck {
    let half = track.width() / 2.0;
    let (sn, cs) = pose.psi.sin_cos();
    let mut margin = f64::INFINITY;
    let mut s_seed = seed;
    for c in &circles.circles {
        let (x, y) = (pose.x + c.offset * cs, pose.y + c.offset * sn);
        match track.cart_to_frenet(x, y, s_seed) {
            Ok(f) => {
                s_seed = Some(f.s);
                margin = margin.min(half - c.radius - f.d.abs());
            }
            Err(_) => {
                return RoadCheck { on_road: false, margin: f64::NEG_INFINITY };
            }
        }
    }
    RoadCheck { on_road: margin >= 0.0, margin }
}

use crate::track::Track;

/// Distance covered in `tau` seconds starting at speed `v`, accelerating at
/// `a_max` until `v_max`, then cruising.
pub fn dstar(v: f64, tau: f64, v_max: f64, a_max: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let v = v.max(0.0);
    if v >= v_max {
        return v_max * tau;
    }
    let t_acc = (v_max - v) / a_max;
    if tau <= t_acc {
        v * tau + 0.5 * a_max * tau * tau
    } else {
        (v_max * v_max - v * v) / (2.0 * a_max) + v_max * (tau - t_acc)
    }
}

/// Admissible cost-to-go in the negated-progress orientation: no trajectory
/// can make more road progress than `factor · D*` in the remaining time.
/// `factor` ≥ 1 bounds how much faster than the vehicle speed the road
/// coordinate can advance (inside lines through curves).
pub fn heuristic_core(v: f64, tau: f64, v_max: f64, a_max: f64, factor: f64) -> f64 {
    -factor * dstar(v, tau, v_max, a_max)
}

/// Quasi-steady speed limit along the road: curvature-limited cornering
/// speed, with a backward pass so braking for a curve starts in time.
#[derive(Clone, Debug)]
pub struct SpeedProfile {
    step: f64,
    v: Vec<f64>,
    closed: bool,
    length: f64,
    v_max: f64,
    accel: f64,
    decel: f64,
}

impl SpeedProfile {
    /// `cap(radius)` gives the cornering speed for an effective radius.
    pub fn build(track: &Track, cap: &dyn Fn(f64) -> f64, v_max: f64, accel: f64, decel: f64) -> Self {
        let step = 1.0;
        let length = track.length();
        let n = (length / step).ceil() as usize + 1;
        let window = 3.0;
        let line_bonus = track.width() / 4.0;
        let kappa: Vec<f64> = (0..n).map(|i| track.curvature(i as f64 * step).abs()).collect();
        let reach = (window / step).ceil() as i64;
        let mut v: Vec<f64> = (0..n)
            .map(|i| {
                let mut k = 0.0_f64;
                for o in -reach..=reach {
                    let j = i as i64 + o;
                    let j = if track.is_closed() {
                        j.rem_euclid(n as i64 - 1) as usize
                    } else {
                        j.clamp(0, n as i64 - 1) as usize
                    };
                    k = k.max(kappa[j]);
                }
                if k < 1e-9 {
                    v_max
                } else {
                    cap(1.0 / k + line_bonus).min(v_max)
                }
            })
            .collect();
        // Backward braking pass; twice around for closed tracks.
        let passes = if track.is_closed() { 2 } else { 1 };
        for _ in 0..passes {
            for i in (0..n).rev() {
                let next = if i + 1 < n {
                    v[i + 1]
                } else if track.is_closed() {
                    v[1]
                } else {
                    continue;
                };
                v[i] = v[i].min((next * next + 2.0 * decel * step).sqrt());
            }
            if track.is_closed() {
                v[n - 1] = v[n - 1].min(v[0]);
                v[0] = v[n - 1];
            }
        }
        Self { step, v, closed: track.is_closed(), length, v_max, accel, decel }
    }

    pub fn decel(&self) -> f64 {
        self.decel
    }

    pub fn limit_at(&self, s: f64) -> f64 {
        let s = if self.closed { s.rem_euclid(self.length) } else { s };
        if s < 0.0 {
            return self.v[0];
        }
        let f = s / self.step;
        let i = f.floor() as usize;
        if i + 1 >= self.v.len() {
            return if self.closed { self.v[0] } else { self.v_max };
        }
        let a = f - i as f64;
        self.v[i] + a * (self.v[i + 1] - self.v[i])
    }

    /// Predicted road progress in `tau` seconds from `(s, v)` when tracking
    /// the profile, minus a penalty for excess speed that still has to be shed.
    pub fn remaining_progress(&self, s0: f64, v0: f64, tau: f64) -> f64 {
        let excess = (v0 - self.limit_at(s0)).max(0.0);
        let penalty = excess * excess / (2.0 * self.decel);
        if tau <= 0.0 {
            return -penalty;
        }
        let n = (tau / 0.1).ceil().max(1.0);
        let dt = tau / n;
        let (mut s, mut v) = (s0, v0);
        for _ in 0..n as usize {
            let lim = self.limit_at(s);
            let vn = if v < lim { (v + self.accel * dt).min(lim) } else { (v - self.decel * dt).max(lim) };
            s += 0.5 * (v + vn) * dt;
            v = vn;
        }
        s - s0 - penalty
    }
}

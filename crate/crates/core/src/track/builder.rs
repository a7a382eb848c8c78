use super::Track;
use crate::error::Result;

/// Turtle-style centerline construction from straights and circular arcs.
#[derive(Clone, Debug)]
pub struct TrackBuilder {
    pts: Vec<[f64; 2]>,
    x: f64,
    y: f64,
    heading: f64,
    spacing: f64,
}

impl TrackBuilder {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            pts: vec![[x, y]],
            x,
            y,
            heading,
            spacing: 0.25,
        }
    }

    pub fn spacing(mut self, spacing: f64) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn straight(mut self, length: f64) -> Self {
        let k = (length / self.spacing).ceil().max(1.0) as usize;
        let (s, c) = self.heading.sin_cos();
        let (x0, y0) = (self.x, self.y);
        for j in 1..=k {
            let a = length * j as f64 / k as f64;
            self.pts.push([x0 + a * c, y0 + a * s]);
        }
        self.x = x0 + length * c;
        self.y = y0 + length * s;
        self
    }

    /// Circular arc of `radius`; positive `angle` turns left.
    pub fn arc(mut self, radius: f64, angle: f64) -> Self {
        let sign = angle.signum();
        let (s, c) = self.heading.sin_cos();
        // Center lies on the left normal for left turns.
        let cx = self.x - sign * radius * s;
        let cy = self.y + sign * radius * c;
        let phi0 = (self.y - cy).atan2(self.x - cx);
        let k = (radius * angle.abs() / self.spacing).ceil().max(1.0) as usize;
        for j in 1..=k {
            let phi = phi0 + angle * j as f64 / k as f64;
            self.pts.push([cx + radius * phi.cos(), cy + radius * phi.sin()]);
        }
        let phi = phi0 + angle;
        self.x = cx + radius * phi.cos();
        self.y = cy + radius * phi.sin();
        self.heading += angle;
        self
    }

    pub fn position(&self) -> (f64, f64, f64) {
        (self.x, self.y, self.heading)
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.pts
    }

    pub fn build(self, width: f64, closed: bool) -> Result<Track> {
        Track::new(&self.pts, width, closed)
    }
}

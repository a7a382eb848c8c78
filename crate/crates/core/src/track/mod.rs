//! Arc-length parameterized road: a polyline centerline whose heading is
//! interpolated linearly between vertices, so that the Frenet transforms are
//! exact inverses of each other.

mod builder;
mod footprint;

pub use builder::TrackBuilder;
pub use footprint::{on_road, Circle, FootprintCircles, RoadCheck};

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum centerline spacing after resampling.
pub const MAX_SPACING: f64 = 0.5;

/// Names accepted by [`Track::builtin`].
pub const BUILTIN_TRACKS: [&str; 2] = ["test-track", "straight"];

const TEST_TRACK_JSON: &str = include_str!("../../assets/test_track.json");
const STRAIGHT_JSON: &str = include_str!("../../assets/straight.json");

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrenetState {
    pub s: f64,
    pub d: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrackFile {
    pub width: f64,
    pub closed: bool,
    pub centerline: Vec<[f64; 2]>,
}

#[derive(Clone, Debug)]
pub struct Track {
    /// Vertices; for a closed track the last one repeats the first.
    pts: Vec<[f64; 2]>,
    s: Vec<f64>,
    /// Unwrapped vertex headings.
    heading: Vec<f64>,
    kappa: Vec<f64>,
    /// (cos, sin) of vertex headings.
    trig: Vec<(f64, f64)>,
    width: f64,
    closed: bool,
}

impl Track {
    /// Builds a track from raw centerline points, resampling so that no
    /// segment exceeds `MAX_SPACING`. A closed centerline may or may not
    /// repeat its first point at the end.
    pub fn new(centerline: &[[f64; 2]], width: f64, closed: bool) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::Geometry(format!("width must be positive, got {width}")));
        }
        let mut raw: Vec<[f64; 2]> = Vec::with_capacity(centerline.len());
        for p in centerline {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::Geometry("non-finite centerline point".into()));
            }
            if raw.last().map_or(true, |q| dist(q, p) > 1e-9) {
                raw.push(*p);
            }
        }
        // Drop an explicit closing point; the loop is closed below.
        if closed && raw.len() > 2 && dist(&raw[0], raw.last().unwrap()) <= 1e-6 {
            raw.pop();
        }
        let min_pts = if closed { 3 } else { 2 };
        if raw.len() < min_pts {
            return Err(Error::Geometry(format!("need at least {min_pts} distinct centerline points")));
        }
        if closed {
            raw.push(raw[0]);
        }

        let mut pts = Vec::new();
        for w in raw.windows(2) {
            let len = dist(&w[0], &w[1]);
            let k = (len / MAX_SPACING).ceil().max(1.0) as usize;
            for j in 0..k {
                let a = j as f64 / k as f64;
                pts.push([w[0][0] + a * (w[1][0] - w[0][0]), w[0][1] + a * (w[1][1] - w[0][1])]);
            }
        }
        pts.push(*raw.last().unwrap());
        let n = pts.len();

        let mut s = vec![0.0; n];
        for i in 1..n {
            s[i] = s[i - 1] + dist(&pts[i - 1], &pts[i]);
        }

        // Vertex headings bisect the neighbouring chords.
        let dir = |a: &[f64; 2], b: &[f64; 2]| (b[1] - a[1]).atan2(b[0] - a[0]);
        let mut heading = vec![0.0; n];
        for i in 0..n {
            heading[i] = if closed {
                let prev = if i == 0 { n - 2 } else { i - 1 };
                let next = if i == n - 1 { 1 } else { i + 1 };
                dir(&pts[prev], &pts[next])
            } else if i == 0 {
                dir(&pts[0], &pts[1])
            } else if i == n - 1 {
                dir(&pts[n - 2], &pts[n - 1])
            } else {
                dir(&pts[i - 1], &pts[i + 1])
            };
        }
        for i in 1..n {
            let mut h = heading[i];
            while h - heading[i - 1] > std::f64::consts::PI {
                h -= TAU;
            }
            while h - heading[i - 1] < -std::f64::consts::PI {
                h += TAU;
            }
            heading[i] = h;
        }

        let mut kappa = vec![0.0; n];
        for i in 0..n {
            let (a, b) = if i == 0 {
                if closed { (n - 2, 1) } else { (0, 1) }
            } else if i == n - 1 {
                if closed { (n - 2, 1) } else { (n - 2, n - 1) }
            } else {
                (i - 1, i + 1)
            };
            let (dh, ds) = if closed && (i == 0 || i == n - 1) {
                let total = heading[n - 1] - heading[0];
                (heading[1] - (heading[n - 2] - total), s[1] + (s[n - 1] - s[n - 2]))
            } else {
                (heading[b] - heading[a], s[b] - s[a])
            };
            kappa[i] = dh / ds;
        }

        let trig = heading.iter().map(|h| (h.cos(), h.sin())).collect();
        let track = Self { pts, s, heading, kappa, trig, width, closed };
        for i in 0..n - 1 {
            let seg = track.seg_len(i);
            let dpsi = (track.heading[i + 1] - track.heading[i]).abs();
            // The interpolated frame must stay within the corridor without folding.
            if dpsi > 1e-12 && seg / dpsi <= width {
                return Err(Error::Geometry(format!(
                    "turn near s = {:.1} m is too tight for a {width} m corridor",
                    track.s[i]
                )));
            }
        }
        Ok(track)
    }

    pub fn from_file_struct(f: &TrackFile) -> Result<Self> {
        Self::new(&f.centerline, f.width, f.closed)
    }

    pub fn to_file_struct(&self) -> TrackFile {
        let n = if self.closed { self.pts.len() - 1 } else { self.pts.len() };
        TrackFile {
            width: self.width,
            closed: self.closed,
            centerline: self.pts[..n].to_vec(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: TrackFile = serde_json::from_str(text)?;
        Self::from_file_struct(&f)
    }

    /// Two-column `x,y` CSV with header; width and closure come from the caller.
    pub fn from_csv(text: &str, width: f64, closed: bool) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Geometry("empty CSV".into()))?;
        let cols: Vec<_> = header.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
        if cols != ["x", "y"] {
            return Err(Error::Geometry(format!("expected header `x,y`, got `{header}`")));
        }
        let mut pts = Vec::new();
        for (i, line) in lines.enumerate() {
            let mut it = line.split(',').map(|c| c.trim().parse::<f64>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => pts.push([x, y]),
                _ => return Err(Error::Geometry(format!("bad CSV row {}: `{line}`", i + 2))),
            }
        }
        Self::new(&pts, width, closed)
    }

    /// Shipped tracks: `test-track` is the closed 10 m-wide evaluation
    /// circuit, `straight` a 400 m open straight.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "test-track" => Self::from_json(TEST_TRACK_JSON),
            "straight" => Self::from_json(STRAIGHT_JSON),
            _ => Err(Error::InvalidParams(format!(
                "unknown built-in track `{name}` (expected one of {BUILTIN_TRACKS:?})"
            ))),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Total centerline length s_G.
    pub fn length(&self) -> f64 {
        *self.s.last().unwrap()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.pts
    }

    pub fn vertex_s(&self) -> &[f64] {
        &self.s
    }

    fn seg_count(&self) -> usize {
        self.pts.len() - 1
    }

    fn seg_len(&self, i: usize) -> f64 {
        self.s[i + 1] - self.s[i]
    }

    /// Wraps `s` into [0, s_G) on closed tracks; identity on open ones.
    pub fn wrap_s(&self, s: f64) -> f64 {
        if self.closed {
            let w = s.rem_euclid(self.length());
            if w >= self.length() {
                0.0
            } else {
                w
            }
        } else {
            s
        }
    }

    /// Shortest signed difference `a − b` along the track.
    pub fn s_diff(&self, a: f64, b: f64) -> f64 {
        let d = a - b;
        if self.closed {
            let l = self.length();
            d - l * (d / l).round()
        } else {
            d
        }
    }

    /// Segment index and in-segment fraction for `s`. Open tracks extrapolate
    /// the end segments.
    fn locate(&self, s: f64) -> (usize, f64) {
        let s = self.wrap_s(s);
        let n = self.seg_count();
        let i = match self.s.binary_search_by(|x| x.partial_cmp(&s).unwrap()) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        };
        (i, (s - self.s[i]) / self.seg_len(i))
    }

    /// Centerline point and heading (unwrapped within the lap) at segment `i`, fraction `u`.
    #[inline]
    fn frame_at(&self, i: usize, u: f64) -> ([f64; 2], f64) {
        let (a, b) = (&self.pts[i], &self.pts[i + 1]);
        let c = [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])];
        let psi = self.heading[i] + u * (self.heading[i + 1] - self.heading[i]);
        (c, psi)
    }

    /// Road heading at `s`, continuous over a lap.
    pub fn road_heading(&self, s: f64) -> f64 {
        let (i, u) = self.locate(s);
        self.frame_at(i, u).1
    }

    /// Curvature at `s` (linear interpolation of vertex curvature).
    pub fn curvature(&self, s: f64) -> f64 {
        let (i, u) = self.locate(s);
        self.kappa[i] + u.clamp(0.0, 1.0) * (self.kappa[i + 1] - self.kappa[i])
    }

    pub fn frenet_to_cart(&self, f: FrenetState) -> Result<(f64, f64, f64)> {
        let k = self.curvature(f.s);
        if k != 0.0 && f.d.abs() >= 1.0 / k.abs() {
            return Err(Error::Geometry(format!(
                "offset d = {} folds over the centerline (radius {:.2} m)",
                f.d,
                1.0 / k.abs()
            )));
        }
        Ok(self.frenet_to_cart_unchecked(f.s, f.d))
    }

    #[inline]
    pub(crate) fn frenet_to_cart_unchecked(&self, s: f64, d: f64) -> (f64, f64, f64) {
        let (i, u) = self.locate(s);
        let (c, psi) = self.frame_at(i, u);
        let (sn, cs) = psi.sin_cos();
        (c[0] - d * sn, c[1] + d * cs, psi)
    }

    /// Tangential residual `(c(u) − p)·t(u)`; increasing in `u` within the corridor.
    #[inline]
    fn tangential(&self, i: usize, u: f64, p: [f64; 2]) -> f64 {
        let (c, psi) = self.frame_at(i, u);
        let (sn, cs) = psi.sin_cos();
        (c[0] - p[0]) * cs + (c[1] - p[1]) * sn
    }

    /// d/du of `tangential`.
    #[inline]
    fn tangential_slope(&self, i: usize, u: f64, p: [f64; 2]) -> f64 {
        let (c, psi) = self.frame_at(i, u);
        let (sn, cs) = psi.sin_cos();
        let (a, b) = (&self.pts[i], &self.pts[i + 1]);
        let dpsi = self.heading[i + 1] - self.heading[i];
        let along = (b[0] - a[0]) * cs + (b[1] - a[1]) * sn;
        let normal = -(c[0] - p[0]) * sn + (c[1] - p[1]) * cs;
        along + normal * dpsi
    }

    /// Solves for the foot point on segment `i`; `u` may leave [0, 1] only
    /// on the end segments of an open track.
    fn solve_segment(&self, i: usize, p: [f64; 2]) -> (f64, f64) {
        let n = self.seg_count();
        let extend_lo = !self.closed && i == 0;
        let extend_hi = !self.closed && i == n - 1;
        let f0 = self.tangential(i, 0.0, p);
        let f1 = self.tangential(i, 1.0, p);
        let u = if extend_lo && f0 > 0.0 {
            -f0 / self.seg_len(i)
        } else if extend_hi && f1 < 0.0 {
            1.0 - f1 / self.seg_len(i)
        } else {
            // Safeguarded Newton on [0, 1] with a bracketing interval.
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            let mut u = if f1 != f0 { (-f0 / (f1 - f0)).clamp(0.0, 1.0) } else { 0.5 };
            for _ in 0..60 {
                let f = self.tangential(i, u, p);
                if f.abs() < 1e-13 {
                    break;
                }
                if f < 0.0 {
                    lo = u;
                } else {
                    hi = u;
                }
                let df = self.tangential_slope(i, u, p);
                let mut next = u - f / df;
                if !(next > lo && next < hi) || !df.is_finite() {
                    next = 0.5 * (lo + hi);
                }
                if (next - u).abs() < 1e-15 {
                    u = next;
                    break;
                }
                u = next;
            }
            u
        };
        let (c, psi) = self.frame_at(i, u);
        let (sn, cs) = psi.sin_cos();
        let d = -(p[0] - c[0]) * sn + (p[1] - c[1]) * cs;
        (u, d)
    }

    #[inline]
    fn tangential_vertex(&self, v: usize, p: [f64; 2]) -> f64 {
        let (c, s) = self.trig[v];
        (self.pts[v][0] - p[0]) * c + (self.pts[v][1] - p[1]) * s
    }

    /// Does segment `i` bracket the foot point of `p`?
    #[inline]
    fn brackets(&self, i: usize, p: [f64; 2]) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        let n = self.seg_count();
        if self.tangential_vertex(i, p) > 0.0 && !(!self.closed && i == 0) {
            Less // foot point lies before this segment
        } else if self.tangential_vertex(i + 1, p) < 0.0 && !(!self.closed && i == n - 1) {
            Greater
        } else {
            Equal
        }
    }

    /// Frenet coordinates of a Cartesian point. With `seed` the search walks
    /// from the seed's segment; without it, every segment is scanned and the
    /// candidate closest to the centerline wins.
    pub fn cart_to_frenet(&self, x: f64, y: f64, seed: Option<f64>) -> Result<FrenetState> {
        let p = [x, y];
        let n = self.seg_count();
        let corridor = self.width;
        if let Some(s0) = seed {
            let (mut i, _) = self.locate(s0);
            // Walk at most a corridor-sized window before falling back.
            let max_steps = ((4.0 * corridor + 40.0) / MAX_SPACING) as usize;
            for _ in 0..max_steps {
                match self.brackets(i, p) {
                    std::cmp::Ordering::Equal => {
                        let (u, d) = self.solve_segment(i, p);
                        if d.abs() <= corridor {
                            return Ok(FrenetState { s: self.s_at(i, u), d });
                        }
                        break;
                    }
                    std::cmp::Ordering::Less => {
                        if i == 0 {
                            if !self.closed {
                                break;
                            }
                            i = n - 1;
                        } else {
                            i -= 1;
                        }
                    }
                    std::cmp::Ordering::Greater => {
                        i += 1;
                        if i == n {
                            if !self.closed {
                                break;
                            }
                            i = 0;
                        }
                    }
                }
            }
        }
        let mut best: Option<(f64, FrenetState)> = None;
        for i in 0..n {
            if self.brackets(i, p) != std::cmp::Ordering::Equal {
                continue;
            }
            let (u, d) = self.solve_segment(i, p);
            if best.map_or(true, |(bd, _)| d.abs() < bd) {
                best = Some((d.abs(), FrenetState { s: self.s_at(i, u), d }));
            }
        }
        match best {
            Some((ad, f)) if ad <= corridor => Ok(f),
            _ => Err(Error::OutOfCorridor { x, y }),
        }
    }

    fn s_at(&self, i: usize, u: f64) -> f64 {
        let s = self.s[i] + u * self.seg_len(i);
        self.wrap_s(s)
    }

    /// Corrects a wrapped `s` to the lap-unwrapped value nearest `reference`.
    pub fn unwrap_s(&self, s_wrapped: f64, reference: f64) -> f64 {
        reference + self.s_diff(s_wrapped, reference)
    }

    /// Bound on how fast the lateral coordinate can change per unit of
    /// Cartesian displacement inside the corridor.
    pub fn lateral_lipschitz(&self) -> f64 {
        let mut worst = 1.0_f64;
        for i in 0..self.seg_count() {
            let phi = self.chord_mismatch(i);
            let k = (self.heading[i + 1] - self.heading[i]).abs() / self.seg_len(i);
            let denom = (phi.cos() - self.width * k).max(1e-3);
            worst = worst.max((1.0 + (phi.sin() / denom).powi(2)).sqrt());
        }
        worst
    }

    /// Largest angle between segment `i`'s chord and its end-vertex headings.
    fn chord_mismatch(&self, i: usize) -> f64 {
        let chord = (self.pts[i + 1][1] - self.pts[i][1]).atan2(self.pts[i + 1][0] - self.pts[i][0]);
        let mut phi = 0.0_f64;
        for h in [self.heading[i], self.heading[i + 1]] {
            let mut e = (chord - h).rem_euclid(TAU);
            if e > std::f64::consts::PI {
                e -= TAU;
            }
            phi = phi.max(e.abs());
        }
        phi
    }

    /// Worst-case ratio between road progress rate and speed over the track:
    /// max over segments of 1 / (cos φ − (w/2)|κ|), where φ is the heading
    /// mismatch between a chord and the interpolated frame.
    pub fn progress_factor(&self) -> f64 {
        let half = self.width / 2.0;
        let mut worst = 1.0_f64;
        for i in 0..self.seg_count() {
            let phi = self.chord_mismatch(i);
            let k = (self.heading[i + 1] - self.heading[i]).abs() / self.seg_len(i);
            let denom = phi.cos() - half * k;
            worst = worst.max(1.0 / denom.max(1e-3));
        }
        worst
    }
}

#[inline]
fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

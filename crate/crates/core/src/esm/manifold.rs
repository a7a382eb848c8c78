use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve_equilibria, EquilibriumPoint, EsmBuildConfig, RC_MIN};
use crate::dynamics::{TireParams, VehicleParams};
use crate::error::{Error, Result};

/// Regular (β, ψ̇) lattice; `i` indexes β, `j` indexes ψ̇, storage is row-major in `j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub beta_range: (f64, f64),
    pub psidot_range: (f64, f64),
    pub n_beta: usize,
    pub n_psidot: usize,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self {
            beta_range: (-1.0, 1.0),
            psidot_range: (-1.5, 1.5),
            n_beta: 121,
            n_psidot: 121,
        }
    }
}

impl LatticeSpec {
    pub fn validate(&self) -> Result<()> {
        let sym = |r: (f64, f64)| r.1 > 0.0 && r.0 == -r.1;
        if !(sym(self.beta_range) && sym(self.psidot_range)) {
            return Err(Error::InvalidParams("lattice ranges must be symmetric about zero".into()));
        }
        if self.n_beta < 3 || self.n_psidot < 3 || self.n_beta % 2 == 0 || self.n_psidot % 2 == 0 {
            return Err(Error::InvalidParams("lattice resolution must be odd and at least 3".into()));
        }
        Ok(())
    }

    pub fn beta_width(&self) -> f64 {
        self.beta_range.1 - self.beta_range.0
    }

    pub fn psidot_width(&self) -> f64 {
        self.psidot_range.1 - self.psidot_range.0
    }

    pub fn beta_step(&self) -> f64 {
        self.beta_width() / (self.n_beta - 1) as f64
    }

    pub fn psidot_step(&self) -> f64 {
        self.psidot_width() / (self.n_psidot - 1) as f64
    }

    pub fn beta_at(&self, i: usize) -> f64 {
        // Mirror-exact: computed from the center outward.
        let c = (self.n_beta / 2) as f64;
        (i as f64 - c) * self.beta_step()
    }

    pub fn psidot_at(&self, j: usize) -> f64 {
        let c = (self.n_psidot / 2) as f64;
        (j as f64 - c) * self.psidot_step()
    }

    pub fn len(&self) -> usize {
        self.n_beta * self.n_psidot
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_beta + i
    }

    /// Range-normalized distance used by projection.
    #[inline]
    pub fn scaled_distance(&self, b0: f64, r0: f64, b1: f64, r1: f64) -> f64 {
        ((b1 - b0) / self.beta_width()).hypot((r1 - r0) / self.psidot_width())
    }
}

/// Interpolated steady-state maps v, δ, λ over the (β, ψ̇) lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct ESManifold {
    pub lattice: LatticeSpec,
    pub(crate) v: Vec<f64>,
    pub(crate) delta: Vec<f64>,
    pub(crate) lambda: Vec<f64>,
    pub(crate) mask: Vec<bool>,
    /// Every solved equilibrium, both turn directions.
    pub points: Vec<EquilibriumPoint>,
    pub param_hash: String,
    pub radii: Vec<f64>,
}

impl ESManifold {
    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        self.mask[self.lattice.index(i, j)]
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// The stored values at a masked-in vertex.
    pub fn vertex(&self, i: usize, j: usize) -> Option<EquilibriumPoint> {
        let k = self.lattice.index(i, j);
        if !self.mask[k] {
            return None;
        }
        let (beta, psidot) = (self.lattice.beta_at(i), self.lattice.psidot_at(j));
        Some(EquilibriumPoint {
            v: self.v[k],
            beta,
            psidot,
            delta: self.delta[k],
            lambda: self.lambda[k],
            rc: self.v[k] / psidot,
        })
    }

    /// Cell and bilinear weights of a continuous query, if within the lattice.
    #[inline]
    fn cell(&self, beta: f64, psidot: f64) -> Option<(usize, usize, f64, f64)> {
        let l = &self.lattice;
        let fi = (beta - l.beta_range.0) / l.beta_step();
        let fj = (psidot - l.psidot_range.0) / l.psidot_step();
        if !(fi >= 0.0 && fj >= 0.0 && fi <= (l.n_beta - 1) as f64 && fj <= (l.n_psidot - 1) as f64) {
            return None;
        }
        let i0 = (fi.floor() as usize).min(l.n_beta - 2);
        let j0 = (fj.floor() as usize).min(l.n_psidot - 2);
        Some((i0, j0, fi - i0 as f64, fj - j0 as f64))
    }

    /// In-domain test: every lattice vertex carrying bilinear weight is masked in.
    pub fn contains(&self, beta: f64, psidot: f64) -> bool {
        self.query(beta, psidot).is_some()
    }

    /// Bilinear interpolation of the value layers; `None` outside the domain.
    pub fn query(&self, beta: f64, psidot: f64) -> Option<EquilibriumPoint> {
        let (i0, j0, a, b) = self.cell(beta, psidot)?;
        let l = &self.lattice;
        let corners = [
            (i0, j0, (1.0 - a) * (1.0 - b)),
            (i0 + 1, j0, a * (1.0 - b)),
            (i0, j0 + 1, (1.0 - a) * b),
            (i0 + 1, j0 + 1, a * b),
        ];
        let (mut v, mut d, mut lam) = (0.0, 0.0, 0.0);
        for (i, j, w) in corners {
            if w == 0.0 {
                continue;
            }
            let k = l.index(i, j);
            if !self.mask[k] {
                return None;
            }
            v += w * (self.v[k] / l.psidot_at(j)).abs().ln();
            d += w * self.delta[k];
            lam += w * self.lambda[k];
        }
        // Speed is interpolated through ln R (v = |ψ̇|·R), which tracks the
        // steep grip branch near β = 0 better than v itself.
        let v = psidot.abs() * v.exp();
        Some(EquilibriumPoint {
            v,
            beta,
            psidot,
            delta: d,
            lambda: lam,
            rc: v / psidot,
        })
    }

    /// Nearest steady state: identity inside the domain, otherwise the
    /// nearest masked-in vertex in range-normalized distance.
    pub fn project(&self, beta: f64, psidot: f64) -> Result<EquilibriumPoint> {
        if let Some(p) = self.query(beta, psidot) {
            return Ok(p);
        }
        let l = &self.lattice;
        let dist = |i: usize, j: usize| l.scaled_distance(beta, psidot, l.beta_at(i), l.psidot_at(j));
        let fi = (beta - l.beta_range.0) / l.beta_step();
        let fj = (psidot - l.psidot_range.0) / l.psidot_step();
        let inside = fi >= 0.0 && fj >= 0.0 && fi <= (l.n_beta - 1) as f64 && fj <= (l.n_psidot - 1) as f64;
        let mut best: Option<(f64, usize, usize)> = None;
        let consider = |i: usize, j: usize, best: &mut Option<(f64, usize, usize)>| {
            if self.mask[l.index(i, j)] {
                let d = dist(i, j);
                if best.map_or(true, |(bd, _, _)| d < bd) {
                    *best = Some((d, i, j));
                }
            }
        };
        if inside {
            // Chebyshev rings around the nearest vertex; a ring at radius r
            // cannot hold anything closer than (r − ½) steps along one axis.
            let ic = fi.round() as i64;
            let jc = fj.round() as i64;
            let min_step = (l.beta_step() / l.beta_width()).min(l.psidot_step() / l.psidot_width());
            let max_r = l.n_beta.max(l.n_psidot) as i64;
            for r in 0..=max_r {
                if let Some((bd, _, _)) = best {
                    if (r as f64 - 0.5) * min_step > bd {
                        break;
                    }
                }
                for dj in -r..=r {
                    let edge = dj.abs() == r;
                    let step = if edge { 1 } else { 2 * r.max(1) };
                    let mut di = -r;
                    while di <= r {
                        let (i, j) = (ic + di, jc + dj);
                        if i >= 0 && j >= 0 && (i as usize) < l.n_beta && (j as usize) < l.n_psidot {
                            consider(i as usize, j as usize, &mut best);
                        }
                        di += step;
                    }
                }
            }
        } else {
            for j in 0..l.n_psidot {
                for i in 0..l.n_beta {
                    consider(i, j, &mut best);
                }
            }
        }
        let (_, i, j) = best.ok_or(Error::EmptyManifold)?;
        Ok(self.vertex(i, j).expect("masked vertex"))
    }

    /// Highest steady-state speed solved for `radius` (interpolated in log
    /// radius between solved radii; square-root scaling outside them).
    pub fn max_speed_for_radius(&self, radius: f64) -> Option<f64> {
        let mut table: Vec<(f64, f64)> = self
            .radii
            .iter()
            .filter_map(|&r| {
                self.points
                    .iter()
                    .filter(|p| p.rc == r)
                    .map(|p| p.v)
                    .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
                    .map(|v| (r, v))
            })
            .collect();
        table.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (first, last) = (table.first()?, table.last()?);
        let r = radius.abs();
        if r <= first.0 {
            return Some(first.1 * (r / first.0).sqrt());
        }
        if r >= last.0 {
            return Some(last.1 * (r / last.0).sqrt());
        }
        let k = table.windows(2).position(|w| r <= w[1].0)?;
        let (a, b) = (table[k], table[k + 1]);
        let t = (r / a.0).ln() / (b.0 / a.0).ln();
        Some(a.1 + t * (b.1 - a.1))
    }
}

/// Solves every radius, triangulates the counter-clockwise solutions in the
/// range-normalized plane, interpolates barycentrically onto the lattice and
/// mirrors the result through the origin for clockwise motion.
pub fn build_manifold(params: &VehicleParams, tires: &TireParams, cfg: &EsmBuildConfig) -> Result<ESManifold> {
    let l = cfg.lattice;
    l.validate()?;
    if cfg.radii.len() < 3 {
        return Err(Error::InvalidParams("at least 3 radii are required".into()));
    }
    if cfg.radii.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParams("radii must be strictly ascending".into()));
    }
    if let Some(r) = cfg.radii.iter().find(|r| !(**r >= RC_MIN)) {
        return Err(Error::ManifoldBuild { radius: *r, reason: format!("below the minimum radius {RC_MIN} m") });
    }
    params.validate()?;
    tires.validate()?;

    let per_radius: Vec<Result<Vec<EquilibriumPoint>>> = cfg
        .radii
        .par_iter()
        .map(|&r| solve_equilibria(r, params, tires, cfg))
        .collect();
    let mut ccw = Vec::new();
    for (r, sols) in cfg.radii.iter().zip(per_radius) {
        let sols = sols?;
        if sols.is_empty() {
            return Err(Error::ManifoldBuild { radius: *r, reason: "no equilibrium converged".into() });
        }
        ccw.extend(sols);
    }

    let pts: Vec<delaunator::Point> = ccw
        .iter()
        .map(|p| delaunator::Point { x: p.beta / l.beta_width(), y: p.psidot / l.psidot_width() })
        .collect();
    let tri = delaunator::triangulate(&pts);
    if tri.triangles.is_empty() {
        return Err(Error::ManifoldBuild {
            radius: cfg.radii[0],
            reason: "solution points are degenerate; nothing to interpolate".into(),
        });
    }
    let triangles: Vec<[usize; 3]> = tri.triangles.chunks(3).map(|t| [t[0], t[1], t[2]]).collect();

    let n = l.len();
    let (mut v, mut delta, mut lambda, mut mask) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![false; n]);
    let jc = l.n_psidot / 2;
    let rows: Vec<Vec<Option<[f64; 3]>>> = ((jc + 1)..l.n_psidot)
        .into_par_iter()
        .map(|j| {
            let y = l.psidot_at(j) / l.psidot_width();
            let cand: Vec<&[usize; 3]> = triangles
                .iter()
                .filter(|t| {
                    let ys = t.map(|k| pts[k].y);
                    y >= ys.iter().cloned().fold(f64::INFINITY, f64::min) - 1e-12
                        && y <= ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1e-12
                })
                .collect();
            (0..l.n_beta)
                .map(|i| {
                    let beta = l.beta_at(i);
                    if beta * l.psidot_at(j) > 0.0 {
                        return None;
                    }
                    let x = beta / l.beta_width();
                    for t in &cand {
                        if let Some(w) = barycentric(&pts, t, x, y) {
                            let f = |g: &dyn Fn(&EquilibriumPoint) -> f64| {
                                w[0] * g(&ccw[t[0]]) + w[1] * g(&ccw[t[1]]) + w[2] * g(&ccw[t[2]])
                            };
                            return Some([f(&|p| p.v), f(&|p| p.delta), f(&|p| p.lambda)]);
                        }
                    }
                    None
                })
                .collect()
        })
        .collect();
    for (row, j) in rows.iter().zip((jc + 1)..l.n_psidot) {
        for (i, val) in row.iter().enumerate() {
            if let Some([vv, dd, ll]) = val {
                let (k, km) = (l.index(i, j), l.index(l.n_beta - 1 - i, l.n_psidot - 1 - j));
                v[k] = *vv;
                delta[k] = *dd;
                lambda[k] = *ll;
                mask[k] = true;
                v[km] = *vv;
                delta[km] = -*dd;
                lambda[km] = *ll;
                mask[km] = true;
            }
        }
    }
    if !mask.iter().any(|m| *m) {
        return Err(Error::ManifoldBuild {
            radius: cfg.radii[0],
            reason: "solution hull covers no lattice vertex".into(),
        });
    }

    let mut points = ccw.clone();
    points.extend(ccw.iter().map(|p| p.mirrored()));
    Ok(ESManifold {
        lattice: l,
        v,
        delta,
        lambda,
        mask,
        points,
        param_hash: super::param_hash(params, tires),
        radii: cfg.radii.clone(),
    })
}

fn barycentric(pts: &[delaunator::Point], t: &[usize; 3], x: f64, y: f64) -> Option<[f64; 3]> {
    let (a, b, c) = (&pts[t[0]], &pts[t[1]], &pts[t[2]]);
    let det = (b.y - c.y) * (a.x - c.x) + (c.x - b.x) * (a.y - c.y);
    if det.abs() < 1e-300 {
        return None;
    }
    let w0 = ((b.y - c.y) * (x - c.x) + (c.x - b.x) * (y - c.y)) / det;
    let w1 = ((c.y - a.y) * (x - c.x) + (a.x - c.x) * (y - c.y)) / det;
    let w2 = 1.0 - w0 - w1;
    let tol = -1e-12;
    (w0 >= tol && w1 >= tol && w2 >= tol).then_some([w0, w1, w2])
}

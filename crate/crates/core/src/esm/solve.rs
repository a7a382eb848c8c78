use serde::{Deserialize, Serialize};

use super::{EquilibriumPoint, LatticeSpec, RC_MIN, T_NORM, V_NORM};
use crate::dynamics::{nonlinear_derivatives, ControlInput, DynamicState, TireParams, VehicleParams};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EsmBuildConfig {
    /// Curvature radii (m), ascending; solved for both turn directions.
    pub radii: Vec<f64>,
    pub delta_range: (f64, f64),
    pub n_delta: usize,
    pub lambda_range: (f64, f64),
    pub n_lambda: usize,
    pub beta_seeds: Vec<f64>,
    /// Speed seeds as fractions of the friction-limited speed sqrt(D·g·R).
    pub speed_seeds: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
    /// Spacing of the supplementary fixed-β solves (0 disables them).
    pub beta_fill_step: f64,
    pub lattice: LatticeSpec,
}

impl Default for EsmBuildConfig {
    fn default() -> Self {
        Self {
            radii: log_radii(RC_MIN, 100.0, 9),
            delta_range: (-0.3, 0.5),
            n_delta: 20,
            lambda_range: (-0.95, 0.2),
            n_lambda: 20,
            beta_seeds: vec![-0.6, -0.3, -0.1],
            speed_seeds: vec![0.5, 0.9],
            tol: 1e-10,
            max_iter: 100,
            beta_fill_step: 0.02,
            lattice: LatticeSpec::default(),
        }
    }
}

/// `n` radii spaced evenly in log scale from `lo` to `hi`.
pub fn log_radii(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
}

/// Scaled steady-state residual (v̇, β̇·v_norm, ψ̈·t_norm) with ψ̇ = v/R.
fn scaled_residual(
    x: [f64; 3],
    delta: f64,
    rc: f64,
    params: &VehicleParams,
    tires: &TireParams,
) -> Option<[f64; 3]> {
    let [v, beta, lambda] = x;
    let st = DynamicState::new(v, beta, v / rc);
    let d = nonlinear_derivatives(&st, &ControlInput::new(delta, lambda), params, tires).ok()?;
    Some([d.v_dot, d.beta_dot * V_NORM, d.psi_ddot * T_NORM])
}

fn norm_inf(r: &[f64; 3]) -> f64 {
    r.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Normalized max-norm residual of a point under its own inputs.
pub fn residual(p: &EquilibriumPoint, params: &VehicleParams, tires: &TireParams) -> Result<f64> {
    let d = nonlinear_derivatives(&p.dyn_state(), &p.input(), params, tires)?;
    Ok(d.v_dot.abs().max((d.beta_dot * V_NORM).abs()).max((d.psi_ddot * T_NORM).abs()))
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-300 {
            return None;
        }
        m.swap(c, p);
        for r in 0..3 {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..4 {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

/// Damped Newton with a forward-difference Jacobian.
fn newton(
    mut x: [f64; 3],
    eval: impl Fn([f64; 3]) -> Option<[f64; 3]>,
    admissible: impl Fn(&[f64; 3]) -> bool,
    cfg: &EsmBuildConfig,
) -> Option<[f64; 3]> {
    if !admissible(&x) {
        return None;
    }
    let mut f = eval(x)?;
    for _ in 0..cfg.max_iter {
        let fn0 = norm_inf(&f);
        if fn0 < cfg.tol {
            break;
        }
        let mut jac = [[0.0; 3]; 3];
        for k in 0..3 {
            let h = 1e-7 * x[k].abs().max(1.0);
            let mut xp = x;
            xp[k] += h;
            let fp = eval(xp)?;
            for r in 0..3 {
                jac[r][k] = (fp[r] - f[r]) / h;
            }
        }
        let step = solve3(jac, [-f[0], -f[1], -f[2]])?;
        let mut alpha = 1.0;
        loop {
            let xn = [x[0] + alpha * step[0], x[1] + alpha * step[1], x[2] + alpha * step[2]];
            if admissible(&xn) {
                if let Some(fnew) = eval(xn) {
                    if norm_inf(&fnew) < fn0 {
                        x = xn;
                        f = fnew;
                        break;
                    }
                }
            }
            alpha *= 0.5;
            if alpha < 1e-6 {
                return None;
            }
        }
    }
    (norm_inf(&f) < cfg.tol).then_some(x)
}

/// Damped Newton on (v, β, λ) at fixed steering `delta` and radius `rc > 0`.
pub fn solve_at_delta(
    rc: f64,
    delta: f64,
    seed: (f64, f64, f64),
    params: &VehicleParams,
    tires: &TireParams,
    cfg: &EsmBuildConfig,
) -> Option<EquilibriumPoint> {
    let admissible = |x: &[f64; 3]| x[0] > params.v_eps && x[0] < 100.0 && x[1].abs() < 1.4 && x[2] > -0.99 && x[2] < 5.0;
    let eval = |x: [f64; 3]| scaled_residual(x, delta, rc, params, tires);
    let [v, beta, lambda] = newton([seed.0, seed.1, seed.2], eval, admissible, cfg)?;
    Some(EquilibriumPoint { v, beta, psidot: v / rc, delta, lambda, rc })
}

/// Damped Newton on (v, δ, λ) at fixed side-slip `beta` and radius `rc > 0`.
/// Follows the solution family through turning points in δ, where the
/// fixed-steering sweep loses it.
pub fn solve_at_beta(
    rc: f64,
    beta: f64,
    seed: (f64, f64, f64),
    params: &VehicleParams,
    tires: &TireParams,
    cfg: &EsmBuildConfig,
) -> Option<EquilibriumPoint> {
    let admissible = |x: &[f64; 3]| x[0] > params.v_eps && x[0] < 100.0 && x[1].abs() < 1.0 && x[2] > -0.99 && x[2] < 5.0;
    let eval = |x: [f64; 3]| scaled_residual([x[0], beta, x[2]], x[1], rc, params, tires);
    let [v, delta, lambda] = newton([seed.0, seed.1, seed.2], eval, admissible, cfg)?;
    Some(EquilibriumPoint { v, beta, psidot: v / rc, delta, lambda, rc })
}

/// Adds fixed-β solutions across the side-slip span of the drift solutions,
/// each seeded from the solution nearest in β.
fn fill_beta(sols: &mut Vec<EquilibriumPoint>, r: f64, params: &VehicleParams, tires: &TireParams, cfg: &EsmBuildConfig) {
    let drift: Vec<EquilibriumPoint> = sols.iter().copied().filter(|p| p.beta < 0.0).collect();
    let (Some(lo), Some(hi)) = (
        drift.iter().map(|p| p.beta).min_by(f64::total_cmp),
        drift.iter().map(|p| p.beta).max_by(f64::total_cmp),
    ) else {
        return;
    };
    let step = cfg.beta_fill_step;
    let mut b = (lo / step).ceil() * step;
    while b < hi {
        let seed = drift
            .iter()
            .min_by(|p, q| (p.beta - b).abs().total_cmp(&(q.beta - b).abs()))
            .expect("non-empty");
        if let Some(p) = solve_at_beta(r, b, (seed.v, seed.delta, seed.lambda), params, tires, cfg) {
            let dup = sols.iter().any(|q| (q.v - p.v).abs() < 1e-6 && (q.beta - p.beta).abs() < 1e-6 && (q.delta - p.delta).abs() < 1e-6);
            if p.v > params.v_eps && !dup {
                sols.push(p);
            }
        }
        b += step;
    }
}

/// All distinct steady states on a circle of signed radius `rc`. Solutions
/// with β·ψ̇ > 0 or speed at the floor are dropped. Clockwise sets are the
/// exact mirror of the counter-clockwise ones.
pub fn solve_equilibria(
    rc: f64,
    params: &VehicleParams,
    tires: &TireParams,
    cfg: &EsmBuildConfig,
) -> Result<Vec<EquilibriumPoint>> {
    if !(rc.abs() >= RC_MIN) || !rc.is_finite() {
        return Err(Error::InvalidParams(format!("|Rc| = {} is below the minimum {RC_MIN} m", rc.abs())));
    }
    let r = rc.abs();
    let v_grip = (tires.d * params.g * r).sqrt();
    let mut deltas: Vec<f64> = linspace(cfg.delta_range.0, cfg.delta_range.1, cfg.n_delta).collect();
    // Kinematic steering keeps the near-straight branch in view for large radii.
    deltas.push(params.wheelbase() / r);
    let lambdas: Vec<f64> = linspace(cfg.lambda_range.0, cfg.lambda_range.1, cfg.n_lambda).collect();

    let mut sols: Vec<EquilibriumPoint> = Vec::new();
    for &delta in &deltas {
        for &lam in &lambdas {
            for &b0 in &cfg.beta_seeds {
                for &vf in &cfg.speed_seeds {
                    let Some(p) = solve_at_delta(r, delta, (vf * v_grip, b0, lam), params, tires, cfg) else {
                        continue;
                    };
                    if p.v <= params.v_eps || p.beta * p.psidot > 0.0 {
                        continue;
                    }
                    let dup = sols.iter().any(|q| {
                        q.delta == p.delta
                            && (q.v - p.v).abs() < 1e-6
                            && (q.beta - p.beta).abs() < 1e-6
                            && (q.lambda - p.lambda).abs() < 1e-6
                    });
                    if !dup {
                        sols.push(p);
                    }
                }
            }
        }
    }
    if cfg.beta_fill_step > 0.0 {
        fill_beta(&mut sols, r, params, tires, cfg);
    }
    sols.sort_by(|a, b| a.delta.total_cmp(&b.delta).then(a.beta.total_cmp(&b.beta)));
    if rc < 0.0 {
        for p in &mut sols {
            *p = p.mirrored();
        }
    }
    Ok(sols)
}

//! Moving-horizon replanning under perfect actuation.

use serde::{Deserialize, Serialize};

use crate::dynamics::wrap_angle;
use crate::error::{Error, Result};
use crate::planner::{FullState, ModePolicy, Models, Planner, PlannerConfig, SearchStats, Termination, TrajPoint};
use crate::track::Track;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Replanning interval.
    pub t_rep: f64,
    /// Planning-time bound; each query looks this far ahead on the current plan.
    pub t_plan: f64,
    pub policy: ModePolicy,
    /// |β| above which a sample counts as drifting.
    pub beta_drift: f64,
    /// Initial speed on the start line.
    pub v0: f64,
    /// Simulated-time limit before a lap is declared failed.
    pub max_time: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { t_rep: 0.5, t_plan: 0.1, policy: ModePolicy::Both, beta_drift: 0.4, v0: 5.0, max_time: 300.0 }
    }
}

impl SimConfig {
    pub fn validate(&self, t_hor: f64) -> Result<()> {
        if !(self.t_plan > 0.0 && self.t_plan <= self.t_rep && self.t_rep < t_hor) {
            return Err(Error::InvalidParams(format!(
                "need 0 < t_plan <= t_rep < t_hor (got {}, {}, {})",
                self.t_plan, self.t_rep, t_hor
            )));
        }
        if !(self.beta_drift > 0.0) || !(self.v0 >= 0.0) || !(self.max_time > 0.0) {
            return Err(Error::InvalidParams("beta_drift, v0 and max_time must be positive".into()));
        }
        Ok(())
    }
}

/// Deterministic per-plan record. Wall time is kept out on purpose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub t: f64,
    pub s: f64,
    /// Index into the executed trajectory where this plan takes over.
    pub start_index: usize,
    pub nodes_expanded: usize,
    pub nodes_generated: usize,
    pub nodes_collided: usize,
    pub deepest_k: usize,
    pub terminated_by: Termination,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LapResult {
    pub completed: bool,
    pub failure: Option<String>,
    pub lap_length: f64,
    /// Quadrature of the road-progress integral; `None` for a failed lap.
    pub lap_time: Option<f64>,
    pub avg_speed: Option<f64>,
    /// Time stamp at which the lap was finished (or the run stopped).
    pub elapsed: f64,
    pub distance: f64,
    pub drift_intervals: Vec<(f64, f64)>,
    pub plans: Vec<PlanRecord>,
    pub trajectory: Vec<TrajPoint>,
    /// Search statistics including wall times; not serialized so the JSON
    /// report stays reproducible.
    #[serde(skip)]
    pub search_stats: Vec<SearchStats>,
}

/// Initial state on the start line: centerline, road-aligned.
pub fn start_state(track: &Track, v0: f64) -> FullState {
    FullState { s: 0.0, d: 0.0, psi: track.road_heading(0.0), v: v0, beta: 0.0, psidot: 0.0, t: 0.0 }
}

/// State of a trajectory at time `t`, interpolated linearly between samples.
pub fn state_at(traj: &[TrajPoint], t: f64) -> Option<FullState> {
    const EPS: f64 = 1e-9;
    let i = traj.iter().position(|p| p.state.t >= t - EPS)?;
    let b = &traj[i].state;
    if (b.t - t).abs() <= EPS {
        return Some(*b);
    }
    if i == 0 {
        return None;
    }
    let a = &traj[i - 1].state;
    let w = (t - a.t) / (b.t - a.t);
    let l = |x: f64, y: f64| x + w * (y - x);
    Some(FullState {
        s: l(a.s, b.s),
        d: l(a.d, b.d),
        psi: wrap_angle(a.psi + w * wrap_angle(b.psi - a.psi)),
        v: l(a.v, b.v),
        beta: l(a.beta, b.beta),
        psidot: l(a.psidot, b.psidot),
        t,
    })
}

/// Runs one lap from the start line.
pub fn run_lap(track: &Track, planner_cfg: &PlannerConfig, sim: &SimConfig, models: &Models) -> Result<LapResult> {
    if !track.is_closed() {
        return Err(Error::InvalidParams("a lap needs a closed track".into()));
    }
    sim.validate(planner_cfg.t_hor)?;
    let mut cfg = planner_cfg.clone();
    cfg.policy = sim.policy;
    let planner = Planner::new(track, models, cfg)?;
    let goal = track.length();

    let mut res = LapResult {
        completed: false,
        failure: None,
        lap_length: goal,
        lap_time: None,
        avg_speed: None,
        elapsed: 0.0,
        distance: 0.0,
        drift_intervals: Vec::new(),
        plans: Vec::new(),
        trajectory: Vec::new(),
        search_stats: Vec::new(),
    };
    let mut query = planner.snap_state(&start_state(track, sim.v0));
    let eps = 1e-9;

    'outer: loop {
        if query.t > sim.max_time {
            res.failure = Some(format!("time limit of {} s reached at s = {:.1}", sim.max_time, query.s));
            break;
        }
        let plan = match planner.search(&query) {
            Ok(p) => p,
            Err(e) => {
                res.failure = Some(format!("{e} (t = {:.2}, s = {:.1})", query.t, query.s));
                break;
            }
        };
        res.plans.push(PlanRecord {
            t: query.t,
            s: query.s,
            start_index: res.trajectory.len(),
            nodes_expanded: plan.stats.nodes_expanded,
            nodes_generated: plan.stats.nodes_generated,
            nodes_collided: plan.stats.nodes_collided,
            deepest_k: plan.stats.deepest_k,
            terminated_by: plan.stats.terminated_by,
        });
        res.search_stats.push(plan.stats.clone());

        let t_switch = query.t + sim.t_rep;
        // A sample carries the mode of the primitive ending there, so the
        // splice point keeps the mode of the previous plan.
        let first_mode = match res.trajectory.last() {
            Some(q) => q.mode,
            None => plan.trajectory.get(1).and_then(|p| p.mode),
        };
        for (i, p) in plan.trajectory.iter().enumerate() {
            if p.state.t >= t_switch - eps {
                break;
            }
            let mut p = *p;
            if i == 0 {
                p.mode = first_mode;
            }
            res.trajectory.push(p);
            if p.state.s >= goal {
                res.completed = true;
                break 'outer;
            }
        }
        match state_at(&plan.trajectory, t_switch) {
            Some(next) => query = planner.snap_state(&next),
            None => {
                res.failure = Some(format!(
                    "plan from s = {:.1} reached only layer {} before the next replanning instant",
                    query.s, plan.stats.deepest_k
                ));
                break;
            }
        }
    }

    if let (Some(a), Some(b)) = (res.trajectory.first(), res.trajectory.last()) {
        res.distance = b.state.s - a.state.s;
        res.elapsed = crossing_time(&res.trajectory, goal).unwrap_or(b.state.t) - a.state.t;
    }
    if res.completed {
        let lt = lap_time_of(&res.trajectory, track)?;
        res.lap_time = Some(lt);
        res.avg_speed = Some(goal / lt);
    }
    res.drift_intervals = drift_intervals(&res.trajectory, sim.beta_drift);
    Ok(res)
}

/// Interpolated time at which `s` first reaches `s_goal`.
fn crossing_time(traj: &[TrajPoint], s_goal: f64) -> Option<f64> {
    let i = traj.iter().position(|p| p.state.s >= s_goal)?;
    if i == 0 {
        return Some(traj[0].state.t);
    }
    let (a, b) = (&traj[i - 1].state, &traj[i].state);
    Some(a.t + (b.t - a.t) * (s_goal - a.s) / (b.s - a.s))
}

/// Road-progress rate ds/dt of a state.
pub fn progress_rate(st: &FullState, track: &Track) -> f64 {
    let phi = st.psi + st.beta - track.road_heading(st.s);
    st.v * phi.cos() / (1.0 - track.curvature(st.s) * st.d)
}

/// Lap time as the integral of ds over the road-progress rate along the
/// executed trajectory, from its first sample to one track length later.
pub fn lap_time_of(traj: &[TrajPoint], track: &Track) -> Result<f64> {
    let first = traj.first().ok_or_else(|| Error::IncompleteLap("empty trajectory".into()))?;
    let s0 = first.state.s;
    let s_end = s0 + track.length();
    let last = traj.last().unwrap().state.s;
    if last < s_end {
        return Err(Error::IncompleteLap(format!("trajectory covers {:.2} of {:.2} m", last - s0, track.length())));
    }
    let mut total = 0.0;
    let mut prev = (s0, progress_rate(&first.state, track));
    for p in &traj[1..] {
        let rate = progress_rate(&p.state, track);
        let (s_a, r_a) = prev;
        if p.state.s >= s_end {
            // Clip the last interval at the finish line.
            let w = (s_end - s_a) / (p.state.s - s_a);
            let r_end = r_a + w * (rate - r_a);
            total += 2.0 * (s_end - s_a) / (r_a + r_end);
            return Ok(total);
        }
        let avg = 0.5 * (r_a + rate);
        if !(avg > 0.0) {
            return Err(Error::IncompleteLap(format!("no forward progress near s = {:.2}", p.state.s)));
        }
        total += (p.state.s - s_a) / avg;
        prev = (p.state.s, rate);
    }
    unreachable!("finish crossing checked above")
}

/// Maximal runs of samples with |β| > `threshold`, as (first, last) times.
pub fn drift_intervals(traj: &[TrajPoint], threshold: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for p in traj {
        if p.state.beta.abs() > threshold {
            open = Some(match open {
                Some((a, _)) => (a, p.state.t),
                None => (p.state.t, p.state.t),
            });
        } else if let Some(iv) = open.take() {
            out.push(iv);
        }
    }
    out.extend(open);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub plans: usize,
    pub wall_ms_median: f64,
    pub wall_ms_mean: f64,
    pub wall_ms_max: f64,
    pub nodes_median: f64,
    pub nodes_max: usize,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Exact order statistics over per-plan search stats.
pub fn aggregate_stats(stats: &[SearchStats]) -> Option<StatsSummary> {
    if stats.is_empty() {
        return None;
    }
    let wall: Vec<f64> = stats.iter().map(|s| s.wall_ms).collect();
    let nodes: Vec<f64> = stats.iter().map(|s| s.nodes_expanded as f64).collect();
    Some(StatsSummary {
        plans: stats.len(),
        wall_ms_median: median(wall.clone()),
        wall_ms_mean: wall.iter().sum::<f64>() / wall.len() as f64,
        wall_ms_max: wall.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        nodes_median: median(nodes),
        nodes_max: stats.iter().map(|s| s.nodes_expanded).max().unwrap_or(0),
    })
}

/// Equal-width histogram: `bins + 1` edges and `bins` counts.
pub fn histogram(values: &[f64], bins: usize) -> (Vec<f64>, Vec<usize>) {
    let bins = bins.max(1);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        return (vec![0.0, 1.0], vec![0]);
    }
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0; bins];
    for v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    (edges, counts)
}

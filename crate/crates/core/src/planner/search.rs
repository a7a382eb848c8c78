use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{HeuristicKind, ModePolicy, PlannerConfig};
use super::heuristic::{dstar, SpeedProfile};
use super::{mode_feasibility, snap, FullState, Mode, ModeFeasibilityMap, ModeSet, Models, Node, TrajPoint};
use crate::dynamics::bicycle_unchecked;
use crate::dynamics::{wrap_angle, ControlInput, DynamicState, Pose};
use crate::esm::{sample_neighborhood, EquilibriumPoint, RC_MIN};
use crate::error::{Error, Result};
use crate::track::{on_road, Track};

/// How a primitive is regenerated from its start state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PrimitiveSpec {
    /// Constant inputs through the bicycle model.
    Lin(ControlInput),
    /// Linear transition of (v, β, ψ̇) to a sampled steady state.
    Esm(EquilibriumPoint),
}

impl PrimitiveSpec {
    pub fn mode(&self) -> Mode {
        match self {
            PrimitiveSpec::Lin(_) => Mode::Lin,
            PrimitiveSpec::Esm(_) => Mode::Esm,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MotionPrimitive {
    pub mode: Mode,
    pub spec: PrimitiveSpec,
    /// Samples at the integration step, start state included.
    pub states: Vec<TrajPoint>,
    pub progress: f64,
    pub duration: f64,
}

impl MotionPrimitive {
    pub fn end(&self) -> &TrajPoint {
        self.states.last().expect("primitive has samples")
    }
}

/// Negative road progress of a primitive.
pub fn step_cost(primitive: &MotionPrimitive) -> f64 {
    -primitive.progress
}

/// Result of expanding one state.
#[derive(Clone, Debug, Default)]
pub struct Expansion {
    pub children: Vec<MotionPrimitive>,
    /// Primitives that left the road or broke a rate limit.
    pub collided: Vec<MotionPrimitive>,
    pub modes: ModeSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// A node on the horizon layer was selected.
    Horizon,
    /// The expansion budget was spent.
    Budget,
    /// OPEN outgrew its cap.
    OpenCap,
    /// OPEN ran empty.
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes_expanded: usize,
    pub nodes_generated: usize,
    pub nodes_collided: usize,
    pub wall_ms: f64,
    pub deepest_k: usize,
    pub terminated_by: Termination,
}

#[derive(Clone, Debug)]
pub struct Plan {
    pub trajectory: Vec<TrajPoint>,
    pub stats: SearchStats,
    pub final_node: Node,
}

impl Plan {
    pub fn duration(&self) -> f64 {
        match (self.trajectory.first(), self.trajectory.last()) {
            (Some(a), Some(b)) => b.state.t - a.state.t,
            _ => 0.0,
        }
    }

    pub fn progress(&self) -> f64 {
        -self.final_node.g
    }
}

type CellKey = ([i64; 6], usize);

struct Rec {
    node: Node,
    state: FullState,
    xy: (f64, f64),
    spec: Option<PrimitiveSpec>,
    parent: Option<usize>,
    live: bool,
}

#[derive(PartialEq)]
struct OpenEntry {
    f: f64,
    g: f64,
    seq: usize,
}

impl Eq for OpenEntry {}

impl Ord for OpenEntry {
    // BinaryHeap is a max-heap: the "greatest" entry is the smallest f,
    // then the smallest g (most progress), then the earliest insertion.
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f)
            .then_with(|| o.g.total_cmp(&self.g))
            .then_with(|| o.seq.cmp(&self.seq))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// A configured planner over one track and model set. Immutable; each
/// `search` call owns its OPEN/CLOSED state.
pub struct Planner<'a> {
    track: &'a Track,
    models: &'a Models,
    cfg: PlannerConfig,
    a_max: f64,
    factor: f64,
    lipschitz: f64,
    lin_inputs: Vec<ControlInput>,
    profile: Option<SpeedProfile>,
}

impl<'a> Planner<'a> {
    pub fn new(track: &'a Track, models: &'a Models, cfg: PlannerConfig) -> Result<Self> {
        cfg.validate()?;
        models.bicycle.validate()?;
        if cfg.policy == ModePolicy::Both && models.manifold.is_none() {
            return Err(Error::InvalidParams("drift mode needs a manifold".into()));
        }
        let a_max = cfg.a_max.unwrap_or_else(|| models.friction_accel());
        let lin_inputs = cfg
            .lin
            .deltas()
            .iter()
            .flat_map(|&d| cfg.lin.lambdas().into_iter().map(move |l| ControlInput::new(d, l)))
            .collect();
        let mut p = Self {
            track,
            models,
            a_max,
            factor: track.progress_factor(),
            lipschitz: track.lateral_lipschitz(),
            lin_inputs,
            profile: None,
            cfg,
        };
        if p.cfg.weights.profile != 0.0 {
            p.profile = Some(p.build_profile());
        }
        Ok(p)
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.cfg
    }

    pub fn track(&self) -> &Track {
        self.track
    }

    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    pub fn progress_factor(&self) -> f64 {
        self.factor
    }

    pub fn max_children(&self) -> usize {
        let esm = if self.cfg.policy == ModePolicy::Both { self.cfg.pattern.max_samples() } else { 0 };
        esm + self.lin_inputs.len()
    }

    fn build_profile(&self) -> SpeedProfile {
        let m = self.models;
        let bike = &m.bicycle;
        let mu_g = m.tires.d * m.vehicle.g;
        let lin_cap = move |r: f64| (bike.psidot_lin * r).min((mu_g * r).sqrt());
        let manifold = m.manifold.clone();
        let policy = self.cfg.policy;
        let cap = move |r: f64| {
            let esm = match (&manifold, policy) {
                (Some(mf), ModePolicy::Both) => mf.max_speed_for_radius(r).unwrap_or(0.0),
                _ => 0.0,
            };
            lin_cap(r).max(esm)
        };
        let (lo, hi) = self.cfg.lin.lambda_range;
        let accel = (bike.cx * (-lo).max(0.0) / m.vehicle.m).clamp(0.2, self.a_max);
        let decel = (bike.cx * hi.max(0.0) / m.vehicle.m).clamp(0.2, self.a_max);
        SpeedProfile::build(self.track, &cap, self.cfg.v_max, accel, decel)
    }

    pub fn feasibility_map(&self) -> ModeFeasibilityMap<'_> {
        let manifold = match self.cfg.policy {
            ModePolicy::Both => self.models.manifold.as_deref(),
            ModePolicy::LinOnly => None,
        };
        ModeFeasibilityMap::new(&self.models.bicycle, manifold)
    }

    pub fn modes_at(&self, beta: f64, psidot: f64) -> ModeSet {
        mode_feasibility(beta, psidot, &self.feasibility_map())
    }

    /// Cartesian position of a road state.
    pub fn position(&self, st: &FullState) -> (f64, f64) {
        let (x, y, _) = self.track.frenet_to_cart_unchecked(st.s, st.d);
        (x, y)
    }

    /// Builds a full state from a Cartesian pose and dynamics, with `s`
    /// unwrapped next to `s_hint`.
    pub fn state_from_pose(&self, pose: &Pose, dy: &DynamicState, t: f64, s_hint: f64) -> Result<FullState> {
        let f = self.track.cart_to_frenet(pose.x, pose.y, Some(self.track.wrap_s(s_hint)))?;
        Ok(FullState {
            s: self.track.unwrap_s(f.s, s_hint),
            d: f.d,
            psi: pose.psi,
            v: dy.v,
            beta: dy.beta,
            psidot: dy.psidot,
            t,
        })
    }

    /// Snaps a state onto its grid reconstruction.
    pub fn snap_state(&self, st: &FullState) -> FullState {
        let (_, _, vals) = snap(st.as_array(), &self.cfg.grid);
        FullState::from_array(vals, st.t)
    }

    /// Footprint check of a pose; the COG must sit at road offset `d_cog`.
    fn footprint_ok(&self, x: f64, y: f64, psi: f64, s_hint: f64, d_cog: f64) -> bool {
        let half = self.track.width() / 2.0;
        let fp = &self.cfg.footprint;
        let reach = fp.circles.iter().map(|c| c.offset.abs() * self.lipschitz + c.radius).fold(0.0, f64::max);
        if d_cog.abs() + reach <= half - 1e-9 {
            return true;
        }
        on_road(&Pose { x, y, psi }, fp, self.track, Some(self.track.wrap_s(s_hint))).on_road
    }

    /// Is a planning state on the road?
    pub fn state_on_road(&self, st: &FullState) -> bool {
        let (x, y) = self.position(st);
        self.footprint_ok(x, y, st.psi, st.s, st.d)
    }

    /// Integrates one primitive from `start`. Returns `Ok(Some)` for a valid
    /// primitive, `Err(prim)` for a road or rate-limit violation (with the
    /// samples up to the violation), `Ok(None)` for one outside the model
    /// domain.
    pub fn rollout(
        &self,
        start: &FullState,
        xy: (f64, f64),
        spec: PrimitiveSpec,
    ) -> std::result::Result<Option<MotionPrimitive>, MotionPrimitive> {
        let n = self.cfg.substeps;
        let ts = self.cfg.ts();
        let dt = self.cfg.dt();
        let pat = &self.cfg.pattern;
        let bike = &self.models.bicycle;
        let veh = &self.models.vehicle;
        let d0 = DynamicState::new(start.v, start.beta, start.psidot);
        let mode = spec.mode();
        let mut out = Vec::with_capacity(n + 1);
        out.push(TrajPoint { state: *start, x: xy.0, y: xy.1, mode: Some(mode) });
        let (mut x, mut y, mut psi) = (xy.0, xy.1, start.psi);
        let mut dy = d0;
        let mut s_prev = start.s;
        let fail = |out: Vec<TrajPoint>| MotionPrimitive {
            mode,
            spec,
            progress: out.last().unwrap().state.s - start.s,
            states: out,
            duration: ts,
        };
        for i in 0..n {
            let (sn, cs) = (psi + dy.beta).sin_cos();
            x += dt * dy.v * cs;
            y += dt * dy.v * sn;
            psi += dt * dy.psidot;
            let next = match spec {
                PrimitiveSpec::Lin(u) => {
                    let der = bicycle_unchecked(&dy, &u, veh, bike);
                    let nx = DynamicState::new(
                        (dy.v + dt * der.v_dot).max(0.0),
                        dy.beta + dt * der.beta_dot,
                        dy.psidot + dt * der.psi_ddot,
                    );
                    if !bike.contains(nx.beta, nx.psidot) {
                        return Ok(None);
                    }
                    nx
                }
                PrimitiveSpec::Esm(target) => {
                    if i + 1 == n {
                        target.dyn_state()
                    } else {
                        d0.lerp(&target.dyn_state(), (i + 1) as f64 / n as f64)
                    }
                }
            };
            if !(next.v <= self.cfg.v_max
                && next.beta >= self.cfg.beta_bounds.0
                && next.beta <= self.cfg.beta_bounds.1
                && next.psidot >= self.cfg.psidot_bounds.0
                && next.psidot <= self.cfg.psidot_bounds.1)
            {
                return Ok(None);
            }
            let rate_ok = (next.v - dy.v).abs() <= self.a_max * dt * (1.0 + 1e-9)
                && pat.within_caps((d0.v, d0.beta, d0.psidot), (next.v, next.beta, next.psidot), ts, self.a_max * (1.0 + 1e-9));
            dy = next;
            let psi_w = wrap_angle(psi);
            let f = match self.track.cart_to_frenet(x, y, Some(self.track.wrap_s(s_prev))) {
                Ok(f) => f,
                Err(_) => return Err(fail(out)),
            };
            let s = self.track.unwrap_s(f.s, s_prev);
            s_prev = s;
            let st = FullState {
                s,
                d: f.d,
                psi: psi_w,
                v: dy.v,
                beta: dy.beta,
                psidot: dy.psidot,
                t: start.t + dt * (i + 1) as f64,
            };
            out.push(TrajPoint { state: st, x, y, mode: Some(mode) });
            if !rate_ok || !self.footprint_ok(x, y, psi_w, s, f.d) {
                return Err(fail(out));
            }
        }
        Ok(Some(MotionPrimitive {
            mode,
            spec,
            progress: out.last().unwrap().state.s - start.s,
            states: out,
            duration: ts,
        }))
    }

    /// Primitive specs available from a state, in deterministic order:
    /// manifold samples first, then the linear-mode input grid.
    pub fn primitive_specs(&self, st: &FullState) -> (ModeSet, Vec<PrimitiveSpec>) {
        let modes = self.modes_at(st.beta, st.psidot);
        let mut specs = Vec::new();
        if modes.esm {
            if let Some(mf) = self.models.manifold.as_deref() {
                if let Ok(center) = mf.project(st.beta, st.psidot) {
                    for p in sample_neighborhood(&center, &self.cfg.pattern, mf, self.cfg.ts(), self.a_max) {
                        specs.push(PrimitiveSpec::Esm(p));
                    }
                }
            }
        }
        if modes.lin {
            specs.extend(self.lin_inputs.iter().map(|u| PrimitiveSpec::Lin(*u)));
        }
        (modes, specs)
    }

    /// Generates every primitive from `st` and sorts them into valid children
    /// and collided ones.
    pub fn expand(&self, st: &FullState) -> Expansion {
        let xy = self.position(st);
        let (modes, specs) = self.primitive_specs(st);
        let mut e = Expansion { modes, ..Default::default() };
        for spec in specs {
            match self.rollout(st, xy, spec) {
                Ok(Some(p)) => e.children.push(p),
                Ok(None) => {}
                Err(p) => e.collided.push(p),
            }
        }
        e
    }

    /// Envelope speed bound at layer `k` for a search rooted at speed `v0`.
    fn envelope_speed(&self, v0: f64, k: usize) -> f64 {
        (v0 + self.a_max * k as f64 * self.cfg.ts()).min(self.cfg.v_max)
    }

    /// Admissible layer-wise bound used by the search (see `heuristic_core`).
    pub fn h_core_layer(&self, v_root: f64, k: usize) -> f64 {
        let tau = (self.cfg.t_hor - k as f64 * self.cfg.ts()).max(0.0);
        if k >= self.cfg.k_hor {
            return 0.0;
        }
        -self.factor * dstar(self.envelope_speed(v_root, k), tau, self.cfg.v_max, self.a_max)
    }

    /// Heuristic of a child before the sibling term.
    fn heuristic(&self, v_root: f64, k: usize, st: &FullState, parent: &FullState) -> f64 {
        if self.cfg.heuristic == HeuristicKind::Zero {
            return 0.0;
        }
        let w = &self.cfg.weights;
        let core = self.h_core_layer(v_root, k);
        let mut h = core;
        if let Some(p) = &self.profile {
            let tau = (self.cfg.t_hor - k as f64 * self.cfg.ts()).max(0.0);
            h += w.profile * (-p.remaining_progress(st.s, st.v, tau) - core);
        }
        if w.smooth != 0.0 {
            let pat = &self.cfg.pattern;
            let r = (st.v - parent.v).abs() / pat.dv_max
                + (st.beta - parent.beta).abs() / pat.dbeta_max
                + (st.psidot - parent.psidot).abs() / pat.dpsidot_max;
            h += w.smooth * r / 3.0;
        }
        if w.edge != 0.0 {
            let e = st.d / (self.track.width() / 2.0);
            h += w.edge * e * e;
        }
        if w.lateral != 0.0 {
            h += w.lateral * self.lateral_risk(st);
        }
        h
    }

    /// Bound on how fast ψ̇ can be changed from `st`, per second.
    fn unwind_rate(&self, st: &FullState) -> f64 {
        let ts = self.cfg.ts();
        let cap = self.cfg.pattern.dpsidot_max / ts;
        let modes = self.modes_at(st.beta, st.psidot);
        match self.models.manifold.as_deref() {
            Some(m) if modes.esm && !modes.lin => {
                let ring = self.cfg.pattern.ring_radii.iter().copied().fold(0.0, f64::max);
                (ring * m.lattice.psidot_width() / ts).clamp(1e-3, cap)
            }
            _ => cap,
        }
    }

    /// Lateral acceleration needed to keep off either road edge, relative to
    /// the friction limit: the approach speed towards an edge must be nulled
    /// within the remaining gap while the road ahead bends (after braking
    /// along the way at the profile deceleration).
    pub fn lateral_risk(&self, st: &FullState) -> f64 {
        let a_fric = self.models.friction_accel();
        let decel = self.profile.as_ref().map_or(a_fric, |p| p.decel());
        // Turning capacity at this speed: the linear model's yaw-rate box, or
        // the tightest steady drift circle when drifting is allowed.
        let esm_cap = match (self.cfg.policy, &self.models.manifold) {
            (ModePolicy::Both, Some(_)) => st.v * st.v / RC_MIN,
            _ => 0.0,
        };
        let a_lat = (st.v * self.models.bicycle.psidot_lin).max(esm_cap).min(a_fric).max(0.5);
        let phi = wrap_angle(st.psi + st.beta - self.track.road_heading(st.s));
        let kappa = self.track.curvature(st.s);
        // The velocity keeps rotating relative to the road for one committed
        // primitive; after that the rotation unwinds at a bounded rate (in a
        // drift only one sampling ring of ψ̇ per primitive).
        let phidot = st.psidot - kappa * st.v * phi.cos() / (1.0 - kappa * st.d).max(0.1);
        let ts = self.cfg.ts();
        let unwind = self.unwind_rate(st);
        let t_r = ts + (phidot.abs() / unwind).min(4.0 * ts);
        let angle = |t: f64| {
            let late = (t - ts).max(0.0);
            phi + phidot * t - 0.5 * phidot.signum() * unwind * late * late
        };
        let n = 20;
        let mut shift = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) * t_r / n as f64;
            shift += st.v * angle(t).sin() * t_r / n as f64;
        }
        let ddot = st.v * angle(t_r).sin();
        // Lateral half-width of the footprint when aligned with the road.
        let reach = self.cfg.footprint.circles.iter().map(|c| c.radius).fold(0.0, f64::max);
        let half = self.track.width() / 2.0;
        let look = (st.v * st.v / (2.0 * decel)).max(1.0);
        let mut worst = 0.0_f64;
        for side in [1.0_f64, -1.0] {
            let gap = (half - reach - side * (st.d + shift)).max(0.05);
            let u = side * ddot;
            let a_req = if u > 0.0 { u * u / (2.0 * gap) } else { 0.0 };
            let mut a_road = 0.0_f64;
            let mut x = 0.0;
            while x <= look {
                let vv = (st.v * st.v - 2.0 * decel * x).max(0.0);
                a_road = a_road.max(-side * self.track.curvature(st.s + x) * vv);
                x += 1.0;
            }
            worst = worst.max((a_req + a_road) / a_lat);
        }
        (worst - 0.8).max(0.0)
    }

    /// Hybrid-A* from `start` over `k_hor` layers.
    pub fn search(&self, start: &FullState) -> Result<Plan> {
        let clock = Instant::now();
        let grid = self.cfg.grid;
        let (idx0, rem0, vals0) = snap(start.as_array(), &grid);
        let root_state = FullState::from_array(vals0, start.t);
        if !self.state_on_road(&root_state) {
            return Err(Error::Planning(format!("initial state at s = {:.2} is off the road", start.s)));
        }
        if self.modes_at(root_state.beta, root_state.psidot).is_empty() {
            return Err(Error::Planning(format!(
                "no motion mode is feasible at beta = {:.3}, psidot = {:.3}",
                root_state.beta, root_state.psidot
            )));
        }
        let v_root = root_state.v;
        let h0 = if self.cfg.heuristic == HeuristicKind::Zero { 0.0 } else { self.heuristic(v_root, 0, &root_state, &root_state) };
        let mut arena = vec![Rec {
            node: Node { idx: idx0, parent_idx: idx0, rem: rem0, g: 0.0, f: h0, k: 0, mode: None },
            state: root_state,
            xy: self.position(&root_state),
            spec: None,
            parent: None,
            live: true,
        }];
        let mut open: HashMap<CellKey, usize> = HashMap::new();
        let mut closed: HashMap<CellKey, usize> = HashMap::new();
        let mut heap = BinaryHeap::new();
        open.insert((idx0, 0), 0);
        heap.push(OpenEntry { f: h0, g: 0.0, seq: 0 });

        let mut stats = SearchStats {
            nodes_expanded: 0,
            nodes_generated: 0,
            nodes_collided: 0,
            wall_ms: 0.0,
            deepest_k: 0,
            terminated_by: Termination::Exhausted,
        };
        // Anytime fallback: deepest layer, then best g.
        let mut best = 0usize;
        let mut goal = None;
        let max_children = self.max_children().max(1) as f64;

        while let Some(top) = heap.pop() {
            let id = top.seq;
            if !arena[id].live {
                continue;
            }
            let key = (arena[id].node.idx, arena[id].node.k);
            open.remove(&key);
            arena[id].live = false;
            if arena[id].node.k >= self.cfg.k_hor {
                goal = Some(id);
                stats.terminated_by = Termination::Horizon;
                break;
            }
            if stats.nodes_expanded >= self.cfg.n_timeout {
                stats.terminated_by = Termination::Budget;
                break;
            }
            closed.insert(key, id);
            stats.nodes_expanded += 1;

            let parent = arena[id].state;
            let pk = arena[id].node.k;
            let pg = arena[id].node.g;
            let pidx = arena[id].node.idx;
            let exp = self.expand(&parent);
            stats.nodes_collided += exp.collided.len();
            let siblings = exp.children.len() as f64;
            let sib_pen = if self.cfg.heuristic == HeuristicKind::Core {
                self.cfg.weights.sibling * (max_children - siblings).max(0.0) / max_children
            } else {
                0.0
            };
            for prim in exp.children {
                stats.nodes_generated += 1;
                let end = prim.end().state;
                let (idx, rem, vals) = snap(end.as_array(), &grid);
                let k = pk + 1;
                let ckey = (idx, k);
                let st = FullState::from_array(vals, parent.t + self.cfg.ts());
                let g = pg - (st.s - parent.s);
                if let Some(&cid) = closed.get(&ckey) {
                    if !(self.cfg.reopen && g < arena[cid].node.g) {
                        continue;
                    }
                    closed.remove(&ckey);
                }
                if let Some(&oid) = open.get(&ckey) {
                    if g < arena[oid].node.g {
                        arena[oid].live = false;
                    } else {
                        continue;
                    }
                }
                let h = self.heuristic(v_root, k, &st, &parent) + sib_pen;
                let nid = arena.len();
                arena.push(Rec {
                    node: Node { idx, parent_idx: pidx, rem, g, f: g + h, k, mode: Some(prim.mode) },
                    state: st,
                    xy: self.position(&st),
                    spec: Some(prim.spec),
                    parent: Some(id),
                    live: true,
                });
                open.insert(ckey, nid);
                heap.push(OpenEntry { f: g + h, g, seq: nid });
                let b = &arena[best].node;
                if k > b.k || (k == b.k && g < b.g) {
                    best = nid;
                }
            }
            if open.len() > self.cfg.open_cap {
                stats.terminated_by = Termination::OpenCap;
                break;
            }
        }
        let end = goal.unwrap_or(best);
        let trajectory = self.reconstruct(&arena, end)?;
        stats.deepest_k = arena[end].node.k;
        stats.wall_ms = clock.elapsed().as_secs_f64() * 1e3;
        Ok(Plan { trajectory, stats, final_node: arena[end].node })
    }

    fn reconstruct(&self, arena: &[Rec], end: usize) -> Result<Vec<TrajPoint>> {
        let mut chain = vec![end];
        while let Some(p) = arena[*chain.last().unwrap()].parent {
            if chain.len() > arena.len() {
                return Err(Error::Reconstruction("parent chain has a cycle".into()));
            }
            chain.push(p);
        }
        chain.reverse();
        let root = &arena[chain[0]];
        let mut out = vec![TrajPoint { state: root.state, x: root.xy.0, y: root.xy.1, mode: None }];
        for w in chain.windows(2) {
            let (p, c) = (&arena[w[0]], &arena[w[1]]);
            let spec = c.spec.ok_or_else(|| Error::Reconstruction("child without primitive".into()))?;
            let prim = match self.rollout(&p.state, p.xy, spec) {
                Ok(Some(prim)) => prim,
                _ => return Err(Error::Reconstruction("stored primitive no longer regenerates".into())),
            };
            let n = prim.states.len();
            out.extend_from_slice(&prim.states[1..n - 1]);
            out.push(TrajPoint { state: c.state, x: c.xy.0, y: c.xy.1, mode: Some(prim.mode) });
        }
        Ok(out)
    }
}

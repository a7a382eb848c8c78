use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use driftplan::dynamics::{bicycle_derivatives, ControlInput, DynamicState, Pose, VehicleConfig};
use driftplan::esm::{build_manifold, EsmBuildConfig, ESManifold, SamplePattern};
use driftplan::planner::*;
use driftplan::track::{on_road, Track, TrackBuilder};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn manifold() -> Arc<ESManifold> {
    static M: OnceLock<Arc<ESManifold>> = OnceLock::new();
    M.get_or_init(|| {
        let vc = VehicleConfig::default();
        Arc::new(build_manifold(&vc.vehicle, &vc.tires, &EsmBuildConfig::default()).unwrap())
    })
    .clone()
}

fn models() -> &'static Models {
    static M: OnceLock<Models> = OnceLock::new();
    M.get_or_init(|| Models::new(&VehicleConfig::default(), Some(manifold())))
}

fn wide_straight() -> Track {
    TrackBuilder::new(0.0, 0.0, 0.0).straight(400.0).build(20.0, false).unwrap()
}

fn test_track() -> Track {
    Track::builtin("test-track").unwrap()
}

fn road_state(track: &Track, s: f64, d: f64, v: f64) -> FullState {
    FullState { s, d, psi: track.road_heading(s), v, beta: 0.0, psidot: 0.0, t: 0.0 }
}

fn zero_weights(mut cfg: PlannerConfig) -> PlannerConfig {
    cfg.weights = HeuristicWeights::zero();
    cfg
}

// ---------------------------------------------------------------- heuristic

#[test]
fn dstar_matches_numeric_integration() {
    let (v_max, a) = (30.0, 5.886);
    for &(v, tau) in &[(0.0, 1.0), (5.0, 4.0), (12.0, 0.3), (25.0, 3.0), (29.9, 2.0)] {
        let n = 200_000;
        let dt = tau / n as f64;
        let (mut x, mut vv) = (0.0, v);
        for _ in 0..n {
            let vn = (vv + a * dt).min(v_max);
            x += 0.5 * (vv + vn) * dt;
            vv = vn;
        }
        assert!((dstar(v, tau, v_max, a) - x).abs() < 1e-6, "v={v} tau={tau}");
    }
}

#[test]
fn core_heuristic_examples() {
    assert_eq!(heuristic_core(10.0, 0.0, 30.0, 5.0, 1.0), 0.0);
    assert!((heuristic_core(30.0, 2.0, 30.0, 5.0, 1.0) + 60.0).abs() < 1e-12);
    let (v, tau, vm, a) = (10.0, 6.0, 30.0, 5.0);
    let closed = -(vm * vm - v * v) / (2.0 * a) - vm * (tau - (vm - v) / a);
    assert!((heuristic_core(v, tau, vm, a, 1.0) - closed).abs() < 1e-9);
    assert!((heuristic_core(v, tau, vm, a, 1.5) - 1.5 * closed).abs() < 1e-9);
}

#[test]
fn layer_heuristic_vanishes_on_horizon() {
    let track = test_track();
    let p = Planner::new(&track, models(), PlannerConfig::default()).unwrap();
    let k = p.config().k_hor;
    assert_eq!(p.h_core_layer(8.0, k), 0.0);
    for i in 1..k {
        assert!(p.h_core_layer(8.0, i) > p.h_core_layer(8.0, i - 1));
    }
    assert!((p.a_max() - 0.6 * 9.81).abs() < 0.05 * 0.6 * 9.81);
}

// ---------------------------------------------------------------- mode gating

#[test]
fn mode_feasibility_examples() {
    let m = manifold();
    let map = ModeFeasibilityMap::new(&models().bicycle, Some(&m));
    let lin_only = ModeFeasibilityMap::new(&models().bicycle, None);
    let origin = mode_feasibility(0.0, 0.0, &map);
    assert!(origin.lin);
    let drift = mode_feasibility(-0.4, 0.5, &map);
    assert!(drift.esm && !drift.lin);
    assert_eq!(mode_feasibility(0.4, -0.5, &map), drift);
    assert!(mode_feasibility(0.4, 0.5, &map).is_empty());
    assert!(!mode_feasibility(-0.4, 0.5, &lin_only).esm);
    let overlap = mode_feasibility(-0.05, 0.2, &map);
    assert!(overlap.lin && overlap.esm);
}

#[test]
fn expand_on_wide_straight() {
    let track = wide_straight();
    let cfg = PlannerConfig::default();
    let p = Planner::new(&track, models(), cfg.clone()).unwrap();
    let st = road_state(&track, 50.0, 0.0, 10.0);
    let e = p.expand(&st);
    assert!(e.modes.lin);
    let (_, specs) = p.primitive_specs(&st);
    let n_lin = specs.iter().filter(|s| s.mode() == Mode::Lin).count();
    assert_eq!(n_lin, cfg.lin.n_delta * cfg.lin.n_lambda);
    assert!(e.children.len() + e.collided.len() <= specs.len());
    // Inputs whose (β, ψ̇) leave the linear-model box within one primitive are
    // dropped; every other input becomes a child or a collision.
    let dt = cfg.dt();
    let in_domain = cfg
        .lin
        .deltas()
        .iter()
        .flat_map(|&d| cfg.lin.lambdas().into_iter().map(move |l| ControlInput::new(d, l)))
        .filter(|u| {
            let mut x = DynamicState::new(st.v, st.beta, st.psidot);
            (0..cfg.substeps).all(|_| match bicycle_derivatives(&x, u, &models().vehicle, &models().bicycle) {
                Ok(der) => {
                    x = DynamicState::new(x.v + dt * der.v_dot, x.beta + dt * der.beta_dot, x.psidot + dt * der.psi_ddot);
                    models().bicycle.contains(x.beta, x.psidot)
                }
                Err(_) => false,
            })
        })
        .count();
    assert!(in_domain >= cfg.lin.n_lambda);
    assert_eq!(e.children.iter().filter(|c| c.mode == Mode::Lin).count() + e.collided.len(), in_domain);

    let pat = &cfg.pattern;
    let ts = cfg.ts();
    let a = p.a_max();
    for c in &e.children {
        let end = c.end().state;
        assert!((end.v - st.v).abs() <= (pat.dv_max.min(a * ts)) * (1.0 + 1e-9));
        assert!((end.beta - st.beta).abs() <= pat.dbeta_max + 1e-12);
        assert!((end.psidot - st.psidot).abs() <= pat.dpsidot_max + 1e-12);
        assert!(end.v <= cfg.v_max);
        for w in c.states.windows(2) {
            assert!((w[1].state.v - w[0].state.v).abs() <= a * cfg.dt() * (1.0 + 1e-9));
        }
    }
}

#[test]
fn drift_state_expands_esm_primitives() {
    let track = wide_straight();
    let p = Planner::new(&track, models(), PlannerConfig::default()).unwrap();
    let c = manifold().project(-0.4, 0.5).unwrap();
    let st = FullState { s: 50.0, d: 0.0, psi: 0.0, v: c.v, beta: c.beta, psidot: c.psidot, t: 0.0 };
    let e = p.expand(&st);
    assert!(e.modes.esm && !e.modes.lin);
    assert!(!e.children.is_empty());
    assert!(e.children.iter().all(|c| c.mode == Mode::Esm));
    // Sampled targets stay on the drift side.
    assert!(e.children.iter().all(|c| c.end().state.beta * c.end().state.psidot <= 0.0));
}

/// Road check at every sample of a primitive, done with the plain footprint
/// test rather than the planner's shortcut.
fn dense_on_road(track: &Track, p: &Planner, prim: &MotionPrimitive) -> bool {
    prim.states.iter().all(|q| {
        on_road(&Pose::new(q.x, q.y, q.state.psi), &p.config().footprint, track, Some(track.wrap_s(q.state.s))).on_road
    })
}

#[test]
fn interior_clipping_is_collision() {
    // Same centerline, two widths: primitives regenerated on the wide road
    // show the full arc, which the narrow planner must reject whenever any
    // interior sample leaves the 3 m corridor.
    let build = |w| TrackBuilder::new(0.0, 0.0, 0.0).straight(20.0).arc(40.0, 1.2).straight(60.0).build(w, false).unwrap();
    let (wide, narrow) = (build(14.0), build(3.0));
    let pw = Planner::new(&wide, models(), PlannerConfig::default()).unwrap();
    let pn = Planner::new(&narrow, models(), PlannerConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut interior_only = 0;
    let mut checked = 0;
    for _ in 0..60 {
        let s = rng.gen_range(15.0..60.0);
        let st = FullState {
            d: rng.gen_range(-0.45..0.45),
            psi: narrow.road_heading(s) + rng.gen_range(-0.1..0.1),
            ..road_state(&narrow, s, 0.0, rng.gen_range(6.0..16.0))
        };
        if !pn.state_on_road(&st) {
            continue;
        }
        let en = pn.expand(&st);
        let ew = pw.expand(&st);
        for full in &ew.children {
            checked += 1;
            let ok = dense_on_road(&narrow, &pn, full);
            let in_children = en.children.iter().any(|c| c.spec == full.spec);
            let in_collided = en.collided.iter().any(|c| c.spec == full.spec);
            assert_eq!(ok, in_children, "spec {:?}", full.spec);
            assert_eq!(!ok, in_collided);
            let last = full.end();
            let end_ok =
                on_road(&Pose::new(last.x, last.y, last.state.psi), &pn.config().footprint, &narrow, None).on_road;
            if !ok && end_ok {
                interior_only += 1;
            }
        }
    }
    assert!(checked > 500);
    assert!(interior_only > 0, "no primitive clipped only in its interior");
}

// ---------------------------------------------------------------- costs

fn lin(p: &Planner, st: &FullState, delta: f64, lambda: f64) -> MotionPrimitive {
    p.rollout(st, p.position(st), PrimitiveSpec::Lin(ControlInput::new(delta, lambda))).unwrap().unwrap()
}

#[test]
fn straight_coasting_cost_is_distance() {
    let track = wide_straight();
    let p = Planner::new(&track, models(), PlannerConfig::default()).unwrap();
    for v in [3.0, 10.0, 20.0] {
        let prim = lin(&p, &road_state(&track, 10.0, 0.0, v), 0.0, 0.0);
        assert!((step_cost(&prim) + v * p.config().ts()).abs() < 1e-9, "v={v}");
    }
    let prim = lin(&p, &road_state(&track, 10.0, 0.0, 0.0), 0.0, 0.0);
    assert_eq!(step_cost(&prim), 0.0);
}

#[test]
fn drifting_progress_is_bounded_by_speed() {
    let track = wide_straight();
    let p = Planner::new(&track, models(), PlannerConfig::default()).unwrap();
    let c = manifold().project(-0.45, 0.45).unwrap();
    let st = FullState { s: 50.0, d: 0.0, psi: 0.3, v: c.v, beta: c.beta, psidot: c.psidot, t: 0.0 };
    let e = p.expand(&st);
    assert!(!e.children.is_empty());
    let dt = p.config().dt();
    for prim in &e.children {
        let vs: Vec<f64> = prim.states.iter().map(|q| q.state.v).collect();
        let v_mean = vs.iter().sum::<f64>() / vs.len() as f64;
        assert!(step_cost(prim).abs() <= v_mean.max(vs[0]) * p.config().ts() + 1e-9);
        // On a straight road progress is the integral of v·cos(ψ+β); the
        // position update is explicit Euler, so a left Riemann sum is exact.
        let quad: f64 = prim.states[..prim.states.len() - 1]
            .iter()
            .map(|q| q.state.v * (q.state.psi + q.state.beta).cos() * dt)
            .sum();
        assert!((prim.progress - quad).abs() < 1e-9, "{} vs {quad}", prim.progress);
    }
}

// ---------------------------------------------------------------- grid

proptest! {
    #[test]
    fn discretize_round_trips(x in -1e4f64..1e4, step in prop::sample::select(vec![0.05, 0.1, 0.5, 2.0, 0.3])) {
        let (i, r) = discretize(x, step);
        prop_assert!(r >= 0.0 && r < step);
        let back = i as f64 * step + r;
        prop_assert!((back - x).abs() <= 1e-9 * x.abs().max(1.0));
        prop_assert_eq!(discretize(back, step).0, i);
    }

    #[test]
    fn snap_is_idempotent(s in 0.0f64..500.0, d in -5.0f64..5.0, v in 0.0f64..30.0) {
        let grid = PlannerConfig::default().grid;
        let (idx, _, vals) = snap([s, d, 0.3, v, -0.2, 0.4], &grid);
        let (idx2, _, vals2) = snap(vals, &grid);
        prop_assert_eq!(idx, idx2);
        prop_assert_eq!(vals, vals2);
    }
}

#[test]
fn discretize_negative_boundaries() {
    assert_eq!(discretize(-0.1, 0.1).0, -1);
    assert_eq!(discretize(0.0, 0.1), (0, 0.0));
    let (i, r) = discretize(-1e-18, 0.5);
    assert_eq!(i, -1);
    assert!(r < 0.5);
}

// ---------------------------------------------------------------- search

#[test]
fn one_layer_search_picks_best_primitive() {
    let track = wide_straight();
    let mut cfg = zero_weights(PlannerConfig::default().with_horizon(1));
    cfg.t_hor = 0.5;
    let p = Planner::new(&track, models(), cfg).unwrap();
    let st = road_state(&track, 50.0, 0.0, 10.0);
    let plan = p.search(&st).unwrap();
    let snapped = p.snap_state(&st);
    let best = p
        .expand(&snapped)
        .children
        .iter()
        .map(|c| {
            let (_, _, vals) = snap(c.end().state.as_array(), &p.config().grid);
            vals[0] - snapped.s
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(plan.stats.terminated_by, Termination::Horizon);
    assert!((plan.progress() - best).abs() < 1e-12);
    // Full traction straight ahead wins on an open straight.
    let lo = p.config().lin.lambda_range.0;
    let full = lin(&p, &snapped, 0.0, lo).end().state;
    assert_eq!(p.snap_state(&full).as_array(), plan.trajectory.last().unwrap().state.as_array());
}

/// Layer-by-layer dynamic program over the same expansions and the same
/// one-node-per-cell pruning; returns the best progress at `k_hor`.
fn layered_optimum(p: &Planner, start: &FullState) -> Option<f64> {
    let grid = p.config().grid;
    let (idx0, _, vals0) = snap(start.as_array(), &grid);
    let root = FullState::from_array(vals0, start.t);
    let mut layer: HashMap<[i64; 6], (f64, FullState)> = HashMap::from([(idx0, (0.0, root))]);
    for _ in 0..p.config().k_hor {
        let mut next: HashMap<[i64; 6], (f64, FullState)> = HashMap::new();
        let mut keys: Vec<_> = layer.keys().copied().collect();
        keys.sort();
        for key in keys {
            let (g, st) = layer[&key];
            for prim in p.expand(&st).children {
                let (idx, _, vals) = snap(prim.end().state.as_array(), &grid);
                let child = FullState::from_array(vals, st.t + p.config().ts());
                let cg = g - (child.s - st.s);
                match next.get(&idx) {
                    Some((og, _)) if *og <= cg => {}
                    _ => {
                        next.insert(idx, (cg, child));
                    }
                }
            }
        }
        layer = next;
    }
    layer.values().map(|(g, _)| -g).fold(None, |a: Option<f64>, x| Some(a.map_or(x, |a| a.max(x))))
}

fn small_problem(policy: ModePolicy) -> PlannerConfig {
    let mut cfg = zero_weights(PlannerConfig::default().with_horizon(3));
    cfg.t_hor = 1.5;
    cfg.n_timeout = 1_000_000;
    cfg.open_cap = 10_000_000;
    cfg.policy = policy;
    // Steering small enough to stay inside the linear-model box, so every
    // input yields a primitive and the trees really branch.
    let n_delta = if policy == ModePolicy::Both { 3 } else { 5 };
    cfg.lin = LinSampling { n_delta, n_lambda: 2, delta_range: (-0.04, 0.04), lambda_range: (-0.3, 0.2) };
    cfg.pattern = SamplePattern { ring_radii: vec![0.08], ring_counts: vec![3], ..SamplePattern::default() };
    cfg
}

#[test]
fn search_matches_layered_brute_force() {
    let track = test_track();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut instances = 0;
    while instances < 20 {
        let policy = if instances % 2 == 0 { ModePolicy::Both } else { ModePolicy::LinOnly };
        let cfg = small_problem(policy);
        let p = Planner::new(&track, models(), cfg).unwrap();
        assert!(p.max_children() <= 10);
        let s = rng.gen_range(0.0..track.length());
        let mut st = road_state(&track, s, rng.gen_range(-2.0..2.0), rng.gen_range(4.0..14.0));
        if policy == ModePolicy::Both && rng.gen_bool(0.5) {
            let side = if track.curvature(s) >= 0.0 { 1.0 } else { -1.0 };
            let c = manifold().project(-0.3 * side, 0.4 * side).unwrap();
            (st.v, st.beta, st.psidot) = (c.v, c.beta, c.psidot);
        }
        if !p.state_on_road(&p.snap_state(&st)) {
            continue;
        }
        let Some(best) = layered_optimum(&p, &st) else { continue };
        let plan = p.search(&st).unwrap();
        assert_eq!(plan.stats.terminated_by, Termination::Horizon);
        assert!((plan.progress() - best).abs() < 1e-9, "instance {instances}: A* {} vs exhaustive {best}", plan.progress());
        instances += 1;
    }
}

#[test]
fn core_heuristic_is_no_worse_than_zero() {
    let track = test_track();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let s = rng.gen_range(0.0..track.length());
        let st = road_state(&track, s, 0.0, rng.gen_range(5.0..12.0));
        let mut cfg = small_problem(ModePolicy::Both);
        cfg.heuristic = HeuristicKind::Core;
        let a = Planner::new(&track, models(), cfg.clone()).unwrap().search(&st).unwrap();
        cfg.heuristic = HeuristicKind::Zero;
        let b = Planner::new(&track, models(), cfg).unwrap().search(&st).unwrap();
        assert!(a.progress() >= b.progress() - 1e-9);
    }
}

#[test]
fn trajectory_reconstruction() {
    let track = test_track();
    let p = Planner::new(&track, models(), PlannerConfig::default()).unwrap();
    let st = road_state(&track, 20.0, 0.0, 8.0);
    let plan = p.search(&st).unwrap();
    let traj = &plan.trajectory;
    let dt = p.config().dt();
    assert_eq!(traj.len(), plan.final_node.k * p.config().substeps + 1);
    for w in traj.windows(2) {
        assert!((w[1].state.t - w[0].state.t - dt).abs() < 1e-9);
    }
    let end = traj.last().unwrap().state;
    let vals = plan.final_node.values(&p.config().grid);
    assert_eq!(end.as_array(), vals);
    // No jumps at primitive boundaries: every step moves at most one
    // integration step's worth of distance.
    for w in traj.windows(2) {
        let step = (w[1].x - w[0].x).hypot(w[1].y - w[0].y);
        assert!(step <= w[0].state.v * dt + 1e-9, "{step}");
        let (x, y) = p.position(&w[1].state);
        assert!((x - w[1].x).hypot(y - w[1].y) < 1e-6);
    }
    for q in traj {
        assert!(p.state_on_road(&q.state) || dense_point_ok(&track, &p, q));
    }
    assert!((plan.progress() - (end.s - p.snap_state(&st).s)).abs() < 1e-9);
}

fn dense_point_ok(track: &Track, p: &Planner, q: &TrajPoint) -> bool {
    on_road(&Pose::new(q.x, q.y, q.state.psi), &p.config().footprint, track, Some(track.wrap_s(q.state.s))).on_road
}

#[test]
fn admissible_on_random_nodes() {
    // Exhaustive lookahead without any pruning from random road states;
    // the best realized progress never beats the bound.
    let track = test_track();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let ts = PlannerConfig::default().ts();
    let layers = |k: usize| {
        let mut cfg = zero_weights(PlannerConfig::default().with_horizon(k));
        cfg.t_hor = k as f64 * ts;
        cfg
    };
    let one = Planner::new(&track, models(), layers(1)).unwrap();
    let two = Planner::new(&track, models(), layers(2)).unwrap();
    let mut nodes = 0;
    let mut deep = 0;
    while nodes < 1000 {
        let s = rng.gen_range(0.0..track.length());
        let mut st = road_state(&track, s, rng.gen_range(-3.5..3.5), rng.gen_range(0.0..25.0));
        st.psi += rng.gen_range(-0.2..0.2);
        if rng.gen_bool(0.4) {
            let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            if let Ok(c) = manifold().project(-side * rng.gen_range(0.05..0.6), side * rng.gen_range(0.1..0.6)) {
                (st.v, st.beta, st.psidot) = (c.v, c.beta, c.psidot);
            }
        } else {
            st.beta = rng.gen_range(-0.1..0.1);
            st.psidot = rng.gen_range(-0.25..0.25);
        }
        if !one.state_on_road(&st) || one.modes_at(st.beta, st.psidot).is_empty() {
            continue;
        }
        nodes += 1;
        let first = one.expand(&st).children;
        let best1 = first.iter().map(|c| c.progress).fold(0.0, f64::max);
        assert!(best1 <= -one.h_core_layer(st.v, 0) + 1e-9, "{st:?}");
        if nodes % 10 == 0 {
            deep += 1;
            let mut best2: f64 = 0.0;
            for c in two.expand(&st).children {
                let mid = c.end().state;
                for g in two.expand(&mid).children {
                    best2 = best2.max(c.progress + g.progress);
                }
            }
            assert!(best2 <= -two.h_core_layer(st.v, 0) + 1e-9, "{st:?}");
        }
    }
    assert_eq!(deep, 100);
}

#[test]
fn anytime_depth_is_monotone_in_budget() {
    let track = test_track();
    let st = road_state(&track, 100.0, 0.0, 9.0);
    let mut last = 0;
    for n in [1, 2, 5, 10, 30, 100, 300, 1000, 3500] {
        let mut cfg = PlannerConfig::default();
        cfg.n_timeout = n;
        let plan = Planner::new(&track, models(), cfg).unwrap().search(&st).unwrap();
        assert!(plan.stats.deepest_k >= last, "budget {n}: {} < {last}", plan.stats.deepest_k);
        assert!(plan.stats.nodes_expanded <= n);
        last = plan.stats.deepest_k;
    }
    assert_eq!(last, PlannerConfig::default().k_hor);
}

#[test]
fn off_road_start_is_a_planning_error() {
    let track = test_track();
    let p = Planner::new(&track, models(), PlannerConfig::default()).unwrap();
    let st = road_state(&track, 10.0, 4.9, 5.0);
    assert!(matches!(p.search(&st), Err(driftplan::Error::Planning(_))));
    let st = FullState { beta: 0.5, psidot: 0.5, ..road_state(&track, 10.0, 0.0, 5.0) };
    assert!(matches!(p.search(&st), Err(driftplan::Error::Planning(_))));
}

#[test]
fn config_validation() {
    let track = test_track();
    let mut cfg = PlannerConfig::default();
    cfg.k_hor = 0;
    assert!(Planner::new(&track, models(), cfg).is_err());
    let mut cfg = PlannerConfig::default();
    cfg.substeps = 0;
    assert!(Planner::new(&track, models(), cfg).is_err());
    let json = serde_json::to_string(&PlannerConfig::default()).unwrap();
    let back: PlannerConfig = serde_json::from_str(&json).unwrap();
    assert_eq!(back, PlannerConfig::default());
}

use std::f64::consts::FRAC_PI_2;

use driftplan::dynamics::*;
use driftplan::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn defaults() -> (VehicleParams, TireParams) {
    (VehicleParams::default(), TireParams::default())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn zero_slip_gives_zero_friction() {
    assert_eq!(mu_combined(0.0, 0.0, &TireParams::default()).unwrap(), (0.0, 0.0));
}

// Golden value from an independent 40-digit evaluation of the formula.
#[test]
fn pure_longitudinal_golden() {
    let (mx, my) = mu_combined(0.1, 0.0, &TireParams::default()).unwrap();
    assert!((mx - 0.090522475822062930584).abs() < 1e-15, "{mx}");
    assert_eq!(my, 0.0);
}

#[test]
fn slip_domain_errors() {
    let t = TireParams::default();
    assert!(matches!(mu_combined(-1.0, 0.0, &t), Err(Error::SlipDomain(_))));
    assert!(matches!(mu_combined(0.0, FRAC_PI_2, &t), Err(Error::SlipDomain(_))));
    assert!(matches!(mu_combined(0.0, -2.0, &t), Err(Error::SlipDomain(_))));
}

proptest! {
    #[test]
    fn friction_isotropic_and_bounded(lambda in -0.95f64..5.0, alpha in -1.5f64..1.5) {
        let t = TireParams::default();
        let (mx, my) = mu_combined(lambda, alpha, &t).unwrap();
        let sx = lambda / (1.0 + lambda);
        let sy = alpha.tan() / (1.0 + lambda);
        let mu = t.mu(sx.hypot(sy));
        let mag = mx.hypot(my);
        prop_assert!((mag - mu.abs()).abs() <= 1e-12 * mu.abs().max(1e-300));
        prop_assert!(mag <= t.d + 1e-15);
    }
}

#[test]
fn axle_slip_examples() {
    let p = VehicleParams::default();
    let s = DynamicState::new(10.0, 0.0, 0.0);
    assert_eq!(axle_slips(&s, &ControlInput::new(0.0, 0.0), &p).unwrap(), (0.0, 0.0));
    let (af, ar) = axle_slips(&s, &ControlInput::new(0.1, 0.0), &p).unwrap();
    assert!((af + 0.1).abs() < 1e-15 && ar == 0.0);

    let (af, ar) = axle_slips(&DynamicState::new(10.0, 0.3, 0.5), &ControlInput::new(0.2, 0.0), &p).unwrap();
    assert!(close(af, 0.16085132527808035, 1e-13), "{af}");
    assert!(close(ar, 0.23677135458353057, 1e-13), "{ar}");
}

#[test]
fn slips_need_speed() {
    let p = VehicleParams::default();
    let r = axle_slips(&DynamicState::new(0.5, 0.0, 0.0), &ControlInput::default(), &p);
    assert!(matches!(r, Err(Error::DegenerateSpeed { .. })));
}

#[test]
fn normal_load_examples() {
    let p = VehicleParams::default();
    let (f, r) = normal_loads(&p, 0.0).unwrap();
    assert_eq!((f, r), (p.m * p.g / 2.0, p.m * p.g / 2.0));
    let (f, r) = normal_loads(&p, 3.0).unwrap();
    assert!(close(f, 5626.5, 1e-12) && close(r, 7126.5, 1e-12), "{f} {r}");
    for ax in [-6.0, -1.0, 0.5, 4.0, 6.0] {
        let (f, r) = normal_loads(&p, ax).unwrap();
        assert!(close(f + r, p.m * p.g, 1e-14));
    }
    assert!(matches!(normal_loads(&p, 100.0), Err(Error::WheelLift { axle: "front", .. })));
    assert!(matches!(normal_loads(&p, -100.0), Err(Error::WheelLift { axle: "rear", .. })));
}

#[test]
fn straight_coasting_is_equilibrium() {
    let (p, t) = defaults();
    for v in [1.0, 5.0, 10.0, 30.0] {
        let d = nonlinear_derivatives(&DynamicState::new(v, 0.0, 0.0), &ControlInput::default(), &p, &t).unwrap();
        assert_eq!(d.as_array(), [0.0, 0.0, 0.0]);
    }
}

#[test]
fn left_steer_yaws_left() {
    let (p, t) = defaults();
    let d = nonlinear_derivatives(&DynamicState::new(10.0, 0.0, 0.0), &ControlInput::new(0.05, 0.0), &p, &t).unwrap();
    assert!(d.psi_ddot > 0.0);
    assert!(d.beta_dot > 0.0);
}

#[test]
fn full_evaluation_golden() {
    let (p, t) = defaults();
    let d = nonlinear_derivatives(&DynamicState::new(12.0, 0.2, 0.6), &ControlInput::new(0.15, 0.05), &p, &t).unwrap();
    let want = [1.2108890070041016, -0.69849493943531805, 0.06046680202633062];
    for (g, w) in d.as_array().iter().zip(want) {
        assert!(close(*g, w, 1e-12), "{g} vs {w}");
    }
}

#[test]
fn traction_accelerates() {
    let (p, t) = defaults();
    let d = nonlinear_derivatives(&DynamicState::new(10.0, 0.0, 0.0), &ControlInput::new(0.0, -0.1), &p, &t).unwrap();
    assert!(d.v_dot > 0.0);
    let d = nonlinear_derivatives(&DynamicState::new(10.0, 0.0, 0.0), &ControlInput::new(0.0, 0.1), &p, &t).unwrap();
    assert!(d.v_dot < 0.0);
}

#[test]
fn body_frame_variant_differs_only_at_large_angles() {
    let (p, t) = defaults();
    let s = DynamicState::new(10.0, 0.0, 0.0);
    let u = ControlInput::new(0.0, -0.05);
    let a = nonlinear_derivatives_with(&s, &u, &p, &t, ModelVariant::AsPrinted).unwrap();
    let b = nonlinear_derivatives_with(&s, &u, &p, &t, ModelVariant::BodyFrame).unwrap();
    assert!(close(a.v_dot, b.v_dot, 1e-12));
    let s = DynamicState::new(10.0, 0.5, 0.8);
    let u = ControlInput::new(0.2, -0.3);
    let a = nonlinear_derivatives_with(&s, &u, &p, &t, ModelVariant::AsPrinted).unwrap();
    let b = nonlinear_derivatives_with(&s, &u, &p, &t, ModelVariant::BodyFrame).unwrap();
    assert!((a.v_dot - b.v_dot).abs() > 1e-3);
}

#[test]
fn bicycle_zero_and_box() {
    let (p, t) = defaults();
    let bike = BicycleParams::fitted_default(&p, &t);
    let d = bicycle_derivatives(&DynamicState::new(10.0, 0.0, 0.0), &ControlInput::default(), &p, &bike).unwrap();
    assert_eq!(d.as_array(), [0.0, 0.0, 0.0]);
    let r = bicycle_derivatives(&DynamicState::new(10.0, 0.2, 0.0), &ControlInput::default(), &p, &bike);
    assert!(matches!(r, Err(Error::OutsideLinearBox { .. })));
}

#[test]
fn bicycle_front_force_linear_in_steer() {
    let (p, t) = defaults();
    let bike = BicycleParams::fitted_default(&p, &t);
    let s = DynamicState::new(10.0, 0.05, 0.1);
    let at = |delta| bicycle_derivatives(&s, &ControlInput::new(delta, 0.0), &p, &bike).unwrap().psi_ddot;
    let base = at(0.0);
    let one = at(0.02) - base;
    let two = at(0.04) - base;
    assert!(close(two, 2.0 * one, 1e-12));
}

#[test]
fn fitted_stiffness_matches_small_slip_slope() {
    let (p, t) = defaults();
    let bike = BicycleParams::fitted_default(&p, &t);
    // Initial slope of the Magic Formula is B·C·D per unit load; a fit over a
    // finite slip range lands close to it.
    let slope0 = t.b * t.c * t.d * p.m * p.g / 2.0;
    for c in [bike.cf, bike.cr, bike.cx] {
        assert!((c / slope0 - 1.0).abs() < 0.1, "{c} vs {slope0}");
    }
}

#[test]
fn linear_agrees_with_nonlinear_inside_box() {
    let (p, t) = defaults();
    let bike = BicycleParams::fitted_default(&p, &t);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let s = DynamicState::new(
            rng.gen_range(5.0..20.0),
            rng.gen_range(-0.5..0.5) * bike.beta_lin,
            rng.gen_range(-0.5..0.5) * bike.psidot_lin,
        );
        let u = ControlInput::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05));
        let a = nonlinear_derivatives(&s, &u, &p, &t).unwrap().as_array();
        let b = bicycle_derivatives(&s, &u, &p, &bike).unwrap().as_array();
        for i in 0..3 {
            // Relative to the component's typical magnitude at this state,
            // so components passing through zero are not penalized.
            let scale = a[i].abs().max(b[i].abs()).max([0.5, 0.05, 0.5][i]);
            worst = worst.max((a[i] - b[i]).abs() / scale);
        }
    }
    assert!(worst < 0.15, "worst relative deviation {worst}");
}

#[test]
fn straight_line_integration() {
    let start = (Pose::new(0.0, 0.0, 0.0), DynamicState::new(10.0, 0.0, 0.0));
    let prof = vec![start.1; 10];
    let tr = integrate_primitive(start, 0.0, &prof, 0.1, 10).unwrap();
    assert_eq!(tr.len(), 11);
    let end = tr.last().unwrap();
    assert!((end.pose.x - 10.0).abs() < 1e-12 && end.pose.y.abs() < 1e-12);
    assert_eq!(end.pose.psi, 0.0);
    assert!((end.t - 1.0).abs() < 1e-12);
}

#[test]
fn lateral_slide_moves_sideways() {
    let start = (Pose::new(0.0, 0.0, 0.0), DynamicState::new(2.0, FRAC_PI_2, 0.0));
    let tr = integrate_primitive(start, 0.0, &[start.1; 5], 0.1, 5).unwrap();
    let end = tr.last().unwrap().pose;
    assert!(end.x.abs() < 1e-12 && (end.y - 1.0).abs() < 1e-12);
}

fn circle_end(dt: f64, total: f64) -> (f64, f64) {
    let (v, r) = (10.0, 0.5);
    let n = (total / dt).round() as usize;
    let start = (Pose::new(0.0, 0.0, 0.0), DynamicState::new(v, 0.0, r));
    let tr = integrate_primitive(start, 0.0, &vec![start.1; n], dt, n).unwrap();
    let e = tr.last().unwrap().pose;
    (e.x, e.y)
}

#[test]
fn constant_yaw_rate_traces_circle() {
    let (v, r) = (10.0, 0.5);
    let radius = v / r;
    let (x, y) = circle_end(1e-4, 2.0);
    // Closed form: centre at (0, R), angle r·t.
    let (ex, ey) = (radius * (r * 2.0f64).sin(), radius * (1.0 - (r * 2.0f64).cos()));
    assert!((x - ex).hypot(y - ey) < 1e-2, "{x},{y} vs {ex},{ey}");
}

#[test]
fn integration_is_first_order() {
    let (v, r, t) = (10.0f64, 0.5f64, 2.0f64);
    let radius = v / r;
    let exact = (radius * (r * t).sin(), radius * (1.0 - (r * t).cos()));
    let err = |dt: f64| {
        let (x, y) = circle_end(dt, t);
        (x - exact.0).hypot(y - exact.1)
    };
    let (e1, e2, e3) = (err(0.02), err(0.01), err(0.005));
    for ratio in [e1 / e2, e2 / e3] {
        assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
    }
}

#[test]
fn integrate_rejects_bad_input() {
    let s = (Pose::default(), DynamicState::new(1.0, 0.0, 0.0));
    assert!(integrate_primitive(s, 0.0, &[s.1; 3], 0.0, 3).is_err());
    assert!(integrate_primitive(s, 0.0, &[s.1; 2], 0.1, 3).is_err());
}

#[test]
fn pose_wraps_heading() {
    let p = Pose::new(0.0, 0.0, -0.5);
    assert!((p.psi - (std::f64::consts::TAU - 0.5)).abs() < 1e-15);
    assert_eq!(wrap_angle(-1e-300), 0.0);
}

#[test]
fn vehicle_config_json() {
    let cfg = VehicleConfig::from_json(r#"{"vehicle": {"m": 1000, "Jz": 1500, "lf": 1.2, "lr": 1.4, "h_cog": 0.4, "g": 9.81}}"#).unwrap();
    assert_eq!(cfg.vehicle.m, 1000.0);
    assert_eq!(cfg.tires, TireParams::default());
    assert!(VehicleConfig::from_json(r#"{"vehicle": {"m": -1, "Jz": 1, "lf": 1, "lr": 1, "h_cog": 1, "g": 1}}"#).is_err());
    assert!(VehicleConfig::from_json("{").is_err());
}

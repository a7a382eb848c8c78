use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

use driftplan::dynamics::{TireParams, VehicleParams};
use driftplan::esm::{residual, EquilibriumPoint, EPS_EQ};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_driftplan"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// One manifold shared by the tests that need it.
fn manifold_dir() -> &'static Path {
    static D: OnceLock<TempDir> = OnceLock::new();
    D.get_or_init(|| {
        let d = tempfile::tempdir().unwrap();
        let o = run(&["esm", "build", "--out-dir", d.path().to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        d
    })
    .path()
}

#[test]
fn help_lists_every_flag() {
    let top = text(&run(&["--help"]));
    for sub in ["esm", "plan", "lap", "plot"] {
        assert!(top.contains(sub), "{sub} missing from help");
    }
    let lap = text(&run(&["lap", "--help"]));
    for flag in [
        "--config", "--vehicle", "--out-dir", "--track", "--track-width", "--track-closed", "--manifold", "--modes",
        "--k-hor", "--t-hor", "--substeps", "--n-timeout", "--v-max", "--a-max", "--seed", "--t-rep", "--t-plan", "--v0",
        "--plots",
    ] {
        assert!(lap.contains(flag), "{flag} missing from lap --help");
    }
    assert!(lap.contains("lin-only"));
    let plan = text(&run(&["plan", "--help"]));
    for flag in ["--s ", "--d ", "--psi", "--v ", "--beta", "--psidot"] {
        assert!(plan.contains(flag), "{flag} missing from plan --help");
    }
    let esm = text(&run(&["esm", "build", "--help"]));
    for flag in ["--radii", "--out", "--points"] {
        assert!(esm.contains(flag));
    }
    let plot = text(&run(&["plot", "--help"]));
    for flag in ["--trajectory", "--track", "--timing", "--beta-drift", "--out-dir"] {
        assert!(plot.contains(flag));
    }
}

#[test]
fn esm_build_is_reproducible_and_exports_equilibria() {
    let d = manifold_dir();
    let again = tempfile::tempdir().unwrap();
    let o = run(&["esm", "build", "--out-dir", again.path().to_str().unwrap()]);
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_str(text(&o).trim()).unwrap();
    assert!(summary["points"].as_u64().unwrap() > 100);
    assert_eq!(
        std::fs::read(d.join("manifold.json")).unwrap(),
        std::fs::read(again.path().join("manifold.json")).unwrap()
    );

    let (p, t) = (VehicleParams::default(), TireParams::default());
    let mut rdr = csv::Reader::from_path(d.join("esm_points.csv")).unwrap();
    let mut rc = (f64::INFINITY, 0.0_f64);
    for row in rdr.records() {
        let r: Vec<f64> = row.unwrap().iter().map(|x| x.parse().unwrap()).collect();
        let q = EquilibriumPoint { beta: r[0], psidot: r[1], v: r[2], delta: r[3], lambda: r[4], rc: r[5] };
        assert!(residual(&q, &p, &t).unwrap() < EPS_EQ);
        rc = (rc.0.min(q.rc.abs()), rc.1.max(q.rc.abs()));
    }
    assert!((rc.0 - 10.0).abs() < 1e-9 && (rc.1 - 100.0).abs() < 1e-9, "{rc:?}");
}

#[test]
fn plan_on_straight_fixture() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "plan",
        "--track",
        "builtin:straight",
        "--manifold",
        manifold_dir().join("manifold.json").to_str().unwrap(),
        "--s",
        "5",
        "--v",
        "8",
        "--out-dir",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(text(&o).trim()).unwrap();
    let k = summary["deepest_k"].as_u64().unwrap() as usize;
    assert_eq!(k, 8);
    assert!(summary["progress"].as_f64().unwrap() > 8.0 * 4.0);
    let rows = csv::Reader::from_path(out.path().join("plan.csv")).unwrap().records().count();
    assert_eq!(rows, k * 10 + 1);
}

#[test]
fn exit_codes() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{ \"planner\": { \"k_hor\": \"eight\" } }").unwrap();
    let code = |o: Output| o.status.code().unwrap();

    assert_eq!(code(run(&["lap", "--config", bad.to_str().unwrap()])), 2);
    assert_eq!(code(run(&["plan", "--track", "builtin:nope", "--modes", "lin-only"])), 2);
    assert_eq!(code(run(&["plan", "--track", dir.join("missing.csv").to_str().unwrap(), "--modes", "lin-only"])), 3);
    assert_eq!(code(run(&["esm", "build", "--radii", "5,20", "--out-dir", dir.to_str().unwrap()])), 2);

    // A manifold built for other tire parameters is refused.
    let vehicle = dir.join("vehicle.json");
    std::fs::write(&vehicle, r#"{ "tires": { "d": 0.5 } }"#).unwrap();
    let o = run(&[
        "plan",
        "--vehicle",
        vehicle.to_str().unwrap(),
        "--manifold",
        manifold_dir().join("manifold.json").to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(o), 2);

    // Off-road start: planning failure.
    let o = run(&["plan", "--modes", "lin-only", "--d", "4.9", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(code(o), 5);

    // A two-layer horizon cannot finish the test track.
    let o = run(&[
        "lap",
        "--manifold",
        manifold_dir().join("manifold.json").to_str().unwrap(),
        "--k-hor",
        "2",
        "--t-hor",
        "1",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(o), 5);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("lap.json")).unwrap()).unwrap();
    assert_eq!(report["completed"], false);
}

#[test]
fn plot_renders_wellformed_svg() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path();
    let csv_path = dir.join("traj.csv");
    let mut csv = String::from("t,x,y,s,d,psi,v,beta,psidot,mode\n");
    for i in 0..50 {
        let t = i as f64 * 0.1;
        let mode = if i < 25 { "LIN" } else { "ESM" };
        csv.push_str(&format!("{t},{},{},{},0,0,{},{},0.1,{mode}\n", 5.0 * t, 0.1 * t, 5.0 * t, 5.0 + t, 0.02 * i as f64));
    }
    std::fs::write(&csv_path, csv).unwrap();
    let o = run(&[
        "plot",
        "--trajectory",
        csv_path.to_str().unwrap(),
        "--track",
        "builtin:straight",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["track.svg", "series.svg"] {
        let svg = std::fs::read_to_string(dir.join(f)).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert!(doc.descendants().any(|n| n.has_tag_name("polyline")));
    }
    assert!(!dir.join("histograms.svg").exists());
    let o = run(&["plot", "--trajectory", dir.join("nope.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

//! `driftplan`: equilibrium-manifold builds, single plans, full laps and plots.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 solver
//! failure, 5 planning failure (including an incomplete lap).

mod config;
mod output;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use driftplan::dynamics::VehicleConfig;
use driftplan::esm::{build_manifold, param_hash, ESManifold};
use driftplan::planner::{FullState, ModePolicy, Models, Planner};
use driftplan::sim::run_lap;
use driftplan::track::Track;
use serde_json::json;

use config::RunConfig;
use output::{LapReport, TimingReport, TrajRow};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] driftplan::Error),
    #[error("lap not completed: {0}")]
    LapFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use driftplan::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::LapFailed(_) => 5,
            CliError::Core(e) => match e {
                E::Io(_) => 3,
                E::ManifoldBuild { .. }
                | E::EmptyManifold
                | E::SlipDomain(_)
                | E::DegenerateSpeed { .. }
                | E::WheelLift { .. }
                | E::OutsideLinearBox { .. } => 4,
                E::Planning(_) | E::Reconstruction(_) | E::IncompleteLap(_) | E::OutOfCorridor { .. } => 5,
                E::InvalidParams(_) | E::Geometry(_) | E::HashMismatch { .. } | E::ManifoldFormat(_) | E::Json(_) => 2,
            },
        }
    }
}

#[derive(Parser)]
#[command(name = "driftplan", version, about = "Two-mode (drift / grip) lap planner for low-friction tracks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Equilibrium-manifold tools.
    Esm {
        #[command(subcommand)]
        cmd: EsmCmd,
    },
    /// Plan a single horizon from a given state.
    Plan(PlanArgs),
    /// Simulate one lap with moving-horizon replanning.
    Lap(LapArgs),
    /// Render SVG plots from previously written outputs.
    Plot(PlotArgs),
}

#[derive(Subcommand)]
enum EsmCmd {
    /// Solve steady states over a set of radii and write the manifold.
    Build(EsmBuildArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Modes {
    Both,
    LinOnly,
}

impl From<Modes> for ModePolicy {
    fn from(m: Modes) -> Self {
        match m {
            Modes::Both => ModePolicy::Both,
            Modes::LinOnly => ModePolicy::LinOnly,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Vehicle and tire parameters (JSON); built-in defaults when absent.
    #[arg(long)]
    vehicle: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PlannerArgs {
    /// Track: a JSON file, an `x,y` CSV file, or `builtin:test-track` / `builtin:straight`.
    #[arg(long)]
    track: Option<String>,
    /// Road width for CSV tracks (m).
    #[arg(long, default_value_t = 10.0)]
    track_width: f64,
    /// Treat a CSV track as a closed loop.
    #[arg(long)]
    track_closed: bool,
    /// Manifold written by `esm build`; built in memory when absent.
    #[arg(long)]
    manifold: Option<PathBuf>,
    /// Motion modes available to the planner.
    #[arg(long, value_enum)]
    modes: Option<Modes>,
    /// Search layers per horizon.
    #[arg(long)]
    k_hor: Option<usize>,
    /// Planning horizon (s).
    #[arg(long)]
    t_hor: Option<f64>,
    /// Integration substeps per primitive.
    #[arg(long)]
    substeps: Option<usize>,
    /// Budget on expanded nodes per plan.
    #[arg(long)]
    n_timeout: Option<usize>,
    /// Speed bound (m/s).
    #[arg(long)]
    v_max: Option<f64>,
    /// Longitudinal acceleration bound (m/s²); D·g when absent.
    #[arg(long)]
    a_max: Option<f64>,
}

#[derive(Args)]
struct EsmBuildArgs {
    #[command(flatten)]
    common: Common,
    /// Curvature radii (m), comma separated; default 9 log-spaced radii over 10–100 m.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// Manifold output file [default: <out-dir>/manifold.json].
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV dump of all solution points [default: <out-dir>/esm_points.csv].
    #[arg(long)]
    points: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    planner: PlannerArgs,
    /// Initial arc length (m).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    s: f64,
    /// Initial lateral offset, positive left (m).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    d: f64,
    /// Initial yaw (rad); the road heading at `s` when absent.
    #[arg(long, allow_hyphen_values = true)]
    psi: Option<f64>,
    /// Initial speed (m/s).
    #[arg(long, default_value_t = 5.0)]
    v: f64,
    /// Initial side-slip (rad).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    beta: f64,
    /// Initial yaw rate (rad/s).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    psidot: f64,
}

#[derive(Args)]
struct LapArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    planner: PlannerArgs,
    /// Recorded in the report; the pipeline is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Replanning interval (s).
    #[arg(long)]
    t_rep: Option<f64>,
    /// Planning-time bound (s).
    #[arg(long)]
    t_plan: Option<f64>,
    /// Initial speed on the start line (m/s).
    #[arg(long)]
    v0: Option<f64>,
    /// Also write track, state-series and histogram SVGs.
    #[arg(long)]
    plots: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// Trajectory CSV written by `plan` or `lap`.
    #[arg(long)]
    trajectory: PathBuf,
    /// Track for the road outline (same forms as for `lap`).
    #[arg(long)]
    track: Option<String>,
    /// Timing JSON written by `lap`, for the histograms.
    #[arg(long)]
    timing: Option<PathBuf>,
    /// |β| threshold marked in the state series (rad).
    #[arg(long, default_value_t = 0.4)]
    beta_drift: f64,
    /// Directory for the SVG files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Esm { cmd: EsmCmd::Build(a) } => cmd_esm_build(a),
        Cmd::Plan(a) => cmd_plan(a),
        Cmd::Lap(a) => cmd_lap(a),
        Cmd::Plot(a) => cmd_plot(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

struct Setup {
    cfg: RunConfig,
    vehicle: VehicleConfig,
    out_dir: PathBuf,
}

fn setup(common: &Common) -> Result<Setup, CliError> {
    let cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let vehicle_path = common.vehicle.clone().or_else(|| cfg.paths.vehicle.clone());
    let vehicle = config::load_vehicle(vehicle_path.as_deref())?;
    let out_dir = common.out_dir.clone().or_else(|| cfg.paths.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    Ok(Setup { cfg, vehicle, out_dir })
}

fn apply_planner_flags(s: &mut Setup, a: &PlannerArgs) {
    let p = &mut s.cfg.planner;
    if let Some(k) = a.k_hor {
        p.k_hor = k;
    }
    if let Some(t) = a.t_hor {
        p.t_hor = t;
    }
    if let Some(n) = a.substeps {
        p.substeps = n;
    }
    if let Some(n) = a.n_timeout {
        p.n_timeout = n;
    }
    if let Some(v) = a.v_max {
        p.v_max = v;
    }
    if a.a_max.is_some() {
        p.a_max = a.a_max;
    }
    if let Some(m) = a.modes {
        p.policy = m.into();
        s.cfg.sim.policy = m.into();
    }
}

/// Loads the manifold when one is configured, otherwise builds it in memory.
/// The lin-only baseline never needs one.
fn manifold_for(s: &Setup, a: &PlannerArgs, policy: ModePolicy) -> Result<Option<Arc<ESManifold>>, CliError> {
    if policy == ModePolicy::LinOnly {
        return Ok(None);
    }
    let path = a.manifold.clone().or_else(|| s.cfg.paths.manifold.clone());
    let m = match path {
        Some(p) => {
            let text = config::read(&p)?;
            ESManifold::from_json(&text, Some((&s.vehicle.vehicle, &s.vehicle.tires)))?
        }
        None => {
            eprintln!("no manifold file given; building one in memory");
            build_manifold(&s.vehicle.vehicle, &s.vehicle.tires, &s.cfg.esm)?
        }
    };
    Ok(Some(Arc::new(m)))
}

fn track_for(s: &Setup, a: &PlannerArgs) -> Result<Track, CliError> {
    let spec = a.track.clone().or_else(|| s.cfg.paths.track.clone());
    config::load_track(spec.as_deref(), a.track_width, a.track_closed)
}

fn cmd_esm_build(a: EsmBuildArgs) -> Result<(), CliError> {
    let mut s = setup(&a.common)?;
    if let Some(r) = &a.radii {
        s.cfg.esm.radii = r.clone();
    }
    let m = build_manifold(&s.vehicle.vehicle, &s.vehicle.tires, &s.cfg.esm)?;
    let out = a.out.clone().unwrap_or_else(|| s.out_dir.join("manifold.json"));
    let points = a.points.clone().unwrap_or_else(|| s.out_dir.join("esm_points.csv"));
    config::write(&out, &m.to_json()?)?;
    config::write(&points, &m.points_csv())?;
    println!(
        "{}",
        json!({
            "manifold": out,
            "points_csv": points,
            "points": m.points.len(),
            "masked_cells": m.masked_count(),
            "param_hash": param_hash(&s.vehicle.vehicle, &s.vehicle.tires),
        })
    );
    Ok(())
}

fn cmd_plan(a: PlanArgs) -> Result<(), CliError> {
    let mut s = setup(&a.common)?;
    apply_planner_flags(&mut s, &a.planner);
    let track = track_for(&s, &a.planner)?;
    let manifold = manifold_for(&s, &a.planner, s.cfg.planner.policy)?;
    let models = Models::new(&s.vehicle, manifold);
    let planner = Planner::new(&track, &models, s.cfg.planner.clone())?;
    let psi = a.psi.unwrap_or_else(|| track.road_heading(a.s));
    let start = FullState { s: a.s, d: a.d, psi, v: a.v, beta: a.beta, psidot: a.psidot, t: 0.0 };
    let plan = planner.search(&start)?;
    let rows: Vec<TrajRow> = plan.trajectory.iter().map(|p| TrajRow::new(p, None)).collect();
    let path = s.out_dir.join("plan.csv");
    config::write(&path, &output::trajectory_csv(&rows)?)?;
    let st = &plan.stats;
    println!(
        "{}",
        json!({
            "nodes_expanded": st.nodes_expanded,
            "wall_ms": st.wall_ms,
            "deepest_k": st.deepest_k,
            "terminated_by": st.terminated_by,
            "progress": plan.progress(),
            "trajectory": path,
        })
    );
    Ok(())
}

fn cmd_lap(a: LapArgs) -> Result<(), CliError> {
    let mut s = setup(&a.common)?;
    apply_planner_flags(&mut s, &a.planner);
    if let Some(seed) = a.seed {
        s.cfg.seed = seed;
    }
    if let Some(t) = a.t_rep {
        s.cfg.sim.t_rep = t;
    }
    if let Some(t) = a.t_plan {
        s.cfg.sim.t_plan = t;
    }
    if let Some(v) = a.v0 {
        s.cfg.sim.v0 = v;
    }
    let track = track_for(&s, &a.planner)?;
    let policy = s.cfg.sim.policy;
    let manifold = manifold_for(&s, &a.planner, policy)?;
    let models = Models::new(&s.vehicle, manifold);
    let res = run_lap(&track, &s.cfg.planner, &s.cfg.sim, &models)?;

    let rows = output::lap_rows(&res);
    let timing = TimingReport::new(&res);
    config::write(&s.out_dir.join("trajectory.csv"), &output::trajectory_csv(&rows)?)?;
    config::write(
        &s.out_dir.join("timing.json"),
        &serde_json::to_string_pretty(&timing).map_err(driftplan::Error::from)?,
    )?;
    if a.plots {
        write_plots(&s.out_dir, Some(&track), &rows, Some(&timing), s.cfg.sim.beta_drift)?;
    }
    let summary = json!({
        "completed": res.completed,
        "lap_time": res.lap_time,
        "avg_speed": res.avg_speed,
        "drift_intervals": res.drift_intervals.len(),
        "plans": res.plans.len(),
        "wall_ms_median": timing.summary.as_ref().map(|t| t.wall_ms_median),
        "wall_ms_max": timing.summary.as_ref().map(|t| t.wall_ms_max),
        "nodes_max": timing.summary.as_ref().map(|t| t.nodes_max),
    });
    let failure = res.failure.clone();
    let report = LapReport { seed: s.cfg.seed, policy, result: res };
    config::write(
        &s.out_dir.join("lap.json"),
        &serde_json::to_string_pretty(&report).map_err(driftplan::Error::from)?,
    )?;
    println!("{summary}");
    match (report.result.completed, failure) {
        (true, _) => Ok(()),
        (false, f) => Err(CliError::LapFailed(f.unwrap_or_else(|| "unknown reason".into()))),
    }
}

fn write_plots(
    dir: &Path,
    track: Option<&Track>,
    rows: &[TrajRow],
    timing: Option<&TimingReport>,
    beta_drift: f64,
) -> Result<(), CliError> {
    config::write(&dir.join("track.svg"), &plot::track_svg(track, rows))?;
    config::write(&dir.join("series.svg"), &plot::series_svg(rows, beta_drift))?;
    if let Some(t) = timing {
        config::write(&dir.join("histograms.svg"), &plot::histograms_svg(&t.wall_ms_histogram, &t.nodes_histogram))?;
    }
    Ok(())
}

fn cmd_plot(a: PlotArgs) -> Result<(), CliError> {
    let rows = output::parse_trajectory_csv(&config::read(&a.trajectory)?)?;
    let track = match &a.track {
        Some(t) => Some(config::load_track(Some(t), 10.0, false)?),
        None => None,
    };
    let timing: Option<TimingReport> = match &a.timing {
        Some(p) => Some(
            serde_json::from_str(&config::read(p)?).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        ),
        None => None,
    };
    write_plots(&a.out_dir, track.as_ref(), &rows, timing.as_ref(), a.beta_drift)
}

use driftplan::planner::{ModePolicy, SearchStats, TrajPoint};
use driftplan::sim::{aggregate_stats, histogram, LapResult, StatsSummary};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One trajectory sample as written to CSV. `plan` is the replanning cycle
/// that produced the sample (lap output only).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub s: f64,
    pub d: f64,
    pub psi: f64,
    pub v: f64,
    pub beta: f64,
    pub psidot: f64,
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<usize>,
}

impl TrajRow {
    pub fn new(p: &TrajPoint, plan: Option<usize>) -> Self {
        let st = &p.state;
        Self {
            t: st.t,
            x: p.x,
            y: p.y,
            s: st.s,
            d: st.d,
            psi: st.psi,
            v: st.v,
            beta: st.beta,
            psidot: st.psidot,
            mode: p.mode.map(|m| m.to_string()).unwrap_or_default(),
            plan,
        }
    }
}

pub fn trajectory_csv(rows: &[TrajRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Config(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajRow>, CliError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .collect::<Result<Vec<TrajRow>, _>>()
        .map_err(|e| CliError::Config(format!("trajectory csv: {e}")))
}

/// Rows for an executed lap, each tagged with its plan index.
pub fn lap_rows(res: &LapResult) -> Vec<TrajRow> {
    let mut rows = Vec::with_capacity(res.trajectory.len());
    let mut plan = 0;
    for (i, p) in res.trajectory.iter().enumerate() {
        while plan + 1 < res.plans.len() && res.plans[plan + 1].start_index <= i {
            plan += 1;
        }
        rows.push(TrajRow::new(p, Some(plan)));
    }
    rows
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LapReport {
    pub seed: u64,
    pub policy: ModePolicy,
    #[serde(flatten)]
    pub result: LapResult,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    fn of(values: &[f64], bins: usize) -> Self {
        let (edges, counts) = histogram(values, bins);
        Self { edges, counts }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlanTiming {
    pub t: f64,
    pub wall_ms: f64,
    pub nodes_expanded: usize,
}

/// Wall-clock data, kept apart from the reproducible lap report.
#[derive(Debug, Serialize, Deserialize)]
pub struct TimingReport {
    pub summary: Option<StatsSummary>,
    pub plans: Vec<PlanTiming>,
    pub wall_ms_histogram: Histogram,
    pub nodes_histogram: Histogram,
}

impl TimingReport {
    pub fn new(res: &LapResult) -> Self {
        Self::from_stats(&res.search_stats, res.plans.iter().map(|p| p.t))
    }

    pub fn from_stats(stats: &[SearchStats], times: impl Iterator<Item = f64>) -> Self {
        let plans: Vec<PlanTiming> = stats
            .iter()
            .zip(times)
            .map(|(s, t)| PlanTiming { t, wall_ms: s.wall_ms, nodes_expanded: s.nodes_expanded })
            .collect();
        let wall: Vec<f64> = plans.iter().map(|p| p.wall_ms).collect();
        let nodes: Vec<f64> = plans.iter().map(|p| p.nodes_expanded as f64).collect();
        Self {
            summary: aggregate_stats(stats),
            wall_ms_histogram: Histogram::of(&wall, 20),
            nodes_histogram: Histogram::of(&nodes, 20),
            plans,
        }
    }
}

//! Minimal SVG emitters; no plotting dependency needed for lines and bars.

use std::fmt::Write;

use driftplan::track::{FrenetState, Track};

use crate::output::{Histogram, TrajRow};

const ESM_COLOR: &str = "#d62728";
const LIN_COLOR: &str = "#1f77b4";

fn mode_color(mode: &str) -> &'static str {
    if mode == "ESM" {
        ESM_COLOR
    } else {
        LIN_COLOR
    }
}

struct Frame {
    x0: f64,
    y0: f64,
    scale_x: f64,
    scale_y: f64,
    left: f64,
    top: f64,
    h: f64,
}

impl Frame {
    fn new(xs: (f64, f64), ys: (f64, f64), left: f64, top: f64, w: f64, h: f64, equal: bool) -> Self {
        let dx = (xs.1 - xs.0).max(1e-9);
        let dy = (ys.1 - ys.0).max(1e-9);
        let (mut sx, mut sy) = (w / dx, h / dy);
        if equal {
            sx = sx.min(sy);
            sy = sx;
        }
        Self { x0: xs.0, y0: ys.0, scale_x: sx, scale_y: sy, left, top, h }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (self.left + (x - self.x0) * self.scale_x, self.top + self.h - (y - self.y0) * self.scale_y)
    }
}

fn polyline(out: &mut String, f: &Frame, pts: impl Iterator<Item = (f64, f64)>, style: &str) {
    let mut d = String::new();
    for (x, y) in pts {
        let (a, b) = f.px(x, y);
        let _ = write!(d, "{a:.2},{b:.2} ");
    }
    let _ = writeln!(out, r#"<polyline fill="none" {style} points="{}"/>"#, d.trim_end());
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

fn header(w: f64, h: f64) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// Road outline plus the trajectory colored by mode.
pub fn track_svg(track: Option<&Track>, rows: &[TrajRow]) -> String {
    let mut edges: Vec<Vec<(f64, f64)>> = Vec::new();
    if let Some(tr) = track {
        let half = tr.width() / 2.0;
        for d in [-half, 0.0, half] {
            let n = (tr.length() / 1.0).ceil() as usize;
            let line = (0..=n)
                .filter_map(|i| {
                    let s = (i as f64).min(tr.length());
                    tr.frenet_to_cart(FrenetState { s, d }).ok().map(|(x, y, _)| (x, y))
                })
                .collect();
            edges.push(line);
        }
    }
    let all = edges.iter().flatten().copied().chain(rows.iter().map(|r| (r.x, r.y)));
    let pts: Vec<(f64, f64)> = all.collect();
    let xs = bounds(pts.iter().map(|p| p.0));
    let ys = bounds(pts.iter().map(|p| p.1));
    let (w, h, m) = (900.0, 700.0, 30.0);
    let f = Frame::new(xs, ys, m, m, w - 2.0 * m, h - 2.0 * m - 20.0, true);
    let mut out = header(w, h);
    for (i, e) in edges.iter().enumerate() {
        let style = if i == 1 {
            r##"stroke="#bbbbbb" stroke-width="1" stroke-dasharray="4 4""##
        } else {
            r##"stroke="#444444" stroke-width="1.5""##
        };
        polyline(&mut out, &f, e.iter().copied(), style);
    }
    // One polyline per run of equal mode.
    let mut start = 0;
    while start < rows.len() {
        let mode = &rows[start].mode;
        let mut end = start + 1;
        while end < rows.len() && rows[end].mode == *mode {
            end += 1;
        }
        let upto = (end + 1).min(rows.len());
        let style = format!(r#"stroke="{}" stroke-width="2""#, mode_color(mode));
        polyline(&mut out, &f, rows[start..upto].iter().map(|r| (r.x, r.y)), &style);
        start = end;
    }
    let _ = writeln!(
        out,
        r#"<text x="{m}" y="{}" fill="{ESM_COLOR}">ESM (drift)</text><text x="{}" y="{}" fill="{LIN_COLOR}">LIN (bicycle)</text>"#,
        h - 10.0,
        m + 110.0,
        h - 10.0
    );
    out.push_str("</svg>\n");
    out
}

/// v, β and ψ̇ against time, one panel each.
pub fn series_svg(rows: &[TrajRow], beta_drift: f64) -> String {
    let (w, ph, m) = (900.0, 200.0, 50.0);
    let h = 3.0 * (ph + m) + m;
    let mut out = header(w, h);
    let ts = bounds(rows.iter().map(|r| r.t));
    let panels: [(&str, fn(&TrajRow) -> f64); 3] =
        [("v [m/s]", |r| r.v), ("beta [rad]", |r| r.beta), ("psidot [rad/s]", |r| r.psidot)];
    for (k, (label, get)) in panels.iter().enumerate() {
        let top = m + k as f64 * (ph + m);
        let mut ys = bounds(rows.iter().map(get));
        if k == 1 {
            ys = (ys.0.min(-beta_drift), ys.1.max(beta_drift));
        }
        let f = Frame::new(ts, ys, m + 20.0, top, w - 2.0 * m - 20.0, ph, false);
        let _ = writeln!(
            out,
            r##"<rect x="{}" y="{top}" width="{}" height="{ph}" fill="none" stroke="#888888"/>"##,
            m + 20.0,
            w - 2.0 * m - 20.0
        );
        let _ = writeln!(out, r#"<text x="{}" y="{}">{label}</text>"#, m + 20.0, top - 6.0);
        let _ = writeln!(
            out,
            r#"<text x="4" y="{}">{:.2}</text><text x="4" y="{}">{:.2}</text>"#,
            top + 12.0,
            ys.1,
            top + ph,
            ys.0
        );
        if k == 1 {
            for b in [beta_drift, -beta_drift] {
                polyline(
                    &mut out,
                    &f,
                    [(ts.0, b), (ts.1, b)].into_iter(),
                    r##"stroke="#999999" stroke-dasharray="3 3""##,
                );
            }
        }
        polyline(&mut out, &f, rows.iter().map(|r| (r.t, get(r))), r##"stroke="#222222" stroke-width="1.2""##);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}">t [s]: {:.1} .. {:.1}</text>"#, w / 2.0 - 40.0, h - 10.0, ts.0, ts.1);
    out.push_str("</svg>\n");
    out
}

/// Per-plan wall time and node count histograms.
pub fn histograms_svg(wall: &Histogram, nodes: &Histogram) -> String {
    let (w, ph, m) = (900.0, 260.0, 50.0);
    let h = 2.0 * (ph + m) + m;
    let mut out = header(w, h);
    for (k, (label, hist)) in [("planning time [ms]", wall), ("expanded nodes", nodes)].iter().enumerate() {
        let top = m + k as f64 * (ph + m);
        let xs = (hist.edges[0], *hist.edges.last().unwrap());
        let ymax = hist.counts.iter().copied().max().unwrap_or(1).max(1) as f64;
        let f = Frame::new(xs, (0.0, ymax), m, top, w - 2.0 * m, ph, false);
        let _ = writeln!(out, r#"<text x="{m}" y="{}">{label} (max count {ymax})</text>"#, top - 6.0);
        for (i, c) in hist.counts.iter().enumerate() {
            let (x0, y0) = f.px(hist.edges[i], *c as f64);
            let (x1, y1) = f.px(hist.edges[i + 1], 0.0);
            let _ = writeln!(
                out,
                r##"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="#4c72b0" stroke="white"/>"##,
                (x1 - x0).max(0.5),
                (y1 - y0).max(0.0)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{m}" y="{}">{:.1}</text><text x="{}" y="{}" text-anchor="end">{:.1}</text>"#,
            top + ph + 16.0,
            xs.0,
            w - m,
            top + ph + 16.0,
            xs.1
        );
    }
    out.push_str("</svg>\n");
    out
}

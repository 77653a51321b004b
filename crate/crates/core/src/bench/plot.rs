//! SVG small multiples: mean accuracy against sample size.

use std::fmt::Write;
use std::path::Path;

use super::summary::SummaryRow;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::simgen::SimCondition;

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 240.0;
const MARGIN: (f64, f64, f64, f64) = (48.0, 16.0, 28.0, 36.0); // left, right, top, bottom
const COLUMNS: usize = 3;
const LEGEND_ROW: f64 = 18.0;
const PALETTE: [&str; 10] =
    ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders one panel per condition (first-appearance order), one polyline
/// per algorithm, log-scaled sample size on the x axis.
pub fn render_svg(summary: &[SummaryRow]) -> Result<String> {
    let mut conditions: Vec<SimCondition> = Vec::new();
    let mut algorithms: Vec<&str> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    for s in summary {
        if !conditions.contains(&s.condition) {
            conditions.push(s.condition);
        }
        if !algorithms.contains(&s.algorithm.as_str()) {
            algorithms.push(&s.algorithm);
        }
        if !sizes.contains(&s.n) {
            sizes.push(s.n);
        }
    }
    if conditions.is_empty() {
        return Err(Error::invalid("summary covers no conditions"));
    }
    sizes.sort_unstable();

    let (lo_n, hi_n) = ((sizes[0] as f64).ln(), (*sizes.last().unwrap() as f64).ln());
    let accs: Vec<f64> = summary.iter().map(|s| s.accuracy().mean).filter(|v| v.is_finite()).collect();
    let (mut lo_y, mut hi_y) = accs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !lo_y.is_finite() {
        (lo_y, hi_y) = (0.0, 1.0);
    }
    lo_y = ((lo_y - 0.02) * 20.0).floor() / 20.0;
    hi_y = ((hi_y + 0.02) * 20.0).ceil() / 20.0;
    let (lo_y, hi_y) = (lo_y.max(0.0), hi_y.min(1.0).max(lo_y.max(0.0) + 0.05));

    let rows = conditions.len().div_ceil(COLUMNS);
    let cols = conditions.len().min(COLUMNS);
    let width = cols as f64 * PANEL_W;
    let legend_h = LEGEND_ROW * (algorithms.len() as f64 / 3.0).ceil() + 12.0;
    let height = rows as f64 * PANEL_H + legend_h;
    let (ml, mr, mt, mb) = MARGIN;
    let (pw, ph) = (PANEL_W - ml - mr, PANEL_H - mt - mb);

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(w, r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="10">"##);
    let _ = writeln!(w, r##"<rect width="100%" height="100%" fill="white"/>"##);
    for (k, cond) in conditions.iter().enumerate() {
        let ox = (k % COLUMNS) as f64 * PANEL_W + ml;
        let oy = (k / COLUMNS) as f64 * PANEL_H + mt;
        let x_of = |n: usize| {
            if hi_n > lo_n {
                ox + ((n as f64).ln() - lo_n) / (hi_n - lo_n) * pw
            } else {
                ox + pw / 2.0
            }
        };
        let y_of = |a: f64| oy + (hi_y - a) / (hi_y - lo_y) * ph;
        let _ = writeln!(w, r##"<g class="panel">"##);
        let _ = writeln!(w, r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"##, ox + pw / 2.0, oy - 10.0, escape(&cond.id()));
        let _ = writeln!(w, r##"<rect x="{ox:.2}" y="{oy:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#444"/>"##);
        for &n in &sizes {
            let x = x_of(n);
            let _ = writeln!(w, r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444"/>"##, oy + ph, oy + ph + 4.0);
            let _ = writeln!(w, r##"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{n}</text>"##, oy + ph + 15.0);
        }
        let steps = ((hi_y - lo_y) / 0.05).round() as usize;
        let stride = steps.div_ceil(6).max(1);
        for t in (0..=steps).step_by(stride) {
            let a = lo_y + t as f64 * 0.05;
            let y = y_of(a);
            let _ = writeln!(w, r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, ox, ox + pw);
            let _ = writeln!(w, r##"<text x="{:.2}" y="{:.2}" text-anchor="end">{a:.2}</text>"##, ox - 4.0, y + 3.0);
        }
        let _ = writeln!(w, r##"<text x="{:.2}" y="{:.2}" text-anchor="middle">n (log scale)</text>"##, ox + pw / 2.0, oy + ph + 28.0);
        let _ = writeln!(w, r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">accuracy</text>"##, ox - 34.0, oy + ph / 2.0, ox - 34.0, oy + ph / 2.0);
        for (a, name) in algorithms.iter().enumerate() {
            let color = PALETTE[a % PALETTE.len()];
            let mut pts: Vec<(usize, f64)> = summary
                .iter()
                .filter(|s| s.condition == *cond && s.algorithm == *name && s.accuracy().mean.is_finite())
                .map(|s| (s.n, s.accuracy().mean))
                .collect();
            pts.sort_by_key(|p| p.0);
            if pts.is_empty() {
                continue;
            }
            let coords: Vec<String> = pts.iter().map(|&(n, m)| format!("{:.2},{:.2}", x_of(n), y_of(m))).collect();
            if pts.len() > 1 {
                let _ = writeln!(w, r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"##, coords.join(" "));
            }
            for &(n, m) in &pts {
                let _ = writeln!(w, r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"##, x_of(n), y_of(m));
            }
        }
        let _ = writeln!(w, r##"</g>"##);
    }
    let ly = rows as f64 * PANEL_H + 10.0;
    for (a, name) in algorithms.iter().enumerate() {
        let color = PALETTE[a % PALETTE.len()];
        let x = (a % 3) as f64 * (width / 3.0) + 12.0;
        let y = ly + (a / 3) as f64 * LEGEND_ROW;
        let _ = writeln!(w, r##"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"##, x + 18.0);
        let _ = writeln!(w, r##"<text x="{:.2}" y="{:.2}">{}</text>"##, x + 24.0, y + 3.5, escape(name));
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

pub fn emit_plot(summary: &[SummaryRow], path: &Path) -> Result<()> {
    write_atomic(path, render_svg(summary)?.as_bytes())
}

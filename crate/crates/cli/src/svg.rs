//! Log-scale norm curves as a standalone SVG, with vertical markers for the
//! certified blow-up bound and the detected blow-up time.

use std::fmt::Write;

use crate::run::{Diagnostics, RunReport};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

pub struct Marker {
    pub time: f64,
    pub label: &'static str,
    pub color: &'static str,
}

pub fn markers(report: &RunReport) -> Vec<Marker> {
    let mut out = Vec::new();
    if let Some(t0) = report.certificate.as_ref().and_then(|c| c.t0) {
        out.push(Marker {
            time: t0,
            label: "certified t0",
            color: "#c0392b",
        });
    }
    if let Some(t) = report.solver.detected_time {
        out.push(Marker {
            time: t,
            label: "blow-up detected",
            color: "#7f8c8d",
        });
    }
    out
}

struct Frame {
    t_lo: f64,
    t_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        LEFT + (t - self.t_lo) / (self.t_hi - self.t_lo) * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, log_v: f64) -> f64 {
        HEIGHT - BOTTOM - (log_v - self.y_lo) / (self.y_hi - self.y_lo) * (HEIGHT - TOP - BOTTOM)
    }
}

pub fn norms_plot(diag: &Diagnostics, markers: &[Marker]) -> String {
    let series: [(&str, &str, &[f64]); 4] = [
        ("||u||_H^(m+1)", "#1f77b4", &diag.sobolev_norm_m1),
        ("||u_h||_H^(m+1)", "#2ca02c", &diag.homogeneous_norm),
        ("energy", "#ff7f0e", &diag.energy),
        ("Gronwall bound", "#9467bd", &diag.gronwall),
    ];
    let logs = series
        .iter()
        .flat_map(|(_, _, v)| v.iter())
        .filter(|v| v.is_finite() && **v > 0.0)
        .map(|v| v.log10());
    let (lo, hi) = logs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (y_lo, y_hi) = if lo.is_finite() {
        let (l, h) = (lo.floor(), hi.ceil());
        if h > l {
            (l, h)
        } else {
            (l - 1.0, h + 1.0)
        }
    } else {
        (-1.0, 1.0)
    };
    let t_lo = diag.times.first().copied().unwrap_or(0.0);
    let t_hi = diag.times.last().copied().filter(|t| *t > t_lo).unwrap_or(t_lo + 1.0);
    let frame = Frame { t_lo, t_hi, y_lo, y_hi };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1) = (frame.x(t_lo), frame.x(t_hi));
    let (y0, y1) = (frame.y(y_lo), frame.y(y_hi));
    let _ = writeln!(
        s,
        r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    let decades = (y_hi - y_lo) as i64;
    let stride = ((decades + 7) / 8).max(1);
    let mut d = y_lo as i64;
    while d <= y_hi as i64 {
        let y = frame.y(d as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#dddddd"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            x0 - 6.0,
            y + 4.0
        );
        d += stride;
    }
    for i in 0..=5 {
        let t = t_lo + (t_hi - t_lo) * i as f64 / 5.0;
        let x = frame.x(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.3}</text>"#,
            y0 + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0
    );

    for (i, (name, color, values)) in series.iter().enumerate() {
        for run in segments(&diag.times, values) {
            let pts: Vec<String> = run
                .iter()
                .map(|(t, v)| format!("{:.2},{:.2}", frame.x(*t), frame.y(v.log10())))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = x1 + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{name}</text>"#, lx + 26.0, ly + 4.0);
    }
    for (i, m) in markers.iter().enumerate() {
        if !(m.time >= t_lo && m.time <= t_hi) {
            continue;
        }
        let x = frame.x(m.time);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y1:.2}" x2="{x:.2}" y2="{y0:.2}" stroke="{}" stroke-dasharray="6 4"/>"#,
            m.color
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" fill="{}">{}</text>"#,
            x + 4.0,
            y1 + 14.0 + 14.0 * i as f64,
            m.color,
            m.label
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Maximal runs of finite positive samples.
fn segments(times: &[f64], values: &[f64]) -> Vec<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if v.is_finite() && v > 0.0 {
            current.push((t, v));
        } else if !current.is_empty() {
            out.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

//! Static SVG rendering of summary tables: one panel per metric (TPR, PPV,
//! E2) against σ_NSR, mean curves with ±1 std bars, one color per series.
//! Output bytes depend only on the input rows.

use std::fmt::Write as _;

use crate::bench::SummaryRow;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub rows: Vec<SummaryRow>,
}

const COLORS: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const PANEL_W: f64 = 300.0;
const PANEL_H: f64 = 240.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 44.0;
const GAP: f64 = 30.0;

type Metric = (&'static str, fn(&SummaryRow) -> (f64, f64), bool);

const METRICS: [Metric; 3] = [
    ("TPR", |r| (r.mean_tpr, r.std_tpr), true),
    ("PPV", |r| (r.mean_ppv, r.std_ppv), true),
    ("E2", |r| (r.mean_e2, r.std_e2), false),
];

fn fmt(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders all series into one SVG document.
pub fn render_svg(series: &[Series]) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.rows.is_empty()) {
        return Err(Error::EmptyTable);
    }
    let finite = |v: f64| v.is_finite();
    let levels: Vec<f64> = series.iter().flat_map(|s| s.rows.iter().map(|r| r.level)).filter(|v| finite(*v)).collect();
    let (mut x_lo, mut x_hi) = levels.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(x_hi > x_lo) {
        x_lo -= 0.05;
        x_hi += 0.05;
    }
    let width = MARGIN_L + 3.0 * PANEL_W + 2.0 * (GAP + MARGIN_L) + 20.0;
    let legend_h = 18.0 * series.len() as f64;
    let height = MARGIN_T + PANEL_H + MARGIN_B + legend_h + 10.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        fmt(width),
        fmt(height),
        fmt(width),
        fmt(height)
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (p, (name, get, unit_range)) in METRICS.iter().enumerate() {
        let left = MARGIN_L + p as f64 * (PANEL_W + GAP + MARGIN_L);
        let top = MARGIN_T;
        let (y_lo, y_hi) = if *unit_range {
            (0.0, 1.05)
        } else {
            let hi = series
                .iter()
                .flat_map(|s| s.rows.iter().map(get))
                .filter(|(m, s)| finite(*m) && finite(*s))
                .map(|(m, s)| m + s)
                .fold(0.0, f64::max);
            (0.0, if hi > 0.0 { hi * 1.05 } else { 1.0 })
        };
        let sx = |v: f64| left + (v - x_lo) / (x_hi - x_lo) * PANEL_W;
        let sy = |v: f64| top + PANEL_H - (v.clamp(y_lo, y_hi) - y_lo) / (y_hi - y_lo) * PANEL_H;
        let _ = writeln!(out, r#"<g class="panel" id="{name}">"#);
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            fmt(left),
            fmt(top),
            fmt(PANEL_W),
            fmt(PANEL_H)
        );
        for k in 0..=4 {
            let xv = x_lo + (x_hi - x_lo) * k as f64 / 4.0;
            let yv = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                fmt(sx(xv)),
                fmt(top + PANEL_H + 16.0),
                tick(xv)
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                fmt(left - 6.0),
                fmt(sy(yv) + 4.0),
                tick(yv)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">noise-to-signal ratio</text>"#,
            fmt(left + PANEL_W / 2.0),
            fmt(top + PANEL_H + 34.0)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-weight="bold">{name}</text>"#,
            fmt(left + PANEL_W / 2.0),
            fmt(top - 10.0)
        );
        for (si, s) in series.iter().enumerate() {
            let color = COLORS[si % COLORS.len()];
            let pts: Vec<(f64, f64, f64)> = s
                .rows
                .iter()
                .map(|r| {
                    let (m, sd) = get(r);
                    (r.level, m, sd)
                })
                .filter(|(l, m, _)| finite(*l) && finite(*m))
                .collect();
            if pts.len() > 1 {
                let path: Vec<String> = pts.iter().map(|(l, m, _)| format!("{},{}", fmt(sx(*l)), fmt(sy(*m)))).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                    path.join(" ")
                );
            }
            for (l, m, sd) in pts {
                let sd = if sd.is_finite() { sd } else { 0.0 };
                let x = fmt(sx(l));
                let _ = writeln!(
                    out,
                    r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="{color}"/>"#,
                    fmt(sy(m - sd)),
                    fmt(sy(m + sd))
                );
                let _ = writeln!(out, r#"<circle cx="{x}" cy="{}" r="3" fill="{color}"/>"#, fmt(sy(m)));
            }
        }
        out.push_str("</g>\n");
    }
    for (si, s) in series.iter().enumerate() {
        let y = MARGIN_T + PANEL_H + MARGIN_B + 14.0 + 18.0 * si as f64;
        let color = COLORS[si % COLORS.len()];
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="12" height="12" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            fmt(MARGIN_L),
            fmt(y - 10.0),
            fmt(MARGIN_L + 18.0),
            fmt(y),
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(level: f64, tpr: f64) -> SummaryRow {
        SummaryRow {
            level,
            mean_tpr: tpr,
            std_tpr: 0.0,
            mean_ppv: 1.0,
            std_ppv: 0.1,
            mean_e2: 0.2,
            std_e2: 0.05,
            n: 3,
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(render_svg(&[]), Err(Error::EmptyTable)));
        assert!(matches!(render_svg(&[Series { label: "a".into(), rows: vec![] }]), Err(Error::EmptyTable)));
    }

    #[test]
    fn single_point_has_zero_length_bar() {
        let svg = render_svg(&[Series { label: "a".into(), rows: vec![row(0.1, 1.0)] }]).unwrap();
        assert_eq!(svg.matches("<g class=\"panel\"").count(), 3);
        assert!(!svg.contains("<polyline"));
        let tpr = &svg[svg.find("id=\"TPR\"").unwrap()..svg.find("id=\"PPV\"").unwrap()];
        let line = tpr.lines().find(|l| l.starts_with("<line")).unwrap();
        let y1 = line.split("y1=\"").nth(1).unwrap().split('"').next().unwrap();
        let y2 = line.split("y2=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(y1, y2);
    }

    #[test]
    fn two_series_use_two_colors_and_are_deterministic() {
        let s = vec![
            Series { label: "ident_wv".into(), rows: vec![row(0.0, 1.0), row(0.2, 0.8)] },
            Series { label: "uniform".into(), rows: vec![row(0.0, 1.0), row(0.2, 0.5)] },
        ];
        let a = render_svg(&s).unwrap();
        assert!(a.contains(COLORS[0]) && a.contains(COLORS[1]));
        assert!(a.contains(">ident_wv<") && a.contains(">uniform<"));
        assert_eq!(a, render_svg(&s).unwrap());
    }
}

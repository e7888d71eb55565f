//! Plot-ready data from reports and projections, and a small static SVG
//! renderer for it.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::project::KeywordProjection;
use super::report::{EvalKind, EvalReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    /// Distribution per series: density outline plus one dot per value.
    Violin,
    /// One bar per series from its first value.
    Bar,
    /// Points coloured by series.
    Scatter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub name: String,
    pub kind: PlotKind,
    pub title: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn series(label: String, values: Vec<f64>) -> Series {
    Series { label, values, points: Vec::new(), names: Vec::new() }
}

/// Violin data for per-case scores and bar data for the mean counts.
pub fn report_plot_data(report: &EvalReport) -> Vec<PlotData> {
    let label = |model: &str, title: &str| format!("{title} ({model})");
    let mut out = Vec::new();
    match report.kind {
        EvalKind::Contradiction => {
            for (metric, pick) in [("recall", (|s: &super::CaseScore| s.recall) as fn(&super::CaseScore) -> f64), ("precision", |s| s.precision)] {
                let data = report
                    .aggregates
                    .iter()
                    .map(|a| {
                        let values = report.case_scores.iter().filter(|s| s.model_id == a.model_id && s.strategy == a.strategy).map(pick).collect();
                        series(label(&a.model_id, a.strategy.title()), values)
                    })
                    .collect();
                out.push(PlotData { name: metric.into(), kind: PlotKind::Violin, title: format!("Per-case {metric}"), y_label: metric.into(), series: data });
            }
            let bars = report.aggregates.iter().map(|a| series(label(&a.model_id, a.strategy.title()), vec![a.mean_parameter_count.unwrap_or(0.0)])).collect();
            out.push(PlotData {
                name: "parameter-count".into(),
                kind: PlotKind::Bar,
                title: "Mean parameters analysed per case".into(),
                y_label: "parameters".into(),
                series: bars,
            });
        }
        EvalKind::Solution => {
            let data = report
                .aggregates
                .iter()
                .map(|a| {
                    let values = report.solution_scores.iter().filter(|s| s.model_id == a.model_id && s.strategy == a.strategy).map(|s| s.similarity).collect();
                    series(label(&a.model_id, a.strategy.title()), values)
                })
                .collect();
            out.push(PlotData { name: "similarity".into(), kind: PlotKind::Violin, title: "Solution similarity".into(), y_label: "cosine similarity".into(), series: data });
        }
    }
    out
}

/// Scatter data with one series per keyword source.
pub fn projection_plot_data(projection: &KeywordProjection) -> PlotData {
    let mut out: Vec<Series> = Vec::new();
    for p in &projection.points {
        let idx = match out.iter().position(|s| s.label == p.source) {
            Some(i) => i,
            None => {
                out.push(Series { label: p.source.clone(), values: Vec::new(), points: Vec::new(), names: Vec::new() });
                out.len() - 1
            }
        };
        out[idx].points.push([p.x, p.y]);
        out[idx].names.push(p.keyword.clone());
    }
    PlotData { name: "keywords".into(), kind: PlotKind::Scatter, title: format!("Keyword projection ({})", projection.method), y_label: String::new(), series: out }
}

const COLORS: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];
const W: f64 = 720.0;
const H: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn nice_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if (hi - lo).abs() < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

/// Gaussian kernel density at `x` with Silverman's bandwidth.
fn density(values: &[f64], x: f64) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
    let h = (1.06 * sd * n.powf(-0.2)).max(0.02);
    values.iter().map(|v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum::<f64>() / (n * h * (2.0 * std::f64::consts::PI).sqrt())
}

pub fn render_svg(plot: &PlotData) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(&plot.title));
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let _ = writeln!(s, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#999"/>"##);

    match plot.kind {
        PlotKind::Violin | PlotKind::Bar => {
            let (lo, hi) = match plot.kind {
                PlotKind::Bar => (0.0, nice_range(plot.series.iter().flat_map(|x| x.values.iter().copied()).chain([0.0])).1),
                _ => nice_range(plot.series.iter().flat_map(|x| x.values.iter().copied())),
            };
            let y = |v: f64| TOP + ph * (1.0 - (v - lo) / (hi - lo));
            for t in 0..=4 {
                let v = lo + (hi - lo) * t as f64 / 4.0;
                let _ = writeln!(s, r##"<line x1="{LEFT}" x2="{}" y1="{:.2}" y2="{:.2}" stroke="#eee"/><text x="{}" y="{:.2}" text-anchor="end">{v:.2}</text>"##, LEFT + pw, y(v), y(v), LEFT - 6.0, y(v) + 4.0);
            }
            let _ = writeln!(s, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#, TOP + ph / 2.0, TOP + ph / 2.0, escape(&plot.y_label));
            let n = plot.series.len().max(1) as f64;
            let slot = pw / n;
            for (i, ser) in plot.series.iter().enumerate() {
                let cx = LEFT + slot * (i as f64 + 0.5);
                let color = COLORS[i % COLORS.len()];
                let _ = writeln!(s, r#"<text x="{cx:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, escape(&ser.label));
                if ser.values.is_empty() {
                    continue;
                }
                if plot.kind == PlotKind::Bar {
                    let v = ser.values[0];
                    let _ = writeln!(s, r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#, cx - slot * 0.3, y(v), slot * 0.6, y(lo) - y(v));
                    let _ = writeln!(s, r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{v:.2}</text>"#, y(v) - 4.0);
                    continue;
                }
                let steps = 60;
                let grid: Vec<f64> = (0..=steps).map(|k| lo + (hi - lo) * k as f64 / steps as f64).collect();
                let dens: Vec<f64> = grid.iter().map(|&g| density(&ser.values, g)).collect();
                let peak = dens.iter().copied().fold(0.0, f64::max).max(1e-12);
                let half = slot * 0.4;
                let mut path = String::new();
                for (k, (&g, &d)) in grid.iter().zip(&dens).enumerate() {
                    let _ = write!(path, "{}{:.2},{:.2} ", if k == 0 { "M" } else { "L" }, cx + half * d / peak, y(g));
                }
                for (&g, &d) in grid.iter().zip(&dens).rev() {
                    let _ = write!(path, "L{:.2},{:.2} ", cx - half * d / peak, y(g));
                }
                let _ = writeln!(s, r#"<path d="{}Z" fill="{color}" fill-opacity="0.35" stroke="{color}"/>"#, path.trim_end());
                for (k, &v) in ser.values.iter().enumerate() {
                    // deterministic jitter so equal scores stay visible
                    let jitter = ((k * 37 % 11) as f64 - 5.0) * half * 0.06;
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, cx + jitter, y(v));
                }
                let mean = ser.values.iter().sum::<f64>() / ser.values.len() as f64;
                let _ = writeln!(s, r#"<line x1="{:.2}" x2="{:.2}" y1="{:.2}" y2="{:.2}" stroke="black" stroke-width="2"/>"#, cx - half * 0.5, cx + half * 0.5, y(mean), y(mean));
            }
        }
        PlotKind::Scatter => {
            let (xlo, xhi) = nice_range(plot.series.iter().flat_map(|x| x.points.iter().map(|p| p[0])));
            let (ylo, yhi) = nice_range(plot.series.iter().flat_map(|x| x.points.iter().map(|p| p[1])));
            let px = |v: f64| LEFT + pw * (v - xlo) / (xhi - xlo);
            let py = |v: f64| TOP + ph * (1.0 - (v - ylo) / (yhi - ylo));
            for (i, ser) in plot.series.iter().enumerate() {
                let color = COLORS[i % COLORS.len()];
                for (k, p) in ser.points.iter().enumerate() {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"><title>{}</title></circle>"#, px(p[0]), py(p[1]), escape(ser.names.get(k).map_or("", String::as_str)));
                    if let Some(name) = ser.names.get(k) {
                        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="9" fill="{color}">{}</text>"#, px(p[0]) + 5.0, py(p[1]) - 4.0, escape(name));
                    }
                }
                let ly = H - BOTTOM + 30.0;
                let lx = LEFT + 150.0 * i as f64;
                let _ = writeln!(s, r#"<circle cx="{lx}" cy="{ly}" r="5" fill="{color}"/><text x="{}" y="{}">{}</text>"#, lx + 9.0, ly + 4.0, escape(&ser.label));
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::project::ProjectedPoint;

    #[test]
    fn violin_and_scatter_render() {
        let plot = PlotData {
            name: "recall".into(),
            kind: PlotKind::Violin,
            title: "Recall & <precision>".into(),
            y_label: "recall".into(),
            series: vec![series("Basic".into(), vec![0.5, 1.0, 0.75]), series("CoT".into(), vec![])],
        };
        let svg = render_svg(&plot);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("Recall &amp; &lt;precision&gt;"));
        assert_eq!(svg.matches("<circle").count(), 3);

        let proj = KeywordProjection {
            method: crate::eval::project::ProjectionMethod::Pca,
            points: ["ground-truth", "gpt-4", "gpt-3.5", "gpt-4"]
                .iter()
                .enumerate()
                .map(|(i, s)| ProjectedPoint { keyword: format!("k{i}"), source: s.to_string(), x: i as f64, y: 1.0 })
                .collect(),
            findings: vec![],
        };
        let data = projection_plot_data(&proj);
        assert_eq!(data.series.len(), 3);
        assert_eq!(data.series[1].points.len(), 2);
        // one circle per point plus one legend swatch per series
        assert_eq!(render_svg(&data).matches("<circle").count(), 4 + 3);
    }
}

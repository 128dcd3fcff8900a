//! Static SVG figures drawn from record files.

use std::f64::consts::PI;
use std::fmt::Write;

use qaoa_lab::concentration::{concentration_series, fit_scaling, SweepRecord};
use qaoa_lab::{symmetry_image, Branch};

use crate::error::CliError;

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 320.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Dots,
    Line,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub mark: Mark,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Axis {
    pub label: String,
    pub log: bool,
    /// Fixed range; otherwise taken from the data.
    pub range: Option<(f64, f64)>,
}

impl Axis {
    fn linear(label: &str) -> Self {
        Self {
            label: label.into(),
            log: false,
            range: None,
        }
    }

    fn log(label: &str) -> Self {
        Self {
            label: label.into(),
            log: true,
            range: None,
        }
    }

    fn fixed(label: &str, lo: f64, hi: f64) -> Self {
        Self {
            label: label.into(),
            log: false,
            range: Some((lo, hi)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub x: Axis,
    pub y: Axis,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Data range in axis units (log10 for log axes), padded when degenerate.
fn extent(axis: &Axis, values: impl Iterator<Item = f64>) -> (f64, f64) {
    if let Some((lo, hi)) = axis.range {
        return if axis.log {
            (lo.log10(), hi.log10())
        } else {
            (lo, hi)
        };
    }
    let mapped = values
        .filter(|v| v.is_finite() && (!axis.log || *v > 0.0))
        .map(|v| if axis.log { v.log10() } else { v });
    let (lo, hi) = mapped.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = if axis.log {
            0.5
        } else {
            0.5 * lo.abs().max(1.0)
        };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let first = lo.ceil() as i64;
        let last = hi.floor() as i64;
        if last >= first {
            return (first..=last).map(|e| e as f64).collect();
        }
        return vec![lo, hi];
    }
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut out = Vec::new();
    let mut t = (lo / step).ceil() * step;
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        return format!("1e{}", v.round() as i64);
    }
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn render_panel(svg: &mut String, panel: &Panel, top: f64) {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let left = MARGIN_LEFT;
    let ptop = top + MARGIN_TOP;
    let all = || panel.series.iter().flat_map(|s| s.points.iter().copied());
    let (x0, x1) = extent(&panel.x, all().map(|p| p.0));
    let (y0, y1) = extent(&panel.y, all().map(|p| p.1));
    let map = |v: f64, log: bool| if log { v.log10() } else { v };
    let sx = |x: f64| left + (map(x, panel.x.log) - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| ptop + plot_h - (map(y, panel.y.log) - y0) / (y1 - y0) * plot_h;

    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="15">{}</text>"##,
        left + plot_w / 2.0,
        top + 24.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{left:.2}" y="{ptop:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#333"/>"##
    );
    for t in ticks(x0, x1, panel.x.log) {
        let x = left + (t - x0) / (x1 - x0) * plot_w;
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"##,
            ptop + plot_h,
            ptop + plot_h + 5.0,
            ptop + plot_h + 18.0,
            tick_label(t, panel.x.log)
        );
    }
    for t in ticks(y0, y1, panel.y.log) {
        let y = ptop + plot_h - (t - y0) / (y1 - y0) * plot_h;
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{left:.2}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"##,
            left - 5.0,
            left - 8.0,
            y + 4.0,
            tick_label(t, panel.y.log)
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"##,
        left + plot_w / 2.0,
        ptop + plot_h + 38.0,
        escape(&panel.x.label)
    );
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13" transform="rotate(-90 {:.2} {:.2})">{}</text>"##,
        left - 55.0,
        ptop + plot_h / 2.0,
        left - 55.0,
        ptop + plot_h / 2.0,
        escape(&panel.y.label)
    );

    let visible = |&(x, y): &(f64, f64)| {
        x.is_finite() && y.is_finite() && (!panel.x.log || x > 0.0) && (!panel.y.log || y > 0.0)
    };
    for (i, s) in panel.series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = s.points.iter().copied().filter(visible).collect();
        match s.mark {
            Mark::Dots => {
                for &(x, y) in &pts {
                    let _ = writeln!(
                        svg,
                        r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"##,
                        sx(x),
                        sy(y),
                        s.color
                    );
                }
            }
            Mark::Line => {
                let path: Vec<String> = pts
                    .iter()
                    .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                    .collect();
                let _ = writeln!(
                    svg,
                    r##"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"##,
                    path.join(" "),
                    s.color
                );
            }
        }
        let ly = ptop + 10.0 + 18.0 * i as f64;
        let lx = left + plot_w + 12.0;
        let swatch = match s.mark {
            Mark::Dots => format!(
                r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"##,
                lx + 8.0,
                ly,
                s.color
            ),
            Mark::Line => format!(
                r##"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="1.5"/>"##,
                lx + 16.0,
                s.color
            ),
        };
        let _ = writeln!(
            svg,
            r##"{swatch}<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"##,
            lx + 22.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
}

/// Stacks the panels vertically; `desc` is embedded as the document description.
pub fn render(panels: &[Panel], desc: &str) -> String {
    let height = PANEL_HEIGHT * panels.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"##
    );
    let _ = writeln!(svg, "<desc>{}</desc>", escape(desc));
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="white"/>"##);
    for (i, panel) in panels.iter().enumerate() {
        render_panel(&mut svg, panel, PANEL_HEIGHT * i as f64);
    }
    svg.push_str("</svg>\n");
    svg
}

fn sample_curve(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    let steps = 200;
    (0..=steps)
        .map(|i| {
            let n = lo + (hi - lo) * i as f64 / steps as f64;
            (n, f(n))
        })
        .collect()
}

/// Optimal angles against `n`, one series per layer, with the depth-one
/// closed form overlaid on the last layer.
pub fn angles_panels(records: &[SweepRecord]) -> Vec<Panel> {
    let p = records[0].p;
    let mut beta_series = Vec::new();
    let mut gamma_series = Vec::new();
    for k in 0..p {
        let color = PALETTE[k % PALETTE.len()];
        beta_series.push(Series {
            label: format!("beta_{}", k + 1),
            color,
            mark: Mark::Dots,
            points: records
                .iter()
                .map(|r| (r.n as f64, r.result.params.betas()[k]))
                .collect(),
        });
        gamma_series.push(Series {
            label: format!("gamma_{}", k + 1),
            color,
            mark: Mark::Dots,
            points: records
                .iter()
                .map(|r| (r.n as f64, r.result.params.gammas()[k]))
                .collect(),
        });
    }
    let lo = records.iter().map(|r| r.n).min().unwrap_or(1) as f64;
    let hi = records.iter().map(|r| r.n).max().unwrap_or(1) as f64;
    beta_series.push(Series {
        label: "pi/(n+4)".into(),
        color: "#555555",
        mark: Mark::Line,
        points: sample_curve(lo, hi, |n| PI / (n + 4.0)),
    });
    gamma_series.push(Series {
        label: "pi(n+2)/(n+4)".into(),
        color: "#555555",
        mark: Mark::Line,
        points: sample_curve(lo, hi, |n| PI * (n + 2.0) / (n + 4.0)),
    });
    vec![
        Panel {
            title: format!("Optimal mixer angles, p = {p}"),
            x: Axis::linear("n"),
            y: Axis::linear("beta"),
            series: beta_series,
        },
        Panel {
            title: format!("Optimal phase angles, p = {p}"),
            x: Axis::linear("n"),
            y: Axis::linear("gamma"),
            series: gamma_series,
        },
    ]
}

/// Every layer's `(beta, gamma)` at the point the search converged to, so
/// that optima found on the mirrored branch appear as a separate cluster.
pub fn branches_panels(records: &[SweepRecord]) -> Vec<Panel> {
    let mut canonical = Vec::new();
    let mut mirrored = Vec::new();
    for r in records {
        let (params, bucket) = match r.result.branch {
            Branch::Canonical => (r.result.params.clone(), &mut canonical),
            Branch::Mirrored => (symmetry_image(&r.result.params), &mut mirrored),
        };
        bucket.extend(
            params
                .betas()
                .iter()
                .copied()
                .zip(params.gammas().iter().copied()),
        );
    }
    vec![Panel {
        title: "Optimal parameters on both symmetry branches".into(),
        x: Axis::fixed("beta", 0.0, PI),
        y: Axis::fixed("gamma", 0.0, 2.0 * PI),
        series: vec![
            Series {
                label: "canonical".into(),
                color: PALETTE[0],
                mark: Mark::Dots,
                points: canonical,
            },
            Series {
                label: "mirrored".into(),
                color: PALETTE[1],
                mark: Mark::Dots,
                points: mirrored,
            },
        ],
    }]
}

/// Log-log concentration distances with the fitted power law when at least
/// five distances are available.
pub fn scaling_panels(records: &[SweepRecord]) -> Result<Vec<Panel>, CliError> {
    let points = concentration_series(records)?;
    if points.is_empty() {
        return Err(CliError::Input(
            "scaling plot needs at least two consecutive records".into(),
        ));
    }
    let mut series = vec![Series {
        label: "delta^2".into(),
        color: PALETTE[0],
        mark: Mark::Dots,
        points: points.iter().map(|pt| (pt.n as f64, pt.delta_sq)).collect(),
    }];
    if let Ok(fit) = fit_scaling(&points) {
        let (lo, hi) = (fit.n_range.0 as f64, fit.n_range.1 as f64);
        series.push(Series {
            label: format!("slope {:.3}", fit.exponent),
            color: PALETTE[1],
            mark: Mark::Line,
            points: vec![
                (lo, fit.prefactor * lo.powf(fit.exponent)),
                (hi, fit.prefactor * hi.powf(fit.exponent)),
            ],
        });
    }
    Ok(vec![Panel {
        title: format!("Concentration distance, p = {}", records[0].p),
        x: Axis::log("n"),
        y: Axis::log("delta^2"),
        series,
    }])
}

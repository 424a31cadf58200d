//! Combined trace tables and SVG line charts.
//!
//! Traces of different lengths are padded with their last value up to the
//! longest one. The combined CSV is the authoritative artifact; the SVG is
//! drawn from the same padded series and stores the plotted values of every
//! polyline in a `data-y` attribute so the chart can be checked against the
//! table.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use jacobi_diag::driver::parse_csv;

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub f: Vec<f64>,
    pub grad_norm: Vec<f64>,
}

impl Series {
    pub fn from_trace_csv(label: &str, text: &str) -> Result<Self> {
        let rows = parse_csv(text)?;
        Ok(Series {
            label: label.to_string(),
            f: rows.iter().map(|r| r.f).collect(),
            grad_norm: rows.iter().map(|r| r.grad_norm).collect(),
        })
    }

    pub fn from_csv_file(label: &str, path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_trace_csv(label, &text).with_context(|| format!("parsing {}", path.display()))
    }

    fn padded(values: &[f64], len: usize) -> Vec<f64> {
        let mut v = values.to_vec();
        if let Some(&last) = values.last() {
            v.resize(len, last);
        }
        v
    }
}

#[derive(Clone, Debug, Default)]
pub struct PlotOptions {
    /// Plot `log10(grad_norm)`; nonpositive values are clipped to the smallest
    /// positive one.
    pub log_grad: bool,
    pub title: String,
}

pub struct Chart {
    pub csv: String,
    pub svg: String,
}

/// Builds the combined CSV `k,<label>_f,<label>_grad_norm,…` and the chart.
pub fn compare_and_plot(series: &[Series], opts: &PlotOptions) -> Result<Chart> {
    ensure!(!series.is_empty(), "nothing to plot");
    for s in series {
        ensure!(!s.f.is_empty(), "series {:?} is empty", s.label);
        ensure!(
            s.f.len() == s.grad_norm.len(),
            "series {:?} has mismatched columns",
            s.label
        );
        ensure!(
            !s.label.is_empty() && !s.label.contains([',', '"', '<', '>', '&', '\n']),
            "label {:?} cannot be used as a column name",
            s.label
        );
    }
    let len = series.iter().map(|s| s.f.len()).max().unwrap_or(0);
    let padded: Vec<Series> = series
        .iter()
        .map(|s| Series {
            label: s.label.clone(),
            f: Series::padded(&s.f, len),
            grad_norm: Series::padded(&s.grad_norm, len),
        })
        .collect();
    Ok(Chart {
        csv: combined_csv(&padded, len),
        svg: render_svg(&padded, len, opts),
    })
}

fn combined_csv(series: &[Series], len: usize) -> String {
    let mut out = String::from("k");
    for s in series {
        let _ = write!(out, ",{0}_f,{0}_grad_norm", s.label);
    }
    out.push('\n');
    for k in 0..len {
        let _ = write!(out, "{k}");
        for s in series {
            let _ = write!(out, ",{:e},{:e}", s.f[k], s.grad_norm[k]);
        }
        out.push('\n');
    }
    out
}

/// Parses a combined CSV back into series.
pub fn parse_combined_csv(text: &str) -> Result<Vec<Series>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().context("empty table")?.split(',').collect();
    ensure!(
        header.first() == Some(&"k") && header.len() % 2 == 1,
        "malformed header"
    );
    let mut series = Vec::new();
    for pair in header[1..].chunks(2) {
        let (Some(label), Some(_)) = (
            pair[0].strip_suffix("_f"),
            pair[1].strip_suffix("_grad_norm"),
        ) else {
            bail!("malformed column names {pair:?}");
        };
        series.push(Series {
            label: label.to_string(),
            f: Vec::new(),
            grad_norm: Vec::new(),
        });
    }
    for (ln, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        ensure!(
            fields.len() == header.len(),
            "line {}: expected {} fields",
            ln + 2,
            header.len()
        );
        for (s, pair) in series.iter_mut().zip(fields[1..].chunks(2)) {
            s.f.push(pair[0].parse()?);
            s.grad_norm.push(pair[1].parse()?);
        }
    }
    Ok(series)
}

const WIDTH: f64 = 900.0;
const PANEL_HEIGHT: f64 = 300.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 50.0;
const PANEL_GAP: f64 = 70.0;
const TICKS: usize = 5;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Panel<'a> {
    key: &'a str,
    y_label: String,
    values: Vec<Vec<f64>>,
}

fn render_svg(series: &[Series], len: usize, opts: &PlotOptions) -> String {
    let grad_values: Vec<Vec<f64>> = if opts.log_grad {
        let floor = series
            .iter()
            .flat_map(|s| s.grad_norm.iter().copied())
            .filter(|&g| g > 0.0 && g.is_finite())
            .fold(f64::INFINITY, f64::min);
        let floor = if floor.is_finite() { floor } else { 1.0 };
        series
            .iter()
            .map(|s| s.grad_norm.iter().map(|&g| g.max(floor).log10()).collect())
            .collect()
    } else {
        series.iter().map(|s| s.grad_norm.clone()).collect()
    };
    let panels = [
        Panel {
            key: "f",
            y_label: "f".into(),
            values: series.iter().map(|s| s.f.clone()).collect(),
        },
        Panel {
            key: "grad_norm",
            y_label: if opts.log_grad {
                "log10 grad norm".into()
            } else {
                "grad norm".into()
            },
            values: grad_values,
        },
    ];
    let height = MARGIN_TOP + 2.0 * PANEL_HEIGHT + PANEL_GAP + 50.0;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let x_max = (len.max(2) - 1) as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="25" text-anchor="middle" font-size="16">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(&opts.title)
    );
    for (p, panel) in panels.iter().enumerate() {
        let top = MARGIN_TOP + p as f64 * (PANEL_HEIGHT + PANEL_GAP);
        let (mut lo, mut hi) = panel
            .values
            .iter()
            .flatten()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
            lo -= 0.5;
            hi += 0.5;
        }
        let sx = |k: f64| MARGIN_LEFT + k / x_max * plot_w;
        let sy = |v: f64| top + PANEL_HEIGHT - (v - lo) / (hi - lo) * PANEL_HEIGHT;
        let _ = writeln!(
            svg,
            r#"<g class="panel" data-panel="{}"><rect x="{MARGIN_LEFT}" y="{top}" width="{plot_w}" height="{PANEL_HEIGHT}" fill="none" stroke="black"/>"#,
            panel.key
        );
        for t in 0..=TICKS {
            let frac = t as f64 / TICKS as f64;
            let (kx, vy) = (frac * x_max, lo + frac * (hi - lo));
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}" stroke="black"/><text x="{x:.2}" y="{yt:.2}" text-anchor="middle">{kx:.0}</text>"#,
                x = sx(kx),
                y0 = top + PANEL_HEIGHT,
                y1 = top + PANEL_HEIGHT + 5.0,
                yt = top + PANEL_HEIGHT + 18.0
            );
            let _ = writeln!(
                svg,
                r#"<line x1="{x0:.2}" y1="{y:.2}" x2="{MARGIN_LEFT}" y2="{y:.2}" stroke="black"/><text x="{xt:.2}" y="{yt:.2}" text-anchor="end">{vy:.4e}</text>"#,
                x0 = MARGIN_LEFT - 5.0,
                y = sy(vy),
                xt = MARGIN_LEFT - 8.0,
                yt = sy(vy) + 4.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            top + PANEL_HEIGHT + 36.0
        );
        let _ = writeln!(
            svg,
            r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            top + PANEL_HEIGHT / 2.0,
            escape(&panel.y_label)
        );
        for (s, (values, ser)) in panel.values.iter().zip(series).enumerate() {
            let color = COLORS[s % COLORS.len()];
            let mut points = String::new();
            let mut data = String::new();
            for (k, &v) in values.iter().enumerate() {
                let _ = write!(
                    points,
                    "{:.2},{:.2} ",
                    sx(k as f64),
                    sy(if v.is_finite() { v } else { lo })
                );
                let _ = write!(data, "{v:e} ");
            }
            let _ = writeln!(
                svg,
                r#"<polyline class="series" data-label="{}" data-panel="{}" data-y="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                escape(&ser.label),
                panel.key,
                data.trim_end(),
                points.trim_end()
            );
            if p == 0 {
                let ly = top + 15.0 + 18.0 * s as f64;
                let lx = MARGIN_LEFT + plot_w + 15.0;
                let _ = writeln!(
                    svg,
                    r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                    lx + 20.0,
                    lx + 26.0,
                    ly + 4.0,
                    escape(&ser.label)
                );
            }
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Extracts `(label, panel, values)` from every polyline of a chart produced
/// by [`compare_and_plot`].
pub fn svg_series(svg: &str) -> Result<Vec<(String, String, Vec<f64>)>> {
    fn attr<'a>(tag: &'a str, name: &str) -> Result<&'a str> {
        let key = format!(" {name}=\"");
        let start = tag
            .find(&key)
            .with_context(|| format!("missing attribute {name}"))?
            + key.len();
        let len = tag[start..].find('"').context("unterminated attribute")?;
        Ok(&tag[start..start + len])
    }
    svg.split("<polyline")
        .skip(1)
        .map(|rest| {
            let tag = &rest[..rest.find("/>").context("unterminated polyline")?];
            let values = attr(tag, "data-y")?
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(Into::into))
                .collect::<Result<Vec<_>>>()?;
            Ok((
                attr(tag, "data-label")?.to_string(),
                attr(tag, "data-panel")?.to_string(),
                values,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(label: &str, f: &[f64], g: &[f64]) -> Series {
        Series {
            label: label.into(),
            f: f.to_vec(),
            grad_norm: g.to_vec(),
        }
    }

    #[test]
    fn single_series_renders_one_line_per_panel() {
        let chart = compare_and_plot(
            &[series("cyclic", &[1.0, 2.0, 3.0], &[1.0, 0.1, 0.01])],
            &PlotOptions::default(),
        )
        .unwrap();
        let lines = svg_series(&chart.svg).unwrap();
        assert_eq!(lines.len(), 2);
        assert!(lines.iter().all(|(l, _, _)| l == "cyclic"));
        assert_eq!(chart.csv.lines().count(), 4);
    }

    #[test]
    fn shorter_series_is_padded_with_last_value() {
        let chart = compare_and_plot(
            &[
                series("a", &[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]),
                series("b", &[5.0, 6.0], &[0.5, 0.25]),
            ],
            &PlotOptions::default(),
        )
        .unwrap();
        let back = parse_combined_csv(&chart.csv).unwrap();
        assert_eq!(back[1].f, vec![5.0, 6.0, 6.0, 6.0]);
        assert_eq!(back[1].grad_norm, vec![0.5, 0.25, 0.25, 0.25]);
        assert_eq!(back[0].f, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn svg_values_match_csv() {
        let f: Vec<f64> = (0..50).map(|k| 10.0 - (-(k as f64) / 7.0).exp()).collect();
        let g: Vec<f64> = (0..50).map(|k| 0.7f64.powi(k)).collect();
        let chart = compare_and_plot(
            &[
                series("gradient-max", &f, &g),
                series("cyclic", &f[..30], &g[..30]),
            ],
            &PlotOptions {
                log_grad: false,
                title: "t".into(),
            },
        )
        .unwrap();
        let table = parse_combined_csv(&chart.csv).unwrap();
        let lines = svg_series(&chart.svg).unwrap();
        assert_eq!(lines.len(), 4);
        for (label, panel, values) in lines {
            let s = table.iter().find(|s| s.label == label).unwrap();
            let expected = if panel == "f" { &s.f } else { &s.grad_norm };
            assert_eq!(&values, expected);
        }
    }

    #[test]
    fn log_panel_stores_log_values() {
        let chart = compare_and_plot(
            &[series("x", &[1.0, 1.0], &[100.0, 0.0])],
            &PlotOptions {
                log_grad: true,
                title: String::new(),
            },
        )
        .unwrap();
        let lines = svg_series(&chart.svg).unwrap();
        let (_, _, g) = lines.iter().find(|(_, p, _)| p == "grad_norm").unwrap();
        assert_eq!(g, &vec![2.0, 2.0]);
        assert!(chart.svg.contains("log10 grad norm"));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(compare_and_plot(&[], &PlotOptions::default()).is_err());
        assert!(compare_and_plot(&[series("a", &[], &[])], &PlotOptions::default()).is_err());
        assert!(
            compare_and_plot(&[series("a,b", &[1.0], &[1.0])], &PlotOptions::default()).is_err()
        );
    }
}

//! CSV readers and static SVG charts for sweep, prune and explosion results.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use consolidate_core::experiments::{EXPLOSION_HEADER, PRUNE_HEADER, SWEEP_HEADER};

use crate::{CliError, Result};

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_log: bool,
    pub y_log: bool,
    pub series: Vec<Series>,
}

/// Which result file a CSV holds, decided by its header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvKind {
    Sweep,
    Prune,
    Explosion,
}

fn schema(path: &Path, line: u64, detail: impl Into<String>) -> CliError {
    CliError::Schema {
        path: path.to_path_buf(),
        line,
        detail: detail.into(),
    }
}

struct Table {
    kind: CsvKind,
    rows: Vec<(u64, Vec<String>)>,
}

fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| schema(path, 1, e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| schema(path, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let kind = if header == SWEEP_HEADER {
        CsvKind::Sweep
    } else if header == PRUNE_HEADER {
        CsvKind::Prune
    } else if header == EXPLOSION_HEADER {
        CsvKind::Explosion
    } else if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(schema(path, 1, "empty file"));
    } else {
        return Err(schema(path, 1, format!("unrecognised header {:?}", header.join(","))));
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            schema(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    if rows.is_empty() {
        return Err(schema(path, 2, "no data rows"));
    }
    Ok(Table { kind, rows })
}

fn num(path: &Path, line: u64, field: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .map_err(|_| schema(path, line, format!("{field}: {raw:?} is not a number")))
}

fn opt_num(path: &Path, line: u64, field: &str, raw: &str) -> Result<Option<f64>> {
    if raw.is_empty() {
        Ok(None)
    } else {
        num(path, line, field, raw).map(Some)
    }
}

fn push(series: &mut Vec<Series>, name: String, p: Point) {
    match series.iter_mut().find(|s| s.name == name) {
        Some(s) => s.points.push(p),
        None => series.push(Series { name, points: vec![p] }),
    }
}

/// Reads a result CSV into a chart description.
pub fn chart_from_csv(path: &Path) -> Result<(CsvKind, Chart)> {
    let table = read_table(path)?;
    let mut series = Vec::new();
    let chart = match table.kind {
        CsvKind::Sweep => {
            for (line, r) in &table.rows {
                let lambda = num(path, *line, "lambda", &r[2])?;
                // Points where every run failed carry no mean and are not drawn.
                let Some(mean) = opt_num(path, *line, "mean_accuracy", &r[3])? else {
                    continue;
                };
                let err = opt_num(path, *line, "ci_halfwidth", &r[4])?;
                push(
                    &mut series,
                    format!("{} ({})", r[0], r[1]),
                    Point {
                        x: lambda,
                        y: mean,
                        err,
                    },
                );
            }
            let x_log = series.iter().flat_map(|s| &s.points).all(|p| p.x > 0.0);
            Chart {
                title: "Average accuracy vs λ".into(),
                x_label: "λ".into(),
                y_label: "average accuracy".into(),
                x_log,
                y_log: false,
                series,
            }
        }
        CsvKind::Prune => {
            for (line, r) in &table.rows {
                let fraction = num(path, *line, "fraction", &r[1])?;
                let mean = num(path, *line, "mean_accuracy", &r[2])?;
                let err = opt_num(path, *line, "ci_halfwidth", &r[3])?;
                push(
                    &mut series,
                    r[0].clone(),
                    Point {
                        x: fraction,
                        y: mean,
                        err,
                    },
                );
            }
            Chart {
                title: "Accuracy vs fraction of pruned weights".into(),
                x_label: "fraction of weights zeroed".into(),
                y_label: "accuracy".into(),
                x_log: false,
                y_log: false,
                series,
            }
        }
        CsvKind::Explosion => {
            for (line, r) in &table.rows {
                let step = num(path, *line, "step", &r[0])?;
                for (i, name) in ["original", "stabilized"].into_iter().enumerate() {
                    if let Some(d) = opt_num(path, *line, name, &r[i + 1])? {
                        push(
                            &mut series,
                            name.into(),
                            Point {
                                x: step,
                                y: d,
                                err: None,
                            },
                        );
                    }
                }
            }
            let y_log = series.iter().flat_map(|s| &s.points).all(|p| p.y > 0.0);
            Chart {
                title: "|w − w*| per SGD step".into(),
                x_label: "step".into(),
                y_label: "distance to anchor".into(),
                x_log: false,
                y_log,
                series,
            }
        }
    };
    Ok((table.kind, chart))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = values
            .map(|v| if log { v.log10() } else { v })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = (hi - lo) * 0.05;
        Self {
            lo: lo - pad,
            hi: hi + pad,
            log,
        }
    }

    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.max(f64::MIN_POSITIVE).log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            let step = ((b - a) / 8).max(1);
            return (a..=b).step_by(step as usize).map(|e| 10f64.powi(e)).collect();
        }
        let span = self.hi - self.lo;
        let raw = span / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| span / s <= 6.0)
            .unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last).map(|i| i as f64 * step).collect()
    }
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl Chart {
    pub fn to_svg(&self) -> String {
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let pts = || self.series.iter().flat_map(|s| &s.points);
        let xa = Axis::new(pts().map(|p| p.x), self.x_log);
        let ya = Axis::new(
            pts()
                .flat_map(|p| {
                    let e = p.err.unwrap_or(0.0);
                    [p.y - e, p.y + e]
                })
                .filter(|v| !self.y_log || *v > 0.0),
            self.y_log,
        );
        let sx = |x: f64| LEFT + xa.unit(x) * pw;
        let sy = |y: f64| TOP + (1.0 - ya.unit(y)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
        );
        for t in xa.ticks() {
            let x = sx(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#333"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"##,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0,
                label(t)
            );
        }
        for t in ya.ticks() {
            let y = sy(t);
            let _ = writeln!(
                s,
                r##"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#333"/><line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#eee"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT - 5.0,
                LEFT + pw,
                LEFT - 8.0,
                y + 4.0,
                label(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let _ = writeln!(s, r#"<g class="series" data-name="{}">"#, escape(&series.name));
            let path: Vec<String> = series
                .points
                .iter()
                .map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
            for p in &series.points {
                let (x, y) = (sx(p.x), sy(p.y));
                if let Some(e) = p.err.filter(|e| *e > 0.0) {
                    let lo = if self.y_log {
                        (p.y - e).max(f64::MIN_POSITIVE)
                    } else {
                        p.y - e
                    };
                    let (y0, y1) = (sy(p.y + e), sy(lo));
                    let _ = writeln!(
                        s,
                        r#"<path class="errbar" d="M{x:.2},{y0:.2}V{y1:.2}M{:.2},{y0:.2}h8M{:.2},{y1:.2}h8" stroke="{color}"/>"#,
                        x - 4.0,
                        x - 4.0
                    );
                }
                let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
            }
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text class="legend" x="{}" y="{}">{}</text>"#,
                lx + 18.0,
                lx + 24.0,
                ly + 4.0,
                escape(&series.name)
            );
            s.push_str("</g>\n");
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Renders `csv` into an SVG next to it (same stem). Nothing is written when
/// the CSV is empty or malformed.
pub fn render_plots(csv: &Path) -> Result<PathBuf> {
    let (_, chart) = chart_from_csv(csv)?;
    let out = csv.with_extension("svg");
    fs::write(&out, chart.to_svg()).map_err(|e| CliError::io(&out, e))?;
    Ok(out)
}

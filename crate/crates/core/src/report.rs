//! Ablation summaries and learning-curve emission (aggregated CSV + SVG).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::agent::Variant;
use crate::error::{LabError, Result};
use crate::gridsim::WorldId;
use crate::metrics::Metrics;

pub const FINAL_WINDOW: usize = 500;
pub const SMOOTHING: usize = 50;

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Trailing moving average; the first `window - 1` points average what
/// is available so far.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for i in 0..xs.len() {
        sum += xs[i];
        if i >= window {
            sum -= xs[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub variant: Variant,
    /// Final-window mean reward of each seed.
    pub per_seed: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// One row per variant (in `Variant::ALL` order) over the runs given.
pub fn summarize(runs: &[(Variant, Metrics)]) -> Vec<SummaryRow> {
    Variant::ALL
        .iter()
        .filter_map(|&v| {
            let per_seed: Vec<f64> = runs
                .iter()
                .filter(|(rv, _)| *rv == v)
                .map(|(_, m)| m.tail_mean_reward(FINAL_WINDOW))
                .collect();
            if per_seed.is_empty() {
                return None;
            }
            let (mean, std) = mean_std(&per_seed);
            Some(SummaryRow {
                variant: v,
                per_seed,
                mean,
                std,
            })
        })
        .collect()
}

pub const SUMMARY_HEADER: &str = "variant,mean,std,seeds";

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.variant,
            r.mean,
            r.std,
            r.per_seed.len()
        );
    }
    out
}

pub fn summary_table(world: WorldId, rows: &[SummaryRow]) -> String {
    let mut out = format!("{world}: mean final-{FINAL_WINDOW} reward\n");
    for r in rows {
        let _ = writeln!(
            out,
            "  {:<9} {:>10.2} +- {:<9.2} ({} seeds)",
            r.variant.tag(),
            r.mean,
            r.std,
            r.per_seed.len()
        );
    }
    out
}

/// Smoothed mean curve of one variant with its across-seed spread.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub variant: Variant,
    pub seeds: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Smooths each seed's reward series, then takes per-episode mean and
/// std across seeds. Series are cut to the shortest run.
pub fn curve(variant: Variant, runs: &[&Metrics], window: usize) -> Curve {
    let len = runs.iter().map(|m| m.len()).min().unwrap_or(0);
    let smoothed: Vec<Vec<f64>> = runs
        .iter()
        .map(|m| {
            let r: Vec<f64> = m.episodes[..len].iter().map(|e| e.ext_reward).collect();
            moving_average(&r, window)
        })
        .collect();
    let (mut mean, mut std) = (Vec::with_capacity(len), Vec::with_capacity(len));
    let mut column = Vec::with_capacity(runs.len());
    for i in 0..len {
        column.clear();
        column.extend(smoothed.iter().map(|s| s[i]));
        let (m, s) = mean_std(&column);
        mean.push(m);
        std.push(s);
    }
    Curve {
        variant,
        seeds: runs.len(),
        mean,
        std,
    }
}

pub const CURVE_HEADER: &str = "episode,variant,mean,std,seeds";

pub fn curves_csv(curves: &[Curve]) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for c in curves {
        for (i, (m, s)) in c.mean.iter().zip(&c.std).enumerate() {
            let _ = writeln!(out, "{},{},{m},{s},{}", i + 1, c.variant, c.seeds);
        }
    }
    out
}

const COLORS: [&str; 4] = ["#1f77b4", "#2ca02c", "#ff7f0e", "#d62728"];

fn color(v: Variant) -> &'static str {
    COLORS[Variant::ALL.iter().position(|&x| x == v).unwrap_or(0)]
}

/// Line chart with a ±1 std band per curve.
pub fn render_svg(title: &str, curves: &[Curve]) -> String {
    let (w, h) = (800.0, 480.0);
    let (left, right, top, bottom) = (70.0, 150.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let n = curves
        .iter()
        .map(|c| c.mean.len())
        .max()
        .unwrap_or(0)
        .max(2);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in curves {
        for (m, s) in c.mean.iter().zip(&c.std) {
            lo = lo.min(m - s);
            hi = hi.max(m + s);
        }
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        (lo, hi) = (lo - 1.0, hi + 1.0);
    }
    let x = |i: usize| left + pw * i as f64 / (n - 1) as f64;
    let y = |v: f64| top + ph * (hi - v) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.0}</text>"#,
            left - 6.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{left}" y="{}" text-anchor="start">1</text><text x="{}" y="{}" text-anchor="end">{n}</text>"#,
        top + ph + 18.0,
        left + pw,
        top + ph + 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">episode</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    for (k, c) in curves.iter().enumerate() {
        let col = color(c.variant);
        let mut band = String::new();
        for (i, (m, sd)) in c.mean.iter().zip(&c.std).enumerate() {
            let _ = write!(band, "{:.2},{:.2} ", x(i), y(m + sd));
        }
        for (i, (m, sd)) in c.mean.iter().zip(&c.std).enumerate().rev() {
            let _ = write!(band, "{:.2},{:.2} ", x(i), y(m - sd));
        }
        let line: String = c
            .mean
            .iter()
            .enumerate()
            .map(|(i, m)| format!("{:.2},{:.2}", x(i), y(*m)))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(
            s,
            r#"<g data-variant="{}"><polygon points="{}" fill="{col}" fill-opacity="0.2" stroke="none"/><polyline points="{line}" fill="none" stroke="{col}" stroke-width="1.5"/></g>"#,
            c.variant,
            band.trim_end()
        );
        let ly = top + 16.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{col}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
            left + pw + 12.0,
            left + pw + 32.0,
            left + pw + 38.0,
            ly + 4.0,
            c.variant
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Every `metrics.csv` below `dir`, in path order.
pub fn find_metrics(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let entries = std::fs::read_dir(&d).map_err(|e| LabError::io(&d, e))?;
        for entry in entries {
            let path = entry.map_err(|e| LabError::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == "metrics.csv") {
                found.push(path);
            }
        }
    }
    found.sort();
    Ok(found)
}

/// Loads every run below `dir`, grouped by world. World and variant are
/// read from the records themselves.
pub fn load_runs(dir: &Path) -> Result<BTreeMap<WorldId, Vec<(Variant, Metrics)>>> {
    let mut grouped: BTreeMap<WorldId, Vec<(Variant, Metrics)>> = BTreeMap::new();
    for path in find_metrics(dir)? {
        let m = Metrics::load_csv(&path)?;
        let Some(first) = m.episodes.first() else {
            continue;
        };
        let (world, variant) = (first.world, first.variant);
        grouped.entry(world).or_default().push((variant, m));
    }
    Ok(grouped)
}

/// Writes `<world>_curves.csv` and `<world>_curves.svg` per world into
/// `out` and returns the paths written.
pub fn plot_dir(metrics_dir: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let grouped = load_runs(metrics_dir)?;
    if grouped.is_empty() {
        return Err(LabError::Invalid(format!(
            "no metrics.csv files found under {}",
            metrics_dir.display()
        )));
    }
    std::fs::create_dir_all(out).map_err(|e| LabError::io(out, e))?;
    let mut written = Vec::new();
    for (world, runs) in grouped {
        let curves: Vec<Curve> = Variant::ALL
            .iter()
            .filter_map(|&v| {
                let ms: Vec<&Metrics> = runs
                    .iter()
                    .filter(|(rv, _)| *rv == v)
                    .map(|(_, m)| m)
                    .collect();
                (!ms.is_empty()).then(|| curve(v, &ms, SMOOTHING))
            })
            .collect();
        let csv = out.join(format!("{world}_curves.csv"));
        let svg = out.join(format!("{world}_curves.svg"));
        std::fs::write(&csv, curves_csv(&curves)).map_err(|e| LabError::io(&csv, e))?;
        let title = format!("{world}: reward ({SMOOTHING}-episode moving average, mean +- std)");
        std::fs::write(&svg, render_svg(&title, &curves)).map_err(|e| LabError::io(&svg, e))?;
        written.push(csv);
        written.push(svg);
    }
    Ok(written)
}

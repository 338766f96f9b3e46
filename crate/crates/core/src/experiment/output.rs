use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ScanKind;
use super::stats::{epochs_to_threshold, final_success, CurveAggregate};
use super::sweep::{Condition, ScanPoint};
use super::trial::ExperimentResult;
use crate::error::{Error, Result};
use crate::hac::Algorithm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub trial: usize,
    pub seed: u64,
    pub epoch: usize,
    pub success_rate: f64,
    pub env_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub epoch: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub env_steps: u64,
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Raw rows (completed trials, ordered by trial then epoch) and the aggregate curve.
pub fn emit_csv(result: &ExperimentResult, raw_path: &Path, aggregate_path: &Path) -> Result<()> {
    let raw = result.completed().flat_map(|t| {
        t.success_rates
            .iter()
            .zip(&t.env_steps)
            .enumerate()
            .map(move |(e, (&success_rate, &env_steps))| RawRow {
                trial: t.trial,
                seed: t.seed,
                epoch: e + 1,
                success_rate,
                env_steps,
            })
    });
    write_rows(raw_path, raw)?;
    let agg = result.aggregate.epochs.iter().map(|e| AggregateRow {
        epoch: e.epoch,
        median: e.median,
        q25: e.q25,
        q75: e.q75,
        env_steps: e.env_steps,
    });
    write_rows(aggregate_path, agg)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Standalone SVG: median line with shaded quartile band per condition.
pub fn emit_plot(curves: &[(String, &CurveAggregate)], path: &Path) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::Empty("nothing to plot"));
    }
    let (w, h) = (720.0, 420.0);
    let (left, right, top, bottom) = (60.0, 200.0, 20.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let max_epoch = curves.iter().map(|(_, c)| c.len()).max().unwrap_or(1).max(2) as f64;
    let x = |epoch: usize| left + pw * (epoch as f64 - 1.0) / (max_epoch - 1.0);
    let y = |v: f64| top + ph * (1.0 - v.clamp(0.0, 1.0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<g class="axes" stroke="black"><line x1="{left}" y1="{}" x2="{}" y2="{}"/><line x1="{left}" y1="{top}" x2="{left}" y2="{}"/></g>"#,
        top + ph,
        left + pw,
        top + ph,
        top + ph
    );
    for v in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{v}</text>"#,
            left - 6.0,
            y(v) + 4.0
        );
    }
    let step = ((max_epoch as usize) / 6).max(1);
    for e in (1..=max_epoch as usize).step_by(step) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{e}</text>"#,
            x(e),
            top + ph + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">epoch</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">success rate</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );

    for (i, (name, curve)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper = curve.epochs.iter().map(|e| format!("{:.2},{:.2}", x(e.epoch), y(e.q75)));
        let lower = curve.epochs.iter().rev().map(|e| format!("{:.2},{:.2}", x(e.epoch), y(e.q25)));
        let band: Vec<String> = upper.chain(lower).collect();
        let line: Vec<String> = curve
            .epochs
            .iter()
            .map(|e| format!("{:.2},{:.2}", x(e.epoch), y(e.median)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<polyline class="median" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = top + 10.0 + 18.0 * i as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<g class="legend-entry"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Writes `<stem>_raw.csv`, `<stem>_aggregate.csv`, `<stem>.svg` and
/// `<stem>.toml` into `dir`, returning the paths.
pub fn write_experiment(result: &ExperimentResult, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let raw = dir.join(format!("{stem}_raw.csv"));
    let agg = dir.join(format!("{stem}_aggregate.csv"));
    let svg = dir.join(format!("{stem}.svg"));
    let toml = dir.join(format!("{stem}.toml"));
    emit_csv(result, &raw, &agg)?;
    emit_plot(&[(result.config.label(), &result.aggregate)], &svg)?;
    result.config.save(&toml)?;
    Ok(vec![raw, agg, svg, toml])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub value: f64,
    pub final_median: f64,
    /// Empty when the median never reaches 0.8.
    pub epochs_to_0_8: Option<f64>,
}

fn summary(label: String, value: f64, r: &ExperimentResult) -> SummaryRow {
    SummaryRow {
        label,
        value,
        final_median: final_success(&r.aggregate),
        epochs_to_0_8: epochs_to_threshold(&r.aggregate.medians(), 0.8),
    }
}

/// Per-point files plus `scan_summary.csv` and `scan.svg`.
pub fn write_scan(points: &[ScanPoint], kind: &ScanKind, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (i, p) in points.iter().enumerate() {
        paths.extend(write_experiment(&p.result, dir, &format!("scan_{i:02}"))?);
        let label = format!("{}={:.4}", kind.parameter_name(), p.value);
        rows.push(summary(label.clone(), p.value, &p.result));
        curves.push((label, &p.result.aggregate));
    }
    let table = dir.join("scan_summary.csv");
    write_rows(&table, rows)?;
    let svg = dir.join("scan.svg");
    emit_plot(&curves, &svg)?;
    paths.extend([table, svg]);
    Ok(paths)
}

/// Per-condition files plus `compare_summary.csv` and one plot per algorithm.
pub fn write_compare(results: &[(Algorithm, Condition, ExperimentResult)], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    let mut rows = Vec::new();
    for (alg, cond, r) in results {
        paths.extend(write_experiment(r, dir, &format!("{}_{}", alg.name(), cond.id))?);
        rows.push(summary(format!("{}/{}", alg.name(), cond.id), 0.0, r));
    }
    let table = dir.join("compare_summary.csv");
    write_rows(&table, rows)?;
    paths.push(table);
    for alg in [Algorithm::Her, Algorithm::Hac] {
        let curves: Vec<(String, &CurveAggregate)> = results
            .iter()
            .filter(|(a, _, _)| *a == alg)
            .map(|(_, c, r)| (c.legend.clone(), &r.aggregate))
            .collect();
        if !curves.is_empty() {
            let svg = dir.join(format!("compare_{}.svg", alg.name()));
            emit_plot(&curves, &svg)?;
            paths.push(svg);
        }
    }
    Ok(paths)
}

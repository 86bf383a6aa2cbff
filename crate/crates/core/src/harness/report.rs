use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Regime, RiskReport, Summary};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "world_id,estimator,n,rep,seed,epsilon,n_cells,excess_risk,fit_wall_ms";

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

/// Write `rows.csv`, `summary.json` and optionally `rates.svg` into `dir`.
pub fn write_outputs(report: &RiskReport, dir: &Path, svg: bool) -> Result<()> {
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(dir.join("rows.csv"), report.csv()).map_err(io)?;
    let summary = serde_json::to_string_pretty(&report.summary)
        .map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join("summary.json"), summary + "\n").map_err(io)?;
    if svg {
        fs::write(dir.join("rates.svg"), render_svg(&report.summary)).map_err(io)?;
    }
    Ok(())
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    let text = fs::read_to_string(dir.join("summary.json")).map_err(io)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("summary.json: {e}")))
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Log-log scatter of mean excess risk against `n` with the fitted lines.
pub fn render_svg(summary: &Summary) -> String {
    let (w, h, pad) = (640.0, 420.0, 60.0);
    let pts: Vec<(f64, f64)> = summary
        .estimators
        .iter()
        .flat_map(|e| e.points.iter())
        .filter(|p| p.mean_excess > 0.0)
        .map(|p| ((p.n as f64).log10(), p.mean_excess.log10()))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle">{}: mean excess risk vs n (log-log)</text>"#,
        w / 2.0,
        summary.world_id
    );
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let bounds = |sel: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(sel).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(sel).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let _ = writeln!(
        svg,
        r#"<path d="M{pad},{} H{} M{pad},{} V{pad}" stroke="black" fill="none"/>"#,
        h - pad,
        w - pad,
        h - pad
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">log10 n  [{x0:.2}, {x1:.2}]</text>"#,
        w / 2.0,
        h - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">log10 excess  [{y0:.2}, {y1:.2}]</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (i, e) in summary.estimators.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mine: Vec<(f64, f64)> = e
            .points
            .iter()
            .filter(|p| p.mean_excess > 0.0)
            .map(|p| ((p.n as f64).log10(), p.mean_excess.log10()))
            .collect();
        for (x, y) in &mine {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#,
                sx(*x),
                sy(*y)
            );
        }
        if let (Some(slope), Some(first), Some(last)) = (e.slope, mine.first(), mine.last()) {
            let m = mine.len() as f64;
            let (mx, my) = (
                mine.iter().map(|p| p.0).sum::<f64>() / m,
                mine.iter().map(|p| p.1).sum::<f64>() / m,
            );
            let line = |x: f64| my + slope * (x - mx);
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}"/>"#,
                sx(first.0),
                sy(line(first.0)),
                sx(last.0),
                sy(line(last.0))
            );
        }
        let label = match e.slope {
            Some(s) => format!("{} (slope {s:.3})", e.estimator),
            None => e.estimator.clone(),
        };
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{label}</text>"#,
            w - pad - 170.0,
            pad + 16.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub regime: String,
    pub estimator: String,
    pub target: f64,
    pub measured: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Table1 {
    pub rows: Vec<Table1Row>,
}

const COLUMNS: [(&str, &str); 3] = [
    ("aol", "Aggregation-of-leaders"),
    ("skeleton", "Skeleton aggregation"),
    ("erm", "ERM"),
];

/// Rate exponents for (aggregation of leaders, skeleton, ERM).
fn targets(regime: Regime) -> (String, [f64; 3]) {
    match regime {
        Regime::Finite => ("finite".into(), [-1.0, -1.0, -0.5]),
        Regime::Vc => ("vc".into(), [-1.0, -0.5, -0.5]),
        Regime::Poly { p } if p < 2.0 => (
            format!("poly p={p}"),
            [-2.0 / (2.0 + p), (-1.0 / (p + 1.0)).max(-0.5), -0.5],
        ),
        Regime::Poly { p } => (format!("poly p={p}"), [-1.0 / p, -1.0 / (p + 1.0), -1.0 / p]),
    }
}

/// Measured slopes next to the known rate exponents, one row per
/// (regime, estimator kind); summaries without a regime are skipped.
pub fn table1_report(summaries: &[Summary]) -> Table1 {
    let mut rows = Vec::new();
    for s in summaries {
        let Some(regime) = s.regime else { continue };
        let (label, exps) = targets(regime);
        for ((kind, _), target) in COLUMNS.iter().zip(exps) {
            let measured = s
                .estimators
                .iter()
                .find(|e| e.kind == *kind)
                .and_then(|e| e.slope);
            rows.push(Table1Row {
                regime: label.clone(),
                estimator: kind.to_string(),
                target,
                measured,
            });
        }
    }
    Table1 { rows }
}

impl Table1 {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<16} | {:<24} | {:<24} | {:<24}\n",
            "regime", COLUMNS[0].1, COLUMNS[1].1, COLUMNS[2].1
        );
        let mut regimes: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !regimes.contains(&r.regime.as_str()) {
                regimes.push(&r.regime);
            }
        }
        for regime in regimes {
            let cells: Vec<String> = COLUMNS
                .iter()
                .map(|(kind, _)| {
                    match self
                        .rows
                        .iter()
                        .find(|r| r.regime == regime && r.estimator == *kind)
                    {
                        Some(Table1Row {
                            measured: Some(m),
                            target,
                            ..
                        }) => format!("{m:.3} (target {target:.3})"),
                        Some(r) => format!("— (target {:.3})", r.target),
                        None => "—".to_string(),
                    }
                })
                .collect();
            let _ = writeln!(
                out,
                "{:<16} | {:<24} | {:<24} | {:<24}",
                regime, cells[0], cells[1], cells[2]
            );
        }
        out
    }
}

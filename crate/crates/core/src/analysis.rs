//! Correlation between per-scene image metrics and detection agreement, gap
//! tables, and SVG scatter plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::det_eval::gap_percent;
use crate::error::{Error, Result};

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} values", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::Degenerate(format!("correlation needs 3 points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("correlation input is not finite".into()));
    }
    Ok(())
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of average-tie ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub metric_name: String,
    /// Fine-tuning variant the points belong to; `None` when pooled.
    pub group: Option<String>,
    pub pearson_r: f64,
    pub spearman_rho: f64,
    pub n_scenes: usize,
    /// `(metric value, DA)` per scene.
    pub points: Vec<(f64, f64)>,
}

pub fn correlate(metric_name: &str, group: Option<&str>, points: &[(f64, f64)]) -> Result<CorrelationResult> {
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    Ok(CorrelationResult {
        metric_name: metric_name.to_string(),
        group: group.map(str::to_string),
        pearson_r: pearson(&x, &y)?,
        spearman_rho: spearman(&x, &y)?,
        n_scenes: points.len(),
        points: points.to_vec(),
    })
}

/// Evaluation results of one fine-tuning method, one value per table column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResults {
    pub method: String,
    pub real: Vec<Option<f64>>,
    pub sim: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapTable {
    pub columns: Vec<String>,
    pub baseline: String,
    pub rows: Vec<GapRows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRows {
    pub method: String,
    pub real: Vec<Option<f64>>,
    pub sim: Vec<Option<f64>>,
    pub gap: Vec<Option<f64>>,
}

/// Builds Real / Sim / Gap (%) rows. Every gap is measured against the real
/// row of the baseline method, which defaults to the first entry.
pub fn gap_table(columns: &[String], methods: &[MethodResults], baseline: Option<&str>) -> Result<GapTable> {
    let base = match baseline {
        Some(name) => methods
            .iter()
            .find(|m| m.method == name)
            .ok_or_else(|| Error::MissingBaseline(name.to_string()))?,
        None => methods.first().ok_or_else(|| Error::MissingBaseline("<first method>".into()))?,
    };
    for m in methods {
        if m.real.len() != columns.len() || m.sim.len() != columns.len() {
            return Err(Error::ShapeMismatch(format!(
                "method {} has {}/{} values for {} columns",
                m.method,
                m.real.len(),
                m.sim.len(),
                columns.len()
            )));
        }
    }
    let rows = methods
        .iter()
        .map(|m| {
            let gap = base
                .real
                .iter()
                .zip(&m.sim)
                .map(|(r, s)| match (r, s) {
                    (Some(r), Some(s)) => gap_percent(*r, *s).map(Some),
                    _ => Ok(None),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(GapRows {
                method: m.method.clone(),
                real: m.real.clone(),
                sim: m.sim.clone(),
                gap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GapTable {
        columns: columns.to_vec(),
        baseline: base.method.clone(),
        rows,
    })
}

const ROW_LABELS: [&str; 3] = ["Real", "Sim", "Gap (%)"];

impl GapRows {
    fn labelled(&self) -> [(&'static str, &[Option<f64>]); 3] {
        [(ROW_LABELS[0], &self.real), (ROW_LABELS[1], &self.sim), (ROW_LABELS[2], &self.gap)]
    }
}

impl GapTable {
    /// One decimal, `-` for missing values.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "| Method | Data | {} |", self.columns.join(" | "));
        let _ = writeln!(out, "|---|---|{}", "---|".repeat(self.columns.len()));
        for row in &self.rows {
            for (label, values) in row.labelled() {
                let cells: Vec<String> = values
                    .iter()
                    .map(|v| v.map_or_else(|| "-".to_string(), |v| format!("{v:.1}")))
                    .collect();
                let _ = writeln!(out, "| {} | {label} | {} |", row.method, cells.join(" | "));
            }
        }
        out
    }

    /// Full-precision values, empty cells for missing ones.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["method".to_string(), "data".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            for (label, values) in row.labelled() {
                let mut rec = vec![row.method.clone(), label.to_string()];
                rec.extend(values.iter().map(|v| v.map_or_else(String::new, |v| v.to_string())));
                w.write_record(&rec).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub group: String,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

pub const SVG_WIDTH: f64 = 640.0;
pub const SVG_HEIGHT: f64 = 480.0;
/// Plot area inside the document, as `(left, top, right, bottom)`.
pub const PLOT_AREA: (f64, f64, f64, f64) = (70.0, 20.0, 500.0, 420.0);

fn axis_extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let pad = if span > 0.0 { 0.05 * span } else { lo.abs().max(1.0) * 0.05 };
    (lo - pad, hi + pad)
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Self-contained SVG scatter plot. Groups are colored in sorted order and
/// listed in a legend; point markers are the only `circle` elements.
pub fn scatter_svg(points: &[ScatterPoint], x_label: &str, y_label: &str) -> Result<String> {
    if points.is_empty() {
        return Err(Error::EmptyInput("scatter plot needs at least one point".into()));
    }
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::Domain("scatter point is not finite".into()));
    }
    let (x0, x1) = axis_extent(points.iter().map(|p| p.x));
    let (y0, y1) = axis_extent(points.iter().map(|p| p.y));
    let (left, top, right, bottom) = PLOT_AREA;
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
    let py = |y: f64| bottom - (y - y0) / (y1 - y0) * (bottom - top);

    let groups: BTreeMap<&str, &str> = {
        let mut names: Vec<&str> = points.iter().map(|p| p.group.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        names.into_iter().enumerate().map(|(i, g)| (g, PALETTE[i % PALETTE.len()])).collect()
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect class="plot-area" x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x0 + t * (x1 - x0);
        let yv = y0 + t * (y1 - y0);
        let (tx, ty) = (px(xv), py(yv));
        let _ = writeln!(s, r#"<line x1="{tx:.2}" y1="{bottom}" x2="{tx:.2}" y2="{}" stroke="black"/>"#, bottom + 5.0);
        let _ = writeln!(s, r#"<text x="{tx:.2}" y="{}" text-anchor="middle">{}</text>"#, bottom + 18.0, fmt_num(xv));
        let _ = writeln!(s, r#"<line x1="{}" y1="{ty:.2}" x2="{left}" y2="{ty:.2}" stroke="black"/>"#, left - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, left - 8.0, ty + 4.0, fmt_num(yv));
    }
    let _ = writeln!(
        s,
        r#"<text class="x-label" x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        SVG_HEIGHT - 15.0,
        escape(x_label)
    );
    let (lx, ly) = (18.0, (top + bottom) / 2.0);
    let _ = writeln!(
        s,
        r#"<text class="y-label" x="{lx}" y="{ly}" text-anchor="middle" transform="rotate(-90 {lx} {ly})">{}</text>"#,
        escape(y_label)
    );
    for p in points {
        let _ = writeln!(
            s,
            r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="4" fill="{}"><title>{}</title></circle>"#,
            px(p.x),
            py(p.y),
            groups[p.group.as_str()],
            escape(&p.group)
        );
    }
    for (i, (name, color)) in groups.iter().enumerate() {
        let y = top + 10.0 + 18.0 * i as f64;
        let _ = writeln!(s, r#"<rect class="legend" x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, right + 15.0, y - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, right + 30.0, y + 4.0, escape(name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

//! CSV and plain-text reports.

use std::fmt::Write as _;

use hdmap_core::eval::MapScore;
use hdmap_core::refine::StepRecord;
use hdmap_core::ElementCategory;

use crate::error::Result;

pub const TRAJECTORY_HEADER: [&str; 8] = ["step", "layer", "vertex", "edge_point", "edge_slope", "edge_angle", "cls", "total"];

/// Per-step loss trajectory as CSV.
pub fn trajectory_csv(records: &[StepRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRAJECTORY_HEADER)?;
    for r in records {
        w.write_record([
            r.step.to_string(),
            r.layer.to_string(),
            r.vertex.to_string(),
            r.edge_point.to_string(),
            r.edge_slope.to_string(),
            r.edge_angle.to_string(),
            r.cls.to_string(),
            r.total.to_string(),
        ])?;
    }
    Ok(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.4}"))
}

/// Rows of the AP table: one per threshold plus the mean over thresholds.
/// Columns are the per-category APs and their mean over categories present
/// in the ground truth.
fn table_rows(score: &MapScore) -> Vec<(String, Vec<Option<f64>>)> {
    let mut rows = Vec::new();
    for &t in &score.thresholds {
        let aps: Vec<Option<f64>> = ElementCategory::REAL.iter().map(|&c| score.ap(c, t)).collect();
        let present: Vec<f64> = aps.iter().flatten().copied().collect();
        let mean = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
        let mut row = aps;
        row.push(mean);
        rows.push((format!("{t}"), row));
    }
    let mut mean_row: Vec<Option<f64>> =
        ElementCategory::REAL.iter().map(|&c| score.category(c).and_then(|s| s.mean_ap)).collect();
    mean_row.push((score.excluded.len() < ElementCategory::REAL.len()).then_some(score.map));
    rows.push(("mean".to_string(), mean_row));
    rows
}

fn columns() -> Vec<String> {
    let mut c = vec!["threshold".to_string()];
    c.extend(ElementCategory::REAL.iter().map(|k| format!("ap_{}", k.name())));
    c.push("map".to_string());
    c
}

pub fn ap_table_csv(score: &MapScore) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns())?;
    for (label, row) in table_rows(score) {
        let mut rec = vec![label];
        rec.extend(row.into_iter().map(cell));
        w.write_record(rec)?;
    }
    Ok(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?)
}

/// The AP table with aligned columns; missing categories show as `n/a`.
pub fn ap_table_text(score: &MapScore) -> String {
    let header = columns();
    let rows: Vec<Vec<String>> = table_rows(score)
        .into_iter()
        .map(|(label, row)| {
            let mut r = vec![label];
            r.extend(row.into_iter().map(|v| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))));
            r
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| rows.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  "));
    };
    line(&header);
    for r in &rows {
        line(r);
    }
    out
}

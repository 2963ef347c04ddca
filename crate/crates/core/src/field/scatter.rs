//! Paired comparison of one quantity of interest between two result files.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

use super::fmt_f64;
use super::io::CsvOut;

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterSummary {
    pub points: usize,
    /// Points with `|a - b| <= band |b|`.
    pub within_band: usize,
    pub band: f64,
    pub max_relative_difference: f64,
}

impl ScatterSummary {
    pub fn percent_within(&self) -> f64 {
        100.0 * self.within_band as f64 / self.points.max(1) as f64
    }
}

/// `|a - b| / |b|`, zero when both vanish.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn read_column(path: &Path, column: &str) -> Result<Vec<(String, Option<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Input(format!("{}: {other:?}", path.display())),
        })?;
    let headers = rdr.headers()?.clone();
    let pos = |name: &str| headers.iter().position(|h| h == name);
    let id = pos("id").ok_or_else(|| Error::Input(format!("{}: no `id` column", path.display())))?;
    let col = pos(column).ok_or_else(|| Error::Input(format!("{}: no `{column}` column", path.display())))?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let text = row.get(col).unwrap_or("");
        // failed points are written with empty cells
        let value = if text.is_empty() {
            None
        } else {
            Some(
                text.parse::<f64>()
                    .map_err(|_| Error::Input(format!("{} line {line}: `{text}` is not a number", path.display())))?,
            )
        };
        out.push((row.get(id).unwrap_or("").to_string(), value));
    }
    Ok(out)
}

/// Writes `id,a,b,relative_difference` rows in the order of `a`, followed by
/// a `#` summary line with the share of points inside `band`.
pub fn emit_scatter(
    a_path: impl AsRef<Path>,
    b_path: impl AsRef<Path>,
    column: &str,
    band: f64,
    out_path: impl AsRef<Path>,
) -> Result<ScatterSummary> {
    if !(band >= 0.0) {
        return Err(Error::Input(format!("band must be >= 0, got {band}")));
    }
    let a = read_column(a_path.as_ref(), column)?;
    let b = read_column(b_path.as_ref(), column)?;
    let b_map: HashMap<&str, Option<f64>> = b.iter().map(|(id, v)| (id.as_str(), *v)).collect();
    let a_ids: std::collections::HashSet<&str> = a.iter().map(|(id, _)| id.as_str()).collect();
    let mut missing: Vec<String> = a
        .iter()
        .filter(|(id, _)| !b_map.contains_key(id.as_str()))
        .map(|(id, _)| format!("{id} (only in first)"))
        .collect();
    missing.extend(
        b.iter()
            .filter(|(id, _)| !a_ids.contains(id.as_str()))
            .map(|(id, _)| format!("{id} (only in second)")),
    );
    if !missing.is_empty() {
        return Err(Error::Input(format!("id sets differ: {}", missing.join(", "))));
    }

    let mut w = CsvOut::create(out_path.as_ref())?;
    w.row(["id", "a", "b", "relative_difference"])?;
    let mut summary = ScatterSummary {
        points: 0,
        within_band: 0,
        band,
        max_relative_difference: 0.0,
    };
    for (id, va) in &a {
        let (Some(va), Some(vb)) = (*va, b_map[id.as_str()]) else {
            continue;
        };
        let rel = relative_difference(va, vb);
        summary.points += 1;
        if rel <= band {
            summary.within_band += 1;
        }
        summary.max_relative_difference = summary.max_relative_difference.max(rel);
        w.row([id.clone(), fmt_f64(va), fmt_f64(vb), fmt_f64(rel)])?;
    }
    w.raw_line(&format!(
        "# within +-{}%: {:.2}% ({} of {})",
        100.0 * band,
        summary.percent_within(),
        summary.within_band,
        summary.points
    ))?;
    w.finish()?;
    Ok(summary)
}

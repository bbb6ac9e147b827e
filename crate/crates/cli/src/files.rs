use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use lwr_core::tns;

/// Reads a `.tns` tensor or a text matrix (rows on lines, values split by
/// commas or whitespace). Text with a single row or column is 1-D.
pub fn read_values(path: &Path) -> Result<(Vec<usize>, Vec<f64>)> {
    if path.extension().is_some_and(|e| e == "tns") {
        return Ok(tns::read(path)?);
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| format!("{}:{}: not a number list", path.display(), k + 1))?;
        rows.push(row);
    }
    let Some(cols) = rows.first().map(Vec::len) else {
        bail!("{} holds no values", path.display());
    };
    if rows.iter().any(|r| r.len() != cols) {
        bail!("{}: rows have different lengths", path.display());
    }
    let dims = if rows.len() == 1 || cols == 1 { vec![rows.len() * cols] } else { vec![rows.len(), cols] };
    Ok((dims, rows.into_iter().flatten().collect()))
}

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Blue (low) → white → red (high).
fn color(v: f64, lo: f64, hi: f64) -> [u8; 3] {
    let t = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
    let (r, g, b) = if t < 0.5 {
        let s = t * 2.0;
        (s, s, 1.0)
    } else {
        let s = (1.0 - t) * 2.0;
        (1.0, s, s)
    };
    [(r * 255.0).round() as u8, (g * 255.0).round() as u8, (b * 255.0).round() as u8]
}

fn ppm_bytes(values: &[f64], m: usize, n: usize, lo: f64, hi: f64) -> Vec<u8> {
    // Image rows are time steps (top = t = 0) and columns are cells.
    let mut out = format!("P6\n{m} {n}\n255\n").into_bytes();
    for j in 0..n {
        for i in 0..m {
            let v = values[i * n + j];
            out.extend_from_slice(&if v.is_finite() { color(v, lo, hi) } else { [0, 0, 0] });
        }
    }
    out
}

/// Writes an `m×n` row-major field (row = cell) as a binary PPM.
pub fn write_ppm(path: &Path, values: &[f64], m: usize, n: usize, lo: f64, hi: f64) -> Result<()> {
    if values.len() != m * n {
        return Err(Error::shape(format!("heatmap needs {m}×{n} values, got {}", values.len())));
    }
    fs::write(path, ppm_bytes(values, m, n, lo, hi)).map_err(|e| Error::io(path, e))
}

/// Prediction and target side by side, separated by a black column.
pub fn write_ppm_pair(path: &Path, pred: &[f64], target: &[f64], m: usize, n: usize, lo: f64, hi: f64) -> Result<()> {
    if pred.len() != m * n || target.len() != m * n {
        return Err(Error::shape("heatmap pair needs two m×n fields"));
    }
    let width = 2 * m + 1;
    let mut joined = vec![f64::NAN; width * n];
    for i in 0..m {
        for j in 0..n {
            joined[i * n + j] = pred[i * n + j];
            joined[(m + 1 + i) * n + j] = target[i * n + j];
        }
    }
    write_ppm(path, &joined, width, n, lo, hi)
}

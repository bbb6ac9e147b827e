use crate::error::{Error, Result};

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::shape(format!("metric inputs have {} and {} entries", a.len(), b.len())));
    }
    Ok(())
}

/// Mean absolute error in veh/km between normalised fields.
pub fn mae(pred: &[f64], target: &[f64], u_max: f64) -> Result<f64> {
    same_len(pred, target)?;
    let sum: f64 = pred.iter().zip(target).map(|(a, b)| (a - b).abs()).sum();
    Ok(u_max * sum / pred.len() as f64)
}

/// `‖pred − target‖₂ / ‖target‖₂`.
pub fn rel_l2(pred: &[f64], target: &[f64]) -> Result<f64> {
    same_len(pred, target)?;
    let norm: f64 = target.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("relative error undefined for a zero target".into()));
    }
    let diff: f64 = pred.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(diff / norm)
}

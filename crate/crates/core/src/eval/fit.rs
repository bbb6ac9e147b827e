use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise threshold for the standard protocol: largest trained β plus ½.
pub const DEFAULT_THRESHOLD: f64 = 2.5;

const EXPONENT_MAX: f64 = 3.0;
const GRID_STEP: f64 = 0.01;
const GOLDEN_ITERS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitForm {
    /// `k0 + k1·x^k2`
    Power,
    /// `k0 + k1·x + k2·(x − x0)^k3·[x > x0]`
    Piecewise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurveFit {
    pub form: FitForm,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub threshold: Option<f64>,
    pub sse: f64,
    pub points: usize,
}

impl ErrorCurveFit {
    pub fn eval(&self, x: f64) -> f64 {
        match self.form {
            FitForm::Power => self.k0 + self.k1 * x.powf(self.k2),
            FitForm::Piecewise => {
                let (x0, k3) = (self.threshold.unwrap_or(0.0), self.k3.unwrap_or(1.0));
                let tail = if x > x0 { self.k2 * (x - x0).powf(k3) } else { 0.0 };
                self.k0 + self.k1 * x + tail
            }
        }
    }

    /// Slope of the fitted curve (error increment per unit complexity).
    pub fn derivative(&self, x: f64) -> f64 {
        match self.form {
            FitForm::Power => self.k1 * self.k2 * x.powf(self.k2 - 1.0),
            FitForm::Piecewise => {
                let (x0, k3) = (self.threshold.unwrap_or(0.0), self.k3.unwrap_or(1.0));
                let tail = if x > x0 { self.k2 * k3 * (x - x0).powf(k3 - 1.0) } else { 0.0 };
                self.k1 + tail
            }
        }
    }

    pub fn formula(&self) -> String {
        match self.form {
            FitForm::Power => format!("{:.4} + {:.4}·x^{:.4}", self.k0, self.k1, self.k2),
            FitForm::Piecewise => format!(
                "{:.4} + {:.4}·x + {:.4}·(x − {:.2})^{:.4}·[x > {:.2}]",
                self.k0,
                self.k1,
                self.k2,
                self.threshold.unwrap_or(0.0),
                self.k3.unwrap_or(1.0),
                self.threshold.unwrap_or(0.0)
            ),
        }
    }

    /// True when the coefficients satisfy the family's constraints.
    pub fn within_bounds(&self) -> bool {
        let exp_ok = |k: f64| k > 0.0 && k <= EXPONENT_MAX;
        match self.form {
            FitForm::Power => self.k0 >= 0.0 && self.k1 >= 0.0 && exp_ok(self.k2),
            FitForm::Piecewise => self.k0 >= 0.0 && self.k1 >= 0.0 && self.k2 >= 0.0 && self.k3.is_some_and(exp_ok),
        }
    }
}

/// Non-negative least squares for `y ≈ a + b·s` with `a, b ≥ 0`.
fn affine_nonneg(s: &[f64], y: &[f64]) -> (f64, f64) {
    let n = s.len() as f64;
    let (ms, my) = (s.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = s.iter().map(|v| (v - ms) * (v - ms)).sum();
    let sxy: f64 = s.iter().zip(y).map(|(a, b)| (a - ms) * (b - my)).sum();
    let mut b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let mut a = my - b * ms;
    if b < 0.0 {
        b = 0.0;
        a = my;
    }
    if a < 0.0 {
        a = 0.0;
        b = scale_nonneg(s, y);
    }
    (a, b)
}

/// Least squares for `y ≈ b·s` with `b ≥ 0`.
fn scale_nonneg(s: &[f64], y: &[f64]) -> f64 {
    let ss: f64 = s.iter().map(|v| v * v).sum();
    if ss == 0.0 {
        return 0.0;
    }
    (s.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / ss).max(0.0)
}

/// Best `(value, exponent, coefficients)` over `exponent ∈ (0, 3]`: a 0.01
/// grid, then golden-section search within one grid step of the best node.
fn search_exponent<F>(sse_at: F) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let nodes = (EXPONENT_MAX / GRID_STEP).round() as usize;
    let mut best = (f64::INFINITY, GRID_STEP);
    for t in 1..=nodes {
        let k = t as f64 * GRID_STEP;
        let sse = sse_at(k);
        if sse < best.0 {
            best = (sse, k);
        }
    }
    let (mut lo, mut hi) = ((best.1 - GRID_STEP).max(1e-9), (best.1 + GRID_STEP).min(EXPONENT_MAX));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (sse_at(c), sse_at(d));
    for _ in 0..GOLDEN_ITERS {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = sse_at(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = sse_at(d);
        }
    }
    let k = 0.5 * (lo + hi);
    let sse = sse_at(k);
    if sse < best.0 { (sse, k) } else { best }
}

fn sorted(points: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if points.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite() || x < 0.0) {
        return Err(Error::InvalidArgument("fit points must be finite with x ≥ 0".into()));
    }
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(p)
}

fn sse_of(x: &[f64], y: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    x.iter().zip(y).map(|(&x, &y)| (y - f(x)).powi(2)).sum()
}

/// Constrained fit of `y = k0 + k1·x^k2` with `k0, k1 ≥ 0`, `0 < k2 ≤ 3`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<ErrorCurveFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!("power-law fit needs ≥ 3 points, got {}", points.len())));
    }
    let p = sorted(points)?;
    let (x, y): (Vec<f64>, Vec<f64>) = p.into_iter().unzip();
    let coeffs = |k2: f64| {
        let s: Vec<f64> = x.iter().map(|v| v.powf(k2)).collect();
        affine_nonneg(&s, &y)
    };
    let sse_at = |k2: f64| {
        let (k0, k1) = coeffs(k2);
        sse_of(&x, &y, |v| k0 + k1 * v.powf(k2))
    };
    let (sse, k2) = search_exponent(sse_at);
    let (k0, k1) = coeffs(k2);
    Ok(ErrorCurveFit { form: FitForm::Power, k0, k1, k2, k3: None, threshold: None, sse, points: x.len() })
}

/// Linear below `threshold`, plus `k2·(x − x0)^k3` fitted to the residuals above it.
pub fn fit_piecewise(points: &[(f64, f64)], threshold: f64) -> Result<ErrorCurveFit> {
    let p = sorted(points)?;
    let (below, above): (Vec<_>, Vec<_>) = p.iter().partition(|(x, _)| *x <= threshold);
    if below.is_empty() || above.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "piecewise fit needs points on both sides of x0 = {threshold} ({} below, {} above)",
            below.len(),
            above.len()
        )));
    }
    let (xb, yb): (Vec<f64>, Vec<f64>) = below.into_iter().unzip();
    let (k0, k1) = affine_nonneg(&xb, &yb);
    let (xa, ya): (Vec<f64>, Vec<f64>) = above.into_iter().unzip();
    let resid: Vec<f64> = xa.iter().zip(&ya).map(|(x, y)| y - (k0 + k1 * x)).collect();
    let scale_at = |k3: f64| {
        let s: Vec<f64> = xa.iter().map(|x| (x - threshold).powf(k3)).collect();
        scale_nonneg(&s, &resid)
    };
    let tail_sse = |k3: f64| {
        let k2 = scale_at(k3);
        sse_of(&xa, &resid, |x| k2 * (x - threshold).powf(k3))
    };
    let (_, mut k3) = search_exponent(tail_sse);
    let mut k2 = scale_at(k3);
    // A tail indistinguishable from rounding noise is no tail.
    let scale = resid.iter().chain(&ya).map(|v| v.abs()).fold(0.0, f64::max);
    if k2 * (xa[xa.len() - 1] - threshold).powf(k3) <= 1e-12 * scale.max(1.0) {
        k2 = 0.0;
        k3 = 1.0;
    }
    let mut fit = ErrorCurveFit {
        form: FitForm::Piecewise,
        k0,
        k1,
        k2,
        k3: Some(k3),
        threshold: Some(threshold),
        sse: 0.0,
        points: p.len(),
    };
    fit.sse = p.iter().map(|&(x, y)| (y - fit.eval(x)).powi(2)).sum();
    Ok(fit)
}

//! Dimension estimates for sampled curves: box counting, and the exponent
//! at which covering sums `sum |r_j|^p` stop growing or shrinking with `n`.

use std::collections::HashSet;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcmap::Curve;
use crate::thermo::{log_covering_sum, CoveringData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionMethod {
    BoxCount,
    CoveringExponent,
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionEstimate {
    /// Clamped to `[1, 2]`.
    pub value: f64,
    pub method: DimensionMethod,
    /// Box sides or interval lengths used in the fit.
    pub scales: Vec<f64>,
    /// Root mean square residual of the log-log fit.
    pub fit_residual: f64,
    /// Two standard errors of the fitted slope.
    pub half_width: f64,
}

/// Number of `eps`-boxes of the lattice `eps Z^2` containing a sample.
pub fn box_count(curve: &Curve, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("eps = {eps} must be positive")));
    }
    let gap = curve.max_gap();
    if gap > 0.5 * eps {
        return Err(Error::Undersampled {
            gap,
            limit: 0.5 * eps,
        });
    }
    let boxes: HashSet<(i64, i64)> = curve
        .points
        .iter()
        .map(|p| ((p.re / eps).floor() as i64, (p.im / eps).floor() as i64))
        .collect();
    Ok(boxes.len())
}

/// Least-squares fit `y = a + b x`; returns `(b, rms residual, standard error of b)`.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    let se = if x.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, (sse / n).sqrt(), se)
}

/// Slope of `log N(eps)` against `log(1/eps)`, discarding the two coarsest
/// scales; at least four scales must remain.
pub fn box_dimension(curve: &Curve, scales: &[f64]) -> Result<DimensionEstimate> {
    let mut eps = scales.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    if eps.len() < 6 {
        return Err(Error::InsufficientSamples(format!(
            "{} scales; need 6 (the two coarsest are discarded)",
            eps.len()
        )));
    }
    let used = eps[2..].to_vec();
    let counts = used
        .par_iter()
        .map(|e| box_count(curve, *e))
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = used.iter().map(|e| -e.ln()).collect();
    let y: Vec<f64> = counts.iter().map(|c| (*c as f64).ln()).collect();
    let (slope, fit_residual, se) = fit_line(&x, &y);
    Ok(DimensionEstimate {
        value: slope.clamp(1.0, 2.0),
        method: DimensionMethod::BoxCount,
        scales: used,
        fit_residual,
        half_width: 2.0 * se,
    })
}

/// `2^-lo ..= 2^-hi`.
pub fn dyadic_scales(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(-k)).collect()
}

/// Slope of `log sum_j |r_j(lambda)|^p` against `log n` over the ladder.
fn covering_slope(ladder: &[CoveringData], lambda: Complex64, p: f64) -> Result<(f64, f64, f64)> {
    let x: Vec<f64> = ladder.iter().map(|c| (c.n() as f64).ln()).collect();
    let y = ladder
        .iter()
        .map(|c| log_covering_sum(c, lambda, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(fit_line(&x, &y))
}

/// Exponent `p*` in `[1, 2]` at which `sum_j |r_j(lambda)|^p` neither grows
/// nor decays along the ladder of interval counts, by bisection on the
/// fitted log-log slope. The slope must decrease in `p`.
pub fn covering_exponent(ladder: &[CoveringData], lambda: Complex64) -> Result<DimensionEstimate> {
    if ladder.len() < 4 {
        return Err(Error::InsufficientSamples(format!(
            "{} ladder levels; need 4",
            ladder.len()
        )));
    }
    let slope = |p: f64| covering_slope(ladder, lambda, p).map(|s| s.0);
    let (mut lo, mut hi) = (1.0, 2.0);
    let (mut s_lo, s_hi) = (slope(lo)?, slope(hi)?);
    if s_lo < s_hi {
        return Err(Error::NonMonotone(format!(
            "slope {s_lo} at p = 1 below slope {s_hi} at p = 2"
        )));
    }
    let value = if s_lo <= 0.0 {
        1.0
    } else if s_hi >= 0.0 {
        2.0
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let s = slope(mid)?;
            if s > s_lo + 1e-12 {
                return Err(Error::NonMonotone(format!("slope increases near p = {mid}")));
            }
            if s > 0.0 {
                lo = mid;
                s_lo = s;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let (_, fit_residual, se) = covering_slope(ladder, lambda, value)?;
    // d slope / dp converts the slope uncertainty into one on p
    let dp = 1e-4;
    let ds = (slope((value - dp).max(0.5))? - slope(value + dp)?) / (2.0 * dp);
    Ok(DimensionEstimate {
        value,
        method: DimensionMethod::CoveringExponent,
        scales: ladder.iter().map(|c| 1.0 / c.n() as f64).collect(),
        fit_residual,
        half_width: if ds > 0.0 { 2.0 * se / ds } else { f64::INFINITY },
    })
}

/// Interval counts `2^5 ..= 2^12`.
pub fn default_ladder() -> Vec<usize> {
    (5..=12).map(|k| 1usize << k).collect()
}

/// `(1 + k, min(1 + 37 k^2, 2), 1 + k^2)`.
pub fn bounds_table(k: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::Precondition(format!("k = {k} outside [0, 1)")));
    }
    Ok((1.0 + k, (1.0 + 37.0 * k * k).min(2.0), 1.0 + k * k))
}

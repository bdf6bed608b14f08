//! Least-squares log-linear fitting for decay-rate extraction.

use crate::error::{Error, Result};
use serde::Serialize;

/// Slope/intercept of a log-linear fit over a window, with the rms residual
/// always reported.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub rms_residual: f64,
    pub points: usize,
}

/// Ordinary least squares y = intercept + slope * x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::FitInconclusive(format!(
            "need at least 2 matched points, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::FitInconclusive("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((slope, intercept, rms))
}

/// Log-linear fit of positive samples y(s) over the window [s_lo, s_hi].
/// Requires at least 10 in-window records.
pub fn rate_fit(s: &[f64], y: &[f64], s_lo: f64, s_hi: f64) -> Result<RateFit> {
    if s_lo >= s_hi {
        return Err(Error::FitInconclusive(format!("empty window [{s_lo}, {s_hi}]")));
    }
    let mut xs = vec![];
    let mut ys = vec![];
    for (&si, &yi) in s.iter().zip(y) {
        if si >= s_lo && si <= s_hi {
            if yi <= 0.0 || !yi.is_finite() {
                continue;
            }
            xs.push(si);
            ys.push(yi.ln());
        }
    }
    if xs.len() < 10 {
        return Err(Error::FitInconclusive(format!(
            "only {} usable records in window [{s_lo}, {s_hi}]",
            xs.len()
        )));
    }
    let (slope, intercept, rms_residual) = linear_fit(&xs, &ys)?;
    Ok(RateFit {
        slope,
        intercept,
        window: (s_lo, s_hi),
        rms_residual,
        points: xs.len(),
    })
}

/// Picks a fit window from a decaying diagnostic: starts once the companion
/// distance has dropped below `onset_frac` of its initial value, ends when the
/// diagnostic reaches `floor_mult` times the noise floor.
pub fn auto_window(
    s: &[f64],
    dist: &[f64],
    diag: &[f64],
    onset_frac: f64,
    noise_floor: f64,
    floor_mult: f64,
) -> Result<(f64, f64)> {
    let d0 = dist.first().copied().unwrap_or(0.0);
    let mut lo = None;
    let mut hi = None;
    for i in 0..s.len() {
        if lo.is_none() && dist[i] < onset_frac * d0 {
            lo = Some(s[i]);
        }
        if lo.is_some() && diag[i] <= floor_mult * noise_floor {
            hi = Some(s[i]);
            break;
        }
    }
    let lo = lo.ok_or_else(|| Error::FitInconclusive("transient never ended".into()))?;
    let hi = hi.unwrap_or_else(|| *s.last().unwrap());
    if hi <= lo {
        return Err(Error::FitInconclusive("window collapsed to the noise floor".into()));
    }
    Ok((lo, hi))
}

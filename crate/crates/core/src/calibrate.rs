//! Fit σ to championship odds by grid search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bracket::{compute_tournament, ComputeOptions, ScheduleDescriptor};
use crate::error::{Error, Result};
use crate::match_model::{build_matrices, KnockoutRule, ModelParams, TeamRating};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sigma: f64,
    /// Σ_i (win_i − target_i)².
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub sigma: f64,
    pub objective: f64,
    pub curve: Vec<CurvePoint>,
}

/// Squared distance between exact win probabilities at `sigma` and `target`.
pub fn objective(
    ratings: &[TeamRating],
    desc: &ScheduleDescriptor,
    rule: KnockoutRule,
    target: &[f64],
    sigma: f64,
) -> Result<f64> {
    let m = build_matrices(ratings, ModelParams::new(sigma)?, rule)?;
    let win = compute_tournament(&m, desc, ComputeOptions::default())?.win;
    Ok(win.iter().zip(target).map(|(w, t)| (w - t).powi(2)).sum())
}

/// Evaluate every grid point and return the minimiser (first on ties).
pub fn calibrate_sigma(
    ratings: &[TeamRating],
    desc: &ScheduleDescriptor,
    rule: KnockoutRule,
    target: &[f64],
    grid: &[f64],
) -> Result<Calibration> {
    if target.len() != ratings.len() {
        return Err(Error::Data(format!(
            "{} target probabilities for {} teams",
            target.len(),
            ratings.len()
        )));
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter("sigma grid is empty".into()));
    }
    let curve = grid
        .par_iter()
        .map(|&sigma| {
            Ok(CurvePoint {
                sigma,
                objective: objective(ratings, desc, rule, target, sigma)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = curve
        .iter()
        .fold(None::<CurvePoint>, |best, &p| match best {
            Some(b) if b.objective <= p.objective => Some(b),
            _ => Some(p),
        })
        .expect("grid not empty");
    Ok(Calibration {
        sigma: best.sigma,
        objective: best.objective,
        curve,
    })
}

/// Parse `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_sigma_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || {
        Error::InvalidParameter(format!(
            "bad sigma grid `{spec}` (use start:stop:step or a,b,c)"
        ))
    };
    let grid: Vec<f64> = if spec.contains(':') {
        let parts: Vec<f64> = spec
            .split(':')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| start + step * i as f64).collect()
    } else {
        spec.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if grid.is_empty() || grid.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(bad());
    }
    Ok(grid)
}

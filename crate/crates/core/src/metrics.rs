//! Step-response and position-error metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub reference: f64,
    /// Time from segment start to the first maximum, s.
    pub peak_time: f64,
    /// Largest excess over the reference, m/s; zero if never exceeded.
    pub overshoot: f64,
    /// Time of the last entry into the ±2% band; `None` if the segment ends outside it.
    pub settling_time: Option<f64>,
    /// Mean absolute error over the final 10% of the segment.
    pub steady_state_error: f64,
}

pub const SETTLING_BAND: f64 = 0.02;

/// Metrics of a response `v` sampled every `dt` against a constant reference.
pub fn step_metrics(v: &[f64], reference: f64, dt: f64) -> Result<StepMetrics> {
    if v.len() < 2 || !(dt > 0.0) {
        return Err(Error::Contract(
            "step metrics need at least two samples and dt > 0".into(),
        ));
    }
    if reference == 0.0 {
        return Err(Error::Contract("step metrics need a nonzero reference".into()));
    }
    let sign = reference.signum();
    let (peak_k, _) = v.iter().enumerate().fold((0, f64::NEG_INFINITY), |(bk, bv), (k, &x)| {
        if sign * x > bv {
            (k, sign * x)
        } else {
            (bk, bv)
        }
    });
    let overshoot = v.iter().map(|x| sign * (x - reference)).fold(0.0, f64::max);
    let band = SETTLING_BAND * reference.abs();
    let outside = |x: &f64| (x - reference).abs() > band;
    let settling_time = match v.iter().rposition(outside) {
        None => Some(0.0),
        Some(k) if k + 1 < v.len() => Some((k + 1) as f64 * dt),
        Some(_) => None,
    };
    let tail = (v.len() / 10).max(1);
    let steady_state_error = v[v.len() - tail..].iter().map(|x| (x - reference).abs()).sum::<f64>() / tail as f64;
    Ok(StepMetrics {
        reference,
        peak_time: peak_k as f64 * dt,
        overshoot,
        settling_time,
        steady_state_error,
    })
}

/// Root mean square of Euclidean errors; zero for an empty list.
pub fn rmse(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// Maximal runs `[start, end)` over which `refs` stays constant, at least
/// `min_len` samples long.
pub fn constant_segments(refs: &[f64], min_len: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=refs.len() {
        if k == refs.len() || refs[k] != refs[start] {
            if k - start >= min_len.max(2) {
                out.push((start, k));
            }
            start = k;
        }
    }
    out
}

//! Ornstein-Uhlenbeck smoothing and the query-driven gradient simulator.
//!
//! The smoothing operator maps a label function `y` to
//! `T_rho y(x) = E_z[y(sqrt(1 - rho^2) x + rho z)]`, which is differentiable
//! with `|grad T_rho y| <= |y|_inf / rho` no matter how rough `y` is. Its
//! gradient has the closed form
//! `grad T_rho y(x) = sqrt(1 - rho^2) / rho * E_z[y(sqrt(1 - rho^2) x + rho z) z]`,
//! so both the value and the gradient are estimable from label queries alone.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::sample_standard_normal;
use crate::oracle::LabelOracle;

/// Parameters of one smoothing estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    /// Noise level, strictly inside (0, 1).
    pub rho: f64,
    /// Monte-Carlo batch size per point.
    pub inner_samples: u64,
    /// Per-call failure probability budget.
    pub delta: f64,
    /// Post-truncation infinity-norm bound on labels.
    pub label_bound: f64,
}

impl SmoothingParams {
    pub fn new(rho: f64, inner_samples: u64, delta: f64, label_bound: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::invalid("rho", format!("must lie in (0, 1), got {rho}")));
        }
        if inner_samples == 0 {
            return Err(Error::invalid("inner_samples", "must be at least 1"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid("delta", format!("must lie in (0, 1), got {delta}")));
        }
        if !(label_bound > 0.0) {
            return Err(Error::invalid("label_bound", "must be positive"));
        }
        Ok(SmoothingParams {
            rho,
            inner_samples,
            delta,
            label_bound,
        })
    }

    /// Batch size from the planner: large enough that a gradient estimate is
    /// `eps`-accurate in L2 with probability `1 - delta`.
    pub fn planned(d: usize, label_bound: f64, rho: f64, eps: f64, delta: f64) -> Result<Self> {
        let n = gradient_sample_count(d, label_bound, rho, eps, delta);
        SmoothingParams::new(rho, n, delta, label_bound)
    }
}

/// Query count for one gradient estimate:
/// `N = ceil(C0 * d * M^2 * ln(2d / delta) / (rho^2 * eps^2))` with `C0 = 8`,
/// a concrete constant from a per-coordinate sub-Gaussian Hoeffding bound.
/// Monotone in `d`, `M`, `1/eps`, `1/delta`, and `1/rho`.
pub fn gradient_sample_count(d: usize, label_bound: f64, rho: f64, eps: f64, delta: f64) -> u64 {
    const C0: f64 = 8.0;
    let d = d as f64;
    let log_term = (2.0 * d / delta).ln().max(0.0);
    let n = C0 * d * label_bound * label_bound * log_term / (rho * rho * eps * eps);
    (n.ceil() as u64).max(1)
}

/// Clip a label symmetrically to `[-bound, bound]`, preserving sign.
pub fn truncate_label(y: f64, bound: f64) -> f64 {
    debug_assert!(bound > 0.0);
    y.clamp(-bound, bound)
}

/// Where the inner Monte-Carlo loop queries the oracle for a point `x`:
/// `q_j = sqrt(1 - rho^2) x + rho z_j`.
#[inline]
fn query_point(x: &[f64], z: &[f64], rho: f64, buf: &mut [f64]) {
    let scale = (1.0 - rho * rho).sqrt();
    for ((q, &xi), &zi) in buf.iter_mut().zip(x).zip(z) {
        *q = scale * xi + rho * zi;
    }
}

/// Monte-Carlo estimate of `T_rho y(x)` from `inner_samples` queries.
///
/// Inner batches use antithetic pairs `(z, -z)`; the estimator stays unbiased
/// under any symmetric z-law and the even part of the label cancels exactly.
/// A budget failure mid-batch propagates after the consumed queries have been
/// counted.
pub fn smoothed_value<R: Rng + ?Sized>(
    o: &LabelOracle,
    x: &[f64],
    p: &SmoothingParams,
    rng: &mut R,
) -> Result<f64> {
    let d = o.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let n = p.inner_samples;
    let mut acc = 0.0;
    let mut z = vec![0.0; d];
    let mut q = vec![0.0; d];
    let mut j = 0u64;
    while j < n {
        let fresh = sample_standard_normal(d, rng);
        z.copy_from_slice(&fresh);
        query_point(x, &z, p.rho, &mut q);
        acc += o.query(&q)?;
        j += 1;
        if j < n {
            for zi in z.iter_mut() {
                *zi = -*zi;
            }
            query_point(x, &z, p.rho, &mut q);
            acc += o.query(&q)?;
            j += 1;
        }
    }
    Ok(acc / n as f64)
}

/// Monte-Carlo estimate of `grad T_rho y(x)`:
/// `xi = sqrt(1 - rho^2) / (N rho) * sum_j y(q_j) z_j`.
///
/// With the planner's batch size the estimate is `eps`-close in L2 with
/// probability `1 - delta`.
pub fn smoothed_gradient<R: Rng + ?Sized>(
    o: &LabelOracle,
    x: &[f64],
    p: &SmoothingParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let d = o.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    if p.rho == 0.0 {
        return Err(Error::invalid("rho", "gradient simulation divides by rho"));
    }
    let n = p.inner_samples;
    let mut acc = vec![0.0; d];
    let mut z = vec![0.0; d];
    let mut q = vec![0.0; d];
    let mut j = 0u64;
    while j < n {
        let fresh = sample_standard_normal(d, rng);
        z.copy_from_slice(&fresh);
        query_point(x, &z, p.rho, &mut q);
        let y = o.query(&q)?;
        for (a, &zi) in acc.iter_mut().zip(&z) {
            *a += y * zi;
        }
        j += 1;
        if j < n {
            for zi in z.iter_mut() {
                *zi = -*zi;
            }
            query_point(x, &z, p.rho, &mut q);
            let y = o.query(&q)?;
            for (a, &zi) in acc.iter_mut().zip(&z) {
                *a += y * zi;
            }
            j += 1;
        }
    }
    let scale = (1.0 - p.rho * p.rho).sqrt() / (n as f64 * p.rho);
    for a in acc.iter_mut() {
        *a *= scale;
    }
    Ok(acc)
}

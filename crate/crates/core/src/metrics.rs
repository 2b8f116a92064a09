//! Empirical error metrics shared by oracles, hypotheses, and reports.

use serde::{Deserialize, Serialize};

/// The three error norms used across the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    /// Mean squared error `E[(h - y)^2]`.
    L22,
    /// Misclassification rate `Pr[sign(h) != y]`.
    ZeroOne,
    /// Mean absolute error `E[|h - y|]`.
    L1,
}

/// Mean loss of `predict` against labeled points.
pub fn empirical_error_fn<F>(predict: F, points: &[(Vec<f64>, f64)], mode: ErrorMode) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    if points.is_empty() {
        return 0.0;
    }
    let total: f64 = points
        .iter()
        .map(|(x, y)| {
            let h = predict(x);
            match mode {
                ErrorMode::L22 => (h - y) * (h - y),
                ErrorMode::ZeroOne => {
                    let s = if h >= 0.0 { 1.0 } else { -1.0 };
                    if s * y <= 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                ErrorMode::L1 => (h - y).abs(),
            }
        })
        .sum();
    total / points.len() as f64
}

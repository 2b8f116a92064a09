//! Polynomial hypotheses over a projected subspace and the two fitting
//! back-ends: least-squares L2 regression and L1 regression plus sign.

mod features;
mod l1;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{MultiIndex, Subspace};
use crate::metrics::{empirical_error_fn, ErrorMode};

pub use features::{FeatureMap, MAX_FEATURES};
pub use l1::{l1_fit, l1_fit_report, L1Method};

/// Ridge added to the normal equations; keeps degenerate fits solvable while
/// staying far below the Gaussian-orthonormal feature scale.
pub const RIDGE: f64 = 1e-8;

/// `p(x) = sum_I c_I H_I(basis^T x)`: a Hermite-basis polynomial over the
/// coordinates of a subspace.
///
/// Coefficients are kept sorted in graded-lex index order and serialize as
/// `[[index array, value], ...]`; the JSON round-trip is bit-exact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialHypothesis {
    pub subspace: Subspace,
    pub degree: u32,
    pub coefficients: Vec<(MultiIndex, f64)>,
}

impl PolynomialHypothesis {
    /// Constant polynomial on the trivial subspace of `R^d`.
    pub fn constant(ambient_dim: usize, value: f64) -> Self {
        PolynomialHypothesis {
            subspace: Subspace::new(DMatrix::zeros(ambient_dim, 0), None)
                .expect("empty basis is orthonormal"),
            degree: 0,
            coefficients: vec![(MultiIndex::zeros(0), value)],
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let table = crate::gaussian::HermiteTable::new(self.degree as usize);
        let proj = self.subspace.project(x)?;
        let mut acc = 0.0;
        for (idx, c) in &self.coefficients {
            acc += c * table.multi_eval(idx, &proj)?;
        }
        Ok(acc)
    }

    /// Evaluate many ambient points with one shared Hermite tabulation.
    pub fn eval_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        let table = crate::gaussian::HermiteTable::new(self.degree as usize);
        xs.iter()
            .map(|x| {
                let proj = self.subspace.project(x)?;
                let mut acc = 0.0;
                for (idx, c) in &self.coefficients {
                    acc += c * table.multi_eval(idx, &proj)?;
                }
                Ok(acc)
            })
            .collect()
    }
}

/// `sign(p(x))` with `sign(0) = +1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BooleanHypothesis {
    pub poly: PolynomialHypothesis,
}

impl BooleanHypothesis {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(if self.poly.eval(x)? >= 0.0 { 1.0 } else { -1.0 })
    }
}

/// Least-squares fit of a degree-`m` Hermite polynomial over the projected
/// coordinates, solved by ridge-stabilized normal equations. Deterministic
/// given its inputs.
pub fn l2_fit(points: &[(Vec<f64>, f64)], v: &Subspace, m: u32) -> Result<PolynomialHypothesis> {
    if points.is_empty() {
        return Err(Error::invalid("points", "need at least one point"));
    }
    let r = v.dim();
    if r == 0 {
        // only the constant feature survives: (n + ridge) c = sum(y)
        let n = points.len() as f64;
        let c = points.iter().map(|(_, y)| y).sum::<f64>() / (n + RIDGE);
        return Ok(PolynomialHypothesis {
            subspace: v.clone(),
            degree: 0,
            coefficients: vec![(MultiIndex::zeros(0), c)],
        });
    }
    let fm = FeatureMap::new(r, m)?;
    let f = fm.count();
    if f > points.len() {
        log::warn!(
            "feature count {f} exceeds sample count {}: fit is ridge-regularized interpolation",
            points.len()
        );
    }
    let projected: Result<Vec<Vec<f64>>> = points.iter().map(|(x, _)| v.project(x)).collect();
    let design = fm.design_matrix(&projected?)?;
    let labels = DVector::from_iterator(points.len(), points.iter().map(|(_, y)| *y));

    let mut gram = design.transpose() * &design;
    for i in 0..f {
        gram[(i, i)] += RIDGE;
    }
    let rhs = design.transpose() * labels;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numeric("normal equations singular beyond ridge rescue".into()))?;
    let coef = chol.solve(&rhs);

    let coefficients = fm
        .indices()
        .iter()
        .cloned()
        .zip(coef.iter().copied())
        .collect();
    Ok(PolynomialHypothesis {
        subspace: v.clone(),
        degree: m,
        coefficients,
    })
}

/// Hermite degree for the target excess error: `ceil(L / eps^2)` on the real
/// path, `ceil(Gamma^2 / eps^4)` on the Boolean path, clamped to `cap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeMode {
    Real,
    Boolean,
}

pub fn degree_for(mode: DegreeMode, l_or_gamma: f64, eps: f64, cap: u32) -> u32 {
    let raw = match mode {
        DegreeMode::Real => l_or_gamma / (eps * eps),
        DegreeMode::Boolean => l_or_gamma * l_or_gamma / (eps * eps * eps * eps),
    };
    let degree = raw.ceil().max(1.0);
    if degree > f64::from(cap) {
        log::warn!("prescribed degree {degree} clamped to cap {cap}");
        cap
    } else {
        degree as u32
    }
}

/// Mean loss of a polynomial hypothesis on labeled ambient points.
pub fn empirical_error(
    h: &PolynomialHypothesis,
    points: &[(Vec<f64>, f64)],
    mode: ErrorMode,
) -> Result<f64> {
    let preds = h.eval_batch(&points.iter().map(|(x, _)| x.clone()).collect::<Vec<_>>())?;
    let mut total = 0.0;
    for (p, (_, y)) in preds.iter().zip(points) {
        total += match mode {
            ErrorMode::L22 => (p - y) * (p - y),
            ErrorMode::ZeroOne => {
                let s = if *p >= 0.0 { 1.0 } else { -1.0 };
                if s == *y {
                    0.0
                } else {
                    1.0
                }
            }
            ErrorMode::L1 => (p - y).abs(),
        };
    }
    Ok(total / points.len().max(1) as f64)
}

/// Mean loss of a Boolean hypothesis.
pub fn empirical_error_boolean(
    h: &BooleanHypothesis,
    points: &[(Vec<f64>, f64)],
    mode: ErrorMode,
) -> Result<f64> {
    let _ = &h.poly;
    Ok(empirical_error_fn(
        |x| h.eval(x).unwrap_or(f64::NAN),
        points,
        mode,
    ))
}

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::target::TargetSpec;

/// Class parameters for the target's comparison class: `(M, L, k)` for the
/// real-valued bounded-variation classes, `(Gamma, k)` for Boolean bounded
/// surface-area classes. Every asymptotic constant is materialized as 1;
/// callers may rescale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    /// `(E[f^4])^(1/2)` bound for real-valued classes.
    pub m: Option<f64>,
    /// `E[|grad f|^2]` bound for real-valued classes.
    pub l: Option<f64>,
    /// Gaussian surface area bound for Boolean classes.
    pub gamma: Option<f64>,
    /// Dimension of the relevant subspace.
    pub k: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn span_rank(rows: &[Vec<f64>], dim: usize) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mat = DMatrix::from_fn(dim, rows.len(), |i, j| rows[j][i]);
    let svd = mat.svd(false, false);
    let tol = 1e-10 * svd.singular_values.max().max(1e-300);
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}

/// Surface area of a single halfspace under the Gaussian.
pub const HALFSPACE_SURFACE_AREA: f64 = 0.3989422804014327; // 1/sqrt(2*pi)

/// `(M, L, k)` or `(Gamma, k)` of the smallest comparison class containing
/// the target.
pub fn class_parameters(spec: &TargetSpec) -> Result<ClassParams> {
    spec.validate()?;
    let d = spec.dim();
    let rows = spec.weight_rows();
    let k = span_rank(&rows, d).max(1);
    Ok(match spec {
        TargetSpec::Relu { weight } => {
            let m0 = norm(weight);
            ClassParams {
                m: Some(3.0f64.sqrt() * m0 * m0),
                l: Some(m0 * m0),
                gamma: None,
                k: 1,
            }
        }
        TargetSpec::LipschitzSim { weight, link } => {
            let m0 = norm(weight);
            let l0 = link.lipschitz();
            ClassParams {
                m: Some(3.0f64.sqrt() * m0 * m0 * l0 * l0),
                l: Some(m0 * m0 * l0 * l0),
                gamma: None,
                k: 1,
            }
        }
        TargetSpec::SumRelus { weights } => {
            let count = weights.len() as f64;
            let m0 = weights.iter().map(|w| norm(w)).fold(0.0, f64::max);
            ClassParams {
                m: Some(count * m0 * m0),
                l: Some(count * m0 * m0),
                gamma: None,
                k,
            }
        }
        TargetSpec::LinearCombRelus { weights, .. } => {
            let count = weights.len() as f64;
            let m0 = weights.iter().map(|w| norm(w)).fold(0.0, f64::max);
            ClassParams {
                m: Some(count * m0 * m0),
                l: Some(count * m0 * m0),
                gamma: None,
                k,
            }
        }
        TargetSpec::DeepReluNet { layers } => {
            let depth = layers.len() as i32;
            let width = layers.iter().map(|l| l.len()).max().unwrap_or(1) as f64;
            let op = layers
                .iter()
                .map(|l| {
                    let rows = l.len();
                    let cols = l[0].len();
                    let m = DMatrix::from_fn(rows, cols, |i, j| l[i][j]);
                    m.svd(false, false).singular_values.max()
                })
                .fold(0.0, f64::max);
            let v = (k as f64 * op * width).powi(depth);
            ClassParams {
                m: Some(v),
                l: Some(v),
                gamma: None,
                k,
            }
        }
        TargetSpec::Ltf { .. } => ClassParams {
            m: None,
            l: None,
            gamma: Some(HALFSPACE_SURFACE_AREA),
            k: 1,
        },
        TargetSpec::IntersectionHalfspaces { halfspaces } => {
            let count = halfspaces.len() as f64;
            let gamma = count.ln().sqrt().max(HALFSPACE_SURFACE_AREA);
            ClassParams {
                m: None,
                l: None,
                gamma: Some(gamma),
                k,
            }
        }
        TargetSpec::FunctionOfHalfspaces { halfspaces, .. } => ClassParams {
            m: None,
            l: None,
            gamma: Some(halfspaces.len() as f64),
            k,
        },
        TargetSpec::LowdimPtf { degree, .. } => ClassParams {
            m: None,
            l: None,
            gamma: Some(f64::from(*degree).max(HALFSPACE_SURFACE_AREA)),
            k,
        },
    })
}

impl ClassParams {
    pub fn require_real(&self) -> Result<(f64, f64, usize)> {
        match (self.m, self.l) {
            (Some(m), Some(l)) => Ok((m, l, self.k)),
            _ => Err(Error::Unsupported(
                "target class has no real-valued (M, L) parameters".into(),
            )),
        }
    }

    pub fn require_boolean(&self) -> Result<(f64, usize)> {
        match self.gamma {
            Some(g) => Ok((g, self.k)),
            None => Err(Error::Unsupported(
                "target class has no Gaussian surface area parameter".into(),
            )),
        }
    }
}

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{HermiteTable, MultiIndex, Subspace};

fn relu(t: f64) -> f64 {
    t.max(0.0)
}

fn sign_pm(t: f64) -> f64 {
    if t >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One-dimensional link functions for single-index models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinkFn {
    Identity,
    Relu,
    Abs,
    Tanh,
    Sine { frequency: f64 },
}

impl LinkFn {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            LinkFn::Identity => t,
            LinkFn::Relu => relu(t),
            LinkFn::Abs => t.abs(),
            LinkFn::Tanh => t.tanh(),
            LinkFn::Sine { frequency } => (frequency * t).sin(),
        }
    }

    /// Right-derivative at kinks.
    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            LinkFn::Identity => 1.0,
            LinkFn::Relu => {
                if t >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            LinkFn::Abs => sign_pm(t),
            LinkFn::Tanh => 1.0 - t.tanh() * t.tanh(),
            LinkFn::Sine { frequency } => frequency * (frequency * t).cos(),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            LinkFn::Identity | LinkFn::Relu | LinkFn::Abs | LinkFn::Tanh => 1.0,
            LinkFn::Sine { frequency } => frequency.abs(),
        }
    }
}

/// A halfspace `sign(weight . x + threshold)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub weight: Vec<f64>,
    pub threshold: f64,
}

impl Halfspace {
    pub fn eval(&self, x: &[f64]) -> f64 {
        sign_pm(dot(&self.weight, x) + self.threshold)
    }
}

/// The synthetic target zoo. Weight matrices are stored row-major as nested
/// arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum TargetSpec {
    /// `ReLU(weight . x)`
    Relu { weight: Vec<f64> },
    /// `sign(weight . x + threshold)`
    Ltf { weight: Vec<f64>, threshold: f64 },
    /// `link(weight . x)` for a Lipschitz link
    LipschitzSim { weight: Vec<f64>, link: LinkFn },
    /// `sum_i ReLU(weights[i] . x)`
    SumRelus { weights: Vec<Vec<f64>> },
    /// `sum_i signs[i] * ReLU(weights[i] . x)`, signs in {-1, +1}
    LinearCombRelus { weights: Vec<Vec<f64>>, signs: Vec<i8> },
    /// `W_L ReLU(W_{L-1} ... ReLU(W_1 x))`; each layer is rows x cols
    DeepReluNet { layers: Vec<Vec<Vec<f64>>> },
    /// +1 iff every halfspace fires
    IntersectionHalfspaces { halfspaces: Vec<Halfspace> },
    /// truth table over the halfspace indicator bits, length 2^l, entries +-1;
    /// bit i of the table index is 1 when halfspace i fires
    FunctionOfHalfspaces {
        halfspaces: Vec<Halfspace>,
        truth_table: Vec<i8>,
    },
    /// `sign(q(B^T x))` for a degree-bounded polynomial q in Hermite basis
    /// over the k columns of `basis`
    LowdimPtf {
        basis: Vec<Vec<f64>>,
        degree: u32,
        coefficients: Vec<(Vec<u32>, f64)>,
    },
}

impl TargetSpec {
    /// Ambient dimension the target is declared over.
    pub fn dim(&self) -> usize {
        match self {
            TargetSpec::Relu { weight } => weight.len(),
            TargetSpec::Ltf { weight, .. } => weight.len(),
            TargetSpec::LipschitzSim { weight, .. } => weight.len(),
            TargetSpec::SumRelus { weights } => weights.first().map_or(0, |w| w.len()),
            TargetSpec::LinearCombRelus { weights, .. } => {
                weights.first().map_or(0, |w| w.len())
            }
            TargetSpec::DeepReluNet { layers } => {
                layers.first().and_then(|l| l.first()).map_or(0, |r| r.len())
            }
            TargetSpec::IntersectionHalfspaces { halfspaces } => {
                halfspaces.first().map_or(0, |h| h.weight.len())
            }
            TargetSpec::FunctionOfHalfspaces { halfspaces, .. } => {
                halfspaces.first().map_or(0, |h| h.weight.len())
            }
            TargetSpec::LowdimPtf { basis, .. } => basis.first().map_or(0, |b| b.len()),
        }
    }

    pub fn is_boolean(&self) -> bool {
        matches!(
            self,
            TargetSpec::Ltf { .. }
                | TargetSpec::IntersectionHalfspaces { .. }
                | TargetSpec::FunctionOfHalfspaces { .. }
                | TargetSpec::LowdimPtf { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::invalid("target", "empty weight specification"));
        }
        let all_finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            TargetSpec::Relu { weight } => {
                if !all_finite(weight) {
                    return Err(Error::NonFinite("relu weight".into()));
                }
            }
            TargetSpec::Ltf { weight, threshold } => {
                if !all_finite(weight) || !threshold.is_finite() {
                    return Err(Error::NonFinite("ltf parameters".into()));
                }
            }
            TargetSpec::LipschitzSim { weight, .. } => {
                if !all_finite(weight) {
                    return Err(Error::NonFinite("sim weight".into()));
                }
            }
            TargetSpec::SumRelus { weights } => {
                if weights.is_empty() || weights.iter().any(|w| w.len() != d || !all_finite(w)) {
                    return Err(Error::invalid("weights", "inconsistent rows"));
                }
            }
            TargetSpec::LinearCombRelus { weights, signs } => {
                if weights.len() != signs.len() {
                    return Err(Error::invalid("signs", "length must match weights"));
                }
                if signs.iter().any(|&s| s != 1 && s != -1) {
                    return Err(Error::invalid("signs", "entries must be +-1"));
                }
                if weights.is_empty() || weights.iter().any(|w| w.len() != d || !all_finite(w)) {
                    return Err(Error::invalid("weights", "inconsistent rows"));
                }
            }
            TargetSpec::DeepReluNet { layers } => {
                if layers.is_empty() {
                    return Err(Error::invalid("layers", "need at least one layer"));
                }
                let mut in_dim = d;
                for (li, layer) in layers.iter().enumerate() {
                    if layer.is_empty() {
                        return Err(Error::invalid("layers", format!("layer {li} empty")));
                    }
                    for row in layer {
                        if row.len() != in_dim || !all_finite(row) {
                            return Err(Error::invalid(
                                "layers",
                                format!("layer {li} rows must have {in_dim} finite entries"),
                            ));
                        }
                    }
                    in_dim = layer.len();
                }
                if layers.last().map(|l| l.len()) != Some(1) {
                    return Err(Error::invalid("layers", "final layer must have one row"));
                }
            }
            TargetSpec::IntersectionHalfspaces { halfspaces } => {
                if halfspaces.is_empty()
                    || halfspaces
                        .iter()
                        .any(|h| h.weight.len() != d || !all_finite(&h.weight))
                {
                    return Err(Error::invalid("halfspaces", "inconsistent rows"));
                }
            }
            TargetSpec::FunctionOfHalfspaces {
                halfspaces,
                truth_table,
            } => {
                if halfspaces.is_empty()
                    || halfspaces
                        .iter()
                        .any(|h| h.weight.len() != d || !all_finite(&h.weight))
                {
                    return Err(Error::invalid("halfspaces", "inconsistent rows"));
                }
                if truth_table.len() != 1 << halfspaces.len() {
                    return Err(Error::invalid("truth_table", "length must be 2^l"));
                }
                if truth_table.iter().any(|&s| s != 1 && s != -1) {
                    return Err(Error::invalid("truth_table", "entries must be +-1"));
                }
            }
            TargetSpec::LowdimPtf {
                basis,
                degree,
                coefficients,
            } => {
                if basis.is_empty() || basis.iter().any(|b| b.len() != d || !all_finite(b)) {
                    return Err(Error::invalid("basis", "inconsistent columns"));
                }
                let k = basis.len();
                for (idx, c) in coefficients {
                    if idx.len() != k {
                        return Err(Error::invalid("coefficients", "index dimension mismatch"));
                    }
                    if idx.iter().sum::<u32>() > *degree {
                        return Err(Error::invalid("coefficients", "index exceeds degree"));
                    }
                    if !c.is_finite() {
                        return Err(Error::NonFinite("ptf coefficient".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Exact forward evaluation of the declared function.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(match self {
            TargetSpec::Relu { weight } => relu(dot(weight, x)),
            TargetSpec::Ltf { weight, threshold } => sign_pm(dot(weight, x) + threshold),
            TargetSpec::LipschitzSim { weight, link } => link.eval(dot(weight, x)),
            TargetSpec::SumRelus { weights } => {
                weights.iter().map(|w| relu(dot(w, x))).sum()
            }
            TargetSpec::LinearCombRelus { weights, signs } => weights
                .iter()
                .zip(signs)
                .map(|(w, &s)| f64::from(s) * relu(dot(w, x)))
                .sum(),
            TargetSpec::DeepReluNet { layers } => {
                let mut act: Vec<f64> = x.to_vec();
                for (li, layer) in layers.iter().enumerate() {
                    let mut next: Vec<f64> =
                        layer.iter().map(|row| dot(row, &act)).collect();
                    if li + 1 < layers.len() {
                        for v in next.iter_mut() {
                            *v = relu(*v);
                        }
                    }
                    act = next;
                }
                act[0]
            }
            TargetSpec::IntersectionHalfspaces { halfspaces } => {
                if halfspaces.iter().all(|h| h.eval(x) > 0.0) {
                    1.0
                } else {
                    -1.0
                }
            }
            TargetSpec::FunctionOfHalfspaces {
                halfspaces,
                truth_table,
            } => {
                let mut idx = 0usize;
                for (i, h) in halfspaces.iter().enumerate() {
                    if h.eval(x) > 0.0 {
                        idx |= 1 << i;
                    }
                }
                f64::from(truth_table[idx])
            }
            TargetSpec::LowdimPtf {
                basis,
                degree,
                coefficients,
            } => {
                let table = HermiteTable::new(*degree as usize);
                let proj: Vec<f64> = basis.iter().map(|b| dot(b, x)).collect();
                let mut acc = 0.0;
                for (idx, c) in coefficients {
                    let mi = MultiIndex::new(idx.clone());
                    acc += c * table.multi_eval(&mi, &proj)?;
                }
                sign_pm(acc)
            }
        })
    }

    /// Analytic gradient for the real-valued variants (right-derivative
    /// convention `1{t >= 0}` at ReLU kinks). `None` for Boolean targets.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d = self.dim();
        if x.len() != d {
            return None;
        }
        match self {
            TargetSpec::Relu { weight } => {
                let g = if dot(weight, x) >= 0.0 { 1.0 } else { 0.0 };
                Some(weight.iter().map(|w| g * w).collect())
            }
            TargetSpec::LipschitzSim { weight, link } => {
                let g = link.deriv(dot(weight, x));
                Some(weight.iter().map(|w| g * w).collect())
            }
            TargetSpec::SumRelus { weights } => {
                let mut grad = vec![0.0; d];
                for w in weights {
                    if dot(w, x) >= 0.0 {
                        for (g, wi) in grad.iter_mut().zip(w) {
                            *g += wi;
                        }
                    }
                }
                Some(grad)
            }
            TargetSpec::LinearCombRelus { weights, signs } => {
                let mut grad = vec![0.0; d];
                for (w, &s) in weights.iter().zip(signs) {
                    if dot(w, x) >= 0.0 {
                        for (g, wi) in grad.iter_mut().zip(w) {
                            *g += f64::from(s) * wi;
                        }
                    }
                }
                Some(grad)
            }
            TargetSpec::DeepReluNet { layers } => {
                // Forward pass storing activations, then backprop through the
                // indicator diagonals.
                let mut acts: Vec<Vec<f64>> = vec![x.to_vec()];
                for (li, layer) in layers.iter().enumerate() {
                    let prev = acts.last().unwrap();
                    let mut next: Vec<f64> = layer.iter().map(|row| dot(row, prev)).collect();
                    if li + 1 < layers.len() {
                        for v in next.iter_mut() {
                            *v = relu(*v);
                        }
                    }
                    acts.push(next);
                }
                let mut grad = vec![1.0];
                for (li, layer) in layers.iter().enumerate().rev() {
                    let pre_relu = li + 1 < layers.len();
                    let input = &acts[li];
                    let mut down = vec![0.0; input.len()];
                    for (r, row) in layer.iter().enumerate() {
                        let mut up = grad[r];
                        if pre_relu {
                            // gate by the post-activation indicator
                            let z = dot(row, input);
                            if z < 0.0 {
                                up = 0.0;
                            }
                        }
                        for (dj, wj) in down.iter_mut().zip(row) {
                            *dj += up * wj;
                        }
                    }
                    grad = down;
                }
                Some(grad)
            }
            _ => None,
        }
    }

    /// Weight vectors whose span the target depends on.
    pub fn weight_rows(&self) -> Vec<Vec<f64>> {
        match self {
            TargetSpec::Relu { weight } => vec![weight.clone()],
            TargetSpec::Ltf { weight, .. } => vec![weight.clone()],
            TargetSpec::LipschitzSim { weight, .. } => vec![weight.clone()],
            TargetSpec::SumRelus { weights } => weights.clone(),
            TargetSpec::LinearCombRelus { weights, .. } => weights.clone(),
            TargetSpec::DeepReluNet { layers } => layers[0].clone(),
            TargetSpec::IntersectionHalfspaces { halfspaces } => {
                halfspaces.iter().map(|h| h.weight.clone()).collect()
            }
            TargetSpec::FunctionOfHalfspaces { halfspaces, .. } => {
                halfspaces.iter().map(|h| h.weight.clone()).collect()
            }
            TargetSpec::LowdimPtf { basis, .. } => basis.clone(),
        }
    }

    /// Orthonormal basis of the relevant subspace (harness-side ground truth
    /// for subspace-recovery metrics). `None` when the span is degenerate.
    pub fn relevant_subspace(&self) -> Option<Subspace> {
        let rows = self.weight_rows();
        let d = self.dim();
        let mat = DMatrix::from_fn(d, rows.len(), |i, j| rows[j][i]);
        let svd = mat.clone().svd(true, false);
        let tol = 1e-10 * svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
        if rank == 0 {
            return None;
        }
        let u = svd.u?;
        Subspace::new(u.columns(0, rank).into_owned(), None).ok()
    }
}

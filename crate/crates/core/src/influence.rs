//! Influence-matrix estimation from gradient queries and eigenvalue-threshold
//! subspace extraction.
//!
//! The influence matrix of the smoothed label is
//! `Inf = E_x[grad T_rho y(x) grad T_rho y(x)^T]`; its large-eigenvalue
//! subspace captures every direction the label meaningfully depends on.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{sample_standard_normal, Subspace};
use crate::oracle::LabelOracle;
use crate::rng::derive_rng;
use crate::smoothing::{smoothed_gradient, SmoothingParams};

/// How the per-point gradient outer product is formed.
///
/// Squaring a single noisy gradient inflates the diagonal by the estimator's
/// noise covariance. The default takes two independent gradient estimates per
/// point and symmetrizes their cross product, which removes that bias at
/// twice the query cost. The single-estimate form is kept for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfluenceEstimator {
    PairedDebiased,
    SingleLiteral,
}

/// A symmetric estimate of the smoothed-label influence matrix, with the
/// provenance needed to replay it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InfluenceEstimate {
    /// d x d symmetric matrix, stored row-major when serialized.
    #[serde(with = "matrix_row_major")]
    pub matrix: DMatrix<f64>,
    pub outer_samples: u64,
    pub params: SmoothingParams,
    pub estimator: InfluenceEstimator,
    pub seed: u64,
}

mod matrix_row_major {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        rows: usize,
        cols: usize,
        data_row_major: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Repr {
            rows: m.nrows(),
            cols: m.ncols(),
            data_row_major: data,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let r = Repr::deserialize(d)?;
        if r.data_row_major.len() != r.rows * r.cols {
            return Err(serde::de::Error::custom("matrix shape mismatch"));
        }
        Ok(DMatrix::from_row_slice(r.rows, r.cols, &r.data_row_major))
    }
}

/// Eigenvalue-thresholded subspace of an influence estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceSelection {
    pub subspace: Subspace,
    pub threshold: f64,
    pub discarded_eigenvalues: Vec<f64>,
}

/// Estimate the influence matrix of the smoothed label from `outer_samples`
/// Gaussian points with per-point gradient queries.
///
/// Sample points are drawn from stream 0 of `seed`; the gradient batch for
/// point `i` uses stream `i + 1`, so partitioned runs reproduce bit-identical
/// output in any schedule.
pub fn estimate_influence(
    o: &LabelOracle,
    p: &SmoothingParams,
    outer_samples: u64,
    seed: u64,
    estimator: InfluenceEstimator,
) -> Result<InfluenceEstimate> {
    let d = o.dim();
    let mut points_rng = derive_rng(seed, 0);
    let mut acc = DMatrix::<f64>::zeros(d, d);
    for i in 0..outer_samples {
        o.budget().charge_sample()?;
        let x = sample_standard_normal(d, &mut points_rng);
        let mut grad_rng = derive_rng(seed, i + 1);
        match estimator {
            InfluenceEstimator::PairedDebiased => {
                let g1 = smoothed_gradient(o, &x, p, &mut grad_rng)?;
                let g2 = smoothed_gradient(o, &x, p, &mut grad_rng)?;
                for r in 0..d {
                    for c in 0..d {
                        acc[(r, c)] += 0.5 * (g1[r] * g2[c] + g2[r] * g1[c]);
                    }
                }
            }
            InfluenceEstimator::SingleLiteral => {
                let g = smoothed_gradient(o, &x, p, &mut grad_rng)?;
                for r in 0..d {
                    for c in 0..d {
                        acc[(r, c)] += g[r] * g[c];
                    }
                }
            }
        }
    }
    acc /= outer_samples as f64;
    // enforce exact symmetry after accumulation round-off
    let sym = (&acc + acc.transpose()) * 0.5;
    Ok(InfluenceEstimate {
        matrix: sym,
        outer_samples,
        params: *p,
        estimator,
        seed,
    })
}

/// Queries consumed by [`estimate_influence`] with the given settings.
pub fn influence_query_cost(
    p: &SmoothingParams,
    outer_samples: u64,
    estimator: InfluenceEstimator,
) -> u64 {
    let per_point = match estimator {
        InfluenceEstimator::PairedDebiased => 2 * p.inner_samples,
        InfluenceEstimator::SingleLiteral => p.inner_samples,
    };
    outer_samples * per_point
}

/// `floor(trace / eta)`: no subspace extracted at threshold `eta` can have
/// more dimensions than this.
pub fn dimension_bound(trace: f64, eta: f64) -> usize {
    debug_assert!(eta > 0.0);
    if trace <= 0.0 {
        return 0;
    }
    (trace / eta).floor() as usize
}

/// Eigenvalue threshold for subspace selection: `eps^2 / (32 k M)` on the
/// real-valued path, `eps^2 / (32 k)` on the Boolean path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    RealL22,
    BooleanL1,
}

pub fn select_threshold(mode: ThresholdMode, eps: f64, k: usize, m: f64) -> f64 {
    let k = k.max(1) as f64;
    match mode {
        ThresholdMode::RealL22 => eps * eps / (32.0 * k * m),
        ThresholdMode::BooleanL1 => eps * eps / (32.0 * k),
    }
}

/// Retain the eigenvectors of the symmetrized estimate whose eigenvalues are
/// at least `eta` (inclusive), canonically ordered.
///
/// Ordering is (eigenvalue descending, first-nonzero-component-positive sign,
/// entrywise comparison), so repeated runs produce the same subspace even
/// under eigenvalue ties. The retained count is additionally capped by
/// `floor(trace / eta)`, which binds only when estimation noise produced
/// enough negative mass to break the trace argument.
pub fn top_subspace(est: &InfluenceEstimate, eta: f64) -> Result<SubspaceSelection> {
    if !(eta > 0.0) {
        return Err(Error::invalid("eta", "threshold must be positive"));
    }
    let d = est.matrix.nrows();
    let sym = (&est.matrix + est.matrix.transpose()) * 0.5;
    let trace = sym.trace();
    let eig = sym.clone().symmetric_eigen();
    if !eig.eigenvalues.iter().all(|v| v.is_finite()) {
        let frob = sym.norm();
        return Err(Error::Numeric(format!(
            "eigendecomposition failed: non-finite eigenvalues (dim {d}, frobenius {frob:.3e})"
        )));
    }

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..d)
        .map(|j| {
            let mut v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
            if let Some(first) = v.iter().find(|c| c.abs() > 1e-12) {
                if *first < 0.0 {
                    for c in v.iter_mut() {
                        *c = -*c;
                    }
                }
            }
            (eig.eigenvalues[j], v)
        })
        .collect();
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0).then_with(|| {
            for (x, y) in a.1.iter().zip(&b.1) {
                match x.total_cmp(y) {
                    std::cmp::Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            std::cmp::Ordering::Equal
        })
    });

    if let Some(min) = pairs.last() {
        if min.0 < -1e-8 {
            log::warn!(
                "influence estimate has negative eigenvalue {:.3e} (trace {:.3e}, outer {}): estimation noise exceeds the PSD structure",
                min.0,
                trace,
                est.outer_samples
            );
        }
    }

    let mut keep = pairs.iter().take_while(|p| p.0 >= eta).count();
    let cap = dimension_bound(trace, eta);
    if keep > cap {
        log::warn!(
            "trace cap binds: retaining {cap} of {keep} eigenvectors at eta {eta:.3e}"
        );
        keep = cap;
    }

    let basis = DMatrix::from_fn(d, keep, |i, j| pairs[j].1[i]);
    let eigenvalues: Vec<f64> = pairs.iter().take(keep).map(|p| p.0).collect();
    let discarded: Vec<f64> = pairs.iter().skip(keep).map(|p| p.0).collect();
    let subspace = Subspace::new(basis, Some(eigenvalues))?;
    Ok(SubspaceSelection {
        subspace,
        threshold: eta,
        discarded_eigenvalues: discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{LinkFn, TargetSpec};
    use approx::assert_abs_diff_eq;

    fn diag_estimate(values: &[f64]) -> InfluenceEstimate {
        let d = values.len();
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = values[i];
        }
        InfluenceEstimate {
            matrix: m,
            outer_samples: 1,
            params: SmoothingParams::new(0.5, 1, 0.5, 1.0).unwrap(),
            estimator: InfluenceEstimator::PairedDebiased,
            seed: 0,
        }
    }

    #[test]
    fn diagonal_threshold_cases() {
        let est = diag_estimate(&[3.0, 1.0, 0.001]);
        let sel = top_subspace(&est, 0.5).unwrap();
        assert_eq!(sel.subspace.dim(), 2);
        // retained span is {e1, e2}
        let p = sel.subspace.project(&[0.0, 0.0, 1.0]).unwrap();
        assert!(p.iter().all(|v| v.abs() < 1e-10));
        assert_eq!(sel.discarded_eigenvalues.len(), 1);

        let zero = diag_estimate(&[0.0, 0.0]);
        let sel = top_subspace(&zero, 0.5).unwrap();
        assert_eq!(sel.subspace.dim(), 0);
    }

    #[test]
    fn rank_one_matrix_keeps_its_direction() {
        // w w^T with |w|^2 = 2 has spectrum {2, 0, 0}
        let w = [1.0, 1.0, 0.0];
        let d = 3;
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = w[i] * w[j];
            }
        }
        let est = InfluenceEstimate {
            matrix: m,
            outer_samples: 1,
            params: SmoothingParams::new(0.5, 1, 0.5, 1.0).unwrap(),
            estimator: InfluenceEstimator::PairedDebiased,
            seed: 0,
        };
        let sel = top_subspace(&est, 1.0).unwrap();
        assert_eq!(sel.subspace.dim(), 1);
        let b = sel.subspace.basis();
        let c = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(b[(0, 0)].abs(), c, epsilon = 1e-12);
        assert_abs_diff_eq!(b[(1, 0)].abs(), c, epsilon = 1e-12);
    }

    #[test]
    fn threshold_monotonicity_and_cap() {
        let est = diag_estimate(&[2.5, 1.5, 0.7, 0.2]);
        let mut last = usize::MAX;
        for eta in [0.1, 0.5, 1.0, 2.0, 3.0] {
            let sel = top_subspace(&est, eta).unwrap();
            assert!(sel.subspace.dim() <= last);
            last = sel.subspace.dim();
            let cap = dimension_bound(est.matrix.trace(), eta);
            assert!(sel.subspace.dim() <= cap);
        }
    }

    #[test]
    fn dimension_bound_examples() {
        assert_eq!(dimension_bound(10.0, 2.0), 5);
        assert_eq!(dimension_bound(0.9, 1.0), 0);
        assert_eq!(dimension_bound(-3.0, 1.0), 0);
    }

    #[test]
    fn threshold_formula() {
        // boolean: eps^2/(32 k)
        assert_abs_diff_eq!(
            select_threshold(ThresholdMode::BooleanL1, 0.4, 2, 1.0),
            0.0025,
            epsilon = 1e-15
        );
        // real: eps^2/(32 k M)
        assert_abs_diff_eq!(
            select_threshold(ThresholdMode::RealL22, 0.4, 1, 2.0),
            0.0025,
            epsilon = 1e-15
        );
        // eps halved, threshold quartered
        let a = select_threshold(ThresholdMode::RealL22, 0.2, 3, 1.5);
        let b = select_threshold(ThresholdMode::RealL22, 0.1, 3, 1.5);
        assert_abs_diff_eq!(a / b, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_label_influence_concentrates() {
        // y = w.x with |w| = 1: Inf of the smoothed label is (1-rho^2) w w^T.
        let d = 6;
        let mut w = vec![0.0; d];
        w[0] = 0.6;
        w[1] = 0.8;
        let o = crate::oracle::LabelOracle::uncorrupted(TargetSpec::LipschitzSim {
            weight: w.clone(),
            link: LinkFn::Identity,
        })
        .unwrap();
        let rho = 0.3;
        let p = SmoothingParams::new(rho, 256, 0.1, 6.0).unwrap();
        let est = estimate_influence(&o, &p, 600, 17, InfluenceEstimator::PairedDebiased).unwrap();
        let scale = 1.0 - rho * rho;
        for i in 0..d {
            for j in 0..d {
                let want = scale * w[i] * w[j];
                assert!(
                    (est.matrix[(i, j)] - want).abs() < 0.1,
                    "entry ({i},{j}) {} vs {want}",
                    est.matrix[(i, j)]
                );
            }
        }
        // budget accounting: outer samples plus 2 * outer * inner queries
        assert_eq!(o.budget().samples_used(), 600);
        assert_eq!(
            o.budget().queries_used(),
            influence_query_cost(&p, 600, InfluenceEstimator::PairedDebiased)
        );
    }

    #[test]
    fn estimate_is_reproducible_per_seed() {
        let o = crate::oracle::LabelOracle::uncorrupted(TargetSpec::Relu {
            weight: vec![1.0, 0.0],
        })
        .unwrap();
        let p = SmoothingParams::new(0.4, 32, 0.1, 4.0).unwrap();
        let a = estimate_influence(&o, &p, 40, 5, InfluenceEstimator::PairedDebiased).unwrap();
        let b = estimate_influence(&o, &p, 40, 5, InfluenceEstimator::PairedDebiased).unwrap();
        assert_eq!(a.matrix, b.matrix);
    }

    #[test]
    fn serialization_round_trips() {
        let est = diag_estimate(&[1.0, 0.5]);
        let json = serde_json::to_string(&est).unwrap();
        let back: InfluenceEstimate = serde_json::from_str(&json).unwrap();
        assert_eq!(est.matrix, back.matrix);
        assert_eq!(est.seed, back.seed);
    }
}

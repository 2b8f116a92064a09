use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ORTHONORMALITY_TOL: f64 = 1e-10;

/// An orthonormal basis of an r-dimensional subspace of R^d, with optional
/// eigenvalue metadata attached by influence PCA.
///
/// Construction re-orthonormalizes (QR) whenever the supplied columns deviate
/// from orthonormality by more than 1e-10, which absorbs eigensolver drift.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SubspaceRepr", into = "SubspaceRepr")]
pub struct Subspace {
    ambient_dim: usize,
    basis: DMatrix<f64>,
    eigenvalues: Option<Vec<f64>>,
}

/// Serialized form: basis stored row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SubspaceRepr {
    ambient_dim: usize,
    dim: usize,
    basis_row_major: Vec<f64>,
    eigenvalues: Option<Vec<f64>>,
}

impl From<Subspace> for SubspaceRepr {
    fn from(s: Subspace) -> Self {
        let (d, r) = (s.ambient_dim, s.dim());
        let mut basis_row_major = Vec::with_capacity(d * r);
        for i in 0..d {
            for j in 0..r {
                basis_row_major.push(s.basis[(i, j)]);
            }
        }
        SubspaceRepr {
            ambient_dim: d,
            dim: r,
            basis_row_major,
            eigenvalues: s.eigenvalues,
        }
    }
}

impl TryFrom<SubspaceRepr> for Subspace {
    type Error = Error;

    fn try_from(r: SubspaceRepr) -> Result<Self> {
        if r.basis_row_major.len() != r.ambient_dim * r.dim {
            return Err(Error::Config(format!(
                "subspace basis has {} entries, expected {}",
                r.basis_row_major.len(),
                r.ambient_dim * r.dim
            )));
        }
        let basis = DMatrix::from_row_slice(r.ambient_dim, r.dim, &r.basis_row_major);
        Subspace::new(basis, r.eigenvalues)
    }
}

impl Subspace {
    /// Build from a d x r column-basis matrix.
    pub fn new(basis: DMatrix<f64>, eigenvalues: Option<Vec<f64>>) -> Result<Self> {
        let (d, r) = basis.shape();
        if r > d {
            return Err(Error::invalid("basis", format!("rank {r} exceeds ambient {d}")));
        }
        if let Some(eigs) = &eigenvalues {
            if eigs.len() != r {
                return Err(Error::invalid("eigenvalues", "length must match rank"));
            }
        }
        let basis = if r == 0 {
            basis
        } else {
            let gram = basis.transpose() * &basis;
            let mut max_dev: f64 = 0.0;
            for i in 0..r {
                for j in 0..r {
                    let target = if i == j { 1.0 } else { 0.0 };
                    max_dev = max_dev.max((gram[(i, j)] - target).abs());
                }
            }
            if max_dev > ORTHONORMALITY_TOL {
                let qr = basis.qr();
                let q = qr.q();
                if q.ncols() < r {
                    return Err(Error::Numeric(
                        "basis columns are linearly dependent".to_string(),
                    ));
                }
                q.columns(0, r).into_owned()
            } else {
                basis
            }
        };
        Ok(Subspace {
            ambient_dim: d,
            basis,
            eigenvalues,
        })
    }

    /// Subspace from column vectors given as slices.
    pub fn from_columns(ambient_dim: usize, columns: &[Vec<f64>]) -> Result<Self> {
        for c in columns {
            if c.len() != ambient_dim {
                return Err(Error::DimensionMismatch {
                    expected: ambient_dim,
                    got: c.len(),
                });
            }
        }
        let basis = DMatrix::from_fn(ambient_dim, columns.len(), |i, j| columns[j][i]);
        Subspace::new(basis, None)
    }

    /// Span of the first `r` coordinate axes.
    pub fn standard(ambient_dim: usize, r: usize) -> Result<Self> {
        if r > ambient_dim {
            return Err(Error::invalid("r", "exceeds ambient dimension"));
        }
        let basis = DMatrix::from_fn(ambient_dim, r, |i, j| if i == j { 1.0 } else { 0.0 });
        Subspace::new(basis, None)
    }

    /// The full ambient space.
    pub fn full(ambient_dim: usize) -> Self {
        Subspace::standard(ambient_dim, ambient_dim).expect("r == d always valid")
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Rank r of the subspace.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref()
    }

    /// Coordinates of `x` in the basis: `basis^T x`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                got: x.len(),
            });
        }
        let v = DVector::from_column_slice(x);
        Ok((self.basis.transpose() * v).as_slice().to_vec())
    }

    /// Re-embed subspace coordinates into the ambient space: `basis * v`.
    pub fn embed(&self, coords: &[f64]) -> Result<Vec<f64>> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: coords.len(),
            });
        }
        let v = DVector::from_column_slice(coords);
        Ok((&self.basis * v).as_slice().to_vec())
    }
}

/// Principal angles between two subspaces of the same ambient space, in
/// radians, ascending: arccos of the singular values of `A^T B`, clipped to
/// `[0, pi/2]`.
pub fn principal_angles(a: &Subspace, b: &Subspace) -> Result<Vec<f64>> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: a.ambient_dim(),
            got: b.ambient_dim(),
        });
    }
    if a.dim() == 0 || b.dim() == 0 {
        return Ok(Vec::new());
    }
    let m = a.basis().transpose() * b.basis();
    let svd = m.svd(false, false);
    let mut angles: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&s| s.clamp(0.0, 1.0).acos())
        .collect();
    angles.sort_by(|x, y| x.total_cmp(y));
    Ok(angles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn axis_projection() {
        let s = Subspace::standard(4, 2).unwrap();
        let p = s.project(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(p, vec![1.0, 2.0]);
    }

    #[test]
    fn full_space_projection_preserves_norm() {
        let s = Subspace::full(3);
        let x = [0.3, -1.2, 2.0];
        let p = s.project(&x).unwrap();
        let nx: f64 = x.iter().map(|v| v * v).sum();
        let np: f64 = p.iter().map(|v| v * v).sum();
        assert_abs_diff_eq!(nx, np, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_direction_projection() {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let s = Subspace::from_columns(2, &[vec![c, c]]).unwrap();
        let p = s.project(&[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(p[0], c, epsilon = 1e-12);
    }

    #[test]
    fn projection_idempotent() {
        let s = Subspace::from_columns(3, &[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]).unwrap();
        let x = [0.5, -2.0, 1.25];
        let p1 = s.project(&x).unwrap();
        let back = s.embed(&p1).unwrap();
        let p2 = s.project(&back).unwrap();
        for (a, b) in p1.iter().zip(&p2) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn reorthonormalizes_drifted_basis() {
        // Columns deliberately scaled and slightly mixed.
        let cols = vec![vec![2.0, 0.0, 0.0], vec![0.5, 1.0, 0.0]];
        let s = Subspace::from_columns(3, &cols).unwrap();
        let g = s.basis().transpose() * s.basis();
        assert_abs_diff_eq!(g[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g[(1, 1)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn principal_angle_cases() {
        let e1 = Subspace::from_columns(2, &[vec![1.0, 0.0]]).unwrap();
        let e2 = Subspace::from_columns(2, &[vec![0.0, 1.0]]).unwrap();
        let diag = Subspace::from_columns(2, &[vec![1.0, 1.0]]).unwrap();

        let same = principal_angles(&e1, &e1).unwrap();
        assert_abs_diff_eq!(same[0], 0.0, epsilon = 1e-12);

        let orth = principal_angles(&e1, &e2).unwrap();
        assert_abs_diff_eq!(orth[0], std::f64::consts::FRAC_PI_2, epsilon = 1e-12);

        let quarter = principal_angles(&e1, &diag).unwrap();
        assert_abs_diff_eq!(quarter[0], std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn principal_angles_symmetric_and_separating() {
        let a = Subspace::from_columns(4, &[vec![1.0, 0.5, 0.0, 0.0], vec![0.0, 1.0, -1.0, 0.3]])
            .unwrap();
        let b = Subspace::from_columns(4, &[vec![0.0, 0.0, 1.0, 1.0], vec![1.0, 1.0, 0.0, 0.0]])
            .unwrap();
        let ab = principal_angles(&a, &b).unwrap();
        let ba = principal_angles(&b, &a).unwrap();
        for (x, y) in ab.iter().zip(&ba) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-8);
        }
        assert!(ab.iter().any(|&t| t > 1e-8), "distinct spans must separate");
    }

    #[test]
    fn rank_exceeding_ambient_rejected() {
        let basis = DMatrix::<f64>::identity(2, 2).insert_column(2, 0.0);
        assert!(Subspace::new(basis, None).is_err());
    }
}

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::{binomial_checked, enumerate_multi_indices, HermiteTable, MultiIndex};

/// Hard cap on the Hermite feature count of a single fit; past this the
/// normal-equation Gram matrix stops being desk-scale.
pub const MAX_FEATURES: usize = 5_000;

/// The degree-bounded Hermite feature basis over r projected coordinates.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    dim: usize,
    degree: u32,
    indices: Vec<MultiIndex>,
    table: HermiteTable,
}

impl FeatureMap {
    pub fn new(dim: usize, degree: u32) -> Result<Self> {
        if dim == 0 {
            // the constant-only basis on a zero-dimensional subspace
            return Ok(FeatureMap {
                dim: 0,
                degree,
                indices: vec![MultiIndex::zeros(0)],
                table: HermiteTable::new(0),
            });
        }
        let count = binomial_checked(dim as u64 + degree as u64, dim as u64)?;
        if count > MAX_FEATURES as u64 {
            return Err(Error::SizeLimit(format!(
                "feature count {count} exceeds the {MAX_FEATURES} cap (dim {dim}, degree {degree})"
            )));
        }
        let indices = enumerate_multi_indices(dim, degree)?;
        Ok(FeatureMap {
            dim,
            degree,
            indices,
            table: HermiteTable::new(degree as usize),
        })
    }

    pub fn count(&self) -> usize {
        self.indices.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    /// Fill one design row: `row[f] = H_{I_f}(point)`.
    ///
    /// One-dimensional Hermite values are tabulated per coordinate first, so
    /// a row costs `O(r * m + F * r)` instead of `O(F * m * r)`.
    pub fn fill_row(&self, point: &[f64], row: &mut [f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        let m1 = self.degree as usize + 1;
        let mut per_coord = vec![0.0; self.dim * m1];
        for (c, &x) in point.iter().enumerate() {
            self.table
                .eval_all(x, &mut per_coord[c * m1..(c + 1) * m1])?;
        }
        for (f, idx) in self.indices.iter().enumerate() {
            let mut v = 1.0;
            for (c, &deg) in idx.entries().iter().enumerate() {
                v *= per_coord[c * m1 + deg as usize];
            }
            row[f] = v;
        }
        Ok(())
    }

    /// Dense design matrix for a batch of projected points.
    pub fn design_matrix(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let n = points.len();
        let f = self.count();
        let mut design = DMatrix::zeros(n, f);
        let mut row = vec![0.0; f];
        for (i, p) in points.iter().enumerate() {
            self.fill_row(p, &mut row)?;
            for (j, &v) in row.iter().enumerate() {
                design[(i, j)] = v;
            }
        }
        Ok(design)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn row_matches_direct_multi_eval() {
        let fm = FeatureMap::new(3, 4).unwrap();
        let table = HermiteTable::new(4);
        let point = [0.3, -1.2, 0.9];
        let mut row = vec![0.0; fm.count()];
        fm.fill_row(&point, &mut row).unwrap();
        for (f, idx) in fm.indices().iter().enumerate() {
            let want = table.multi_eval(idx, &point).unwrap();
            assert_abs_diff_eq!(row[f], want, epsilon = 1e-13);
        }
    }

    #[test]
    fn feature_count_cap() {
        // binomial(40, 20) is astronomically past the cap
        assert!(matches!(
            FeatureMap::new(20, 20),
            Err(Error::SizeLimit(_))
        ));
    }

    #[test]
    fn zero_dimensional_basis_is_constant_only() {
        let fm = FeatureMap::new(0, 3).unwrap();
        assert_eq!(fm.count(), 1);
        let mut row = vec![0.0; 1];
        fm.fill_row(&[], &mut row).unwrap();
        assert_eq!(row[0], 1.0);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::MultiIndex;

/// Normalized Hermite polynomials `H_i = He_i / sqrt(i!)`, evaluated via the
/// stable three-term recurrence
///
/// `H_k(x) = (x * H_{k-1}(x) - sqrt(k-1) * H_{k-2}(x)) / sqrt(k)`.
///
/// The recurrence keeps values O(poly(x)) at any degree, where rescaling
/// probabilists' values by `1/sqrt(i!)` would overflow past degree ~150.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HermiteTable {
    max_degree: usize,
    sqrt_k: Vec<f64>,
    inv_sqrt_k: Vec<f64>,
}

impl HermiteTable {
    pub fn new(max_degree: usize) -> Self {
        let sqrt_k: Vec<f64> = (0..=max_degree).map(|k| (k as f64).sqrt()).collect();
        let inv_sqrt_k = sqrt_k
            .iter()
            .map(|&s| if s > 0.0 { 1.0 / s } else { 0.0 })
            .collect();
        HermiteTable {
            max_degree,
            sqrt_k,
            inv_sqrt_k,
        }
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// `H_degree(x)`.
    pub fn eval(&self, degree: usize, x: f64) -> Result<f64> {
        if degree > self.max_degree {
            return Err(Error::DegreeOutOfRange {
                degree,
                max: self.max_degree,
            });
        }
        if degree == 0 {
            return Ok(1.0);
        }
        let mut prev = 1.0;
        let mut cur = x;
        for k in 2..=degree {
            let next = (x * cur - self.sqrt_k[k - 1] * prev) * self.inv_sqrt_k[k];
            prev = cur;
            cur = next;
        }
        Ok(cur)
    }

    /// Fill `out[k] = H_k(x)` for `k = 0..out.len()`.
    pub fn eval_all(&self, x: f64, out: &mut [f64]) -> Result<()> {
        if out.len() > self.max_degree + 1 {
            return Err(Error::DegreeOutOfRange {
                degree: out.len() - 1,
                max: self.max_degree,
            });
        }
        if let Some(v) = out.first_mut() {
            *v = 1.0;
        }
        if let Some(v) = out.get_mut(1) {
            *v = x;
        }
        for k in 2..out.len() {
            out[k] = (x * out[k - 1] - self.sqrt_k[k - 1] * out[k - 2]) * self.inv_sqrt_k[k];
        }
        Ok(())
    }

    /// Product of one-dimensional values, `H_I(x) = prod_i H_{I_i}(x_i)`.
    pub fn multi_eval(&self, index: &MultiIndex, x: &[f64]) -> Result<f64> {
        if index.dim() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: index.dim(),
                got: x.len(),
            });
        }
        let mut acc = 1.0;
        for (&deg, &xi) in index.entries().iter().zip(x) {
            acc *= self.eval(deg as usize, xi)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // Independent oracle: run the probabilists' recurrence in f64 and divide
    // by sqrt(i!) computed separately.
    fn oracle(degree: usize, x: f64) -> f64 {
        let mut he = vec![0.0; degree + 2];
        he[0] = 1.0;
        if degree >= 1 {
            he[1] = x;
        }
        for k in 2..=degree {
            he[k] = x * he[k - 1] - (k as f64 - 1.0) * he[k - 2];
        }
        let fact: f64 = (1..=degree).map(|k| k as f64).product();
        he[degree] / fact.sqrt()
    }

    #[test]
    fn matches_stated_values() {
        let table = HermiteTable::new(8);
        // H_2(0) = -1/sqrt(2)
        assert_abs_diff_eq!(
            table.eval(2, 0.0).unwrap(),
            -std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        // H_0 is identically one
        assert_abs_diff_eq!(table.eval(0, 7.3).unwrap(), 1.0);
        // H_3(1) = -2/sqrt(6)
        assert_abs_diff_eq!(table.eval(3, 1.0).unwrap(), -2.0 / 6.0f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(table.eval(3, 1.0).unwrap(), oracle(3, 1.0), epsilon = 1e-14);
    }

    #[test]
    fn recurrence_matches_factorial_oracle() {
        let table = HermiteTable::new(20);
        for degree in 0..=20 {
            for &x in &[-2.5, -1.0, 0.0, 0.3, 1.7, 4.0] {
                let got = table.eval(degree, x).unwrap();
                let want = oracle(degree, x);
                assert_abs_diff_eq!(got, want, epsilon = 1e-10 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn degree_out_of_range_errors() {
        let table = HermiteTable::new(3);
        assert!(matches!(
            table.eval(4, 0.0),
            Err(Error::DegreeOutOfRange { degree: 4, max: 3 })
        ));
    }

    #[test]
    fn multi_eval_examples() {
        let table = HermiteTable::new(4);
        // all-zero index is the empty product
        let idx = MultiIndex::zeros(3);
        assert_eq!(table.multi_eval(&idx, &[0.4, -2.0, 9.0]).unwrap(), 1.0);
        // H_1(x) = x, so (1,1) at (2,3) gives 6
        let idx = MultiIndex::new(vec![1, 1]);
        assert_abs_diff_eq!(table.multi_eval(&idx, &[2.0, 3.0]).unwrap(), 6.0);
        // H_2(1) = 0
        let idx = MultiIndex::new(vec![2, 0]);
        assert_abs_diff_eq!(table.multi_eval(&idx, &[1.0, 5.0]).unwrap(), 0.0);
        // dimension mismatch
        assert!(table.multi_eval(&idx, &[1.0]).is_err());
    }

    #[test]
    fn deep_recurrence_stays_finite() {
        let table = HermiteTable::new(400);
        let v = table.eval(400, 1.3).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn eval_all_consistent_with_eval() {
        let table = HermiteTable::new(12);
        let mut buf = vec![0.0; 13];
        table.eval_all(0.77, &mut buf).unwrap();
        for (k, &v) in buf.iter().enumerate() {
            assert_abs_diff_eq!(v, table.eval(k, 0.77).unwrap(), epsilon = 1e-14);
        }
    }
}

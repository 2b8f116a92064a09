//! Deterministic label oracles: a synthetic target composed with a fixed
//! adversarial corruption, behind exact query/sample budget accounting.

mod budget;
mod corruption;
mod params;
mod target;

use std::sync::Arc;

use rand::Rng;

use crate::error::Result;
use crate::gaussian::sample_standard_normal;
use crate::metrics::ErrorMode;
use crate::smoothing::truncate_label;

pub use budget::{BudgetLedger, BudgetSnapshot};
pub use corruption::CorruptionSpec;
pub use params::{class_parameters, ClassParams, HALFSPACE_SURFACE_AREA};
pub use target::{Halfspace, LinkFn, TargetSpec};

/// A label function `y(x)` over R^d with query/sample budget accounting.
///
/// The label is always `corruption(target(x), x)`, optionally clamped to
/// `[-label_bound, label_bound]`; evaluating the same point twice yields the
/// same label. The ledger is shared across truncated views, so every access
/// path charges the same counters.
#[derive(Debug, Clone)]
pub struct LabelOracle {
    target: TargetSpec,
    corruption: CorruptionSpec,
    budget: Arc<BudgetLedger>,
    label_bound: Option<f64>,
}

impl LabelOracle {
    pub fn new(
        target: TargetSpec,
        corruption: CorruptionSpec,
        query_cap: Option<u64>,
        sample_cap: Option<u64>,
    ) -> Result<Self> {
        target.validate()?;
        corruption.validate(target.dim())?;
        if !target.is_boolean() && !matches!(
            corruption,
            CorruptionSpec::None
                | CorruptionSpec::AdditiveBounded { .. }
                | CorruptionSpec::ReplaceRegion { .. }
        ) {
            return Err(crate::error::Error::invalid(
                "corruption",
                "sign-flip corruptions require a Boolean target",
            ));
        }
        if target.is_boolean() && !corruption.is_boolean_kind() {
            return Err(crate::error::Error::invalid(
                "corruption",
                "real-valued corruptions break Boolean label semantics",
            ));
        }
        Ok(LabelOracle {
            target,
            corruption,
            budget: Arc::new(BudgetLedger::new(query_cap, sample_cap)),
            label_bound: None,
        })
    }

    pub fn uncorrupted(target: TargetSpec) -> Result<Self> {
        Self::new(target, CorruptionSpec::None, None, None)
    }

    /// A view of the same oracle whose labels are clamped to
    /// `[-bound, bound]`. Shares the budget ledger.
    pub fn with_truncation(&self, bound: f64) -> LabelOracle {
        LabelOracle {
            target: self.target.clone(),
            corruption: self.corruption.clone(),
            budget: Arc::clone(&self.budget),
            label_bound: Some(bound),
        }
    }

    pub fn target(&self) -> &TargetSpec {
        &self.target
    }

    pub fn corruption(&self) -> &CorruptionSpec {
        &self.corruption
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    pub fn is_boolean(&self) -> bool {
        self.target.is_boolean() && self.corruption.is_boolean_kind()
    }

    pub fn budget(&self) -> &BudgetLedger {
        &self.budget
    }

    pub fn label_bound(&self) -> Option<f64> {
        self.label_bound
    }

    fn label_at(&self, x: &[f64]) -> Result<f64> {
        let clean = self.target.eval(x)?;
        let corrupted = self.corruption.apply(x, clean);
        Ok(match self.label_bound {
            Some(b) => truncate_label(corrupted, b),
            None => corrupted,
        })
    }

    /// Label at a chosen point; charges one query.
    pub fn query(&self, x: &[f64]) -> Result<f64> {
        self.budget.charge_query()?;
        self.label_at(x)
    }

    /// A fresh labeled Gaussian example; charges one sample.
    pub fn draw_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vec<f64>, f64)> {
        self.budget.charge_sample()?;
        let x = sample_standard_normal(self.dim(), rng);
        let y = self.label_at(&x)?;
        Ok((x, y))
    }

    /// Harness-side label access that bypasses the ledger (held-out test
    /// sets, opt estimation).
    pub fn label_unmetered(&self, x: &[f64]) -> Result<f64> {
        self.label_at(x)
    }

    /// The clean (uncorrupted, untruncated) target value.
    pub fn clean_target(&self, x: &[f64]) -> Result<f64> {
        self.target.eval(x)
    }
}

/// Monte-Carlo estimate of the clean planted target's error against the
/// corrupted label: a certified upper bound on `opt` for every class
/// containing the target. Budget-exempt by design.
pub fn opt_error<R: Rng + ?Sized>(
    o: &LabelOracle,
    mode: ErrorMode,
    n: usize,
    rng: &mut R,
) -> Result<f64> {
    let d = o.dim();
    let mut total = 0.0;
    for _ in 0..n {
        let x = sample_standard_normal(d, rng);
        let clean = o.clean_target(&x)?;
        let label = o.label_unmetered(&x)?;
        total += match mode {
            ErrorMode::L22 => (clean - label) * (clean - label),
            ErrorMode::ZeroOne => {
                if clean == label {
                    0.0
                } else {
                    1.0
                }
            }
            ErrorMode::L1 => (clean - label).abs(),
        };
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;

    fn e1(d: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[0] = 1.0;
        v
    }

    #[test]
    fn query_counts_and_determinism() {
        let o = LabelOracle::new(
            TargetSpec::Ltf {
                weight: e1(3),
                threshold: 0.0,
            },
            CorruptionSpec::HashFlip {
                rate: 0.2,
                seed: 4,
                cell_size: 1e-3,
            },
            None,
            None,
        )
        .unwrap();
        let x = [0.4, -1.0, 2.0];
        let a = o.query(&x).unwrap();
        let b = o.query(&x).unwrap();
        assert_eq!(a, b);
        assert_eq!(o.budget().queries_used(), 2);
    }

    #[test]
    fn uncorrupted_query_equals_target() {
        let o = LabelOracle::uncorrupted(TargetSpec::Relu { weight: e1(2) }).unwrap();
        let x = [1.5, -0.2];
        assert_eq!(o.query(&x).unwrap(), o.target().eval(&x).unwrap());
    }

    #[test]
    fn query_cap_contract() {
        let o =
            LabelOracle::new(TargetSpec::Relu { weight: e1(2) }, CorruptionSpec::None, Some(5), None)
                .unwrap();
        let x = [0.0, 0.0];
        for _ in 0..5 {
            o.query(&x).unwrap();
        }
        assert!(o.query(&x).is_err());
        assert_eq!(o.budget().queries_used(), 5);
    }

    #[test]
    fn sample_stream_deterministic_and_symmetric() {
        let o = LabelOracle::uncorrupted(TargetSpec::Ltf {
            weight: e1(4),
            threshold: 0.0,
        })
        .unwrap();
        let seq_a: Vec<_> = {
            let mut rng = derive_rng(9, 0);
            (0..10).map(|_| o.draw_sample(&mut rng).unwrap()).collect()
        };
        let seq_b: Vec<_> = {
            let mut rng = derive_rng(9, 0);
            (0..10).map(|_| o.draw_sample(&mut rng).unwrap()).collect()
        };
        assert_eq!(seq_a, seq_b);

        // symmetry: mean label of a clean homogeneous LTF near zero
        let mut rng = derive_rng(10, 0);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| o.draw_sample(&mut rng).unwrap().1)
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn hash_flip_disagreement_matches_rate() {
        let o = LabelOracle::new(
            TargetSpec::Ltf {
                weight: e1(4),
                threshold: 0.0,
            },
            CorruptionSpec::HashFlip {
                rate: 0.1,
                seed: 3,
                cell_size: 1e-3,
            },
            None,
            None,
        )
        .unwrap();
        let mut rng = derive_rng(11, 0);
        let n = 10_000;
        let mut disagree = 0usize;
        for _ in 0..n {
            let (x, y) = o.draw_sample(&mut rng).unwrap();
            if y != o.clean_target(&x).unwrap() {
                disagree += 1;
            }
        }
        let rate = disagree as f64 / n as f64;
        assert!((rate - 0.1).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn opt_error_examples() {
        let mut rng = derive_rng(12, 0);
        // no corruption: exactly zero
        let clean = LabelOracle::uncorrupted(TargetSpec::Relu { weight: e1(3) }).unwrap();
        assert_eq!(opt_error(&clean, ErrorMode::L22, 2_000, &mut rng).unwrap(), 0.0);

        // hash flip at 5%: zero-one error concentrates at the rate
        let flipped = LabelOracle::new(
            TargetSpec::Ltf {
                weight: e1(3),
                threshold: 0.0,
            },
            CorruptionSpec::HashFlip {
                rate: 0.05,
                seed: 21,
                cell_size: 1e-3,
            },
            None,
            None,
        )
        .unwrap();
        let z = opt_error(&flipped, ErrorMode::ZeroOne, 100_000, &mut rng).unwrap();
        assert!((z - 0.05).abs() < 0.01, "zero-one {z}");

        // additive 0.1 * sign(x2): l22 error is exactly 0.01
        let additive = LabelOracle::new(
            TargetSpec::Relu { weight: e1(3) },
            CorruptionSpec::AdditiveBounded {
                amplitude: 0.1,
                normal: vec![0.0, 1.0, 0.0],
            },
            None,
            None,
        )
        .unwrap();
        let l = opt_error(&additive, ErrorMode::L22, 100_000, &mut rng).unwrap();
        assert!((l - 0.01).abs() < 0.003, "l22 {l}");
    }

    #[test]
    fn function_semantics_over_the_zoo() {
        let specs: Vec<TargetSpec> = vec![
            TargetSpec::Relu { weight: e1(3) },
            TargetSpec::Ltf {
                weight: e1(3),
                threshold: 0.2,
            },
            TargetSpec::LipschitzSim {
                weight: e1(3),
                link: LinkFn::Tanh,
            },
            TargetSpec::SumRelus {
                weights: vec![e1(3), vec![0.0, 1.0, 0.0]],
            },
        ];
        let mut rng = derive_rng(13, 0);
        for spec in specs {
            let boolean = spec.is_boolean();
            let corr = if boolean {
                CorruptionSpec::HashFlip {
                    rate: 0.1,
                    seed: 7,
                    cell_size: 1e-3,
                }
            } else {
                CorruptionSpec::AdditiveBounded {
                    amplitude: 0.2,
                    normal: e1(3),
                }
            };
            let o = LabelOracle::new(spec, corr, None, None).unwrap();
            let x = sample_standard_normal(3, &mut rng);
            let first = o.query(&x).unwrap();
            for _ in 0..99 {
                assert_eq!(o.query(&x).unwrap(), first);
            }
        }
    }
}

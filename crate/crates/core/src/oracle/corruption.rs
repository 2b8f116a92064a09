use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_cell_size() -> f64 {
    1e-3
}

/// A fixed, deterministic corruption of clean labels: always a function of x
/// alone, so repeated evaluation at the same point returns the same value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorruptionSpec {
    None,
    /// Boolean: flip the sign wherever `normal . x + offset > 0`.
    RegionFlip { normal: Vec<f64>, offset: f64 },
    /// Boolean: flip wherever a seeded hash of the grid cell containing x
    /// falls below `rate`. Cells of side `cell_size` partition R^d, so the
    /// flip set is a fixed region that statistically matches an i.i.d. flip
    /// rate.
    HashFlip {
        rate: f64,
        seed: u64,
        #[serde(default = "default_cell_size")]
        cell_size: f64,
    },
    /// Real-valued: add `amplitude * sign(normal . x)`.
    AdditiveBounded { amplitude: f64, normal: Vec<f64> },
    /// Real-valued: replace the label by `value` wherever
    /// `normal . x + offset > 0`.
    ReplaceRegion {
        normal: Vec<f64>,
        offset: f64,
        value: f64,
    },
}

impl CorruptionSpec {
    /// Does this corruption keep Boolean labels Boolean?
    pub fn is_boolean_kind(&self) -> bool {
        matches!(
            self,
            CorruptionSpec::None | CorruptionSpec::RegionFlip { .. } | CorruptionSpec::HashFlip { .. }
        )
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let check_normal = |v: &[f64]| -> Result<()> {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite("corruption normal".into()));
            }
            Ok(())
        };
        match self {
            CorruptionSpec::None => Ok(()),
            CorruptionSpec::RegionFlip { normal, offset } => {
                check_normal(normal)?;
                if !offset.is_finite() {
                    return Err(Error::NonFinite("region offset".into()));
                }
                Ok(())
            }
            CorruptionSpec::HashFlip {
                rate, cell_size, ..
            } => {
                if !(0.0..=1.0).contains(rate) {
                    return Err(Error::invalid("rate", "must lie in [0, 1]"));
                }
                if !cell_size.is_finite() || *cell_size <= 0.0 {
                    return Err(Error::invalid("cell_size", "must be positive"));
                }
                Ok(())
            }
            CorruptionSpec::AdditiveBounded { amplitude, normal } => {
                check_normal(normal)?;
                if !amplitude.is_finite() {
                    return Err(Error::NonFinite("amplitude".into()));
                }
                Ok(())
            }
            CorruptionSpec::ReplaceRegion {
                normal,
                offset,
                value,
            } => {
                check_normal(normal)?;
                if !offset.is_finite() || !value.is_finite() {
                    return Err(Error::NonFinite("replace region parameters".into()));
                }
                Ok(())
            }
        }
    }

    /// Corrupted label at `x` given the clean label.
    pub fn apply(&self, x: &[f64], clean: f64) -> f64 {
        match self {
            CorruptionSpec::None => clean,
            CorruptionSpec::RegionFlip { normal, offset } => {
                let t: f64 = normal.iter().zip(x).map(|(a, b)| a * b).sum();
                if t + offset > 0.0 {
                    -clean
                } else {
                    clean
                }
            }
            CorruptionSpec::HashFlip {
                rate,
                seed,
                cell_size,
            } => {
                if cell_flips(x, *seed, *cell_size, *rate) {
                    -clean
                } else {
                    clean
                }
            }
            CorruptionSpec::AdditiveBounded { amplitude, normal } => {
                let t: f64 = normal.iter().zip(x).map(|(a, b)| a * b).sum();
                clean + amplitude * if t >= 0.0 { 1.0 } else { -1.0 }
            }
            CorruptionSpec::ReplaceRegion {
                normal,
                offset,
                value,
            } => {
                let t: f64 = normal.iter().zip(x).map(|(a, b)| a * b).sum();
                if t + offset > 0.0 {
                    *value
                } else {
                    clean
                }
            }
        }
    }
}

fn cell_flips(x: &[f64], seed: u64, cell_size: f64, rate: f64) -> bool {
    let mut h = fnv1a64_seed(seed);
    for &xi in x {
        let cell = (xi / cell_size).floor() as i64;
        h = fnv1a64_step(h, &cell.to_le_bytes());
    }
    // map the hash to [0, 1) with 53-bit precision
    let u = (h >> 11) as f64 / (1u64 << 53) as f64;
    u < rate
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a64_seed(seed: u64) -> u64 {
    fnv1a64_step(FNV_OFFSET, &seed.to_le_bytes())
}

fn fnv1a64_step(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

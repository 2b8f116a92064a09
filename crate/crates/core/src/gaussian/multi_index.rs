use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A multi-index over the coordinates of the ambient space, ordered graded
/// lexicographically: first by total degree, then entrywise left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `C(n, k)` with overflow detection.
pub fn binomial_checked(n: u64, k: u64) -> Result<u64> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul((n - i) as u128)
            .ok_or_else(|| Error::SizeLimit(format!("binomial({n}, {k}) overflows")))?;
        acc /= (i + 1) as u128;
    }
    u64::try_from(acc).map_err(|_| Error::SizeLimit(format!("binomial({n}, {k}) overflows u64")))
}

/// All multi-indices of dimension `dim` with total degree at most
/// `max_degree`, in graded lexicographic order.
pub fn enumerate_multi_indices(dim: usize, max_degree: u32) -> Result<Vec<MultiIndex>> {
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    let count = binomial_checked(dim as u64 + max_degree as u64, dim as u64)?;
    let count = usize::try_from(count)
        .map_err(|_| Error::SizeLimit(format!("{count} multi-indices exceed usize")))?;
    let mut out = Vec::with_capacity(count);
    let mut buf = vec![0u32; dim];
    for degree in 0..=max_degree {
        fill_compositions(&mut buf, 0, degree, &mut out);
    }
    debug_assert_eq!(out.len(), count);
    Ok(out)
}

fn fill_compositions(buf: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        out.push(MultiIndex(buf.clone()));
        return;
    }
    for v in 0..=remaining {
        buf[pos] = v;
        fill_compositions(buf, pos + 1, remaining - v, out);
    }
}

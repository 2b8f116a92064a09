use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Resource, Result};

/// Monotone query/sample counters with optional caps. Charging is atomic:
/// a charge that would exceed a cap fails without incrementing, so the
/// counters never overrun.
#[derive(Debug, Default)]
pub struct BudgetLedger {
    queries_used: AtomicU64,
    samples_used: AtomicU64,
    query_cap: Option<u64>,
    sample_cap: Option<u64>,
}

/// Point-in-time view of a ledger, used in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetSnapshot {
    pub queries_used: u64,
    pub samples_used: u64,
    pub query_cap: Option<u64>,
    pub sample_cap: Option<u64>,
}

impl BudgetLedger {
    pub fn new(query_cap: Option<u64>, sample_cap: Option<u64>) -> Self {
        BudgetLedger {
            queries_used: AtomicU64::new(0),
            samples_used: AtomicU64::new(0),
            query_cap,
            sample_cap,
        }
    }

    pub fn unlimited() -> Self {
        Self::new(None, None)
    }

    pub fn charge_query(&self) -> Result<()> {
        charge(&self.queries_used, self.query_cap, Resource::Queries)
    }

    pub fn charge_sample(&self) -> Result<()> {
        charge(&self.samples_used, self.sample_cap, Resource::Samples)
    }

    pub fn queries_used(&self) -> u64 {
        self.queries_used.load(Ordering::SeqCst)
    }

    pub fn samples_used(&self) -> u64 {
        self.samples_used.load(Ordering::SeqCst)
    }

    pub fn remaining_queries(&self) -> Option<u64> {
        self.query_cap.map(|c| c.saturating_sub(self.queries_used()))
    }

    pub fn remaining_samples(&self) -> Option<u64> {
        self.sample_cap.map(|c| c.saturating_sub(self.samples_used()))
    }

    pub fn snapshot(&self) -> BudgetSnapshot {
        BudgetSnapshot {
            queries_used: self.queries_used(),
            samples_used: self.samples_used(),
            query_cap: self.query_cap,
            sample_cap: self.sample_cap,
        }
    }
}

fn charge(counter: &AtomicU64, cap: Option<u64>, resource: Resource) -> Result<()> {
    match cap {
        None => {
            counter.fetch_add(1, Ordering::SeqCst);
            Ok(())
        }
        Some(cap) => counter
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| {
                if n < cap {
                    Some(n + 1)
                } else {
                    None
                }
            })
            .map(|_| ())
            .map_err(|_| Error::BudgetExhausted { resource, cap }),
    }
}

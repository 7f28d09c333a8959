use crate::error::{Error, Result};

/// Step budget shared by a single fueled computation.
///
/// One unit is one VM step, or one table/built-in access. Everything that
/// consumes fuel does so in a fixed order, so two runs with budgets that
/// both suffice observe identical event sequences.
#[derive(Debug, Clone)]
pub struct Fuel {
    limit: u64,
    used: u64,
}

impl Fuel {
    pub fn new(limit: u64) -> Self {
        Fuel { limit, used: 0 }
    }

    pub fn unlimited() -> Self {
        Fuel::new(u64::MAX)
    }

    pub fn tick(&mut self) -> Result<()> {
        self.spend(1)
    }

    pub fn spend(&mut self, n: u64) -> Result<()> {
        match self.used.checked_add(n) {
            Some(total) if total <= self.limit => {
                self.used = total;
                Ok(())
            }
            _ => {
                self.used = self.limit;
                Err(Error::FuelExhausted)
            }
        }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.limit - self.used
    }

    pub fn is_empty(&self) -> bool {
        self.used >= self.limit
    }

    /// Runs `f` against a sub-budget of at most `budget` units, charging
    /// whatever the sub-computation used to `self`.
    pub fn scoped<T>(&mut self, budget: u64, f: impl FnOnce(&mut Fuel) -> T) -> (T, bool) {
        let cap = budget.min(self.remaining());
        let mut inner = Fuel::new(cap);
        let out = f(&mut inner);
        // the inner budget never exceeds what remains here
        self.used += inner.used;
        (out, cap < budget)
    }
}

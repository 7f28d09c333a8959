//! Incremental, shareable computations with cache-independent fuel
//! accounting: an answer is always charged the cost at which a fresh run
//! would first have produced it.

use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::fuel::Fuel;

pub struct Progress<S> {
    inner: Mutex<(S, u64)>,
}

impl<S: Clone> Progress<S> {
    pub fn new(initial: S) -> Self {
        Progress {
            inner: Mutex::new((initial, 0)),
        }
    }

    /// Advances the state with `step` until `query` answers. `query`
    /// returns the answer with the cumulative cost stamp at which it became
    /// available; `step` receives the cumulative cost before it runs so it
    /// can stamp what it produces.
    pub fn run<T>(
        &self,
        fuel: &mut Fuel,
        query: impl Fn(&S) -> Result<Option<(T, u64)>>,
        step: impl Fn(&mut S, u64, &mut Fuel) -> Result<()>,
    ) -> Result<T> {
        let mut guard = self.inner.lock().expect("progress poisoned");
        loop {
            if let Some((answer, stamp)) = query(&guard.0)? {
                fuel.spend(stamp)?;
                return Ok(answer);
            }
            let spent = guard.1;
            if spent >= fuel.remaining() {
                let _ = fuel.spend(fuel.remaining().saturating_add(1));
                return Err(Error::FuelExhausted);
            }
            let mut next = guard.0.clone();
            let mut local = Fuel::new(fuel.remaining() - spent);
            match step(&mut next, spent, &mut local) {
                Ok(()) => {
                    // a step that costs nothing would stall the loop
                    let used = local.used().max(1);
                    guard.1 = spent + used;
                    guard.0 = next;
                }
                Err(Error::FuelExhausted) => {
                    let _ = fuel.spend(fuel.remaining().saturating_add(1));
                    return Err(Error::FuelExhausted);
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Read-only view of the state reached so far.
    pub fn peek<T>(&self, f: impl FnOnce(&S) -> T) -> T {
        f(&self.inner.lock().expect("progress poisoned").0)
    }
}

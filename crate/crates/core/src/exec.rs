//! Index-parallel map abstraction.
//!
//! Builders in this crate express their work as a pure function of a task
//! index and hand it to a [`TaskMap`]. Results always come back in index
//! order, so output does not depend on the executor or its worker count.

use alloc::vec::Vec;

pub trait TaskMap {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs tasks one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl TaskMap for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

//! Counting semaphore that also tracks the peak number of holders.

use std::sync::{Condvar, Mutex};

#[derive(Debug)]
pub struct Semaphore {
    capacity: usize,
    state: Mutex<State>,
    freed: Condvar,
}

#[derive(Debug, Default)]
struct State {
    in_use: usize,
    peak: usize,
}

pub struct Permit<'a> {
    sem: &'a Semaphore,
}

impl Semaphore {
    /// A capacity of 0 is treated as 1.
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            state: Mutex::new(State::default()),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut state = self.state.lock().expect("semaphore poisoned");
        while state.in_use >= self.capacity {
            state = self.freed.wait(state).expect("semaphore poisoned");
        }
        state.in_use += 1;
        state.peak = state.peak.max(state.in_use);
        Permit { sem: self }
    }

    /// Highest number of simultaneous permits seen so far.
    pub fn peak(&self) -> usize {
        self.state.lock().expect("semaphore poisoned").peak
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut state = self.sem.state.lock().expect("semaphore poisoned");
        state.in_use -= 1;
        self.sem.freed.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;
    use std::time::Duration;

    #[test]
    fn never_exceeds_capacity() {
        let sem = Arc::new(Semaphore::new(3));
        std::thread::scope(|s| {
            for _ in 0..12 {
                let sem = Arc::clone(&sem);
                s.spawn(move || {
                    let _p = sem.acquire();
                    std::thread::sleep(Duration::from_millis(5));
                });
            }
        });
        assert!(sem.peak() <= 3);
        assert!(sem.peak() >= 1);
    }
}

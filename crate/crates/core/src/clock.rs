use std::time::Instant;

/// Monotonic seconds source used for stage timings.
pub trait Clock: Send + Sync {
    fn now(&self) -> f64;

    fn since(&self, start: f64) -> f64 {
        (self.now() - start).max(0.0)
    }
}

pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }
}

/// Always reports zero elapsed time; makes responses reproducible.
#[derive(Debug, Default, Clone, Copy)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn now(&self) -> f64 {
        0.0
    }
}

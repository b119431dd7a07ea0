//! Bounded retry with exponential backoff, shared by the HTTP clients.

use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Errors that know whether another attempt could succeed.
pub trait Retryable {
    fn is_retryable(&self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Total attempts including the first one.
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay_ms: 500,
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    /// No waiting between attempts; for tests.
    pub fn immediate(max_attempts: u32) -> Self {
        Self {
            max_attempts,
            base_delay_ms: 0,
            multiplier: 1.0,
        }
    }

    /// Delay before attempt `attempt + 1`, where `attempt` counts from 0.
    pub fn delay(&self, attempt: u32) -> Duration {
        let ms = self.base_delay_ms as f64 * self.multiplier.powi(attempt as i32);
        Duration::from_millis(ms.min(60_000.0) as u64)
    }

    /// Run `op` until it succeeds, fails with a non-retryable error, or
    /// attempts run out. Returns the last error and the attempt count.
    pub fn run<T, E, F>(&self, mut op: F) -> (Result<T, E>, u32)
    where
        E: Retryable + std::fmt::Display,
        F: FnMut() -> Result<T, E>,
    {
        let attempts = self.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            match op() {
                Ok(v) => return (Ok(v), attempt + 1),
                Err(e) if e.is_retryable() && attempt + 1 < attempts => {
                    let wait = self.delay(attempt);
                    tracing::warn!(attempt = attempt + 1, error = %e, ?wait, "retrying request");
                    std::thread::sleep(wait);
                    attempt += 1;
                }
                Err(e) => return (Err(e), attempt + 1),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct E(bool);
    impl std::fmt::Display for E {
        fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
            write!(f, "e({})", self.0)
        }
    }
    impl Retryable for E {
        fn is_retryable(&self) -> bool {
            self.0
        }
    }

    #[test]
    fn retries_until_exhausted() {
        let mut calls = 0;
        let (res, attempts) = RetryPolicy::immediate(3).run(|| -> Result<(), E> {
            calls += 1;
            Err(E(true))
        });
        assert!(res.is_err());
        assert_eq!((calls, attempts), (3, 3));
    }

    #[test]
    fn fatal_errors_stop_immediately() {
        let mut calls = 0;
        let (res, _) = RetryPolicy::immediate(3).run(|| -> Result<(), E> {
            calls += 1;
            Err(E(false))
        });
        assert!(res.is_err());
        assert_eq!(calls, 1);
    }

    #[test]
    fn succeeds_after_transient_failure() {
        let mut calls = 0;
        let (res, attempts) = RetryPolicy::immediate(3).run(|| {
            calls += 1;
            if calls < 2 {
                Err(E(true))
            } else {
                Ok(7)
            }
        });
        assert_eq!(res.unwrap(), 7);
        assert_eq!(attempts, 2);
    }

    #[test]
    fn backoff_is_exponential() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay(0), Duration::from_millis(500));
        assert_eq!(p.delay(1), Duration::from_millis(1000));
        assert_eq!(p.delay(2), Duration::from_millis(2000));
    }
}

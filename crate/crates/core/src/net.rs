//! Retry and rate-limit primitives shared by the chat gateway and the
//! toxicity client.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

/// Exponential backoff policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Total attempts including the first one. Must be at least 1.
    pub max_attempts: u32,
    #[serde(with = "millis")]
    pub base_backoff: Duration,
    #[serde(with = "millis", default = "default_max_backoff")]
    pub max_backoff: Duration,
}

fn default_max_backoff() -> Duration {
    Duration::from_secs(60)
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            base_backoff: Duration::from_millis(500),
            max_backoff: default_max_backoff(),
        }
    }
}

/// Whether an error may succeed on a later attempt.
pub trait Retryable {
    fn is_retryable(&self) -> bool;

    /// Server-provided hint, if any.
    fn retry_after(&self) -> Option<Duration> {
        None
    }
}

/// Result of running an operation under a [`RetryPolicy`].
#[derive(Debug)]
pub struct Attempted<T, E> {
    pub result: Result<T, E>,
    pub attempts: u32,
    /// Errors from attempts that were followed by a retry.
    pub retried: Vec<E>,
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u32.checked_shl(retry.saturating_sub(1)).unwrap_or(u32::MAX);
        self.base_backoff
            .checked_mul(factor)
            .unwrap_or(self.max_backoff)
            .min(self.max_backoff)
    }

    pub fn run<T, E, F>(&self, limiter: Option<&RateLimiter>, mut op: F) -> Attempted<T, E>
    where
        E: Retryable,
        F: FnMut(u32) -> Result<T, E>,
    {
        let max = self.max_attempts.max(1);
        let mut retried = Vec::new();
        let mut attempt = 1;
        loop {
            if let Some(l) = limiter {
                l.acquire();
            }
            match op(attempt) {
                Ok(v) => {
                    return Attempted {
                        result: Ok(v),
                        attempts: attempt,
                        retried,
                    }
                }
                Err(e) if e.is_retryable() && attempt < max => {
                    let wait = e
                        .retry_after()
                        .map(|hint| hint.min(self.max_backoff))
                        .unwrap_or_else(|| self.backoff(attempt));
                    retried.push(e);
                    std::thread::sleep(wait);
                    attempt += 1;
                }
                Err(e) => {
                    return Attempted {
                        result: Err(e),
                        attempts: attempt,
                        retried,
                    }
                }
            }
        }
    }
}

/// Spaces request starts evenly to stay under a requests-per-minute cap.
/// Safe to share between threads.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_minute(requests: f64) -> Self {
        let interval = if requests.is_finite() && requests > 0.0 {
            Duration::from_secs_f64(60.0 / requests)
        } else {
            Duration::ZERO
        };
        Self {
            interval,
            next_slot: Mutex::new(None),
        }
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    /// Blocks until the caller may start a request.
    pub fn acquire(&self) {
        if self.interval.is_zero() {
            return;
        }
        let wait = {
            let mut slot = self.next_slot.lock().unwrap_or_else(|p| p.into_inner());
            let now = Instant::now();
            let start = match *slot {
                Some(t) if t > now => t,
                _ => now,
            };
            *slot = Some(start + self.interval);
            start.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

/// Parses a `Retry-After` header given in seconds.
pub fn parse_retry_after(value: Option<&str>) -> Option<Duration> {
    value?.trim().parse::<f64>().ok().filter(|s| *s >= 0.0).map(Duration::from_secs_f64)
}

pub(crate) mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

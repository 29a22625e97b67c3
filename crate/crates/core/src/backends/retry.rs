use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Exponential backoff with seeded jitter.
///
/// The wait after failed attempt `k` (0-based) is `min(base · 2^k, max)` plus a
/// jitter drawn uniformly from `[0, that / 2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base: Duration,
    pub max: Duration,
    pub seed: u64,
}

impl RetryPolicy {
    pub fn schedule(&self) -> Vec<Duration> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.max_retries)
            .map(|k| {
                let exp = self.base.saturating_mul(1u32.checked_shl(k).unwrap_or(u32::MAX));
                let capped = exp.min(self.max);
                let jitter = capped.mul_f64(rng.random::<f64>() / 2.0);
                capped + jitter
            })
            .collect()
    }

    /// Runs `op` until it succeeds, fails with a non-retryable error, or the
    /// retry budget is spent. Returns the value and the number of attempts.
    pub fn run<T>(
        &self,
        mut op: impl FnMut(u32) -> Result<T>,
        mut on_retry: impl FnMut(u32, &Error, Duration),
    ) -> Result<(T, u32)> {
        let schedule = self.schedule();
        let mut log = Vec::new();
        for attempt in 1..=self.max_retries + 1 {
            match op(attempt) {
                Ok(value) => return Ok((value, attempt)),
                Err(e) if e.is_retryable() => {
                    log.push(format!("attempt {attempt}: {e}"));
                    if let Some(&delay) = schedule.get(attempt as usize - 1) {
                        on_retry(attempt, &e, delay);
                        if !delay.is_zero() {
                            std::thread::sleep(delay);
                        }
                    }
                }
                Err(e) => return Err(e),
            }
        }
        Err(Error::RetriesExhausted {
            attempts: self.max_retries + 1,
            log,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy(max_retries: u32) -> RetryPolicy {
        RetryPolicy {
            max_retries,
            base: Duration::ZERO,
            max: Duration::ZERO,
            seed: 9,
        }
    }

    fn transient() -> Error {
        Error::Retryable {
            endpoint: "e".into(),
            message: "503".into(),
        }
    }

    #[test]
    fn succeeds_after_transient_failures() {
        let mut calls = 0;
        let (v, attempts) = policy(3)
            .run(
                |_| {
                    calls += 1;
                    if calls < 3 {
                        Err(transient())
                    } else {
                        Ok("done")
                    }
                },
                |_, _, _| {},
            )
            .unwrap();
        assert_eq!((v, attempts), ("done", 3));
    }

    #[test]
    fn gives_up_with_attempt_log() {
        let err = policy(2).run(|_| Err::<(), _>(transient()), |_, _, _| {}).unwrap_err();
        let Error::RetriesExhausted { attempts, log } = err else {
            panic!("wrong error");
        };
        assert_eq!(attempts, 3);
        assert_eq!(log.len(), 3);
    }

    #[test]
    fn auth_errors_are_not_retried() {
        let mut calls = 0;
        let err = policy(5)
            .run(
                |_| {
                    calls += 1;
                    Err::<(), _>(Error::Auth {
                        endpoint: "e".into(),
                        message: "401".into(),
                    })
                },
                |_, _, _| {},
            )
            .unwrap_err();
        assert!(matches!(err, Error::Auth { .. }));
        assert_eq!(calls, 1);
    }

    #[test]
    fn schedule_is_seeded_and_grows() {
        let p = RetryPolicy {
            max_retries: 5,
            base: Duration::from_millis(100),
            max: Duration::from_secs(1),
            seed: 42,
        };
        let a = p.schedule();
        assert_eq!(a, p.schedule());
        assert_ne!(a, RetryPolicy { seed: 43, ..p.clone() }.schedule());
        for (k, d) in a.iter().enumerate() {
            let floor = Duration::from_millis(100 * (1 << k)).min(Duration::from_secs(1));
            assert!(*d >= floor && *d <= floor.mul_f64(1.5), "{k}: {d:?}");
        }
    }
}

use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Token bucket shared by every worker talking to one backend. Holds a single
/// token, so requests are evenly spaced with no burst.
#[derive(Debug)]
pub struct RateLimiter {
    per_second: f64,
    capacity: f64,
    state: Mutex<Bucket>,
}

#[derive(Debug)]
struct Bucket {
    tokens: f64,
    last: Instant,
}

impl RateLimiter {
    /// `requests_per_minute == 0` disables limiting.
    pub fn per_minute(requests_per_minute: u32) -> Self {
        let per_second = requests_per_minute as f64 / 60.0;
        Self {
            per_second,
            capacity: 1.0,
            state: Mutex::new(Bucket {
                tokens: 1.0,
                last: Instant::now(),
            }),
        }
    }

    pub fn unlimited() -> Self {
        Self::per_minute(0)
    }

    pub fn is_unlimited(&self) -> bool {
        self.per_second == 0.0
    }

    /// Blocks the calling thread until a token is available.
    pub fn acquire(&self) {
        if self.is_unlimited() {
            return;
        }
        loop {
            let wait = {
                let mut bucket = self.state.lock().unwrap_or_else(|e| e.into_inner());
                let now = Instant::now();
                let elapsed = now.duration_since(bucket.last).as_secs_f64();
                bucket.tokens = (bucket.tokens + elapsed * self.per_second).min(self.capacity);
                bucket.last = now;
                if bucket.tokens >= 1.0 {
                    bucket.tokens -= 1.0;
                    return;
                }
                (1.0 - bucket.tokens) / self.per_second
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unlimited_never_blocks() {
        let rl = RateLimiter::unlimited();
        let start = Instant::now();
        for _ in 0..10_000 {
            rl.acquire();
        }
        assert!(start.elapsed() < Duration::from_secs(1));
    }

    #[test]
    fn spaces_requests_after_the_burst() {
        // 1200 rpm = one token per 50 ms; the first is free, the next three take ~150 ms.
        let rl = RateLimiter::per_minute(1200);
        let start = Instant::now();
        for _ in 0..4 {
            rl.acquire();
        }
        let elapsed = start.elapsed();
        assert!(elapsed >= Duration::from_millis(140), "{elapsed:?}");
    }
}

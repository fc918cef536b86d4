//! Fixed-window request rate limiting.
//!
//! One counter per (client key, endpoint class, current minute). The clock
//! is injectable so the limiter's boundary behavior is testable without
//! waiting out real windows.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

/// Seconds-since-epoch supplier.
pub type TimeSource = Arc<dyn Fn() -> u64 + Send + Sync>;

/// Endpoint classes with distinct budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EndpointClass {
    /// Search/list endpoints: 100 requests per minute.
    Search,
    /// Install-info endpoints: 500 requests per minute.
    Install,
    /// Everything else: 1000 requests per minute.
    Default,
}

impl EndpointClass {
    pub fn limit(self) -> u32 {
        match self {
            EndpointClass::Search => 100,
            EndpointClass::Install => 500,
            EndpointClass::Default => 1000,
        }
    }
}

/// The verdict for one request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Allow,
    /// Denied; retry after this many seconds (the window remainder).
    Deny { retry_after_secs: u64 },
}

pub struct RateLimiter {
    windows: Mutex<HashMap<(String, EndpointClass), (u64, u32)>>,
    time: TimeSource,
}

impl RateLimiter {
    pub fn new(time: TimeSource) -> RateLimiter {
        RateLimiter {
            windows: Mutex::new(HashMap::new()),
            time,
        }
    }

    pub fn with_system_clock() -> RateLimiter {
        Self::new(Arc::new(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        }))
    }

    /// Count one request for (client, class); deny once the class budget for
    /// the current minute is spent.
    pub fn check(&self, client_key: &str, class: EndpointClass) -> Decision {
        let now = (self.time)();
        let minute = now / 60;
        let mut windows = self.windows.lock().expect("rate limiter lock");
        let entry = windows
            .entry((client_key.to_string(), class))
            .or_insert((minute, 0));
        if entry.0 != minute {
            *entry = (minute, 0);
        }
        if entry.1 >= class.limit() {
            return Decision::Deny {
                retry_after_secs: (60 - now % 60).max(1),
            };
        }
        entry.1 += 1;
        Decision::Allow
    }
}

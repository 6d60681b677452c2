use std::collections::BTreeMap;

use super::config::{DutyCycleConfig, SubBand};
use crate::engine::time::{Duration, TimeInstant};

/// Airtime credit that refills at `rate` seconds per second up to `capacity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DutyBucket {
    rate: f64,
    capacity_s: f64,
    tokens_s: f64,
    last: TimeInstant,
}

impl DutyBucket {
    /// Starts full.
    pub fn new(rate: f64, window_s: f64) -> Self {
        DutyBucket {
            rate,
            capacity_s: rate * window_s,
            tokens_s: rate * window_s,
            last: TimeInstant::ZERO,
        }
    }

    fn tokens_at(&self, t: TimeInstant) -> f64 {
        let dt = t.saturating_since(self.last).as_secs_f64();
        (self.tokens_s + self.rate * dt).min(self.capacity_s)
    }

    pub fn allows(&self, at: TimeInstant, airtime: Duration) -> bool {
        self.tokens_at(at) >= airtime.as_secs_f64()
    }

    pub fn consume(&mut self, at: TimeInstant, airtime: Duration) {
        let t = at.max(self.last);
        self.tokens_s = self.tokens_at(t) - airtime.as_secs_f64();
        self.last = t;
    }

    /// First instant at or after `at` with enough credit for `airtime`.
    pub fn earliest(&self, at: TimeInstant, airtime: Duration) -> TimeInstant {
        let need = airtime.as_secs_f64() - self.tokens_at(at);
        if need <= 0.0 {
            return at;
        }
        at.max(self.last) + Duration::from_micros((need / self.rate * 1e6).ceil() as u64)
    }
}

/// One bucket per sub-band; a disabled limiter always allows.
#[derive(Debug, Clone)]
pub struct DutyLimiter {
    enabled: bool,
    buckets: BTreeMap<SubBand, DutyBucket>,
}

impl DutyLimiter {
    pub fn new(config: &DutyCycleConfig) -> Self {
        let buckets = [SubBand::G, SubBand::G1, SubBand::G3, SubBand::Other]
            .into_iter()
            .map(|b| (b, DutyBucket::new(config.fraction(b), config.window_s)))
            .collect();
        DutyLimiter {
            enabled: config.enabled,
            buckets,
        }
    }

    pub fn allows(&self, freq_hz: u32, at: TimeInstant, airtime: Duration) -> bool {
        !self.enabled || self.buckets[&SubBand::of(freq_hz)].allows(at, airtime)
    }

    pub fn consume(&mut self, freq_hz: u32, at: TimeInstant, airtime: Duration) {
        if self.enabled {
            self.buckets
                .get_mut(&SubBand::of(freq_hz))
                .expect("all bands present")
                .consume(at, airtime);
        }
    }

    pub fn earliest(&self, freq_hz: u32, at: TimeInstant, airtime: Duration) -> TimeInstant {
        if self.enabled {
            self.buckets[&SubBand::of(freq_hz)].earliest(at, airtime)
        } else {
            at
        }
    }
}

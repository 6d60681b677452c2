use std::collections::BTreeMap;

use super::config::DutyCycleConfig;
use super::duty::DutyLimiter;
use crate::engine::time::{Duration, TimeInstant};

/// Half-duplex gateway: a calendar of its own transmissions and its
/// duty-cycle budget.
#[derive(Debug, Clone)]
pub struct Gateway {
    /// start -> (end, frequency); intervals never overlap.
    tx: BTreeMap<TimeInstant, (TimeInstant, u32)>,
    pub duty: DutyLimiter,
}

impl Gateway {
    pub fn new(duty: &DutyCycleConfig) -> Self {
        Gateway {
            tx: BTreeMap::new(),
            duty: DutyLimiter::new(duty),
        }
    }

    /// Scheduled transmission overlapping [start, end), if any.
    pub fn conflict(&self, start: TimeInstant, end: TimeInstant) -> Option<(TimeInstant, TimeInstant, u32)> {
        let (&s, &(e, f)) = self.tx.range(..end).next_back()?;
        (e > start).then_some((s, e, f))
    }

    pub fn is_free(&self, start: TimeInstant, end: TimeInstant) -> bool {
        self.conflict(start, end).is_none()
    }

    /// Earliest start >= `at` where `airtime` fits both calendar and budget.
    pub fn earliest_slot(&self, at: TimeInstant, airtime: Duration, freq_hz: u32) -> TimeInstant {
        let mut t = at;
        loop {
            t = self.duty.earliest(freq_hz, t, airtime);
            match self.conflict(t, t + airtime) {
                Some((_, end, _)) => t = end,
                None => return t,
            }
        }
    }

    pub fn can_transmit(&self, at: TimeInstant, airtime: Duration, freq_hz: u32) -> bool {
        self.is_free(at, at + airtime) && self.duty.allows(freq_hz, at, airtime)
    }

    pub fn reserve(&mut self, at: TimeInstant, airtime: Duration, freq_hz: u32) {
        assert!(self.is_free(at, at + airtime), "gateway double-booked");
        self.duty.consume(freq_hz, at, airtime);
        self.tx.insert(at, (at + airtime, freq_hz));
    }

    pub fn transmissions(&self) -> impl Iterator<Item = (TimeInstant, TimeInstant, u32)> + '_ {
        self.tx.iter().map(|(&s, &(e, f))| (s, e, f))
    }
}

//! Integer microsecond simulation clock.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub};

use serde::{Deserialize, Serialize};

const MICROS_PER_SEC: u64 = 1_000_000;

/// Point on the simulation timeline, in microseconds since the start of a run.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct TimeInstant(u64);

/// Non-negative span of simulated time, in microseconds.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Duration(u64);

impl TimeInstant {
    pub const ZERO: TimeInstant = TimeInstant(0);

    pub const fn from_micros(us: u64) -> Self {
        TimeInstant(us)
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / MICROS_PER_SEC as f64
    }

    /// Elapsed time since `earlier`; zero if `earlier` is in the future.
    pub fn saturating_since(self, earlier: TimeInstant) -> Duration {
        Duration(self.0.saturating_sub(earlier.0))
    }

    pub fn checked_sub(self, d: Duration) -> Option<TimeInstant> {
        self.0.checked_sub(d.0).map(TimeInstant)
    }
}

impl Duration {
    pub const ZERO: Duration = Duration(0);

    pub const fn from_micros(us: u64) -> Self {
        Duration(us)
    }

    pub const fn from_millis(ms: u64) -> Self {
        Duration(ms * 1_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        Duration(s * MICROS_PER_SEC)
    }

    /// Rounds to the nearest microsecond. Negative and non-finite inputs map to zero.
    pub fn from_secs_f64(s: f64) -> Self {
        if !s.is_finite() || s <= 0.0 {
            return Duration(0);
        }
        Duration((s * MICROS_PER_SEC as f64).round() as u64)
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / MICROS_PER_SEC as f64
    }

    pub fn as_millis_f64(self) -> f64 {
        self.0 as f64 / 1_000.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn saturating_sub(self, other: Duration) -> Duration {
        Duration(self.0.saturating_sub(other.0))
    }
}

impl Add<Duration> for TimeInstant {
    type Output = TimeInstant;
    fn add(self, rhs: Duration) -> TimeInstant {
        TimeInstant(self.0 + rhs.0)
    }
}

impl AddAssign<Duration> for TimeInstant {
    fn add_assign(&mut self, rhs: Duration) {
        self.0 += rhs.0;
    }
}

impl Sub for TimeInstant {
    type Output = Duration;
    /// Panics if `rhs` is later than `self`.
    fn sub(self, rhs: TimeInstant) -> Duration {
        Duration(
            self.0
                .checked_sub(rhs.0)
                .expect("time instant subtraction went negative"),
        )
    }
}

impl Add for Duration {
    type Output = Duration;
    fn add(self, rhs: Duration) -> Duration {
        Duration(self.0 + rhs.0)
    }
}

impl AddAssign for Duration {
    fn add_assign(&mut self, rhs: Duration) {
        self.0 += rhs.0;
    }
}

impl Sub for Duration {
    type Output = Duration;
    fn sub(self, rhs: Duration) -> Duration {
        Duration(self.0.checked_sub(rhs.0).expect("negative duration"))
    }
}

impl Mul<u64> for Duration {
    type Output = Duration;
    fn mul(self, rhs: u64) -> Duration {
        Duration(self.0 * rhs)
    }
}

impl fmt::Display for TimeInstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}s", self.as_secs_f64())
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}ms", self.as_millis_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instant_arithmetic() {
        let t = TimeInstant::from_micros(1_000) + Duration::from_millis(2);
        assert_eq!(t.as_micros(), 3_000);
        assert_eq!(t - TimeInstant::from_micros(500), Duration::from_micros(2_500));
        assert_eq!(TimeInstant::ZERO.saturating_since(t), Duration::ZERO);
    }

    #[test]
    fn secs_conversion_rounds() {
        assert_eq!(Duration::from_secs_f64(3.84).as_micros(), 3_840_000);
        assert_eq!(Duration::from_secs_f64(1e-7).as_micros(), 0);
        assert_eq!(Duration::from_secs_f64(-1.0), Duration::ZERO);
    }

    #[test]
    #[should_panic]
    fn negative_difference_panics() {
        let _ = TimeInstant::ZERO - TimeInstant::from_micros(1);
    }
}

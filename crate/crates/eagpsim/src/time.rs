//! Simulation clock. Virtual time is kept in integer nanoseconds so event
//! ordering is exact and runs are reproducible across platforms.

use std::fmt;

/// A point in virtual time, in nanoseconds since simulation start.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    const NANOS_PER_SEC: f64 = 1e9;

    /// Converts seconds to a time point, rounding to the nearest nanosecond.
    pub fn from_secs_f64(secs: f64) -> SimTime {
        assert!(
            secs.is_finite() && secs >= 0.0,
            "time must be finite and non-negative, got {secs}"
        );
        SimTime((secs * Self::NANOS_PER_SEC).round() as u64)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / Self::NANOS_PER_SEC
    }

    pub fn as_nanos(self) -> u64 {
        self.0
    }

    /// Returns this time advanced by `secs` seconds.
    pub fn plus_secs(self, secs: f64) -> SimTime {
        assert!(
            secs.is_finite() && secs >= 0.0,
            "delay must be finite and non-negative, got {secs}"
        );
        SimTime(self.0 + (secs * Self::NANOS_PER_SEC).round() as u64)
    }

    /// Seconds elapsed from `earlier` to `self`. Panics if `earlier` is later.
    pub fn diff_secs(self, earlier: SimTime) -> f64 {
        assert!(
            earlier.0 <= self.0,
            "diff_secs: earlier ({}) is after self ({})",
            earlier.0,
            self.0
        );
        (self.0 - earlier.0) as f64 / Self::NANOS_PER_SEC
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}s", self.as_secs_f64())
    }
}

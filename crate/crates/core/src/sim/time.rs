//! Virtual time for the event engine.
//!
//! The engine's base clock counts nanoseconds, which represents every duration
//! used by the stack exactly (3.95 us entanglement attempts, 10 us device
//! ticks, sub-millisecond host latencies). Device communication ticks are a
//! coarser grid on top of this clock, defined by each device profile.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

/// A point in virtual time, in nanoseconds since simulation start.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_ns(ns: u64) -> Self {
        SimTime(ns)
    }

    pub fn from_us(us: u64) -> Self {
        SimTime(us * 1_000)
    }

    pub fn from_ms(ms: u64) -> Self {
        SimTime(ms * 1_000_000)
    }

    pub fn as_ns(self) -> u64 {
        self.0
    }

    pub fn as_us_f64(self) -> f64 {
        self.0 as f64 / 1_000.0
    }

    pub fn as_ms_f64(self) -> f64 {
        self.0 as f64 / 1_000_000.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1_000_000_000.0
    }

    /// Tick index this instant falls in, for a tick of `tick_ns` nanoseconds.
    pub fn tick_index(self, tick_ns: u64) -> u64 {
        self.0 / tick_ns
    }

    /// Earliest tick boundary at or after this instant.
    pub fn ceil_to_tick(self, tick_ns: u64) -> SimTime {
        SimTime(self.0.div_ceil(tick_ns) * tick_ns)
    }

    /// Start of the first tick strictly after this instant.
    pub fn next_tick(self, tick_ns: u64) -> SimTime {
        SimTime((self.0 / tick_ns + 1) * tick_ns)
    }

    pub fn saturating_sub(self, other: SimTime) -> SimDuration {
        SimDuration(self.0.saturating_sub(other.0))
    }
}

/// A span of virtual time, in nanoseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct SimDuration(pub u64);

impl SimDuration {
    pub const ZERO: SimDuration = SimDuration(0);

    pub fn from_ns(ns: u64) -> Self {
        SimDuration(ns)
    }

    pub fn from_us(us: u64) -> Self {
        SimDuration(us * 1_000)
    }

    pub fn from_ms(ms: u64) -> Self {
        SimDuration(ms * 1_000_000)
    }

    /// Rounds to the nearest nanosecond; panics on negative input.
    pub fn from_us_f64(us: f64) -> Self {
        assert!(us >= 0.0, "negative duration: {us} us");
        SimDuration((us * 1_000.0).round() as u64)
    }

    pub fn as_ns(self) -> u64 {
        self.0
    }

    pub fn as_us_f64(self) -> f64 {
        self.0 as f64 / 1_000.0
    }

    pub fn as_ms_f64(self) -> f64 {
        self.0 as f64 / 1_000_000.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1_000_000_000.0
    }

    /// Number of whole ticks needed to cover this duration.
    pub fn ticks_ceil(self, tick_ns: u64) -> u64 {
        self.0.div_ceil(tick_ns)
    }
}

impl Add<SimDuration> for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimDuration) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign<SimDuration> for SimTime {
    fn add_assign(&mut self, rhs: SimDuration) {
        self.0 += rhs.0;
    }
}

impl Sub<SimTime> for SimTime {
    type Output = SimDuration;
    fn sub(self, rhs: SimTime) -> SimDuration {
        assert!(self.0 >= rhs.0, "time went backwards: {} < {}", self.0, rhs.0);
        SimDuration(self.0 - rhs.0)
    }
}

impl Add<SimDuration> for SimDuration {
    type Output = SimDuration;
    fn add(self, rhs: SimDuration) -> SimDuration {
        SimDuration(self.0 + rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ns", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_rounding() {
        let tick = 10_000; // 10 us
        assert_eq!(SimTime::from_ns(0).ceil_to_tick(tick), SimTime::from_ns(0));
        assert_eq!(SimTime::from_ns(1).ceil_to_tick(tick), SimTime::from_ns(10_000));
        assert_eq!(SimTime::from_ns(10_000).ceil_to_tick(tick), SimTime::from_ns(10_000));
        assert_eq!(SimTime::from_ns(10_000).next_tick(tick), SimTime::from_ns(20_000));
        assert_eq!(SimTime::from_ns(10_001).tick_index(tick), 1);
    }

    #[test]
    fn duration_ticks() {
        // 90 us gate occupies 9 whole 10-us ticks
        assert_eq!(SimDuration::from_us(90).ticks_ceil(10_000), 9);
        assert_eq!(SimDuration::from_us(85).ticks_ceil(10_000), 9);
        assert_eq!(SimDuration::from_ns(1).ticks_ceil(10_000), 1);
        assert_eq!(SimDuration::ZERO.ticks_ceil(10_000), 0);
    }
}

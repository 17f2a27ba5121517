//! Simulated time as integer microseconds.
//!
//! Event ordering and trace replay must be exact, so the clock never touches
//! floating point except at the formatting/config boundary.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

/// A point (or span) of simulated time with microsecond resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000)
    }

    /// Rounds to the nearest microsecond. Negative inputs clamp to zero.
    pub fn from_secs_f64(s: f64) -> Self {
        if s <= 0.0 {
            return SimTime(0);
        }
        SimTime((s * 1e6).round() as u64)
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub const fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

/// Trace format: seconds with six decimals, e.g. `12.500000`.
impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / 1_000_000, self.0 % 1_000_000)
    }
}

impl std::str::FromStr for SimTime {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('.') {
            Some((secs, frac)) => {
                let secs: u64 = secs.parse()?;
                // pad/truncate the fraction to exactly 6 digits
                let mut digits = [b'0'; 6];
                for (i, b) in frac.bytes().take(6).enumerate() {
                    digits[i] = b;
                }
                let frac: u64 = std::str::from_utf8(&digits).unwrap().parse()?;
                Ok(SimTime(secs * 1_000_000 + frac))
            }
            None => Ok(SimTime(s.parse::<u64>()? * 1_000_000)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_round_trips() {
        for us in [0u64, 1, 999_999, 1_000_000, 1_800_000_000, 12_345_678] {
            let t = SimTime::from_micros(us);
            let s = t.to_string();
            let back: SimTime = s.parse().unwrap();
            assert_eq!(back, t, "{s}");
        }
    }

    #[test]
    fn no_drift_accumulating_millis() {
        let step = SimTime::from_millis(1);
        let mut t = SimTime::ZERO;
        for _ in 0..1_000_000 {
            t += step;
        }
        assert_eq!(t, SimTime::from_secs(1000));
    }

    #[test]
    fn formatting_is_fixed_width_fraction() {
        assert_eq!(SimTime::from_micros(10_000_000).to_string(), "10.000000");
        assert_eq!(SimTime::from_micros(42).to_string(), "0.000042");
    }
}

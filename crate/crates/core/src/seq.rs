//! Lollipop-style 8-bit sequence counter used for DTSN values.
//!
//! Values 128..=255 form a linear "restart" region, values 0..=127 a circular
//! region of size 128. An increment past 255 wraps to 0, entering the circular
//! region. Comparisons use a window of [`SEQUENCE_WINDOW`]; counters further
//! apart than the window within one region are desynchronized and neither is
//! treated as newer. The restart region is newer than the circular region
//! unless the circular value sits within the window past a wrap.

use std::fmt;

/// Comparison window W.
pub const SEQUENCE_WINDOW: u8 = 16;

/// Counters bootstrap in the restart region so a fresh node is ordered ahead
/// of stale circular values.
pub const DTSN_INITIAL: LollipopCounter = LollipopCounter::new(240);

/// An 8-bit lollipop sequence counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LollipopCounter(u8);

impl LollipopCounter {
    pub const fn new(value: u8) -> Self {
        LollipopCounter(value)
    }

    pub const fn value(self) -> u8 {
        self.0
    }

    /// Next counter value; 255 wraps back to zero.
    pub const fn increment(self) -> Self {
        LollipopCounter(self.0.wrapping_add(1))
    }

    /// True iff `self` (a received value) is strictly newer than `stored`.
    ///
    /// Not a total order: far-apart pairs within one region compare as
    /// not-newer in both directions. Simulator logic only ever asks the
    /// one-sided question, so no arbitrary ranking is imposed on them.
    pub fn is_newer_than(self, stored: LollipopCounter) -> bool {
        let r = self.0;
        let s = stored.0;
        if r == s {
            return false;
        }
        let w = u16::from(SEQUENCE_WINDOW);
        match (r >= 128, s >= 128) {
            // Same region: plain comparison, valid only within the window.
            (true, true) | (false, false) => r.abs_diff(s) <= SEQUENCE_WINDOW && r > s,
            // Received restarted, stored circular: the restart value is newer
            // unless the stored value is just past a wrap of the received one.
            (true, false) => 256 + u16::from(s) - u16::from(r) > w,
            // Received circular, stored in restart: newer only if the stored
            // value wrapped into the circular region within the window.
            (false, true) => 256 + u16::from(r) - u16::from(s) <= w,
        }
    }
}

impl fmt::Display for LollipopCounter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u8> for LollipopCounter {
    fn from(value: u8) -> Self {
        LollipopCounter(value)
    }
}

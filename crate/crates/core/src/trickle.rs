//! Trickle timer driving periodic DIO transmission.
//!
//! Standard doubling-interval scheme: each interval `I` picks a fire point
//! uniformly in `[I/2, I)`, transmits there unless `redundancy` consistent
//! messages were already heard this interval, and doubles `I` up to
//! `imin * 2^doublings` when the interval ends. Any inconsistency (rank or
//! DTSN change, own or heard) restarts at `imin`.
//!
//! The timer itself schedules nothing; the event loop asks it for the next
//! fire/end times and tags events with the current epoch so a reset silently
//! invalidates anything scheduled under an older epoch.

use rand::Rng;

use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrickleConfig {
    pub imin: SimTime,
    pub doublings: u32,
    /// Suppression threshold k; fires are skipped once this many consistent
    /// messages were heard in the interval.
    pub redundancy: u32,
}

impl Default for TrickleConfig {
    fn default() -> Self {
        TrickleConfig {
            imin: SimTime::from_secs(4),
            doublings: 8,
            redundancy: 10,
        }
    }
}

impl TrickleConfig {
    pub fn imax(&self) -> SimTime {
        SimTime::from_micros(self.imin.as_micros() << self.doublings)
    }
}

/// What the event loop should schedule for the freshly started interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntervalSchedule {
    pub epoch: u64,
    pub fire_at: SimTime,
    pub end_at: SimTime,
}

#[derive(Debug, Clone)]
pub struct TrickleTimer {
    cfg: TrickleConfig,
    interval: SimTime,
    epoch: u64,
    heard: u32,
    running: bool,
}

impl TrickleTimer {
    pub fn new(cfg: TrickleConfig) -> TrickleTimer {
        TrickleTimer {
            interval: cfg.imin,
            cfg,
            epoch: 0,
            heard: 0,
            running: false,
        }
    }

    pub fn is_running(&self) -> bool {
        self.running
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn interval(&self) -> SimTime {
        self.interval
    }

    /// Starts (or restarts after an inconsistency) at the minimum interval.
    pub fn reset<R: Rng>(&mut self, now: SimTime, rng: &mut R) -> IntervalSchedule {
        self.running = true;
        self.interval = self.cfg.imin;
        self.begin_interval(now, rng)
    }

    /// A consistent control message was heard this interval.
    pub fn hear_consistent(&mut self) {
        if self.running {
            self.heard += 1;
        }
    }

    /// The fire point was reached; returns whether a DIO should go out.
    pub fn should_transmit(&self, epoch: u64) -> bool {
        self.running && epoch == self.epoch && self.heard < self.cfg.redundancy
    }

    /// The interval ended; doubles and starts the next one. Returns `None`
    /// for stale events from before a reset.
    pub fn interval_ended<R: Rng>(
        &mut self,
        epoch: u64,
        now: SimTime,
        rng: &mut R,
    ) -> Option<IntervalSchedule> {
        if !self.running || epoch != self.epoch {
            return None;
        }
        let doubled = SimTime::from_micros(self.interval.as_micros().saturating_mul(2));
        self.interval = doubled.min(self.cfg.imax());
        Some(self.begin_interval(now, rng))
    }

    fn begin_interval<R: Rng>(&mut self, now: SimTime, rng: &mut R) -> IntervalSchedule {
        self.epoch += 1;
        self.heard = 0;
        let i = self.interval.as_micros();
        let t = rng.gen_range(i / 2..i);
        IntervalSchedule {
            epoch: self.epoch,
            fire_at: now + SimTime::from_micros(t),
            end_at: now + self.interval,
        }
    }
}

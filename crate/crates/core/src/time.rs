//! Clock values and the analysis time grid.

use alloc::string::String;
use core::fmt::Write;

use thiserror::Error;

pub const SECONDS_PER_DAY: u32 = 86_400;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeError {
    #[error("grid start {start} must be before end {end}")]
    EmptyGrid { start: u32, end: u32 },
    #[error("grid span {span} s is not a multiple of the {step} s step")]
    RaggedGrid { span: u32, step: u32 },
    #[error("grid step must be positive")]
    ZeroStep,
    #[error("grid end {0} s is past 24:00")]
    PastMidnight(u32),
    #[error("cannot parse clock time {0:?}")]
    BadClock(String),
}

/// Regular sequence of slot start times within one day.
///
/// `start` and `end` are seconds after local midnight; slots cover
/// `[start, end)` in steps of `step` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeGrid {
    start: u32,
    end: u32,
    step: u32,
}

impl Default for TimeGrid {
    /// 07:00 to 24:00 every 15 minutes (68 slots).
    fn default() -> Self {
        TimeGrid { start: 7 * 3600, end: SECONDS_PER_DAY, step: 900 }
    }
}

impl TimeGrid {
    pub fn new(start: u32, end: u32, step: u32) -> Result<Self, TimeError> {
        if step == 0 {
            return Err(TimeError::ZeroStep);
        }
        if start >= end {
            return Err(TimeError::EmptyGrid { start, end });
        }
        if end > SECONDS_PER_DAY {
            return Err(TimeError::PastMidnight(end));
        }
        if (end - start) % step != 0 {
            return Err(TimeError::RaggedGrid { span: end - start, step });
        }
        Ok(TimeGrid { start, end, step })
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn end(&self) -> u32 {
        self.end
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    pub fn len(&self) -> usize {
        ((self.end - self.start) / self.step) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Start of slot `k` in seconds of day.
    pub fn slot_start(&self, k: usize) -> u32 {
        self.start + k as u32 * self.step
    }

    pub fn slot_starts(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.len()).map(move |k| self.slot_start(k))
    }

    /// Slot containing the clock time, if it falls inside `[start, end)`.
    pub fn slot_of(&self, seconds_of_day: u32) -> Option<usize> {
        if seconds_of_day < self.start || seconds_of_day >= self.end {
            return None;
        }
        Some(((seconds_of_day - self.start) / self.step) as usize)
    }

    pub fn contains(&self, seconds_of_day: u32) -> bool {
        self.slot_of(seconds_of_day).is_some()
    }
}

/// Formats seconds of day as `hhmm` (e.g. `0815`).
pub fn format_hhmm(seconds_of_day: u32) -> String {
    let mut s = String::with_capacity(4);
    let minutes = seconds_of_day / 60;
    let _ = write!(s, "{:02}{:02}", minutes / 60, minutes % 60);
    s
}

/// Parses `hh:mm`, `hh:mm:ss` or `hhmm`; `24:00` is accepted as end of day.
pub fn parse_clock(text: &str) -> Result<u32, TimeError> {
    let bad = || TimeError::BadClock(String::from(text));
    let t = text.trim();
    let parts: alloc::vec::Vec<&str> = if t.contains(':') {
        t.split(':').collect()
    } else if t.len() == 4 && t.bytes().all(|b| b.is_ascii_digit()) {
        alloc::vec![&t[..2], &t[2..]]
    } else {
        return Err(bad());
    };
    if parts.len() < 2 || parts.len() > 3 {
        return Err(bad());
    }
    let mut fields = [0u32; 3];
    for (slot, p) in fields.iter_mut().zip(&parts) {
        *slot = p.parse().map_err(|_| bad())?;
    }
    let [h, m, s] = fields;
    if m >= 60 || s >= 60 {
        return Err(bad());
    }
    let total = h * 3600 + m * 60 + s;
    if total > SECONDS_PER_DAY {
        return Err(bad());
    }
    Ok(total)
}

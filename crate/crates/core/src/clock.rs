//! Twelve-hour wall clock arithmetic.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const MINUTES_PER_DAY: u32 = 1440;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed clock `{input}`: expected `hh:mm AM|PM`")]
pub struct ClockParseError {
    pub input: String,
}

/// A time of day, stored as minutes past midnight.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clock(u16);

impl Clock {
    pub fn from_minutes(minutes: u32) -> Self {
        Clock((minutes % MINUTES_PER_DAY) as u16)
    }

    pub fn from_hm(hour24: u32, minute: u32) -> Self {
        Self::from_minutes(hour24 * 60 + minute)
    }

    pub fn minutes(self) -> u32 {
        u32::from(self.0)
    }

    /// Clock reached after `delta` minutes, wrapping at midnight in either direction.
    pub fn offset(self, delta: i64) -> Self {
        let day = i64::from(MINUTES_PER_DAY);
        Clock::from_minutes((i64::from(self.0) + delta).rem_euclid(day) as u32)
    }

    /// Forward distance from `self` to `later`, in `[0, 1440)`.
    pub fn minutes_until(self, later: Clock) -> u32 {
        (later.minutes() + MINUTES_PER_DAY - self.minutes()) % MINUTES_PER_DAY
    }
}

/// Renders `origin + minute` as `hh:mm AM|PM`.
pub fn format_clock(minute: u32, origin: Clock) -> String {
    origin.offset(i64::from(minute)).to_string()
}

impl fmt::Display for Clock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h24 = self.0 / 60;
        let m = self.0 % 60;
        let suffix = if h24 < 12 { "AM" } else { "PM" };
        let h12 = match h24 % 12 {
            0 => 12,
            h => h,
        };
        write!(f, "{h12:02}:{m:02} {suffix}")
    }
}

impl FromStr for Clock {
    type Err = ClockParseError;

    /// Accepts one- or two-digit hours (`8:13 PM` appears in hand-written
    /// questions) and either case for the meridiem.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ClockParseError { input: s.to_string() };
        let trimmed = s.trim();
        let (hm, meridiem) = trimmed.rsplit_once(' ').ok_or_else(err)?;
        let pm = match meridiem.to_ascii_uppercase().as_str() {
            "AM" => false,
            "PM" => true,
            _ => return Err(err()),
        };
        let (h, m) = hm.trim().split_once(':').ok_or_else(err)?;
        if h.is_empty() || h.len() > 2 || m.len() != 2 {
            return Err(err());
        }
        if !h.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let hour: u32 = h.parse().map_err(|_| err())?;
        let minute: u32 = m.parse().map_err(|_| err())?;
        if !(1..=12).contains(&hour) || minute > 59 {
            return Err(err());
        }
        let h24 = match (hour, pm) {
            (12, false) => 0,
            (12, true) => 12,
            (h, false) => h,
            (h, true) => h + 12,
        };
        Ok(Clock::from_hm(h24, minute))
    }
}

impl Serialize for Clock {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Clock {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

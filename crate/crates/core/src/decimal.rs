//! Two-decimal fixed-point values used for every ratio the toolkit reports.
//!
//! All percentages are computed from integer counts with exact rational
//! arithmetic and rounded half away from zero, so published table cells can be
//! reproduced without floating-point drift.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A value stored as a whole number of hundredths.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Decimal2(i64);

impl Decimal2 {
    pub const ZERO: Decimal2 = Decimal2(0);

    pub const fn from_hundredths(hundredths: i64) -> Self {
        Decimal2(hundredths)
    }

    /// `num / den` rounded half away from zero to two decimals.
    /// Returns `None` when `den` is zero.
    pub fn from_ratio(num: i128, den: i128) -> Option<Self> {
        round_hundredths(num.checked_mul(100)?, den).map(Decimal2)
    }

    /// `num / den * 100` rounded half away from zero to two decimals.
    pub fn percent(num: i128, den: i128) -> Option<Self> {
        round_hundredths(num.checked_mul(10_000)?, den).map(Decimal2)
    }

    pub fn hundredths(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

fn round_hundredths(scaled: i128, den: i128) -> Option<i64> {
    if den == 0 {
        return None;
    }
    let negative = (scaled < 0) != (den < 0);
    let (n, d) = (scaled.unsigned_abs(), den.unsigned_abs());
    let q = (2 * n + d) / (2 * d);
    let q = i64::try_from(q).ok()?;
    Some(if negative { -q } else { q })
}

impl fmt::Display for Decimal2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

impl Serialize for Decimal2 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Decimal2 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = f64::deserialize(deserializer)?;
        Ok(Decimal2((value * 100.0).round() as i64))
    }
}

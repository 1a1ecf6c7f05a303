//! Exact activation rates.
//!
//! A [`Rate`] keeps the hit count and the population size, so comparisons
//! between rates are exact and the 3-decimal percentage is only a rendering.

use alloc::string::String;
use core::cmp::Ordering;
use core::fmt;

use crate::{Error, Result};

/// `hits / total`, reported as a percentage.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rate {
    pub hits: u64,
    pub total: u64,
}

impl Rate {
    /// Panics if `total` is zero or `hits > total`.
    pub fn new(hits: u64, total: u64) -> Self {
        assert!(total > 0, "rate over an empty population");
        assert!(hits <= total, "rate numerator exceeds denominator");
        Rate { hits, total }
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.hits as f64 / self.total as f64
    }

    pub fn fraction(&self) -> f64 {
        self.hits as f64 / self.total as f64
    }

    /// Parses a printed percentage such as `"29.090"` into the exact rational
    /// it denotes (`29090 / 100000`).
    pub fn from_percent_str(text: &str) -> Result<Self> {
        let bad = || Error::InvalidPercentage(String::from(text));
        let text = text.trim();
        let (int_part, frac_part) = match text.split_once('.') {
            Some((i, f)) => (i, f),
            None => (text, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
            || frac_part.len() > 15
        {
            return Err(bad());
        }
        let mut hits: u64 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            hits = hits
                .checked_mul(10)
                .and_then(|h| h.checked_add(u64::from(b - b'0')))
                .ok_or_else(bad)?;
        }
        let total = 10u64
            .checked_pow(frac_part.len() as u32)
            .and_then(|d| d.checked_mul(100))
            .ok_or_else(bad)?;
        if hits > total {
            return Err(bad());
        }
        Ok(Rate { hits, total })
    }
}

impl PartialEq for Rate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Rate {}

impl PartialOrd for Rate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rate {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = u128::from(self.hits) * u128::from(other.total);
        let rhs = u128::from(other.hits) * u128::from(self.total);
        lhs.cmp(&rhs)
    }
}

/// Renders the percentage with three decimals.
impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}", self.percent())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn renders_three_decimals() {
        assert_eq!(Rate::new(2, 3).to_string(), "66.667");
        assert_eq!(Rate::new(0, 7).to_string(), "0.000");
        assert_eq!(Rate::new(7, 7).to_string(), "100.000");
    }

    #[test]
    fn compares_exactly() {
        assert_eq!(Rate::new(1, 2), Rate::new(50, 100));
        assert!(Rate::new(1, 3) < Rate::new(334, 1000));
        assert!(Rate::new(1, 3) > Rate::new(333, 1000));
    }

    #[test]
    fn parses_printed_percentages() {
        let r = Rate::from_percent_str("29.090").unwrap();
        assert_eq!((r.hits, r.total), (29090, 100_000));
        assert_eq!(r.to_string(), "29.090");
        assert_eq!(Rate::from_percent_str("0").unwrap(), Rate::new(0, 1));
        assert_eq!(Rate::from_percent_str("100.000").unwrap(), Rate::new(1, 1));
        assert!(Rate::from_percent_str("100.001").is_err());
        assert!(Rate::from_percent_str("-1").is_err());
        assert!(Rate::from_percent_str("").is_err());
        assert!(Rate::from_percent_str("1e3").is_err());
    }
}

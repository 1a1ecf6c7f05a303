//! Rank tests written from scratch.
//!
//! Both tests share [`rank_with_ties`]. Exact p-values come from the null
//! distribution of the statistic, counted by dynamic programming in `u128`
//! so the numerator and denominator are available as integers. The normal
//! approximations use tie-corrected variances and a 0.5 continuity
//! correction.

use core::fmt;

mod holm;
mod hypotheses;
mod mwu;
mod rank;
mod wilcoxon;

pub use holm::holm_adjust;
pub use hypotheses::{run_hypotheses, FractionSummary, HypothesisRecord, HypothesisReport};
pub use mwu::{mann_whitney_u, mwu_null_counts};
pub use rank::rank_with_ties;
pub use wilcoxon::{signed_rank_null_counts, wilcoxon_signed_rank};

/// Direction of the alternative hypothesis.
///
/// For Mann-Whitney U, `Greater` means the first sample tends to be larger.
/// For Wilcoxon, differences are `y - x` and `Less` means their median is
/// below zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Alternative {
    Greater,
    Less,
    TwoSided,
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alternative::Greater => "greater",
            Alternative::Less => "less",
            Alternative::TwoSided => "two_sided",
        })
    }
}

/// Requested p-value method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MethodChoice {
    #[default]
    Auto,
    Exact,
    Normal,
}

/// Method actually used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    Exact,
    NormalApprox,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::NormalApprox => "normal_approx",
        })
    }
}

/// Handling of zero differences in the signed-rank test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ZeroPolicy {
    /// Drop zero differences before ranking.
    #[default]
    Wilcoxon,
    /// Rank zero differences with the rest, then discard their ranks.
    Pratt,
}

impl fmt::Display for ZeroPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZeroPolicy::Wilcoxon => "wilcoxon",
            ZeroPolicy::Pratt => "pratt",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SampleSizes {
    Independent {
        n1: usize,
        n2: usize,
    },
    /// `used` counts the non-zero differences that entered the statistic.
    Paired {
        pairs: usize,
        used: usize,
    },
}

/// An exact p-value as a ratio of arrangement counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExactP {
    pub numerator: u128,
    pub denominator: u128,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestResult {
    /// `U` of the first sample, or `W+`.
    pub statistic: f64,
    pub z: Option<f64>,
    pub p_value: f64,
    pub exact: Option<ExactP>,
    pub method: Method,
    pub alternative: Alternative,
    pub sizes: SampleSizes,
    pub zero_policy: Option<ZeroPolicy>,
    /// Set when the pooled values carry no rank information (all equal, or
    /// all differences zero); `p_value` is then 1.
    pub degenerate: bool,
    pub alpha: f64,
    pub rejected: bool,
}

pub(crate) fn check_alpha(alpha: f64) -> crate::Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(crate::Error::InvalidConfig(alloc::format!(
            "alpha {alpha} must lie in (0, 1)"
        )))
    }
}

/// Standard normal upper tail, accurate far into the tail.
pub(crate) fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / core::f64::consts::SQRT_2)
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// One- or two-sided p from a centred statistic with a 0.5 continuity
/// correction toward the mean.
pub(crate) fn normal_p(centred: f64, sd: f64, alternative: Alternative) -> (f64, f64) {
    match alternative {
        Alternative::Greater => {
            let z = (centred - 0.5) / sd;
            (z, normal_sf(z))
        }
        Alternative::Less => {
            let z = (centred + 0.5) / sd;
            (z, normal_cdf(z))
        }
        Alternative::TwoSided => {
            let z = (libm::fabs(centred) - 0.5) / sd;
            (z, (2.0 * normal_sf(z)).min(1.0))
        }
    }
}

/// Tail counts of a discrete null distribution over integer statistic
/// values `0..counts.len()`.
pub(crate) fn exact_tail(counts: &[u128], observed: usize, alternative: Alternative) -> ExactP {
    let denominator: u128 = counts.iter().sum();
    let lower: u128 = counts[..=observed.min(counts.len() - 1)].iter().sum();
    let upper: u128 = counts[observed.min(counts.len())..].iter().sum();
    let numerator = match alternative {
        Alternative::Less => lower,
        Alternative::Greater => upper,
        Alternative::TwoSided => lower.min(upper).saturating_mul(2).min(denominator),
    };
    ExactP {
        numerator,
        denominator,
    }
}

impl ExactP {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_tails() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_sf(1.959963984540054) - 0.025).abs() < 1e-12);
        // far tail keeps relative accuracy
        let p = normal_sf(8.0);
        assert!((p / 6.220960574271785e-16 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exact_tail_sides() {
        let counts = [1u128, 2, 3, 2, 1];
        assert_eq!(exact_tail(&counts, 1, Alternative::Less).numerator, 3);
        assert_eq!(exact_tail(&counts, 1, Alternative::Greater).numerator, 8);
        assert_eq!(exact_tail(&counts, 1, Alternative::TwoSided).numerator, 6);
        assert_eq!(exact_tail(&counts, 2, Alternative::TwoSided).numerator, 9);
    }
}

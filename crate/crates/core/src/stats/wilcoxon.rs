use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::rank::rank_and_ties;
use super::{
    check_alpha, exact_tail, normal_p, Alternative, Method, MethodChoice, SampleSizes, TestResult,
    ZeroPolicy,
};
use crate::{Error, Result};

const AUTO_EXACT_MAX_PAIRS: usize = 25;
const EXACT_MAX_PAIRS: usize = 120;

/// Null frequencies of `2 * W+` given the ranks in use: every one of the
/// `2^n` sign assignments is equally likely, so entry `s` counts the subsets
/// of ranks whose doubled sum is `s`. Tied (half-integer) ranks are exact
/// after doubling.
pub fn signed_rank_null_counts(ranks: &[f64]) -> Result<Vec<u128>> {
    if ranks.len() > EXACT_MAX_PAIRS {
        return Err(Error::ExactUnavailable(format!(
            "{} ranks, limit is {EXACT_MAX_PAIRS}",
            ranks.len()
        )));
    }
    let doubled: Vec<usize> = ranks
        .iter()
        .map(|&r| libm::round(2.0 * r) as usize)
        .collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u128; total + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in &doubled {
        reach += r;
        for s in (r..=reach).rev() {
            counts[s] += counts[s - r];
        }
    }
    Ok(counts)
}

/// Wilcoxon signed-rank test on the differences `y - x`.
///
/// With [`ZeroPolicy::Wilcoxon`] zero differences are dropped before
/// ranking; with [`ZeroPolicy::Pratt`] they are ranked with the rest and
/// their ranks discarded. `Auto` uses the exact sign-flip distribution for
/// up to 25 non-zero differences (ties included), and the normal
/// approximation with tie-corrected variance and continuity correction
/// above that. All-zero differences give `p = 1` with `degenerate` set.
pub fn wilcoxon_signed_rank(
    pairs: &[(f64, f64)],
    alternative: Alternative,
    alpha: f64,
    zero_policy: ZeroPolicy,
    method: MethodChoice,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if pairs.is_empty() {
        return Err(Error::EmptySample("paired"));
    }
    let diffs: Vec<f64> = pairs.iter().map(|&(x, y)| y - x).collect();
    if diffs.iter().any(|d| d.is_nan()) {
        return Err(Error::NanValue);
    }

    // (rank, positive) for every difference that enters the statistic
    let signed: Vec<(f64, bool)> = match zero_policy {
        ZeroPolicy::Wilcoxon => {
            let nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
            let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
            let (ranks, _) = rank_and_ties(&abs)?;
            ranks
                .into_iter()
                .zip(nonzero.iter().map(|&d| d > 0.0))
                .collect()
        }
        ZeroPolicy::Pratt => {
            let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
            let (ranks, _) = rank_and_ties(&abs)?;
            ranks
                .into_iter()
                .zip(&diffs)
                .filter(|(_, &d)| d != 0.0)
                .map(|(r, &d)| (r, d > 0.0))
                .collect()
        }
    };
    let n = signed.len();
    let w_plus = signed
        .iter()
        .filter(|(_, pos)| *pos)
        .fold(0.0, |acc, (r, _)| acc + r);
    let sizes = SampleSizes::Paired {
        pairs: pairs.len(),
        used: n,
    };

    let result = |p_value: f64, z, exact, method, degenerate| TestResult {
        statistic: w_plus,
        z,
        p_value,
        exact,
        method,
        alternative,
        sizes,
        zero_policy: Some(zero_policy),
        degenerate,
        alpha,
        rejected: p_value < alpha,
    };

    if n == 0 {
        let method = if method == MethodChoice::Exact {
            Method::Exact
        } else {
            Method::NormalApprox
        };
        return Ok(result(1.0, None, None, method, true));
    }

    let use_exact = match method {
        MethodChoice::Exact => true,
        MethodChoice::Normal => false,
        MethodChoice::Auto => n <= AUTO_EXACT_MAX_PAIRS,
    };
    let ranks: Vec<f64> = signed.iter().map(|(r, _)| *r).collect();

    if use_exact {
        let counts = signed_rank_null_counts(&ranks)?;
        let observed = libm::round(2.0 * w_plus) as usize;
        let exact = exact_tail(&counts, observed, alternative);
        return Ok(result(
            exact.value(),
            None,
            Some(exact),
            Method::Exact,
            false,
        ));
    }

    // Conditional on the ranks, W+ = sum of r * Bernoulli(1/2): mean sum(r)/2,
    // variance sum(r^2)/4, which equals n(n+1)(2n+1)/24 - sum(t^3 - t)/48
    // under the drop-zeros convention.
    let mean = ranks.iter().sum::<f64>() / 2.0;
    let var = ranks.iter().map(|r| r * r).sum::<f64>() / 4.0;
    let (z, p) = normal_p(w_plus - mean, libm::sqrt(var), alternative);
    Ok(result(
        p.clamp(0.0, 1.0),
        Some(z),
        None,
        Method::NormalApprox,
        false,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::rank::tie_term;
    use proptest::prelude::*;
    use std::vec::Vec;

    fn pairs_from_diffs(d: &[f64]) -> Vec<(f64, f64)> {
        d.iter().map(|&d| (0.0, d)).collect()
    }

    #[test]
    fn all_negative_five_pairs() {
        // one of 32 sign patterns has W+ = 0
        let p = pairs_from_diffs(&[-1.0, -2.0, -3.0, -4.0, -5.0]);
        let r = wilcoxon_signed_rank(
            &p,
            Alternative::Less,
            0.05,
            ZeroPolicy::Wilcoxon,
            MethodChoice::Auto,
        )
        .unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.statistic.is_sign_positive());
        assert_eq!(r.method, Method::Exact);
        assert_eq!(r.exact.unwrap().numerator, 1);
        assert_eq!(r.exact.unwrap().denominator, 32);
        assert_eq!(r.p_value, 0.03125);
        assert!(r.rejected);
    }

    #[test]
    fn zero_differences_are_degenerate() {
        let p = [(1.0, 1.0), (2.5, 2.5), (0.0, 0.0)];
        for policy in [ZeroPolicy::Wilcoxon, ZeroPolicy::Pratt] {
            let r = wilcoxon_signed_rank(&p, Alternative::Less, 0.05, policy, MethodChoice::Auto)
                .unwrap();
            assert!(r.degenerate);
            assert_eq!(r.p_value, 1.0);
            assert!(!r.rejected);
        }
    }

    #[test]
    fn pratt_keeps_zero_ranks_out_of_the_statistic() {
        // |d| = 0, 1, 2: Pratt ranks 1, 2, 3 and keeps 2, 3
        let p = pairs_from_diffs(&[0.0, -1.0, 2.0]);
        let w = wilcoxon_signed_rank(
            &p,
            Alternative::Greater,
            0.05,
            ZeroPolicy::Wilcoxon,
            MethodChoice::Exact,
        )
        .unwrap();
        let pr = wilcoxon_signed_rank(
            &p,
            Alternative::Greater,
            0.05,
            ZeroPolicy::Pratt,
            MethodChoice::Exact,
        )
        .unwrap();
        assert_eq!(w.statistic, 2.0);
        assert_eq!(pr.statistic, 3.0);
        assert_eq!(pr.sizes, SampleSizes::Paired { pairs: 3, used: 2 });
        // Pratt: sign patterns over ranks {2, 3}: W+ in {0, 2, 3, 5}; P(W+ >= 3) = 2/4
        assert_eq!(pr.exact.unwrap().numerator, 2);
        assert_eq!(pr.exact.unwrap().denominator, 4);
    }

    #[test]
    fn null_counts_with_tied_ranks() {
        // ranks 1.5, 1.5, 3 -> doubled 3, 3, 6
        let c = signed_rank_null_counts(&[1.5, 1.5, 3.0]).unwrap();
        assert_eq!(c.iter().sum::<u128>(), 8);
        assert_eq!(c[0], 1);
        assert_eq!(c[3], 2);
        assert_eq!(c[6], 2);
        assert_eq!(c[9], 2);
        assert_eq!(c[12], 1);
    }

    #[test]
    fn variance_matches_closed_form() {
        let d = [1.0, -2.0, 2.0, 3.0, -3.0, 3.0, 4.0, 5.0, -6.0, 7.0];
        let abs: Vec<f64> = d.iter().map(|x: &f64| x.abs()).collect();
        let (ranks, groups) = rank_and_ties(&abs).unwrap();
        let n = d.len() as f64;
        let closed = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term(&groups) / 48.0;
        let general = ranks.iter().map(|r| r * r).sum::<f64>() / 4.0;
        assert!((closed - general).abs() < 1e-9);
    }

    #[test]
    fn exact_limit() {
        let d: Vec<f64> = (1..=130).map(f64::from).collect();
        let r = wilcoxon_signed_rank(
            &pairs_from_diffs(&d),
            Alternative::Less,
            0.05,
            ZeroPolicy::Wilcoxon,
            MethodChoice::Exact,
        );
        assert!(matches!(r, Err(Error::ExactUnavailable(_))));
    }

    #[test]
    fn normal_reference_value() {
        // scipy.stats.wilcoxon(d, alternative="less", method="approx", correction=True)
        // on d = -1, ..., -30 with multiples of 7 made positive: W+ = 70, p = 0.000431011342570306
        let d: Vec<f64> = (1..=30)
            .map(|i| {
                if i % 7 == 0 {
                    f64::from(i)
                } else {
                    -f64::from(i)
                }
            })
            .collect();
        let r = wilcoxon_signed_rank(
            &pairs_from_diffs(&d),
            Alternative::Less,
            0.05,
            ZeroPolicy::Wilcoxon,
            MethodChoice::Auto,
        )
        .unwrap();
        assert_eq!(r.method, Method::NormalApprox);
        assert_eq!(r.statistic, 70.0);
        assert!((r.p_value - 0.000431011342570306).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn sign_flip_swaps_tails(v in proptest::collection::btree_set(1u32..500, 1..14)) {
            let d: Vec<f64> = v.iter().enumerate().map(|(i, &x)| if i % 3 == 0 { -f64::from(x) } else { f64::from(x) }).collect();
            let neg: Vec<f64> = d.iter().map(|x| -x).collect();
            let run = |d: &[f64], alt| wilcoxon_signed_rank(&pairs_from_diffs(d), alt, 0.05, ZeroPolicy::Wilcoxon, MethodChoice::Exact).unwrap();
            prop_assert_eq!(run(&d, Alternative::Less).exact, run(&neg, Alternative::Greater).exact);
            prop_assert_eq!(run(&d, Alternative::Greater).exact, run(&neg, Alternative::Less).exact);
        }

        #[test]
        fn p_values_stay_in_unit_interval(
            d in proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0), Just(-1.0), -1e3f64..1e3], 1..60),
            pratt in any::<bool>(),
        ) {
            let policy = if pratt { ZeroPolicy::Pratt } else { ZeroPolicy::Wilcoxon };
            for alt in [Alternative::Greater, Alternative::Less, Alternative::TwoSided] {
                for m in [MethodChoice::Auto, MethodChoice::Normal] {
                    let r = wilcoxon_signed_rank(&pairs_from_diffs(&d), alt, 0.05, policy, m).unwrap();
                    prop_assert!((0.0..=1.0).contains(&r.p_value));
                }
            }
        }
    }
}

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::rank::{rank_and_ties, tie_term};
use super::{
    check_alpha, exact_tail, normal_p, Alternative, Method, MethodChoice, SampleSizes, TestResult,
};
use crate::{Error, Result};

/// `auto` switches to the exact distribution only below this size.
const AUTO_EXACT_MAX_SIZE: usize = 25;
const EXACT_MAX_MIN_SIZE: usize = 25;

/// Null frequencies of `U` for samples of sizes `n1` and `n2` without ties:
/// entry `u` counts the arrangements of the pooled ranks giving `U = u`.
///
/// Built by adding ranks one at a time: when rank `i` becomes the `j`-th
/// chosen element it sits above `i - j` unchosen ones, which is its share
/// of `U`.
pub fn mwu_null_counts(n1: usize, n2: usize) -> Result<Vec<u128>> {
    let k = n1.min(n2);
    let n = n1 + n2;
    let max_u = n1 * n2;
    // dp[j][u]: subsets of size j of the ranks seen so far
    let mut dp = vec![vec![0u128; max_u + 1]; k + 1];
    dp[0][0] = 1;
    for i in 1..=n {
        for j in (1..=k.min(i)).rev() {
            let shift = i - j;
            if shift > n - k {
                continue;
            }
            let (lower, upper) = dp.split_at_mut(j);
            let prev = &lower[j - 1];
            let cur = &mut upper[0];
            for u in (shift..=max_u).rev() {
                let add = prev[u - shift];
                if add != 0 {
                    cur[u] = cur[u].checked_add(add).ok_or_else(|| {
                        Error::ExactUnavailable(format!(
                            "arrangement count overflows for sizes {n1}, {n2}"
                        ))
                    })?;
                }
            }
        }
    }
    Ok(dp.swap_remove(k))
}

/// One- or two-sided Mann-Whitney U test of sample `a` against sample `b`.
///
/// The statistic is `U_a = R_a - n1 (n1 + 1) / 2` over the pooled ranking.
/// `Auto` uses the exact distribution when there are no ties and both
/// samples have at most 25 values, and the tie-corrected normal
/// approximation otherwise. A pooled sample of identical values yields
/// `p = 1` with `degenerate` set.
pub fn mann_whitney_u(
    a: &[f64],
    b: &[f64],
    alternative: Alternative,
    alpha: f64,
    method: MethodChoice,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    if a.is_empty() {
        return Err(Error::EmptySample("first"));
    }
    if b.is_empty() {
        return Err(Error::EmptySample("second"));
    }
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, groups) = rank_and_ties(&pooled)?;
    let rank_sum: f64 = ranks[..n1].iter().sum();
    let u = rank_sum - (n1 * (n1 + 1)) as f64 / 2.0;
    let sizes = SampleSizes::Independent { n1, n2 };
    let has_ties = groups.iter().any(|&t| t > 1);

    let result = |p_value: f64, z, exact, method, degenerate| TestResult {
        statistic: u,
        z,
        p_value,
        exact,
        method,
        alternative,
        sizes,
        zero_policy: None,
        degenerate,
        alpha,
        rejected: p_value < alpha,
    };

    if groups.len() == 1 {
        let method = if method == MethodChoice::Exact {
            Method::Exact
        } else {
            Method::NormalApprox
        };
        return Ok(result(1.0, None, None, method, true));
    }

    let use_exact = match method {
        MethodChoice::Exact => {
            if has_ties {
                return Err(Error::ExactUnavailable("samples contain ties".into()));
            }
            if n1.min(n2) > EXACT_MAX_MIN_SIZE {
                return Err(Error::ExactUnavailable(format!(
                    "smaller sample has {} values, limit is {EXACT_MAX_MIN_SIZE}",
                    n1.min(n2)
                )));
            }
            true
        }
        MethodChoice::Normal => false,
        MethodChoice::Auto => !has_ties && n1.max(n2) <= AUTO_EXACT_MAX_SIZE,
    };

    if use_exact {
        let counts = mwu_null_counts(n1, n2)?;
        // no ties: U is an integer
        let exact = exact_tail(&counts, u as usize, alternative);
        return Ok(result(
            exact.value(),
            None,
            Some(exact),
            Method::Exact,
            false,
        ));
    }

    let n = (n1 + n2) as f64;
    let prod = (n1 * n2) as f64;
    let var = prod / 12.0 * ((n + 1.0) - tie_term(&groups) / (n * (n - 1.0)));
    let (z, p) = normal_p(u - prod / 2.0, libm::sqrt(var), alternative);
    Ok(result(
        p.clamp(0.0, 1.0),
        Some(z),
        None,
        Method::NormalApprox,
        false,
    ))
}

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Ranks starting at 1, ties receiving the mean of the positions they span.
pub fn rank_with_ties(values: &[f64]) -> Result<Vec<f64>> {
    Ok(rank_and_ties(values)?.0)
}

/// Ranks plus the sizes of every tie group (groups of one included).
pub(crate) fn rank_and_ties(values: &[f64]) -> Result<(Vec<f64>, Vec<usize>)> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NanValue);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut groups = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        // == so that 0.0 and -0.0 tie
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let mean = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        groups.push(end - start);
        start = end;
    }
    Ok((ranks, groups))
}

/// `sum(t^3 - t)` over tie groups.
pub(crate) fn tie_term(groups: &[usize]) -> f64 {
    groups
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum()
}

//! Consistency checks on a margin table.
//!
//! Two properties hold for any table built from real activations:
//! a Non-TLA rate never grows as the cutoff rises, and an ensemble never
//! fires more often than any of its sub-ensembles (it needs all of them to
//! fire). Only Non-TLA columns are checked.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::margins::{Ensemble, MarginTable, ThresholdSpec};
use crate::rate::Rate;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Violation {
    /// Rate at `higher` exceeds the rate at the lower cutoff `lower`.
    Monotonicity {
        ensemble: Ensemble,
        lower: f64,
        higher: f64,
        lower_rate: Rate,
        higher_rate: Rate,
    },
    /// `ensemble` fires more often than its sub-ensemble `subset`.
    Intersection {
        ensemble: Ensemble,
        subset: Ensemble,
        fraction: f64,
        rate: Rate,
        subset_rate: Rate,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Monotonicity {
                ensemble,
                lower,
                higher,
                lower_rate,
                higher_rate,
            } => write!(
                f,
                "{ensemble}: Non-TLA {} at {} exceeds {} at {}",
                higher_rate,
                ThresholdSpec::label(*higher),
                lower_rate,
                ThresholdSpec::label(*lower)
            ),
            Violation::Intersection {
                ensemble,
                subset,
                fraction,
                rate,
                subset_rate,
            } => write!(
                f,
                "{ensemble}: Non-TLA {rate} at {} exceeds {subset_rate} of sub-ensemble [{}]",
                ThresholdSpec::label(*fraction),
                subset.neuron_key()
            ),
        }
    }
}

/// All violations in `table`, in row order. Sub-ensembles absent from the
/// table are skipped.
pub fn audit_margin_table(table: &MarginTable) -> Vec<Violation> {
    let fractions = table.thresholds.fractions();
    let mut out = Vec::new();
    for row in &table.rows {
        for j in 1..row.non_tla.len() {
            if row.non_tla[j] > row.non_tla[j - 1] {
                out.push(Violation::Monotonicity {
                    ensemble: row.ensemble.clone(),
                    lower: fractions[j - 1],
                    higher: fractions[j],
                    lower_rate: row.non_tla[j - 1],
                    higher_rate: row.non_tla[j],
                });
            }
        }
        let subsets = table.rows.iter().filter(|s| {
            s.ensemble.concept() == row.ensemble.concept()
                && s.ensemble.len() < row.ensemble.len()
                && s.ensemble.is_subset_of(&row.ensemble)
        });
        for sub in subsets {
            for (j, (r, s)) in row.non_tla.iter().zip(&sub.non_tla).enumerate() {
                if r > s {
                    out.push(Violation::Intersection {
                        ensemble: row.ensemble.clone(),
                        subset: sub.ensemble.clone(),
                        fraction: fractions[j],
                        rate: *r,
                        subset_rate: *s,
                    });
                }
            }
        }
    }
    out
}

/// Short human-readable report, one line per violation.
pub fn render_violations(violations: &[Violation]) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    for v in violations {
        let _ = writeln!(s, "{v}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::margins::MarginRow;
    use alloc::vec;

    fn row(neurons: &[usize], non_tla: [u64; 4]) -> MarginRow {
        MarginRow {
            ensemble: Ensemble::new("road", neurons.iter().copied()).unwrap(),
            tla: Rate::new(90, 100),
            non_tla: non_tla.iter().map(|&h| Rate::new(h, 100)).collect(),
            target_n: Some(100),
            nontarget_n: Some(100),
        }
    }

    fn table(rows: Vec<MarginRow>) -> MarginTable {
        MarginTable::new(ThresholdSpec::default(), 80.0, 3, rows).unwrap()
    }

    #[test]
    fn consistent_table_passes() {
        let t = table(vec![
            row(&[1], [30, 20, 10, 0]),
            row(&[2], [25, 25, 5, 0]),
            row(&[1, 2], [10, 5, 1, 0]),
        ]);
        assert!(audit_margin_table(&t).is_empty());
    }

    #[test]
    fn detects_both_kinds() {
        let t = table(vec![
            row(&[1], [30, 20, 10, 0]),
            row(&[1, 2], [10, 12, 11, 0]),
        ]);
        let v = audit_margin_table(&t);
        assert_eq!(v.len(), 2, "{}", render_violations(&v));
        assert!(matches!(v[0], Violation::Monotonicity { higher, .. } if higher == 0.2));
        assert!(matches!(&v[1], Violation::Intersection { fraction, .. } if *fraction == 0.4));
    }
}

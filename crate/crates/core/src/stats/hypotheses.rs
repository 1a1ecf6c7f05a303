//! Cross-dataset validation of error margins.
//!
//! Every evaluable (row, threshold) pair is one hypothesis: the calibration
//! Non-TLA is greater than the evaluation Non-TLA, tested with a one-sided
//! Mann-Whitney U on per-image samples of the two non-target partitions.
//! Rows rejecting H0 are *confirmed*. Per threshold, and pooled over all
//! thresholds, the confirmed (calibration, evaluation) Non-TLA pairs then go
//! through a Wilcoxon signed-rank test with the alternative that the
//! evaluation rate is lower.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{holm_adjust, mann_whitney_u, wilcoxon_signed_rank, Alternative, TestResult};
use crate::dataset::{partition_images, DatasetBundle};
use crate::margins::{
    activation_indicators, min_normalized_activations, AnalysisConfig, Ensemble, EvalRow,
    EvaluationTable, MarginTable, RowSelection, SampleKind, ThresholdTable,
};
use crate::rate::Rate;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HypothesisRecord {
    /// Index into the calibration margin table.
    pub row: usize,
    pub ensemble: Ensemble,
    pub fraction: f64,
    pub calib_rate: Rate,
    pub eval_rate: Rate,
    pub mwu: TestResult,
    /// Holm-adjusted p-value when the adjustment is enabled.
    pub p_adjusted: Option<f64>,
    pub confirmed: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FractionSummary {
    pub fraction: f64,
    pub tested: usize,
    pub rejected: usize,
    /// `None` when no row was confirmed at this threshold.
    pub wilcoxon: Option<TestResult>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HypothesisReport {
    pub alpha: f64,
    pub holm: bool,
    pub hypotheses: Vec<HypothesisRecord>,
    pub per_fraction: Vec<FractionSummary>,
    /// Over the confirmed pairs of every threshold; `None` when there are none.
    pub pooled: Option<TestResult>,
    pub not_evaluable: Vec<(Ensemble, String)>,
}

impl HypothesisReport {
    pub fn tested(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn rejected(&self) -> usize {
        self.hypotheses.iter().filter(|h| h.confirmed).count()
    }

    /// Confirmed `(calibration %, evaluation %)` pairs at one threshold.
    pub fn confirmed_pairs(&self, fraction: f64) -> Vec<(f64, f64)> {
        self.hypotheses
            .iter()
            .filter(|h| h.confirmed && h.fraction == fraction)
            .map(|h| (h.calib_rate.percent(), h.eval_rate.percent()))
            .collect()
    }
}

fn select_rows(calib: &MarginTable, selection: RowSelection) -> Vec<usize> {
    match selection {
        RowSelection::All => (0..calib.rows.len()).collect(),
        RowSelection::LargestPerConcept => {
            let mut best: BTreeMap<&str, usize> = BTreeMap::new();
            for (i, row) in calib.rows.iter().enumerate() {
                let e = &row.ensemble;
                best.entry(e.concept())
                    .and_modify(|b| {
                        let cur = &calib.rows[*b].ensemble;
                        if e.len() > cur.len()
                            || (e.len() == cur.len() && e.neurons() < cur.neurons())
                        {
                            *b = i;
                        }
                    })
                    .or_insert(i);
            }
            let mut rows: Vec<usize> = best.into_values().collect();
            rows.sort_unstable();
            rows
        }
    }
}

fn samples(
    ensemble: &Ensemble,
    ids: &BTreeSet<&str>,
    bundle: &DatasetBundle,
    thresholds: &ThresholdTable,
    fraction_index: usize,
    kind: SampleKind,
) -> Result<Vec<f64>> {
    Ok(match kind {
        SampleKind::Binary => {
            activation_indicators(ensemble, ids, bundle, thresholds, fraction_index)?
                .into_iter()
                .map(|b| if b { 1.0 } else { 0.0 })
                .collect()
        }
        SampleKind::MinNormalized => {
            let cutoff = thresholds.spec().fractions()[fraction_index];
            // values at or below the cutoff carry no activation at this threshold
            min_normalized_activations(ensemble, ids, bundle, thresholds)?
                .into_iter()
                .map(|v| if v > cutoff { v } else { 0.0 })
                .collect()
        }
    })
}

/// Runs the MWU grid, then per-threshold and pooled Wilcoxon tests over the
/// confirmed rows. `calib` and `eval` must be row-aligned (as produced by
/// [`crate::margins::evaluate_margins`]) and `thresholds` must be the
/// calibration thresholds.
pub fn run_hypotheses(
    calib: &MarginTable,
    eval: &EvaluationTable,
    calib_bundle: &DatasetBundle,
    eval_bundle: &DatasetBundle,
    thresholds: &ThresholdTable,
    config: &AnalysisConfig,
) -> Result<HypothesisReport> {
    config.validate()?;
    if calib.rows.len() != eval.rows.len() {
        return Err(Error::Misaligned(format!(
            "{} calibration rows, {} evaluation rows",
            calib.rows.len(),
            eval.rows.len()
        )));
    }
    for (i, (c, e)) in calib.rows.iter().zip(&eval.rows).enumerate() {
        if &c.ensemble != e.ensemble() {
            return Err(Error::Misaligned(format!(
                "row {i}: {} vs {}",
                c.ensemble,
                e.ensemble()
            )));
        }
    }
    if thresholds.spec() != &calib.thresholds || calib.thresholds != eval.thresholds {
        return Err(Error::Misaligned(
            "tables use different threshold fractions".into(),
        ));
    }
    let fractions = calib.thresholds.fractions();

    let mut hypotheses = Vec::new();
    let mut not_evaluable = Vec::new();
    for i in select_rows(calib, config.row_selection) {
        let calib_row = &calib.rows[i];
        let eval_row = match &eval.rows[i] {
            EvalRow::Evaluated(r) => r,
            EvalRow::NotEvaluable { ensemble, reason } => {
                not_evaluable.push((ensemble.clone(), reason.clone()));
                continue;
            }
        };
        let ensemble = &calib_row.ensemble;
        let calib_ids = partition_images(ensemble.concept(), calib_bundle).nontarget;
        let eval_ids = partition_images(ensemble.concept(), eval_bundle).nontarget;
        for (j, &fraction) in fractions.iter().enumerate() {
            let a = samples(
                ensemble,
                &calib_ids,
                calib_bundle,
                thresholds,
                j,
                config.sample_kind,
            )?;
            let b = samples(
                ensemble,
                &eval_ids,
                eval_bundle,
                thresholds,
                j,
                config.sample_kind,
            )?;
            let mwu = mann_whitney_u(
                &a,
                &b,
                Alternative::Greater,
                config.alpha,
                config.mwu_method,
            )?;
            hypotheses.push(HypothesisRecord {
                row: i,
                ensemble: ensemble.clone(),
                fraction,
                calib_rate: calib_row.non_tla[j],
                eval_rate: eval_row.non_tla[j],
                confirmed: mwu.rejected,
                mwu,
                p_adjusted: None,
            });
        }
    }

    if config.holm {
        let p: Vec<f64> = hypotheses.iter().map(|h| h.mwu.p_value).collect();
        for (h, adj) in hypotheses.iter_mut().zip(holm_adjust(&p)) {
            h.p_adjusted = Some(adj);
            h.confirmed = adj < config.alpha;
        }
    }

    let wilcoxon = |pairs: &[(f64, f64)]| -> Result<Option<TestResult>> {
        if pairs.is_empty() {
            return Ok(None);
        }
        wilcoxon_signed_rank(
            pairs,
            Alternative::Less,
            config.alpha,
            config.zero_policy,
            config.wilcoxon_method,
        )
        .map(Some)
    };

    let mut per_fraction = Vec::with_capacity(fractions.len());
    let mut pooled_pairs = Vec::new();
    for &fraction in fractions {
        let at: Vec<&HypothesisRecord> = hypotheses
            .iter()
            .filter(|h| h.fraction == fraction)
            .collect();
        let pairs: Vec<(f64, f64)> = at
            .iter()
            .filter(|h| h.confirmed)
            .map(|h| (h.calib_rate.percent(), h.eval_rate.percent()))
            .collect();
        pooled_pairs.extend_from_slice(&pairs);
        per_fraction.push(FractionSummary {
            fraction,
            tested: at.len(),
            rejected: pairs.len(),
            wilcoxon: wilcoxon(&pairs)?,
        });
    }
    let pooled = wilcoxon(&pooled_pairs)?;

    Ok(HypothesisReport {
        alpha: config.alpha,
        holm: config.holm,
        hypotheses,
        per_fraction,
        pooled,
        not_evaluable,
    })
}

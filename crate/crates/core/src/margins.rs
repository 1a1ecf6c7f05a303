//! Thresholds, ensemble activation rates and the error-margin table.
//!
//! An image activates an ensemble at a threshold fraction when every member
//! neuron is strictly above `fraction * max_activation` of that neuron,
//! where the maxima come from the calibration dataset and stay frozen when
//! margins are evaluated on other data.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::dataset::{partition_images, ActivationTable, DatasetBundle, NeuronLabelMap};
use crate::rate::Rate;
use crate::stats::{MethodChoice, ZeroPolicy};
use crate::{Error, PartitionSide, Result};

/// Enumerating more ensembles than this for a single concept is an error.
pub const MAX_ENSEMBLES_PER_CONCEPT: u128 = 1 << 20;

/// Threshold fractions of the per-neuron maximum, strictly increasing in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct ThresholdSpec {
    fractions: Vec<f64>,
}

impl ThresholdSpec {
    pub fn new(fractions: Vec<f64>) -> Result<Self> {
        if fractions.is_empty() {
            return Err(Error::InvalidThresholds("no fractions given".into()));
        }
        for &f in &fractions {
            if !f.is_finite() || !(0.0..1.0).contains(&f) {
                return Err(Error::InvalidThresholds(format!("{f} is outside [0, 1)")));
            }
        }
        if fractions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidThresholds(
                "fractions must be strictly increasing".into(),
            ));
        }
        Ok(ThresholdSpec { fractions })
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn len(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }

    pub fn position(&self, fraction: f64) -> Result<usize> {
        self.fractions
            .iter()
            .position(|&f| f == fraction)
            .ok_or(Error::UnknownFraction(fraction))
    }

    /// Column suffix for a fraction: `gt0`, `gt20`, `gt12.5`.
    pub fn label(fraction: f64) -> String {
        let pct = libm::round(fraction * 1e6) / 1e4;
        format!("gt{pct}")
    }
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        ThresholdSpec {
            fractions: alloc::vec![0.0, 0.2, 0.4, 0.6],
        }
    }
}

impl TryFrom<Vec<f64>> for ThresholdSpec {
    type Error = Error;

    fn try_from(fractions: Vec<f64>) -> Result<Self> {
        ThresholdSpec::new(fractions)
    }
}

impl From<ThresholdSpec> for Vec<f64> {
    fn from(spec: ThresholdSpec) -> Self {
        spec.fractions
    }
}

/// Per-neuron maxima and cutoffs, recorded on one calibration dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    calibrated_on: String,
    spec: ThresholdSpec,
    max_activation: Vec<f64>,
    // neuron-major: cutoffs[n * spec.len() + j]
    cutoffs: Vec<f64>,
}

impl ThresholdTable {
    pub fn calibrated_on(&self) -> &str {
        &self.calibrated_on
    }

    pub fn spec(&self) -> &ThresholdSpec {
        &self.spec
    }

    pub fn neuron_count(&self) -> usize {
        self.max_activation.len()
    }

    pub fn max_activation(&self, neuron: usize) -> f64 {
        self.max_activation[neuron]
    }

    pub fn cutoff(&self, neuron: usize, fraction_index: usize) -> f64 {
        self.cutoffs[neuron * self.spec.len() + fraction_index]
    }

    /// Neurons that never fired on the calibration data; every cutoff is 0.
    pub fn degenerate(&self) -> Vec<usize> {
        self.max_activation
            .iter()
            .enumerate()
            .filter(|(_, &m)| m == 0.0)
            .map(|(n, _)| n)
            .collect()
    }
}

pub fn compute_thresholds(
    calibration: &ActivationTable,
    spec: &ThresholdSpec,
) -> Result<ThresholdTable> {
    if calibration.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let mut max_activation = alloc::vec![0.0f64; calibration.neuron_count()];
    for row in calibration.rows() {
        for (m, &a) in max_activation.iter_mut().zip(&row.activations) {
            if a > *m {
                *m = a;
            }
        }
    }
    let cutoffs = max_activation
        .iter()
        .flat_map(|&m| spec.fractions().iter().map(move |&f| f * m))
        .collect();
    Ok(ThresholdTable {
        calibrated_on: calibration.dataset_name().to_string(),
        spec: spec.clone(),
        max_activation,
        cutoffs,
    })
}

/// A concept and a non-empty, sorted, duplicate-free set of neurons.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ensemble {
    concept: String,
    neurons: Vec<usize>,
}

impl Ensemble {
    pub fn new(
        concept: impl Into<String>,
        neurons: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let set: BTreeSet<usize> = neurons.into_iter().collect();
        if set.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        Ok(Ensemble {
            concept: concept.into(),
            neurons: set.into_iter().collect(),
        })
    }

    pub fn concept(&self) -> &str {
        &self.concept
    }

    pub fn neurons(&self) -> &[usize] {
        &self.neurons
    }

    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `22+54+63`
    pub fn neuron_key(&self) -> String {
        let mut out = String::new();
        for (i, n) in self.neurons.iter().enumerate() {
            if i > 0 {
                out.push('+');
            }
            out.push_str(&n.to_string());
        }
        out
    }

    pub fn is_subset_of(&self, other: &Ensemble) -> bool {
        self.concept == other.concept
            && self
                .neurons
                .iter()
                .all(|n| other.neurons.binary_search(n).is_ok())
    }

    fn check_range(&self, neuron_count: usize) -> Result<()> {
        match self.neurons.last() {
            Some(&n) if n >= neuron_count => Err(Error::NeuronOutOfRange {
                neuron: n,
                neuron_count,
            }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.concept, self.neuron_key())
    }
}

/// Rows fed to the hypothesis tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RowSelection {
    /// Every retained (concept, ensemble) row.
    #[default]
    All,
    /// Per concept, only the retained row with the most neurons (ties broken
    /// by neuron list). One hypothesis per concept and threshold.
    LargestPerConcept,
}

/// What each per-image MWU sample value is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SampleKind {
    /// 1 if the image activates the ensemble at the threshold, else 0. The
    /// sample mean is the Non-TLA.
    #[default]
    Binary,
    /// Minimum over members of `activation / calibration max`.
    MinNormalized,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AnalysisConfig {
    pub thresholds: ThresholdSpec,
    /// Rows are kept when TLA at `> 0` strictly exceeds this percentage.
    pub tla_min: f64,
    pub top_k: usize,
    pub alpha: f64,
    /// `None` means every subset size.
    pub max_ensemble_size: Option<usize>,
    pub mwu_method: MethodChoice,
    pub wilcoxon_method: MethodChoice,
    pub zero_policy: ZeroPolicy,
    pub sample_kind: SampleKind,
    pub row_selection: RowSelection,
    /// Holm-Bonferroni adjustment of the MWU grid before confirming rows.
    pub holm: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            thresholds: ThresholdSpec::default(),
            tla_min: 80.0,
            top_k: 3,
            alpha: 0.05,
            max_ensemble_size: None,
            mwu_method: MethodChoice::Auto,
            wilcoxon_method: MethodChoice::Auto,
            zero_policy: ZeroPolicy::Wilcoxon,
            sample_kind: SampleKind::Binary,
            row_selection: RowSelection::All,
            holm: false,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha {} must lie in (0, 1)",
                self.alpha
            )));
        }
        if !(0.0..=100.0).contains(&self.tla_min) {
            return Err(Error::InvalidConfig(format!(
                "tla_min {} must lie in [0, 100]",
                self.tla_min
            )));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidConfig("top_k must be at least 1".into()));
        }
        if self.max_ensemble_size == Some(0) {
            return Err(Error::InvalidConfig(
                "max_ensemble_size must be at least 1".into(),
            ));
        }
        ThresholdSpec::new(self.thresholds.fractions().to_vec())?;
        Ok(())
    }
}

/// Non-fatal conditions met while building or evaluating a table.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Warning {
    UnannotatedImages {
        dataset: String,
        count: usize,
    },
    DegenerateNeurons(Vec<usize>),
    NoAnnotations,
    EmptyPartition {
        concept: String,
        side: PartitionSide,
    },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::UnannotatedImages { dataset, count } => write!(
                f,
                "{dataset}: {count} activation rows have no annotations and were excluded"
            ),
            Warning::DegenerateNeurons(ns) => {
                write!(f, "neurons with zero calibration maximum: {ns:?}")
            }
            Warning::NoAnnotations => f.write_str("no annotated images"),
            Warning::EmptyPartition { concept, side } => {
                write!(f, "concept {concept}: empty {side} partition, skipped")
            }
        }
    }
}

#[inline]
fn activates_at(
    activations: &[f64],
    neurons: &[usize],
    thresholds: &ThresholdTable,
    j: usize,
) -> bool {
    neurons
        .iter()
        .all(|&n| activations[n] > thresholds.cutoff(n, j))
}

/// True iff every member of the ensemble is strictly above its cutoff.
pub fn ensemble_activates(
    activations: &[f64],
    ensemble: &Ensemble,
    thresholds: &ThresholdTable,
    fraction: f64,
) -> Result<bool> {
    let j = thresholds.spec().position(fraction)?;
    ensemble.check_range(activations.len().min(thresholds.neuron_count()))?;
    Ok(activates_at(activations, ensemble.neurons(), thresholds, j))
}

fn lookup<'b>(bundle: &'b DatasetBundle, ids: &BTreeSet<&str>) -> Result<Vec<&'b [f64]>> {
    ids.iter()
        .map(|id| {
            bundle
                .activations
                .get(id)
                .ok_or_else(|| Error::UnknownImage(id.to_string()))
        })
        .collect()
}

fn count_rate(rows: &[&[f64]], neurons: &[usize], thresholds: &ThresholdTable, j: usize) -> Rate {
    let hits = rows
        .iter()
        .filter(|a| activates_at(a, neurons, thresholds, j))
        .count();
    Rate::new(hits as u64, rows.len() as u64)
}

fn count_positive(rows: &[&[f64]], neurons: &[usize]) -> Rate {
    let hits = rows
        .iter()
        .filter(|a| neurons.iter().all(|&n| a[n] > 0.0))
        .count();
    Rate::new(hits as u64, rows.len() as u64)
}

/// Share of `image_ids` on which the ensemble activates at `fraction`.
pub fn activation_rate(
    ensemble: &Ensemble,
    image_ids: &BTreeSet<&str>,
    bundle: &DatasetBundle,
    thresholds: &ThresholdTable,
    fraction: f64,
) -> Result<Rate> {
    let j = thresholds.spec().position(fraction)?;
    if image_ids.is_empty() {
        return Err(Error::EmptyPartition {
            concept: ensemble.concept().to_string(),
            side: PartitionSide::NonTarget,
        });
    }
    ensemble.check_range(
        bundle
            .activations
            .neuron_count()
            .min(thresholds.neuron_count()),
    )?;
    let rows = lookup(bundle, image_ids)?;
    Ok(count_rate(&rows, ensemble.neurons(), thresholds, j))
}

/// Per-image activation indicators, in `image_ids` order.
pub fn activation_indicators(
    ensemble: &Ensemble,
    image_ids: &BTreeSet<&str>,
    bundle: &DatasetBundle,
    thresholds: &ThresholdTable,
    fraction_index: usize,
) -> Result<Vec<bool>> {
    ensemble.check_range(
        bundle
            .activations
            .neuron_count()
            .min(thresholds.neuron_count()),
    )?;
    let rows = lookup(bundle, image_ids)?;
    Ok(rows
        .iter()
        .map(|a| activates_at(a, ensemble.neurons(), thresholds, fraction_index))
        .collect())
}

/// Per-image `min over members of activation / calibration max`. Members
/// with a zero maximum contribute 0.
pub fn min_normalized_activations(
    ensemble: &Ensemble,
    image_ids: &BTreeSet<&str>,
    bundle: &DatasetBundle,
    thresholds: &ThresholdTable,
) -> Result<Vec<f64>> {
    ensemble.check_range(
        bundle
            .activations
            .neuron_count()
            .min(thresholds.neuron_count()),
    )?;
    let rows = lookup(bundle, image_ids)?;
    Ok(rows
        .iter()
        .map(|a| {
            ensemble
                .neurons()
                .iter()
                .map(|&n| {
                    let m = thresholds.max_activation(n);
                    if m > 0.0 {
                        a[n] / m
                    } else {
                        0.0
                    }
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All non-empty subsets of the neurons labeled `concept`, ordered by size
/// and then lexicographically.
pub fn enumerate_ensembles(
    concept: &str,
    label_map: &NeuronLabelMap,
    config: &AnalysisConfig,
) -> Result<Vec<Ensemble>> {
    let members: Vec<usize> = label_map
        .neurons_for(concept, config.top_k)
        .into_iter()
        .collect();
    let m = members.len();
    let max_size = config.max_ensemble_size.unwrap_or(m).min(m);
    let total: u128 = (1..=max_size).map(|k| binomial(m, k)).sum();
    if total > MAX_ENSEMBLES_PER_CONCEPT {
        return Err(Error::EnsembleLimit {
            concept: concept.to_string(),
            neurons: m,
            subsets: total,
            limit: MAX_ENSEMBLES_PER_CONCEPT,
        });
    }
    let mut out = Vec::with_capacity(total as usize);
    for k in 1..=max_size {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(Ensemble {
                concept: concept.to_string(),
                neurons: idx.iter().map(|&i| members[i]).collect(),
            });
            // next k-combination in lexicographic order
            let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + m - k) else {
                break;
            };
            idx[pos] += 1;
            for i in pos + 1..k {
                idx[i] = idx[i - 1] + 1;
            }
        }
    }
    Ok(out)
}

/// One line of the error-margin ledger.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MarginRow {
    pub ensemble: Ensemble,
    /// Activation rate `> 0` on the target partition.
    pub tla: Rate,
    /// Activation rate on the non-target partition, one per threshold.
    pub non_tla: Vec<Rate>,
    pub target_n: Option<u64>,
    pub nontarget_n: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginTable {
    pub thresholds: ThresholdSpec,
    pub tla_min: f64,
    pub top_k: usize,
    pub rows: Vec<MarginRow>,
    pub warnings: Vec<Warning>,
}

impl MarginTable {
    /// Checks row widths and `(concept, neurons)` uniqueness.
    pub fn new(
        thresholds: ThresholdSpec,
        tla_min: f64,
        top_k: usize,
        rows: Vec<MarginRow>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for row in &rows {
            if row.non_tla.len() != thresholds.len() {
                return Err(Error::Misaligned(format!(
                    "{}: {} non-target rates for {} thresholds",
                    row.ensemble,
                    row.non_tla.len(),
                    thresholds.len()
                )));
            }
            if !seen.insert(&row.ensemble) {
                return Err(Error::Misaligned(format!("duplicate row {}", row.ensemble)));
            }
        }
        Ok(MarginTable {
            thresholds,
            tla_min,
            top_k,
            rows,
            warnings: Vec::new(),
        })
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn bundle_warnings(bundle: &DatasetBundle, warnings: &mut Vec<Warning>) {
    if !bundle.unannotated().is_empty() {
        warnings.push(Warning::UnannotatedImages {
            dataset: bundle.activations.dataset_name().to_string(),
            count: bundle.unannotated().len(),
        });
    }
    if bundle.annotations.is_empty() {
        warnings.push(Warning::NoAnnotations);
    }
}

fn check_compatible(bundle: &DatasetBundle, thresholds: &ThresholdTable) -> Result<()> {
    if bundle.activations.neuron_count() != thresholds.neuron_count() {
        return Err(Error::Misaligned(format!(
            "dataset {} has {} neurons, thresholds from {} have {}",
            bundle.activations.dataset_name(),
            bundle.activations.neuron_count(),
            thresholds.calibrated_on(),
            thresholds.neuron_count()
        )));
    }
    Ok(())
}

/// Computes TLA and Non-TLA for every labeled concept and ensemble, keeping
/// rows whose TLA strictly exceeds `config.tla_min`.
pub fn build_margin_table(
    bundle: &DatasetBundle,
    label_map: &NeuronLabelMap,
    thresholds: &ThresholdTable,
    config: &AnalysisConfig,
) -> Result<MarginTable> {
    config.validate()?;
    check_compatible(bundle, thresholds)?;
    if thresholds.spec() != &config.thresholds {
        return Err(Error::Misaligned(
            "threshold table and configuration use different fractions".into(),
        ));
    }
    let neuron_count = bundle.activations.neuron_count();
    if let Some(n) = label_map.max_neuron().filter(|&n| n >= neuron_count) {
        return Err(Error::NeuronOutOfRange {
            neuron: n,
            neuron_count,
        });
    }

    let mut warnings = Vec::new();
    bundle_warnings(bundle, &mut warnings);
    let degenerate = thresholds.degenerate();
    if !degenerate.is_empty() {
        warnings.push(Warning::DegenerateNeurons(degenerate));
    }

    let mut rows = Vec::new();
    for concept in label_map.concepts(config.top_k) {
        let ensembles = enumerate_ensembles(concept, label_map, config)?;
        let part = partition_images(concept, bundle);
        if part.target.is_empty() {
            warnings.push(Warning::EmptyPartition {
                concept: concept.to_string(),
                side: PartitionSide::Target,
            });
            continue;
        }
        let target = lookup(bundle, &part.target)?;
        let nontarget = lookup(bundle, &part.nontarget)?;
        for ensemble in ensembles {
            let tla = count_positive(&target, ensemble.neurons());
            if tla.percent() <= config.tla_min {
                continue;
            }
            if nontarget.is_empty() {
                return Err(Error::EmptyPartition {
                    concept: concept.to_string(),
                    side: PartitionSide::NonTarget,
                });
            }
            let non_tla = (0..thresholds.spec().len())
                .map(|j| count_rate(&nontarget, ensemble.neurons(), thresholds, j))
                .collect();
            rows.push(MarginRow {
                ensemble,
                tla,
                non_tla,
                target_n: Some(target.len() as u64),
                nontarget_n: Some(nontarget.len() as u64),
            });
        }
        // reached only when no ensemble of the concept was retained
        if nontarget.is_empty() {
            warnings.push(Warning::EmptyPartition {
                concept: concept.to_string(),
                side: PartitionSide::NonTarget,
            });
        }
    }
    Ok(MarginTable {
        thresholds: thresholds.spec().clone(),
        tla_min: config.tla_min,
        top_k: config.top_k,
        rows,
        warnings,
    })
}

/// A calibration row re-measured on the evaluation dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalRow {
    Evaluated(MarginRow),
    NotEvaluable { ensemble: Ensemble, reason: String },
}

impl EvalRow {
    pub fn ensemble(&self) -> &Ensemble {
        match self {
            EvalRow::Evaluated(r) => &r.ensemble,
            EvalRow::NotEvaluable { ensemble, .. } => ensemble,
        }
    }

    pub fn evaluated(&self) -> Option<&MarginRow> {
        match self {
            EvalRow::Evaluated(r) => Some(r),
            EvalRow::NotEvaluable { .. } => None,
        }
    }
}

/// Row-aligned with the calibration table it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationTable {
    pub thresholds: ThresholdSpec,
    pub rows: Vec<EvalRow>,
    pub warnings: Vec<Warning>,
}

/// Re-measures the retained rows of `margins` on `eval_bundle` using the
/// calibration thresholds.
pub fn evaluate_margins(
    margins: &MarginTable,
    eval_bundle: &DatasetBundle,
    thresholds: &ThresholdTable,
) -> Result<EvaluationTable> {
    check_compatible(eval_bundle, thresholds)?;
    if thresholds.spec() != &margins.thresholds {
        return Err(Error::Misaligned(
            "threshold table and margin table use different fractions".into(),
        ));
    }
    let mut warnings = Vec::new();
    bundle_warnings(eval_bundle, &mut warnings);

    let mut rows = Vec::with_capacity(margins.rows.len());
    for row in &margins.rows {
        let ensemble = &row.ensemble;
        ensemble.check_range(thresholds.neuron_count())?;
        let part = partition_images(ensemble.concept(), eval_bundle);
        if part.target.is_empty() {
            rows.push(EvalRow::NotEvaluable {
                ensemble: ensemble.clone(),
                reason: "concept absent from evaluation annotations".into(),
            });
            continue;
        }
        if part.nontarget.is_empty() {
            rows.push(EvalRow::NotEvaluable {
                ensemble: ensemble.clone(),
                reason: "no evaluation images without the concept".into(),
            });
            continue;
        }
        let target = lookup(eval_bundle, &part.target)?;
        let nontarget = lookup(eval_bundle, &part.nontarget)?;
        let non_tla = (0..thresholds.spec().len())
            .map(|j| count_rate(&nontarget, ensemble.neurons(), thresholds, j))
            .collect();
        rows.push(EvalRow::Evaluated(MarginRow {
            ensemble: ensemble.clone(),
            tla: count_positive(&target, ensemble.neurons()),
            non_tla,
            target_n: Some(target.len() as u64),
            nontarget_n: Some(nontarget.len() as u64),
        }));
    }
    Ok(EvaluationTable {
        thresholds: margins.thresholds.clone(),
        rows,
        warnings,
    })
}

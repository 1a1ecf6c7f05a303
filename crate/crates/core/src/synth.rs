//! Synthetic bundles with known activation probabilities.
//!
//! # Generation procedure
//!
//! The random stream is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `SeedableRng::seed_from_u64(seed)`. A uniform draw takes the top 53 bits
//! of `next_u64()` and scales them by `2^-53`, giving a value in `[0, 1)`.
//!
//! Images are produced concept by concept in spec order: first
//! `images_per_concept_target` images tagged with the concept
//! (`c{index:03}_t{k:05}`), then `images_per_concept_nontarget` images
//! tagged with `filler_tag` (`c{index:03}_n{k:05}`). For every image and
//! every concept, again in spec order, one uniform `u` picks a level: the
//! number of thresholds `j` with `u < p[j]`, where `p` is the concept's
//! target probabilities if the image carries the concept and its
//! non-target probabilities otherwise. Then each member neuron, in
//! ascending order, takes one more uniform `v` and the value
//!
//! * level 0: `fractions[0] * max * v`
//! * level `L > 0`: `lo + (hi - lo) * (0.05 + 0.9 * v)` with
//!   `lo = fractions[L - 1] * max` and `hi = fractions[L] * max`
//!   (or `max` for the top level).
//!
//! All members of a concept share the level, so every sub-ensemble of the
//! concept fires at exactly the concept's rate. Finally, one unannotated
//! anchor image per neuron (`anchor_n{neuron:03}`) holds `max` on that
//! neuron and 0 elsewhere, so calibrated cutoffs land exactly on
//! `fraction * max`. Neurons that belong to no concept stay 0 elsewhere.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::dataset::{
    normalize_tag, ActivationRow, ActivationTable, AnnotationTable, DatasetBundle, LabelEntry,
    NeuronLabelMap,
};
use crate::margins::ThresholdSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthConcept {
    pub tag: String,
    pub neurons: Vec<usize>,
    /// Probability of firing above each threshold on target images.
    pub p_target: Vec<f64>,
    /// Probability of firing above each threshold on non-target images.
    pub p_nontarget: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthSpec {
    pub seed: u64,
    #[cfg_attr(feature = "serde", serde(default = "default_dataset_name"))]
    pub dataset_name: String,
    pub neuron_count: usize,
    #[cfg_attr(feature = "serde", serde(default))]
    pub fractions: ThresholdSpec,
    #[cfg_attr(feature = "serde", serde(default = "default_max_activation"))]
    pub max_activation: f64,
    pub images_per_concept_target: usize,
    pub images_per_concept_nontarget: usize,
    #[cfg_attr(feature = "serde", serde(default = "default_filler_tag"))]
    pub filler_tag: String,
    pub concepts: Vec<SynthConcept>,
}

#[cfg(feature = "serde")]
fn default_dataset_name() -> String {
    "synthetic".into()
}

#[cfg(feature = "serde")]
fn default_max_activation() -> f64 {
    1.0
}

#[cfg(feature = "serde")]
fn default_filler_tag() -> String {
    "background".into()
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSynthSpec(msg));
        if self.neuron_count == 0 {
            return bad("neuron_count must be positive".into());
        }
        if !(self.max_activation.is_finite() && self.max_activation > 0.0) {
            return bad(format!(
                "max_activation {} must be finite and > 0",
                self.max_activation
            ));
        }
        if self.images_per_concept_target == 0 {
            return bad("images_per_concept_target must be positive".into());
        }
        if normalize_tag(&self.filler_tag) != self.filler_tag || self.filler_tag.is_empty() {
            return bad(format!(
                "filler tag {:?} is not a normalized tag",
                self.filler_tag
            ));
        }
        let m = self.fractions.len();
        let mut tags = BTreeSet::new();
        let mut used = BTreeSet::new();
        for c in &self.concepts {
            if c.tag.is_empty() || normalize_tag(&c.tag) != c.tag {
                return bad(format!("concept tag {:?} is not a normalized tag", c.tag));
            }
            if c.tag == self.filler_tag {
                return bad(format!("concept tag {:?} equals the filler tag", c.tag));
            }
            if !tags.insert(c.tag.as_str()) {
                return bad(format!("duplicate concept {:?}", c.tag));
            }
            if c.neurons.is_empty() {
                return bad(format!("concept {:?} has no neurons", c.tag));
            }
            for &n in &c.neurons {
                if n >= self.neuron_count {
                    return bad(format!("concept {:?}: neuron {n} out of range", c.tag));
                }
                if !used.insert(n) {
                    return bad(format!("neuron {n} belongs to more than one concept"));
                }
            }
            for (name, p) in [("p_target", &c.p_target), ("p_nontarget", &c.p_nontarget)] {
                if p.len() != m {
                    return bad(format!(
                        "concept {:?}: {name} has {} entries for {m} thresholds",
                        c.tag,
                        p.len()
                    ));
                }
                if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return bad(format!("concept {:?}: {name} outside [0, 1]", c.tag));
                }
                if p.windows(2).any(|w| w[1] > w[0]) {
                    return bad(format!(
                        "concept {:?}: {name} increases with the threshold",
                        c.tag
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub bundle: DatasetBundle,
    pub label_map: NeuronLabelMap,
}

struct Uniform(ChaCha8Rng);

impl Uniform {
    fn next(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

fn magnitude(level: usize, v: f64, fractions: &[f64], max: f64) -> f64 {
    if level == 0 {
        return fractions[0] * max * v;
    }
    let lo = fractions[level - 1] * max;
    let hi = fractions.get(level).map_or(max, |f| f * max);
    lo + (hi - lo) * (0.05 + 0.9 * v)
}

pub fn generate_bundle(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let mut rng = Uniform(ChaCha8Rng::seed_from_u64(spec.seed));
    let fractions = spec.fractions.fractions();
    let mut members: Vec<Vec<usize>> = spec.concepts.iter().map(|c| c.neurons.clone()).collect();
    for m in &mut members {
        m.sort_unstable();
    }

    let mut rows = Vec::new();
    let mut annotations = AnnotationTable::new();
    for (ci, concept) in spec.concepts.iter().enumerate() {
        let images = (0..spec.images_per_concept_target)
            .map(|k| (format!("c{ci:03}_t{k:05}"), true))
            .chain(
                (0..spec.images_per_concept_nontarget)
                    .map(|k| (format!("c{ci:03}_n{k:05}"), false)),
            );
        for (image_id, is_target) in images {
            let mut activations = vec![0.0; spec.neuron_count];
            for (di, other) in spec.concepts.iter().enumerate() {
                let p = if is_target && di == ci {
                    &other.p_target
                } else {
                    &other.p_nontarget
                };
                let u = rng.next();
                let level = p.iter().take_while(|&&q| u < q).count();
                for &n in &members[di] {
                    activations[n] = magnitude(level, rng.next(), fractions, spec.max_activation);
                }
            }
            annotations.insert(
                &image_id,
                if is_target {
                    &concept.tag
                } else {
                    &spec.filler_tag
                },
            )?;
            rows.push(ActivationRow {
                image_id,
                activations,
            });
        }
    }
    for n in 0..spec.neuron_count {
        let mut activations = vec![0.0; spec.neuron_count];
        activations[n] = spec.max_activation;
        rows.push(ActivationRow {
            image_id: format!("anchor_n{n:03}"),
            activations,
        });
    }

    let activations = ActivationTable::new(spec.dataset_name.clone(), spec.neuron_count, rows)?;
    let bundle = DatasetBundle::new(activations, annotations)?;
    let label_map = NeuronLabelMap::new(
        spec.concepts
            .iter()
            .flat_map(|c| {
                c.neurons.iter().map(move |&neuron| LabelEntry {
                    neuron,
                    rank: 1,
                    concept: c.tag.to_string(),
                    coverage_score: 1.0,
                })
            })
            .collect(),
    )?;
    Ok(SynthOutput { bundle, label_map })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::margins::{build_margin_table, compute_thresholds, AnalysisConfig};

    fn spec(
        p_target: Vec<f64>,
        p_nontarget: Vec<f64>,
        targets: usize,
        nontargets: usize,
    ) -> SynthSpec {
        SynthSpec {
            seed: 7,
            dataset_name: "synthetic".into(),
            neuron_count: 4,
            fractions: ThresholdSpec::default(),
            max_activation: 2.0,
            images_per_concept_target: targets,
            images_per_concept_nontarget: nontargets,
            filler_tag: "background".into(),
            concepts: vec![SynthConcept {
                tag: "road".into(),
                neurons: vec![1, 3],
                p_target,
                p_nontarget,
            }],
        }
    }

    fn margins(s: &SynthSpec) -> crate::margins::MarginTable {
        let out = generate_bundle(s).unwrap();
        let th = compute_thresholds(&out.bundle.activations, &s.fractions).unwrap();
        let config = AnalysisConfig {
            tla_min: 0.0,
            ..AnalysisConfig::default()
        };
        build_margin_table(&out.bundle, &out.label_map, &th, &config).unwrap()
    }

    #[test]
    fn extremes_are_exact() {
        let s = spec(vec![1.0; 4], vec![0.0; 4], 20, 30);
        let t = margins(&s);
        // {1}, {3}, {1, 3}
        assert_eq!(t.rows.len(), 3);
        for row in &t.rows {
            assert_eq!(row.tla.percent(), 100.0);
            assert!(row.non_tla.iter().all(|r| r.hits == 0));
            assert_eq!(row.nontarget_n, Some(30));
        }
    }

    #[test]
    fn anchors_fix_the_maximum() {
        let s = spec(vec![1.0; 4], vec![0.5; 4], 20, 30);
        let out = generate_bundle(&s).unwrap();
        let th = compute_thresholds(&out.bundle.activations, &s.fractions).unwrap();
        for n in 0..4 {
            assert_eq!(th.max_activation(n), 2.0);
        }
        assert_eq!(out.bundle.unannotated().len(), 4);
    }

    #[test]
    fn measured_rates_converge() {
        let target = [0.6, 0.3, 0.1, 0.02];
        let s = spec(vec![1.0, 0.9, 0.8, 0.7], target.to_vec(), 10, 10_000);
        let t = margins(&s);
        for row in &t.rows {
            for (r, p) in row.non_tla.iter().zip(target) {
                // 3 sigma of a binomial proportion over 10^4 draws is at most 1.5 points
                assert!(
                    (r.percent() - 100.0 * p).abs() <= 1.5,
                    "{} vs {p}",
                    r.percent()
                );
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let s = spec(vec![0.9, 0.5, 0.3, 0.1], vec![0.4, 0.3, 0.2, 0.1], 5, 5);
        assert_eq!(generate_bundle(&s).unwrap(), generate_bundle(&s).unwrap());
        let mut other = s.clone();
        other.seed = 8;
        assert_ne!(
            generate_bundle(&s).unwrap().bundle.activations,
            generate_bundle(&other).unwrap().bundle.activations
        );
    }

    #[test]
    fn invalid_specs() {
        let base = spec(vec![1.0; 4], vec![0.0; 4], 1, 1);
        let mut s = base.clone();
        s.concepts[0].p_target[2] = 1.5;
        assert!(matches!(
            generate_bundle(&s),
            Err(Error::InvalidSynthSpec(_))
        ));
        let mut s = base.clone();
        s.concepts[0].p_nontarget = vec![0.1, 0.2, 0.0, 0.0];
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.concepts[0].neurons = vec![4];
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.concepts.push(s.concepts[0].clone());
        s.concepts[1].tag = "car".into();
        assert!(s.validate().is_err(), "shared neurons");
        let mut s = base.clone();
        s.concepts[0].tag = "Road".into();
        assert!(s.validate().is_err());
        let mut s = base;
        s.concepts[0].p_target.pop();
        assert!(s.validate().is_err());
    }
}

//! In-memory activation, annotation and label tables.
//!
//! Tables are validated on construction and immutable afterwards.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::{Error, Result};

/// Trims, lower-cases and collapses internal whitespace to single spaces.
///
/// Conjunctive labels such as `"tap and shower_screen"` stay one tag.
pub fn normalize_tag(tag: &str) -> String {
    let mut out = String::with_capacity(tag.len());
    for word in tag.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&word.to_lowercase());
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationRow {
    pub image_id: String,
    pub activations: Vec<f64>,
}

/// Post-ReLU activations of one layer, one row per image.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTable {
    dataset_name: String,
    neuron_count: usize,
    rows: Vec<ActivationRow>,
    index: BTreeMap<String, usize>,
}

impl ActivationTable {
    pub fn new(
        dataset_name: impl Into<String>,
        neuron_count: usize,
        rows: Vec<ActivationRow>,
    ) -> Result<Self> {
        if neuron_count == 0 {
            return Err(Error::NoNeurons);
        }
        let mut index = BTreeMap::new();
        for (i, row) in rows.iter().enumerate() {
            validate_row(row, neuron_count)?;
            if index.insert(row.image_id.clone(), i).is_some() {
                return Err(Error::DuplicateImage(row.image_id.clone()));
            }
        }
        Ok(ActivationTable {
            dataset_name: dataset_name.into(),
            neuron_count,
            rows,
            index,
        })
    }

    pub fn dataset_name(&self) -> &str {
        &self.dataset_name
    }

    pub fn neuron_count(&self) -> usize {
        self.neuron_count
    }

    pub fn rows(&self) -> &[ActivationRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&[f64]> {
        self.index
            .get(image_id)
            .map(|&i| self.rows[i].activations.as_slice())
    }

    pub fn contains(&self, image_id: &str) -> bool {
        self.index.contains_key(image_id)
    }
}

/// Checks a single row against the table invariants.
pub fn validate_row(row: &ActivationRow, neuron_count: usize) -> Result<()> {
    if row.activations.len() != neuron_count {
        return Err(Error::RowLength {
            image_id: row.image_id.clone(),
            expected: neuron_count,
            found: row.activations.len(),
        });
    }
    for (neuron, &value) in row.activations.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidActivation {
                image_id: row.image_id.clone(),
                neuron,
                value,
            });
        }
    }
    Ok(())
}

/// Ground-truth concept tags per image.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationTable {
    rows: BTreeMap<String, BTreeSet<String>>,
}

impl AnnotationTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one tag to an image, normalizing it first. Repeated tags merge.
    pub fn insert(&mut self, image_id: &str, tag: &str) -> Result<()> {
        let tag = normalize_tag(tag);
        if tag.is_empty() {
            return Err(Error::EmptyConcept(image_id.to_string()));
        }
        self.rows
            .entry(image_id.to_string())
            .or_default()
            .insert(tag);
        Ok(())
    }

    /// Registers an image with no tags. Such an image is annotated, and
    /// falls in every concept's non-target partition.
    pub fn insert_untagged(&mut self, image_id: &str) {
        self.rows.entry(image_id.to_string()).or_default();
    }

    pub fn tags(&self, image_id: &str) -> Option<&BTreeSet<String>> {
        self.rows.get(image_id)
    }

    pub fn image_ids(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.rows.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Every distinct tag.
    pub fn concepts(&self) -> BTreeSet<&str> {
        self.rows
            .values()
            .flat_map(|tags| tags.iter().map(String::as_str))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabelEntry {
    pub neuron: usize,
    /// 1-based; rank 1 has the highest coverage score.
    pub rank: u32,
    pub concept: String,
    pub coverage_score: f64,
}

/// Ranked concept labels per neuron.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeuronLabelMap {
    entries: Vec<LabelEntry>,
}

impl NeuronLabelMap {
    /// Normalizes concepts, sorts by `(neuron, rank)` and checks that each
    /// neuron's ranks are unique and contiguous from 1.
    pub fn new(mut entries: Vec<LabelEntry>) -> Result<Self> {
        for e in &mut entries {
            e.concept = normalize_tag(&e.concept);
            if e.concept.is_empty() {
                return Err(Error::EmptyConcept(alloc::format!("neuron {}", e.neuron)));
            }
            if !e.coverage_score.is_finite() {
                return Err(Error::InvalidCoverage {
                    neuron: e.neuron,
                    value: e.coverage_score,
                });
            }
        }
        entries.sort_by_key(|e| (e.neuron, e.rank));
        let mut prev: Option<(usize, u32)> = None;
        for e in &entries {
            let expected = match prev {
                Some((n, r)) if n == e.neuron => {
                    if r == e.rank {
                        return Err(Error::DuplicateLabel {
                            neuron: e.neuron,
                            rank: e.rank,
                        });
                    }
                    r + 1
                }
                _ => 1,
            };
            if e.rank != expected {
                return Err(Error::RankGap {
                    neuron: e.neuron,
                    expected,
                    found: e.rank,
                });
            }
            prev = Some((e.neuron, e.rank));
        }
        Ok(NeuronLabelMap { entries })
    }

    pub fn entries(&self) -> &[LabelEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct concepts appearing within the top `top_k` ranks.
    pub fn concepts(&self, top_k: usize) -> BTreeSet<&str> {
        self.entries
            .iter()
            .filter(|e| (e.rank as usize) <= top_k)
            .map(|e| e.concept.as_str())
            .collect()
    }

    /// Neurons carrying `concept` among their top `top_k` labels.
    pub fn neurons_for(&self, concept: &str, top_k: usize) -> BTreeSet<usize> {
        self.entries
            .iter()
            .filter(|e| (e.rank as usize) <= top_k && e.concept == concept)
            .map(|e| e.neuron)
            .collect()
    }

    /// Largest neuron index referenced, if any.
    pub fn max_neuron(&self) -> Option<usize> {
        self.entries.iter().map(|e| e.neuron).max()
    }
}

/// Activations and annotations of one dataset.
///
/// Annotated images must have activations. Activation rows without
/// annotations are kept (they still count toward per-neuron maxima) but are
/// excluded from both partitions of every concept.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub activations: ActivationTable,
    pub annotations: AnnotationTable,
    unannotated: Vec<String>,
}

impl DatasetBundle {
    pub fn new(activations: ActivationTable, annotations: AnnotationTable) -> Result<Self> {
        if let Some(id) = annotations.image_ids().find(|id| !activations.contains(id)) {
            return Err(Error::UnknownImage(id.to_string()));
        }
        let unannotated = activations
            .rows()
            .iter()
            .filter(|r| annotations.tags(&r.image_id).is_none())
            .map(|r| r.image_id.clone())
            .collect();
        Ok(DatasetBundle {
            activations,
            annotations,
            unannotated,
        })
    }

    /// Activation rows excluded from partitions for lack of annotations.
    pub fn unannotated(&self) -> &[String] {
        &self.unannotated
    }
}

/// Target / non-target split of the annotated images for one concept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition<'a> {
    pub target: BTreeSet<&'a str>,
    pub nontarget: BTreeSet<&'a str>,
}

/// Splits annotated images by whether their tag set contains `concept`.
/// `concept` must already be normalized.
pub fn partition_images<'a>(concept: &str, bundle: &'a DatasetBundle) -> Partition<'a> {
    let mut target = BTreeSet::new();
    let mut nontarget = BTreeSet::new();
    for (id, tags) in bundle.annotations.iter() {
        if tags.contains(concept) {
            target.insert(id);
        } else {
            nontarget.insert(id);
        }
    }
    Partition { target, nontarget }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn row(id: &str, a: &[f64]) -> ActivationRow {
        ActivationRow {
            image_id: id.into(),
            activations: a.to_vec(),
        }
    }

    fn label(neuron: usize, rank: u32, concept: &str) -> LabelEntry {
        LabelEntry {
            neuron,
            rank,
            concept: concept.into(),
            coverage_score: 0.5,
        }
    }

    #[test]
    fn minimal_table() {
        let t = ActivationTable::new("g", 2, vec![row("img1", &[0.5, 0.0])]).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.neuron_count(), 2);
        assert_eq!(t.get("img1"), Some(&[0.5, 0.0][..]));
    }

    #[test]
    fn rejects_bad_activations() {
        let err = ActivationTable::new("g", 2, vec![row("img1", &[-0.1, 0.0])]).unwrap_err();
        assert!(matches!(err, Error::InvalidActivation { ref image_id, .. } if image_id == "img1"));
        assert!(alloc::format!("{err}").contains("img1"));
        assert!(ActivationTable::new("g", 1, vec![row("a", &[f64::NAN])]).is_err());
        assert!(ActivationTable::new("g", 1, vec![row("a", &[f64::INFINITY])]).is_err());
        assert!(matches!(
            ActivationTable::new("g", 2, vec![row("a", &[1.0])]),
            Err(Error::RowLength { .. })
        ));
        assert!(matches!(
            ActivationTable::new("g", 1, vec![row("a", &[1.0]), row("a", &[2.0])]),
            Err(Error::DuplicateImage(_))
        ));
    }

    #[test]
    fn annotations_merge_and_normalize() {
        let mut a = AnnotationTable::new();
        a.insert("img1", "buffet").unwrap();
        a.insert("img1", "road").unwrap();
        a.insert("img2", "  Buffet ").unwrap();
        a.insert("img3", "tap and   shower_screen").unwrap();
        let tags: Vec<_> = a.tags("img1").unwrap().iter().cloned().collect();
        assert_eq!(tags, vec!["buffet", "road"]);
        assert!(a.tags("img2").unwrap().contains("buffet"));
        assert_eq!(a.tags("img3").unwrap().len(), 1);
        assert!(a.tags("img3").unwrap().contains("tap and shower_screen"));
        assert!(matches!(
            a.insert("img4", "   "),
            Err(Error::EmptyConcept(_))
        ));
    }

    #[test]
    fn label_map_validation() {
        let m = NeuronLabelMap::new(vec![label(62, 1, "buffet")]).unwrap();
        assert_eq!(
            m.neurons_for("buffet", 3).into_iter().collect::<Vec<_>>(),
            vec![62]
        );

        let m =
            NeuronLabelMap::new(vec![label(63, 1, "Building"), label(0, 1, "building")]).unwrap();
        assert_eq!(
            m.neurons_for("building", 3).into_iter().collect::<Vec<_>>(),
            vec![0, 63]
        );
        assert_eq!(m.entries()[0].neuron, 0);

        assert!(NeuronLabelMap::new(vec![]).unwrap().is_empty());
        assert!(matches!(
            NeuronLabelMap::new(vec![label(1, 1, "a"), label(1, 1, "b")]),
            Err(Error::DuplicateLabel { neuron: 1, rank: 1 })
        ));
        assert!(matches!(
            NeuronLabelMap::new(vec![label(1, 1, "a"), label(1, 3, "b")]),
            Err(Error::RankGap {
                neuron: 1,
                expected: 2,
                found: 3
            })
        ));
        assert!(matches!(
            NeuronLabelMap::new(vec![label(1, 2, "a")]),
            Err(Error::RankGap { .. })
        ));
    }

    #[test]
    fn top_k_limits_label_lookup() {
        let m = NeuronLabelMap::new(vec![
            label(5, 1, "a"),
            label(5, 2, "b"),
            label(5, 3, "c"),
            label(5, 4, "d"),
        ])
        .unwrap();
        assert!(m.neurons_for("d", 3).is_empty());
        assert_eq!(m.neurons_for("d", 4).len(), 1);
        assert_eq!(m.concepts(2).len(), 2);
    }

    fn bundle(tags: &[(&str, &[&str])]) -> DatasetBundle {
        let rows = tags.iter().map(|(id, _)| row(id, &[1.0])).collect();
        let act = ActivationTable::new("g", 1, rows).unwrap();
        let mut ann = AnnotationTable::new();
        for (id, ts) in tags {
            ann.insert_untagged(id);
            for t in *ts {
                ann.insert(id, t).unwrap();
            }
        }
        DatasetBundle::new(act, ann).unwrap()
    }

    #[test]
    fn partitions() {
        let b = bundle(&[("img1", &["buffet"]), ("img2", &["road"])]);
        let p = partition_images("buffet", &b);
        assert_eq!(p.target.into_iter().collect::<Vec<_>>(), vec!["img1"]);
        assert_eq!(p.nontarget.into_iter().collect::<Vec<_>>(), vec!["img2"]);

        let p = partition_images("skyscraper", &b);
        assert!(p.target.is_empty());
        assert_eq!(p.nontarget.len(), 2);

        let b = bundle(&[("a", &["x"]), ("b", &["x", "y"])]);
        let p = partition_images("x", &b);
        assert_eq!(p.target.len(), 2);
        assert!(p.nontarget.is_empty());
    }

    #[test]
    fn unannotated_rows_are_excluded() {
        let act = ActivationTable::new("g", 1, vec![row("a", &[1.0]), row("b", &[1.0])]).unwrap();
        let mut ann = AnnotationTable::new();
        ann.insert("a", "x").unwrap();
        let b = DatasetBundle::new(act, ann).unwrap();
        assert_eq!(b.unannotated(), &["b".to_string()]);
        let p = partition_images("x", &b);
        assert_eq!(p.target.len() + p.nontarget.len(), 1);
    }

    #[test]
    fn annotation_without_activation_is_an_error() {
        let act = ActivationTable::new("g", 1, vec![row("a", &[1.0])]).unwrap();
        let mut ann = AnnotationTable::new();
        ann.insert("zzz", "x").unwrap();
        assert_eq!(
            DatasetBundle::new(act, ann),
            Err(Error::UnknownImage("zzz".into()))
        );
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(s in "[ \tA-Za-z_]{0,24}") {
            let once = normalize_tag(&s);
            prop_assert_eq!(normalize_tag(&once), once.clone());
            prop_assert!(!once.starts_with(' ') && !once.ends_with(' '));
            prop_assert!(!once.contains("  "));
        }

        #[test]
        fn partition_covers_annotated_images(
            tags in proptest::collection::vec(proptest::collection::btree_set(0u8..4, 0..3), 1..20),
            concept in 0u8..4,
        ) {
            let owned: Vec<(String, Vec<String>)> = tags
                .iter()
                .enumerate()
                .map(|(i, t)| (alloc::format!("img{i}"), t.iter().map(|c| alloc::format!("c{c}")).collect()))
                .collect();
            let refs: Vec<(&str, Vec<&str>)> = owned
                .iter()
                .map(|(id, t)| (id.as_str(), t.iter().map(String::as_str).collect()))
                .collect();
            let slices: Vec<(&str, &[&str])> = refs.iter().map(|(id, t)| (*id, t.as_slice())).collect();
            let b = bundle(&slices);
            let p = partition_images(&alloc::format!("c{concept}"), &b);
            prop_assert_eq!(p.target.len() + p.nontarget.len(), b.annotations.len());
            prop_assert!(p.target.is_disjoint(&p.nontarget));
        }
    }
}

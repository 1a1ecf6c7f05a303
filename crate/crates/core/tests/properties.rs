use neuron_margins_core::audit::audit_margin_table;
use neuron_margins_core::dataset::partition_images;
use neuron_margins_core::margins::{
    build_margin_table, compute_thresholds, evaluate_margins, AnalysisConfig, ThresholdSpec,
};
use neuron_margins_core::stats::{
    mann_whitney_u, run_hypotheses, Alternative, MethodChoice, SampleSizes,
};
use neuron_margins_core::synth::{generate_bundle, SynthConcept, SynthSpec};
use proptest::prelude::*;

fn probabilities() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..=1.0, 4).prop_map(|mut p| {
        p.sort_by(|a, b| b.partial_cmp(a).unwrap());
        p
    })
}

fn spec_strategy() -> impl Strategy<Value = SynthSpec> {
    (
        any::<u64>(),
        proptest::collection::vec((probabilities(), probabilities(), 1usize..4), 1..4),
        5usize..30,
        5usize..40,
    )
        .prop_map(|(seed, concepts, targets, nontargets)| {
            let mut next = 0;
            let concepts = concepts
                .into_iter()
                .enumerate()
                .map(|(i, (p_target, p_nontarget, size))| {
                    let neurons = (next..next + size).collect();
                    next += size;
                    SynthConcept {
                        tag: format!("concept {i}"),
                        neurons,
                        p_target,
                        p_nontarget,
                    }
                })
                .collect();
            SynthSpec {
                seed,
                dataset_name: "prop".into(),
                neuron_count: next + 1,
                fractions: ThresholdSpec::default(),
                max_activation: 3.0,
                images_per_concept_target: targets,
                images_per_concept_nontarget: nontargets,
                filler_tag: "background".into(),
                concepts,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn margin_tables_are_internally_consistent(spec in spec_strategy()) {
        let out = generate_bundle(&spec).unwrap();
        let th = compute_thresholds(&out.bundle.activations, &spec.fractions).unwrap();
        let config = AnalysisConfig { tla_min: 0.0, ..AnalysisConfig::default() };
        let table = build_margin_table(&out.bundle, &out.label_map, &th, &config).unwrap();
        prop_assert!(audit_margin_table(&table).is_empty());
        let annotated = out.bundle.annotations.len();
        for row in &table.rows {
            prop_assert!((0.0..=100.0).contains(&row.tla.percent()));
            prop_assert!(row.non_tla.iter().all(|r| (0.0..=100.0).contains(&r.percent())));
            let part = partition_images(row.ensemble.concept(), &out.bundle);
            prop_assert_eq!(part.target.len() + part.nontarget.len(), annotated);
            prop_assert_eq!(row.nontarget_n, Some(part.nontarget.len() as u64));
        }
    }

    #[test]
    fn hypothesis_report_invariants(calib in spec_strategy(), eval_seed in any::<u64>()) {
        let mut eval_spec = calib.clone();
        eval_spec.seed = eval_seed;
        for c in &mut eval_spec.concepts {
            for p in &mut c.p_nontarget {
                *p /= 2.0;
            }
        }
        let a = generate_bundle(&calib).unwrap();
        let b = generate_bundle(&eval_spec).unwrap();
        let th = compute_thresholds(&a.bundle.activations, &calib.fractions).unwrap();
        let config = AnalysisConfig { tla_min: 0.0, ..AnalysisConfig::default() };
        let table = build_margin_table(&a.bundle, &a.label_map, &th, &config).unwrap();
        let eval = evaluate_margins(&table, &b.bundle, &th).unwrap();
        let report = run_hypotheses(&table, &eval, &a.bundle, &b.bundle, &th, &config).unwrap();
        prop_assert_eq!(report.tested(), table.rows.len() * 4);
        let mut pooled = 0;
        for f in &report.per_fraction {
            let confirmed: Vec<_> = report.hypotheses.iter().filter(|h| h.fraction == f.fraction && h.confirmed).collect();
            prop_assert_eq!(confirmed.len(), f.rejected);
            prop_assert!(confirmed.iter().all(|h| h.mwu.p_value < config.alpha));
            pooled += f.rejected;
            if let Some(w) = &f.wilcoxon {
                prop_assert!((0.0..=1.0).contains(&w.p_value));
            } else {
                prop_assert_eq!(f.rejected, 0);
            }
        }
        match report.pooled.as_ref().map(|w| w.sizes) {
            Some(SampleSizes::Paired { pairs, .. }) => prop_assert_eq!(pairs, pooled),
            Some(other) => prop_assert!(false, "unexpected sizes {:?}", other),
            None => prop_assert_eq!(pooled, 0),
        }
    }

    #[test]
    fn exact_and_normal_mwu_agree_at_fifteen(
        pool in proptest::collection::btree_set(-10_000i32..10_000, 30),
        order in Just(()).prop_perturb(|_, mut rng| {
            let mut idx: Vec<usize> = (0..30).collect();
            for i in (1..30).rev() {
                idx.swap(i, (rng.next_u32() as usize) % (i + 1));
            }
            idx
        }),
        alt in prop_oneof![Just(Alternative::Greater), Just(Alternative::Less), Just(Alternative::TwoSided)],
    ) {
        let pool: Vec<f64> = pool.into_iter().map(f64::from).collect();
        let shuffled: Vec<f64> = order.iter().map(|&i| pool[i]).collect();
        let (a, b) = shuffled.split_at(15);
        let exact = mann_whitney_u(a, b, alt, 0.05, MethodChoice::Exact).unwrap();
        let normal = mann_whitney_u(a, b, alt, 0.05, MethodChoice::Normal).unwrap();
        prop_assert!((exact.p_value - normal.p_value).abs() <= 0.01, "{} vs {}", exact.p_value, normal.p_value);
    }
}

#[test]
fn distinct_seeds_differ_and_generated_rates_track_the_spec() {
    let spec = |seed| SynthSpec {
        seed,
        dataset_name: "s".into(),
        neuron_count: 2,
        fractions: ThresholdSpec::default(),
        max_activation: 1.0,
        images_per_concept_target: 200,
        images_per_concept_nontarget: 2000,
        filler_tag: "background".into(),
        concepts: vec![SynthConcept {
            tag: "road".into(),
            neurons: vec![0, 1],
            p_target: vec![1.0, 0.8, 0.6, 0.4],
            p_nontarget: vec![0.5, 0.25, 0.1, 0.05],
        }],
    };
    let a = generate_bundle(&spec(1)).unwrap();
    let b = generate_bundle(&spec(2)).unwrap();
    assert_ne!(a.bundle.activations, b.bundle.activations);
    let th = compute_thresholds(&a.bundle.activations, &ThresholdSpec::default()).unwrap();
    let table =
        build_margin_table(&a.bundle, &a.label_map, &th, &AnalysisConfig::default()).unwrap();
    assert_eq!(table.rows.len(), 3);
    for row in &table.rows {
        assert_eq!(row.tla.percent(), 100.0);
        for (r, p) in row.non_tla.iter().zip([50.0, 25.0, 10.0, 5.0]) {
            // 3 sigma at p = 0.5 over 2000 draws is 3.4 points
            assert!((r.percent() - p).abs() < 3.4, "{} vs {p}", r.percent());
        }
    }
}

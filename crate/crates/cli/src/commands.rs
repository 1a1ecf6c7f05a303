//! Subcommand implementations. Each returns an error for anything that
//! should make the process exit nonzero; warnings are logged.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use neuron_margins_core::audit::{audit_margin_table, Violation};
use neuron_margins_core::margins::{
    build_margin_table, compute_thresholds, evaluate_margins, AnalysisConfig, MarginTable,
    ThresholdSpec, ThresholdTable,
};
use neuron_margins_core::stats::{
    mann_whitney_u, run_hypotheses, wilcoxon_signed_rank, Alternative, HypothesisReport,
    MethodChoice, TestResult, ZeroPolicy,
};
use neuron_margins_core::synth::{generate_bundle, SynthSpec};

use crate::config::{AnalysisFlags, EffectiveConfig, ReportFormat};
use crate::io;
use crate::report;

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        bail!("input file {} does not exist", path.display());
    }
    Ok(())
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(path)
}

fn echo_config(
    out: &Path,
    command: &str,
    format: ReportFormat,
    inputs: &[(&str, &Path)],
    analysis: &AnalysisConfig,
) -> Result<()> {
    let effective = EffectiveConfig {
        command: command.into(),
        format,
        inputs: inputs
            .iter()
            .map(|(k, p)| (k.to_string(), p.display().to_string()))
            .collect::<BTreeMap<_, _>>(),
        analysis: analysis.clone(),
    };
    write(out, "config.toml", effective.to_toml())?;
    Ok(())
}

pub struct AnalyzeArgs {
    pub activations: PathBuf,
    pub annotations: PathBuf,
    pub labels: PathBuf,
    pub out: PathBuf,
    pub flags: AnalysisFlags,
}

/// Calibration margins: returns the table together with the thresholds it
/// was measured against.
fn calibrate(
    activations: &Path,
    annotations: &Path,
    labels: &Path,
    config: &AnalysisConfig,
) -> Result<(
    neuron_margins_core::dataset::DatasetBundle,
    ThresholdTable,
    MarginTable,
)> {
    let bundle = io::load_bundle(activations, annotations)?;
    let label_map = io::load_label_map(labels)?;
    if label_map.is_empty() {
        warn!(
            "{}: label map is empty, no margins to compute",
            labels.display()
        );
    }
    let thresholds = compute_thresholds(&bundle.activations, &config.thresholds)
        .with_context(|| format!("thresholds from {}", activations.display()))?;
    let table = build_margin_table(&bundle, &label_map, &thresholds, config)?;
    for w in &table.warnings {
        warn!("{w}");
    }
    info!("{} margin rows retained", table.rows.len());
    Ok((bundle, thresholds, table))
}

pub fn analyze(args: &AnalyzeArgs) -> Result<MarginTable> {
    for p in [&args.activations, &args.annotations, &args.labels] {
        require_file(p)?;
    }
    let (config, format) = args.flags.resolve()?;
    let (_, _, table) = calibrate(&args.activations, &args.annotations, &args.labels, &config)?;
    prepare_out(&args.out)?;
    write(&args.out, "margins.csv", io::margins_csv(&table))?;
    if format == ReportFormat::Markdown {
        write(&args.out, "margins.md", report::margins_markdown(&table))?;
    }
    echo_config(
        &args.out,
        "analyze",
        format,
        &[
            ("activations", &args.activations),
            ("annotations", &args.annotations),
            ("labels", &args.labels),
        ],
        &config,
    )?;
    Ok(table)
}

pub struct ValidateArgs {
    pub analyze: AnalyzeArgs,
    pub eval_activations: PathBuf,
    pub eval_annotations: PathBuf,
}

pub fn validate(args: &ValidateArgs) -> Result<HypothesisReport> {
    let a = &args.analyze;
    for p in [
        &a.activations,
        &a.annotations,
        &a.labels,
        &args.eval_activations,
        &args.eval_annotations,
    ] {
        require_file(p)?;
    }
    let (config, format) = a.flags.resolve()?;
    let (calib_bundle, thresholds, calib) =
        calibrate(&a.activations, &a.annotations, &a.labels, &config)?;
    let eval_bundle = io::load_bundle(&args.eval_activations, &args.eval_annotations)?;
    let eval = evaluate_margins(&calib, &eval_bundle, &thresholds)?;
    for w in &eval.warnings {
        warn!("{w}");
    }
    let hyp = run_hypotheses(
        &calib,
        &eval,
        &calib_bundle,
        &eval_bundle,
        &thresholds,
        &config,
    )?;
    for (e, reason) in &hyp.not_evaluable {
        warn!("{e}: not evaluable: {reason}");
    }

    let out = &a.out;
    prepare_out(out)?;
    write(out, "margins.csv", io::margins_csv(&calib))?;
    write(out, "comparison.csv", report::comparison_csv(&calib, &eval))?;
    write(out, "hypotheses.csv", report::hypotheses_csv(&hyp))?;
    for &f in calib.thresholds.fractions() {
        let rows = report::confirmed_pair_rows(&hyp, Some(f));
        write(
            out,
            &format!("pairs_{}.csv", ThresholdSpec::label(f)),
            io::pairs_csv(&rows),
        )?;
    }
    write(
        out,
        "pairs_all.csv",
        io::pairs_csv(&report::confirmed_pair_rows(&hyp, None)),
    )?;
    let warnings: Vec<_> = calib
        .warnings
        .iter()
        .chain(&eval.warnings)
        .cloned()
        .collect();
    let ctx = report::SummaryContext {
        calib_name: calib_bundle.activations.dataset_name(),
        eval_name: eval_bundle.activations.dataset_name(),
        warnings: &warnings,
    };
    write(out, "summary.md", report::summary_markdown(&hyp, &ctx))?;
    if format == ReportFormat::Markdown {
        write(out, "margins.md", report::margins_markdown(&calib))?;
        write(
            out,
            "comparison.md",
            report::comparison_markdown(&calib, &eval),
        )?;
    }
    echo_config(
        out,
        "validate",
        format,
        &[
            ("activations", &a.activations),
            ("annotations", &a.annotations),
            ("labels", &a.labels),
            ("eval_activations", &args.eval_activations),
            ("eval_annotations", &args.eval_annotations),
        ],
        &config,
    )?;
    Ok(hyp)
}

pub struct MwuArgs {
    pub input: PathBuf,
    pub first_group: Option<String>,
    pub alternative: Alternative,
    pub alpha: f64,
    pub method: MethodChoice,
}

pub fn test_mwu(args: &MwuArgs) -> Result<(TestResult, String)> {
    let g = io::load_groups(&args.input, args.first_group.as_deref())?;
    let r = mann_whitney_u(
        &g.first,
        &g.second,
        args.alternative,
        args.alpha,
        args.method,
    )
    .with_context(|| format!("{}", args.input.display()))?;
    let text = report::test_result_text("mann_whitney_u", &r, (&g.first_name, &g.second_name));
    Ok((r, text))
}

pub struct WilcoxonArgs {
    pub input: PathBuf,
    pub alternative: Alternative,
    pub alpha: f64,
    pub zero_policy: ZeroPolicy,
    pub method: MethodChoice,
}

/// Signed-rank test on `concept,google,ade20k` rows with differences
/// `ade20k - google`.
pub fn test_wilcoxon(args: &WilcoxonArgs) -> Result<(TestResult, String)> {
    let rows = io::load_pairs(&args.input)?;
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.calib, r.eval)).collect();
    let r = wilcoxon_signed_rank(
        &pairs,
        args.alternative,
        args.alpha,
        args.zero_policy,
        args.method,
    )
    .with_context(|| format!("{}", args.input.display()))?;
    let text = report::test_result_text("wilcoxon_signed_rank", &r, ("google", "ade20k"));
    Ok((r, text))
}

pub struct SynthArgs {
    pub spec: PathBuf,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

pub fn synth(args: &SynthArgs) -> Result<SynthSpec> {
    require_file(&args.spec)?;
    let text = fs::read_to_string(&args.spec)
        .with_context(|| format!("cannot read {}", args.spec.display()))?;
    let mut spec: SynthSpec = serde_json::from_str(&text)
        .with_context(|| format!("{}: invalid synthetic spec", args.spec.display()))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let generated = generate_bundle(&spec).with_context(|| format!("{}", args.spec.display()))?;
    prepare_out(&args.out)?;
    io::write_activations(
        &args.out.join("activations.csv"),
        &generated.bundle.activations,
    )?;
    io::write_annotations(
        &args.out.join("annotations.csv"),
        &generated.bundle.annotations,
    )?;
    io::write_label_map(&args.out.join("labels.csv"), &generated.label_map)?;
    let mut echo = serde_json::to_string_pretty(&spec).expect("spec serializes");
    echo.push('\n');
    write(&args.out, "spec.json", echo)?;
    Ok(spec)
}

pub fn audit(margins: &Path) -> Result<Vec<Violation>> {
    let table = io::load_margins(margins, 0.0, AnalysisConfig::default().top_k)?;
    Ok(audit_margin_table(&table))
}

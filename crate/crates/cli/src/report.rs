//! Human- and machine-readable renderings of tables and test results.
//! Percentages always carry exactly three decimals.

use std::fmt::Write;

use neuron_margins_core::margins::{EvalRow, EvaluationTable, MarginTable, ThresholdSpec, Warning};
use neuron_margins_core::stats::{HypothesisReport, Method, SampleSizes, TestResult};

use crate::io::PairRow;

fn pct_heading(fraction: f64) -> String {
    if fraction == 0.0 {
        ">0".into()
    } else {
        format!(">{}%", (fraction * 1e6).round() / 1e4)
    }
}

fn neuron_list(neurons: &[usize]) -> String {
    neurons
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Formats a p-value with seven significant digits.
pub fn fmt_p(p: f64) -> String {
    if p == 0.0 || (1e-3..=1.0).contains(&p) {
        format!("{p:.7}")
    } else {
        format!("{p:.6e}")
    }
}

/// Margin table: concept, neurons, TLA at `> 0`, Non-TLA per threshold.
pub fn margins_markdown(table: &MarginTable) -> String {
    let mut s = String::from("| Concepts | Neuron | targ %>0 |");
    for &f in table.thresholds.fractions() {
        let _ = write!(s, " non-t {} |", pct_heading(f));
    }
    s.push_str("\n|---|---|---:|");
    s.push_str(&"---:|".repeat(table.thresholds.len()));
    s.push('\n');
    for row in &table.rows {
        let _ = write!(
            s,
            "| {} | {} | {} |",
            row.ensemble.concept(),
            neuron_list(row.ensemble.neurons()),
            row.tla
        );
        for r in &row.non_tla {
            let _ = write!(s, " {r} |");
        }
        s.push('\n');
    }
    s
}

fn comparison_header(thresholds: &ThresholdSpec) -> Vec<String> {
    let mut h = vec!["concept".to_string(), "neurons".to_string()];
    for &f in thresholds.fractions() {
        let label = ThresholdSpec::label(f);
        h.push(format!("calib_{label}"));
        h.push(format!("eval_{label}"));
    }
    h.push("status".into());
    h
}

/// Calibration and evaluation Non-TLA side by side per
/// threshold. Non-evaluable rows keep their calibration values and leave
/// the evaluation cells empty.
pub fn comparison_csv(calib: &MarginTable, eval: &EvaluationTable) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(comparison_header(&calib.thresholds))
        .expect("writing to memory");
    for (c, e) in calib.rows.iter().zip(&eval.rows) {
        let mut cells = vec![c.ensemble.concept().to_string(), c.ensemble.neuron_key()];
        for (j, rate) in c.non_tla.iter().enumerate() {
            cells.push(rate.to_string());
            cells.push(
                e.evaluated()
                    .map(|r| r.non_tla[j].to_string())
                    .unwrap_or_default(),
            );
        }
        cells.push(match e {
            EvalRow::Evaluated(_) => "evaluated".into(),
            EvalRow::NotEvaluable { reason, .. } => format!("not evaluable: {reason}"),
        });
        w.write_record(&cells).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

pub fn comparison_markdown(calib: &MarginTable, eval: &EvaluationTable) -> String {
    let mut s = String::from("| Concepts | Neuron |");
    for &f in calib.thresholds.fractions() {
        let h = pct_heading(f);
        let _ = write!(s, " G non-t {h} | A non-t {h} |");
    }
    s.push_str("\n|---|---|");
    s.push_str(&"---:|".repeat(2 * calib.thresholds.len()));
    s.push('\n');
    for (c, e) in calib.rows.iter().zip(&eval.rows) {
        let _ = write!(
            s,
            "| {} | {} |",
            c.ensemble.concept(),
            neuron_list(c.ensemble.neurons())
        );
        for (j, rate) in c.non_tla.iter().enumerate() {
            let ev = e
                .evaluated()
                .map_or("n/a".to_string(), |r| r.non_tla[j].to_string());
            let _ = write!(s, " {rate} | {ev} |");
        }
        s.push('\n');
    }
    s
}

/// One line per MWU hypothesis.
pub fn hypotheses_csv(report: &HypothesisReport) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record([
        "concept",
        "neurons",
        "threshold",
        "calib_non_tla",
        "eval_non_tla",
        "n_calib",
        "n_eval",
        "u",
        "z",
        "p_value",
        "p_adjusted",
        "method",
        "rejected",
    ])
    .expect("writing to memory");
    for h in &report.hypotheses {
        let (n1, n2) = match h.mwu.sizes {
            SampleSizes::Independent { n1, n2 } => (n1, n2),
            SampleSizes::Paired { pairs, .. } => (pairs, pairs),
        };
        w.write_record([
            h.ensemble.concept().to_string(),
            h.ensemble.neuron_key(),
            ThresholdSpec::label(h.fraction),
            h.calib_rate.to_string(),
            h.eval_rate.to_string(),
            n1.to_string(),
            n2.to_string(),
            h.mwu.statistic.to_string(),
            h.mwu.z.map(|z| format!("{z:.6}")).unwrap_or_default(),
            fmt_p(h.mwu.p_value),
            h.p_adjusted.map(fmt_p).unwrap_or_default(),
            h.mwu.method.to_string(),
            h.confirmed.to_string(),
        ])
        .expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

/// Confirmed pairs at one threshold, or over all thresholds when `fraction`
/// is `None`, in the `concept,google,ade20k` layout.
pub fn confirmed_pair_rows(report: &HypothesisReport, fraction: Option<f64>) -> Vec<PairRow> {
    report
        .hypotheses
        .iter()
        .filter(|h| h.confirmed && fraction.is_none_or(|f| f == h.fraction))
        .map(|h| PairRow {
            concept: h.ensemble.to_string(),
            calib: h.calib_rate.percent(),
            eval: h.eval_rate.percent(),
        })
        .collect()
}

fn wilcoxon_cell(r: Option<&TestResult>) -> String {
    match r {
        None => "not applicable (no confirmed rows)".into(),
        Some(r) => format!(
            "W+ = {}, n = {}, p = {} ({})",
            r.statistic,
            match r.sizes {
                SampleSizes::Paired { used, .. } => used,
                SampleSizes::Independent { n1, n2 } => n1 + n2,
            },
            fmt_p(r.p_value),
            method_label(r)
        ),
    }
}

fn method_label(r: &TestResult) -> String {
    let m = match r.method {
        Method::Exact => "exact",
        Method::NormalApprox => "normal, continuity-corrected",
    };
    match r.zero_policy {
        Some(z) => format!("{m}, zeros: {z}"),
        None => m.to_string(),
    }
}

pub struct SummaryContext<'a> {
    pub calib_name: &'a str,
    pub eval_name: &'a str,
    pub warnings: &'a [Warning],
}

pub fn summary_markdown(report: &HypothesisReport, ctx: &SummaryContext<'_>) -> String {
    let mut s = String::from("# Error-margin validation\n\n");
    let _ = writeln!(s, "- calibration: `{}`", ctx.calib_name);
    let _ = writeln!(s, "- evaluation: `{}`", ctx.eval_name);
    let _ = writeln!(
        s,
        "- {} hypotheses, {} rejected at alpha = {}{}",
        report.tested(),
        report.rejected(),
        report.alpha,
        if report.holm { " (Holm-adjusted)" } else { "" }
    );
    s.push_str("\n| Threshold | Tested | Rejected | Wilcoxon signed-rank |\n|---|---:|---:|---|\n");
    for f in &report.per_fraction {
        let _ = writeln!(
            s,
            "| non-t {} | {} | {} | {} |",
            pct_heading(f.fraction),
            f.tested,
            f.rejected,
            wilcoxon_cell(f.wilcoxon.as_ref())
        );
    }
    let _ = writeln!(
        s,
        "\nPooled over all thresholds: {}",
        wilcoxon_cell(report.pooled.as_ref())
    );
    if !report.not_evaluable.is_empty() {
        s.push_str("\n## Not evaluable\n\n");
        for (e, reason) in &report.not_evaluable {
            let _ = writeln!(s, "- {e}: {reason}");
        }
    }
    if !ctx.warnings.is_empty() {
        s.push_str("\n## Warnings\n\n");
        for w in ctx.warnings {
            let _ = writeln!(s, "- {w}");
        }
    }
    s
}

/// Plain-text rendering for the `test` subcommands.
pub fn test_result_text(name: &str, r: &TestResult, labels: (&str, &str)) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "test: {name}");
    match r.sizes {
        SampleSizes::Independent { n1, n2 } => {
            let _ = writeln!(
                s,
                "samples: {} (n1 = {n1}) vs {} (n2 = {n2})",
                labels.0, labels.1
            );
            let _ = writeln!(s, "statistic: U = {}", r.statistic);
        }
        SampleSizes::Paired { pairs, used } => {
            let _ = writeln!(
                s,
                "pairs: {pairs} ({} vs {}), non-zero differences used: {used}",
                labels.0, labels.1
            );
            let _ = writeln!(s, "statistic: W+ = {}", r.statistic);
        }
    }
    let _ = writeln!(s, "alternative: {}", r.alternative);
    let _ = writeln!(s, "method: {}", r.method);
    if let Some(z) = r.zero_policy {
        let _ = writeln!(s, "zero_policy: {z}");
    }
    if let Some(z) = r.z {
        let _ = writeln!(s, "z: {z:.6}");
    }
    if let Some(e) = r.exact {
        let _ = writeln!(s, "exact: {}/{}", e.numerator, e.denominator);
    }
    if r.degenerate {
        s.push_str("degenerate: no rank information\n");
    }
    let _ = writeln!(s, "p_value: {}", fmt_p(r.p_value));
    let _ = writeln!(
        s,
        "decision: {} at alpha = {}",
        if r.rejected {
            "reject H0"
        } else {
            "fail to reject H0"
        },
        r.alpha
    );
    s
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use neuron_margins::commands::{self, AnalyzeArgs, MwuArgs, SynthArgs, ValidateArgs, WilcoxonArgs};
use neuron_margins::config::{AnalysisFlags, MethodArg, ZeroPolicyArg};
use neuron_margins_core::stats::Alternative;

/// Error margins for hidden-neuron concept labels.
///
/// Set NEURON_MARGINS_LOG (error, warn, info, debug) to change log verbosity.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Inputs {
    /// Calibration activations CSV (image_id,n0,...).
    #[arg(long)]
    activations: PathBuf,
    /// Calibration annotations CSV (image_id,concept).
    #[arg(long)]
    annotations: PathBuf,
    /// Neuron label map CSV (neuron,rank,concept,coverage_score).
    #[arg(long)]
    labels: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    flags: AnalysisFlags,
}

impl Inputs {
    fn into_args(self) -> AnalyzeArgs {
        AnalyzeArgs {
            activations: self.activations,
            annotations: self.annotations,
            labels: self.labels,
            out: self.out,
            flags: self.flags,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute the error-margin table on a calibration dataset.
    Analyze(Inputs),
    /// Re-measure calibration margins on an evaluation dataset and test them.
    Validate {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        eval_activations: PathBuf,
        #[arg(long)]
        eval_annotations: PathBuf,
    },
    /// Run a single test on a CSV file.
    #[command(subcommand)]
    Test(TestCommand),
    /// Generate a synthetic bundle from a JSON spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the seed in the spec.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a margins CSV for monotonicity and intersection violations.
    Audit {
        #[arg(long)]
        margins: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlternativeArg {
    Greater,
    Less,
    TwoSided,
}

impl From<AlternativeArg> for Alternative {
    fn from(a: AlternativeArg) -> Self {
        match a {
            AlternativeArg::Greater => Alternative::Greater,
            AlternativeArg::Less => Alternative::Less,
            AlternativeArg::TwoSided => Alternative::TwoSided,
        }
    }
}

#[derive(Subcommand)]
enum TestCommand {
    /// Mann-Whitney U on a `group,value` CSV with two groups.
    Mwu {
        #[arg(long)]
        input: PathBuf,
        /// Group used as the first sample (default: first group in the file).
        #[arg(long)]
        first_group: Option<String>,
        #[arg(long, value_enum, default_value = "greater")]
        alternative: AlternativeArg,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
    },
    /// Wilcoxon signed-rank on a `concept,google,ade20k` CSV
    /// (differences are ade20k - google).
    Wilcoxon {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "less")]
        alternative: AlternativeArg,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "wilcoxon")]
        zero_policy: ZeroPolicyArg,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(inputs) => {
            let table = commands::analyze(&inputs.into_args())?;
            println!("{} margin rows", table.rows.len());
        }
        Command::Validate {
            inputs,
            eval_activations,
            eval_annotations,
        } => {
            let report = commands::validate(&ValidateArgs {
                analyze: inputs.into_args(),
                eval_activations,
                eval_annotations,
            })?;
            println!(
                "{} hypotheses, {} rejected",
                report.tested(),
                report.rejected()
            );
        }
        Command::Test(TestCommand::Mwu {
            input,
            first_group,
            alternative,
            alpha,
            method,
        }) => {
            let (_, text) = commands::test_mwu(&MwuArgs {
                input,
                first_group,
                alternative: alternative.into(),
                alpha,
                method: method.into(),
            })?;
            print!("{text}");
        }
        Command::Test(TestCommand::Wilcoxon {
            input,
            alternative,
            alpha,
            zero_policy,
            method,
        }) => {
            let (_, text) = commands::test_wilcoxon(&WilcoxonArgs {
                input,
                alternative: alternative.into(),
                alpha,
                zero_policy: zero_policy.into(),
                method: method.into(),
            })?;
            print!("{text}");
        }
        Command::Synth { spec, seed, out } => {
            let spec = commands::synth(&SynthArgs {
                spec,
                seed,
                out: out.clone(),
            })?;
            println!("seed {}: wrote {}", spec.seed, out.display());
        }
        Command::Audit { margins } => {
            let violations = commands::audit(&margins)?;
            for v in &violations {
                println!("{v}");
            }
            if !violations.is_empty() {
                anyhow::bail!("{}: {} violations", margins.display(), violations.len());
            }
            println!("no violations");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NEURON_MARGINS_LOG", "warn"))
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

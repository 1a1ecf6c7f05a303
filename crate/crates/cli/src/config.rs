//! Run configuration: built-in defaults, overridden by a TOML file,
//! overridden by command-line flags.
//!
//! ```toml
//! format = "markdown"
//!
//! [analysis]
//! thresholds = [0.0, 0.2, 0.4, 0.6]
//! tla_min = 80.0
//! holm = true
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use neuron_margins_core::margins::{AnalysisConfig, RowSelection, SampleKind, ThresholdSpec};
use neuron_margins_core::stats::{MethodChoice, ZeroPolicy};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    /// CSV files only.
    #[default]
    Csv,
    /// CSV files plus Markdown tables.
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub format: Option<ReportFormat>,
    pub analysis: AnalysisConfig,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("{}: invalid configuration", path.display()))
    }
}

/// Analysis flags shared by `analyze` and `validate`. Unset flags leave the
/// file or default value alone.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct AnalysisFlags {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    /// Threshold fractions of the per-neuron maximum, e.g. 0,0.2,0.4,0.6.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Keep rows whose TLA at > 0 exceeds this percentage.
    #[arg(long)]
    pub tla_min: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of ranked labels per neuron to use.
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub max_ensemble_size: Option<usize>,
    #[arg(long, value_enum)]
    pub mwu_method: Option<MethodArg>,
    #[arg(long, value_enum)]
    pub wilcoxon_method: Option<MethodArg>,
    #[arg(long, value_enum)]
    pub zero_policy: Option<ZeroPolicyArg>,
    #[arg(long, value_enum)]
    pub sample_kind: Option<SampleKindArg>,
    #[arg(long, value_enum)]
    pub row_selection: Option<RowSelectionArg>,
    /// Holm-Bonferroni adjustment of the MWU p-values.
    #[arg(long)]
    pub holm: bool,
    #[arg(long, value_enum)]
    pub format: Option<ReportFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    Auto,
    Exact,
    Normal,
}

impl From<MethodArg> for MethodChoice {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => MethodChoice::Auto,
            MethodArg::Exact => MethodChoice::Exact,
            MethodArg::Normal => MethodChoice::Normal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ZeroPolicyArg {
    Wilcoxon,
    Pratt,
}

impl From<ZeroPolicyArg> for ZeroPolicy {
    fn from(z: ZeroPolicyArg) -> Self {
        match z {
            ZeroPolicyArg::Wilcoxon => ZeroPolicy::Wilcoxon,
            ZeroPolicyArg::Pratt => ZeroPolicy::Pratt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SampleKindArg {
    Binary,
    MinNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RowSelectionArg {
    All,
    LargestPerConcept,
}

/// The configuration a run actually used, echoed as `config.toml`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveConfig {
    pub command: String,
    pub format: ReportFormat,
    pub inputs: BTreeMap<String, String>,
    pub analysis: AnalysisConfig,
}

impl EffectiveConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

impl AnalysisFlags {
    /// Applies defaults, then the config file, then the flags.
    pub fn resolve(&self) -> Result<(AnalysisConfig, ReportFormat)> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let mut a = file.analysis;
        if let Some(t) = &self.thresholds {
            a.thresholds = ThresholdSpec::new(t.clone()).context("--thresholds")?;
        }
        if let Some(v) = self.tla_min {
            a.tla_min = v;
        }
        if let Some(v) = self.alpha {
            a.alpha = v;
        }
        if let Some(v) = self.top_k {
            a.top_k = v;
        }
        if let Some(v) = self.max_ensemble_size {
            a.max_ensemble_size = Some(v);
        }
        if let Some(v) = self.mwu_method {
            a.mwu_method = v.into();
        }
        if let Some(v) = self.wilcoxon_method {
            a.wilcoxon_method = v.into();
        }
        if let Some(v) = self.zero_policy {
            a.zero_policy = v.into();
        }
        if let Some(v) = self.sample_kind {
            a.sample_kind = match v {
                SampleKindArg::Binary => SampleKind::Binary,
                SampleKindArg::MinNormalized => SampleKind::MinNormalized,
            };
        }
        if let Some(v) = self.row_selection {
            a.row_selection = match v {
                RowSelectionArg::All => RowSelection::All,
                RowSelectionArg::LargestPerConcept => RowSelection::LargestPerConcept,
            };
        }
        if self.holm {
            a.holm = true;
        }
        a.validate()?;
        let format = self.format.or(file.format).unwrap_or_default();
        Ok((a, format))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn precedence() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            "format = \"markdown\"\n[analysis]\ntla_min = 70.0\nalpha = 0.01\n"
        )
        .unwrap();
        let flags = AnalysisFlags {
            config: Some(f.path().to_path_buf()),
            alpha: Some(0.1),
            ..Default::default()
        };
        let (a, format) = flags.resolve().unwrap();
        assert_eq!(a.tla_min, 70.0);
        assert_eq!(a.alpha, 0.1);
        assert_eq!(a.top_k, 3);
        assert_eq!(format, ReportFormat::Markdown);
    }

    #[test]
    fn unknown_keys_and_bad_values_fail() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "[analysis]\ntla_minimum = 70.0\n").unwrap();
        assert!(FileConfig::load(f.path()).is_err());
        let flags = AnalysisFlags {
            thresholds: Some(vec![0.4, 0.2]),
            ..Default::default()
        };
        assert!(flags.resolve().is_err());
        let flags = AnalysisFlags {
            alpha: Some(1.5),
            ..Default::default()
        };
        assert!(flags.resolve().is_err());
    }

    #[test]
    fn effective_config_round_trips() {
        let e = EffectiveConfig {
            command: "analyze".into(),
            format: ReportFormat::Csv,
            inputs: BTreeMap::from([("labels".to_string(), "labels.csv".to_string())]),
            analysis: AnalysisConfig::default(),
        };
        let text = e.to_toml();
        #[derive(Deserialize)]
        struct Back {
            analysis: AnalysisConfig,
        }
        let back: Back = toml::from_str(&text).unwrap();
        assert_eq!(back.analysis, AnalysisConfig::default());
    }
}

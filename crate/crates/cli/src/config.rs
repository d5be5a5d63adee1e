//! TOML run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use datl::data::{Channel, YearWindow};
use datl::fraction::Fraction;
use datl::regress::RegressorSpec;
use datl::transfer::{MixingPolicy, ValidationSplit};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "DATL_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorSource {
    pub path: PathBuf,
    /// Indicator code to pick out of the file; defaults per role.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Indicators {
    pub gas_pct: IndicatorSource,
    pub liquid_pct: IndicatorSource,
    pub solid_pct: IndicatorSource,
    pub co2_per_capita: IndicatorSource,
    pub gdp_per_capita: IndicatorSource,
}

impl Indicators {
    pub fn get(&self, c: Channel) -> &IndicatorSource {
        match c {
            Channel::GasPct => &self.gas_pct,
            Channel::LiquidPct => &self.liquid_pct,
            Channel::SolidPct => &self.solid_pct,
            Channel::Co2PerCapita => &self.co2_per_capita,
            Channel::GdpPerCapita => &self.gdp_per_capita,
        }
    }

    pub fn code(&self, c: Channel) -> &str {
        self.get(c)
            .code
            .as_deref()
            .unwrap_or(c.default_indicator_code())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferDefaults {
    #[serde(default = "default_fraction")]
    pub td_fraction: Fraction,
    #[serde(default)]
    pub mixing: MixingPolicy,
    /// Fractions for `sweep-td`.
    #[serde(default = "Fraction::standard_sweep")]
    pub sweep: Vec<Fraction>,
    /// Permit fractions outside [0, 1/2].
    #[serde(default)]
    pub allow_any_fraction: bool,
}

fn default_fraction() -> Fraction {
    Fraction::new(1, 3).expect("1/3")
}

impl Default for TransferDefaults {
    fn default() -> Self {
        TransferDefaults {
            td_fraction: default_fraction(),
            mixing: MixingPolicy::default(),
            sweep: Fraction::standard_sweep(),
            allow_any_fraction: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissingSettings {
    /// Countries whose missing GDP is estimated.
    #[serde(default)]
    pub countries: Vec<String>,
    /// Candidate source countries; defaults to `countries` of the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<Vec<String>>,
    #[serde(default)]
    pub validation: ValidationSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Report root, relative to the working directory.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Where `ingest` writes the dataset bundle.
    #[serde(default = "default_bundle_dir")]
    pub bundle_dir: PathBuf,
    #[serde(default)]
    pub window: YearWindow,
    pub countries: Vec<String>,
    /// Display code to World Bank code, e.g. `EU = "EUU"`.
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
    pub indicators: Indicators,
    #[serde(default)]
    pub transfer: TransferDefaults,
    #[serde(default = "RegressorSpec::standard_trio")]
    pub regressors: Vec<RegressorSpec>,
    #[serde(default)]
    pub missing: MissingSettings,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("reports")
}

fn default_bundle_dir() -> PathBuf {
    PathBuf::from("build")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.window.first > self.window.last {
            return Err(CliError::Config(format!(
                "window {}..{} is empty",
                self.window.first, self.window.last
            )));
        }
        if self.regressors.is_empty() {
            return Err(CliError::Config("no regressors configured".into()));
        }
        let mut methods: Vec<_> = self.regressors.iter().map(|r| r.method).collect();
        methods.sort();
        methods.dedup();
        if methods.len() != self.regressors.len() {
            return Err(CliError::Config(
                "each regressor method may appear once".into(),
            ));
        }
        self.check_fraction(self.transfer.td_fraction, self.transfer.allow_any_fraction)?;
        for f in &self.transfer.sweep {
            self.check_fraction(*f, self.transfer.allow_any_fraction)?;
        }
        Ok(())
    }

    pub fn check_fraction(&self, f: Fraction, allow_any: bool) -> Result<(), CliError> {
        if allow_any || f.within_half() {
            Ok(())
        } else {
            Err(CliError::Usage(format!(
                "td fraction {f} is outside [0, 1/2]; pass --allow-any-fraction to permit it"
            )))
        }
    }

    /// World Bank code for a display code.
    pub fn resolve<'a>(&'a self, code: &'a str) -> &'a str {
        self.aliases.get(code).map(String::as_str).unwrap_or(code)
    }

    /// Every display code the bundle must hold.
    pub fn all_countries(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let extra = self.missing.sources.iter().flatten();
        for c in self
            .countries
            .iter()
            .chain(&self.missing.countries)
            .chain(extra)
        {
            if !out.contains(c) {
                out.push(c.clone());
            }
        }
        out
    }

    /// Seed precedence: flag, then environment, then file, then default.
    pub fn effective_seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        if let Some(s) = flag {
            return Ok(s);
        }
        if let Ok(v) = std::env::var(SEED_ENV) {
            return v.trim().parse().map_err(|_| {
                CliError::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
            });
        }
        Ok(self.seed.unwrap_or(DEFAULT_SEED))
    }
}

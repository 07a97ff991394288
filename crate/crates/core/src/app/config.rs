//! The run configuration file.
//!
//! One TOML document with a section per stage. Every section is optional
//! and defaults field by field; unknown keys are rejected by the parser and
//! the module-level range checks run once at load.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::backtest::{BacktestConfig, SweepParam};
use crate::eventstudy::CarConfig;
use crate::hgrm::RewardConfig;
use crate::labeling::LabelConfig;
use crate::marketdata::SynthSpec;
use crate::policylab::{ToyEnvConfig, TrainSchedule};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    pub env: ToyEnvConfig,
    pub train: TrainSchedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Holding,
    MaxPositionRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivityConfig {
    pub parameter: SweepKind,
    /// Holding periods, or position ratios where `inf` means uncapped.
    pub values: Vec<f64>,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self { parameter: SweepKind::Holding, values: (1..=10).map(f64::from).collect() }
    }
}

impl SensitivityConfig {
    pub fn sweep(&self) -> Result<SweepParam> {
        if self.values.is_empty() {
            bail!("[sensitivity] values must not be empty");
        }
        match self.parameter {
            SweepKind::Holding => {
                let hs = self
                    .values
                    .iter()
                    .map(|&v| {
                        if v >= 1.0 && v.fract() == 0.0 && v <= 10_000.0 {
                            Ok(v as usize)
                        } else {
                            bail!("[sensitivity] values: holding must be a positive integer, got {v}")
                        }
                    })
                    .collect::<Result<_>>()?;
                Ok(SweepParam::Holding(hs))
            }
            SweepKind::MaxPositionRatio => {
                let ks = self
                    .values
                    .iter()
                    .map(|&v| match v {
                        v if v == f64::INFINITY => Ok(None),
                        v if v > 0.0 && v.is_finite() => Ok(Some(v)),
                        v => bail!("[sensitivity] values: max_position_ratio must be > 0 or inf, got {v}"),
                    })
                    .collect::<Result<_>>()?;
                Ok(SweepParam::MaxPositionRatio(ks))
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub synth: SynthSpec,
    pub car: CarConfig,
    pub label: LabelConfig,
    pub reward: RewardConfig,
    pub policy: PolicyConfig,
    pub backtest: BacktestConfig,
    pub sensitivity: SensitivityConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Range checks of every section, reported with the section name.
    pub fn validate(&self) -> Result<()> {
        self.synth.validate().context("[synth]")?;
        self.car.window.validate().context("[car.window]")?;
        self.car.style.validate().context("[car.style]")?;
        self.label.validate().context("[label]")?;
        self.reward.validate().context("[reward]")?;
        self.policy.env.validate().context("[policy.env]")?;
        self.policy.train.validate().context("[policy.train]")?;
        self.backtest.validate().context("[backtest]")?;
        self.sensitivity.sweep()?;
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

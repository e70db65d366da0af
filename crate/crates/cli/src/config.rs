//! Campaign configuration files.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use dynsample::sampler::CampaignConfig;
use dynsample::signal::{ControlBounds, SignalError};

/// One control channel, as a row of the bounds table.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlRow {
    pub name: Option<String>,
    pub lower: f64,
    pub upper: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub dataset: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Built-in model name.
    pub model: String,
    #[serde(default)]
    pub controls: Vec<ControlRow>,
    #[serde(default)]
    pub campaign: CampaignConfig,
    #[serde(default)]
    pub output: OutputPaths,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// The campaign settings with the `[[controls]]` table folded in.
    pub fn campaign_config(&self) -> Result<CampaignConfig, String> {
        let mut config = self.campaign.clone();
        if self.controls.is_empty() {
            return Ok(config);
        }
        if config.control_bounds.is_some() {
            return Err("give control bounds either as [[controls]] or in [campaign], not both".into());
        }
        let bounds = ControlBounds {
            lower: self.controls.iter().map(|c| c.lower).collect(),
            upper: self.controls.iter().map(|c| c.upper).collect(),
            faprbs_amplitude: self.controls.iter().map(|c| c.amplitude).collect(),
        };
        if let Err(e) = bounds.validate() {
            return Err(match e {
                SignalError::InvalidBounds { channel, reason } => match &self.controls[channel].name {
                    Some(name) => format!("control channel {channel} ({name}): {reason}"),
                    None => format!("control channel {channel}: {reason}"),
                },
                other => other.to_string(),
            });
        }
        config.control_bounds = Some(bounds);
        Ok(config)
    }
}

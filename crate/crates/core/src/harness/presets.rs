//! Built-in scenarios reproducing the reference figures.
//!
//! Each preset is an ordinary scenario file compiled into the binary. Its
//! `[origin]` table lists which keys carry published values and which were
//! chosen to fill gaps.

use super::scenario::ScenarioFile;
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub source: &'static str,
}

impl Preset {
    pub fn scenario(&self) -> Result<ScenarioFile, HarnessError> {
        ScenarioFile::from_toml_str(self.source)
    }

    pub fn description(&self) -> String {
        self.scenario().ok().and_then(|s| s.description).unwrap_or_default()
    }
}

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        &[$(Preset { name: $name, source: include_str!(concat!("../../presets/", $name, ".toml")) }),*]
    };
}

pub const PRESETS: &[Preset] = presets!["fig1", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"];

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.name)
}

//! Shipped configurations, one per acceptance check plus a regime catalogue.

use crate::config::{parse, ExperimentConfig};

pub struct Preset {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        &[$(Preset { name: $name, text: include_str!(concat!("../presets/", $name, ".toml")) }),*]
    };
}

pub const PRESETS: &[Preset] = presets![
    "c01-mode-oracle",
    "c02-majorant-slopes",
    "c03-multiplier-domination",
    "c04-gn-dilation",
    "c05-integral-inequality",
    "c06-scaling-identity",
    "c07-weak-identity",
    "c08-exponent-table",
    "c09a-supercritical-decay",
    "c09b-subcritical-blowup",
    "c10-j-term-scaling",
    "regime-catalogue",
];

impl Preset {
    pub fn config(&self) -> ExperimentConfig {
        parse(self.text).unwrap_or_else(|e| panic!("shipped preset {} does not parse: {e}", self.name))
    }

    pub fn description(&self) -> String {
        self.config().description.unwrap_or_default()
    }
}

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

//! Named experiment configs bundled with the binary.

use crate::config::ExperimentConfig;
use crate::{HarnessError, Result};

const PRESETS: [(&str, &str); 10] = [
    ("closed_form", include_str!("../presets/closed_form.json")),
    ("fig2", include_str!("../presets/fig2.json")),
    ("fig3", include_str!("../presets/fig3.json")),
    ("fig4", include_str!("../presets/fig4.json")),
    ("fig5", include_str!("../presets/fig5.json")),
    ("fig6", include_str!("../presets/fig6.json")),
    ("fig7", include_str!("../presets/fig7.json")),
    ("fig8", include_str!("../presets/fig8.json")),
    ("table1", include_str!("../presets/table1.json")),
    ("table2", include_str!("../presets/table2.json")),
];

pub const PRESET_NAMES: [&str; 10] = {
    let mut names = [""; 10];
    let mut i = 0;
    while i < PRESETS.len() {
        names[i] = PRESETS[i].0;
        i += 1;
    }
    names
};

/// Raw JSON text of a preset.
pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

/// Parses and validates a preset.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let text = preset_source(name).ok_or_else(|| {
        HarnessError::Config(format!(
            "unknown preset {name:?}; available: {}",
            PRESET_NAMES.join(", ")
        ))
    })?;
    ExperimentConfig::from_json(text)
}

//! Job files bundled into the binary.

use super::JobSpec;
use crate::error::{Error, Result};

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../presets/", $name, ".json")))),*]
    };
}

static PRESETS: &[(&str, &str)] = presets![
    "gamma-broken",
    "brownian-baseline",
    "identity-grid-minus",
    "identity-grid-plus",
    "brownian-broken-reduction",
    "brownian-flat-tail",
    "broken-grid-sp",
    "broken-grid-sn",
    "gamma-broken-analytic",
    "stable-linear",
    "stable-linear-mc",
    "cms-calibration",
    "mass-brownian",
    "mass-gamma",
    "mass-stable",
    "laplace-infinite",
    "laplace-exponential",
    "laplace-exponential-mc",
    "ruin-crossing",
    "plot-sup-u",
    "plot-laplace-gamma",
    "plot-ruin-surface",
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}

pub(crate) fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.1)
}

/// A bundled job by name.
pub fn preset(name: &str) -> Result<JobSpec> {
    let text = preset_text(name).ok_or_else(|| Error::Job(format!("unknown preset `{name}`")))?;
    JobSpec::from_json(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses() {
        for name in preset_names() {
            preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}

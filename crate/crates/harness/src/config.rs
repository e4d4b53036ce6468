//! Experiment configuration: a TOML file with defaults taken from the preset.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::presets::Preset;
use crate::thresholds::Thresholds;

/// The file as written by the user. Missing fields fall back to preset defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub model: Option<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    pub probes: Option<Vec<f64>>,
    pub epsilons: Option<Vec<f64>>,
    pub sizes: Option<Vec<usize>>,
    pub trule_sizes: Option<Vec<usize>>,
    pub extrapolation_points: Option<usize>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(serialize_with = "as_display")]
    pub model: Preset,
    pub parameters: BTreeMap<String, f64>,
    pub probes: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub sizes: Vec<usize>,
    pub trule_sizes: Vec<usize>,
    pub extrapolation_points: usize,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(skip)]
    pub output: PathBuf,
    pub seed: u64,
}

fn as_display<S: serde::Serializer>(p: &Preset, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(p)
}

pub const DEFAULT_TRULE_SIZES: [usize; 5] = [8, 16, 32, 64, 128];

/// Parses TOML text; errors carry the path of the offending field.
pub fn parse_config(text: &str) -> Result<RawConfig> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.message().to_string();
        if path.is_empty() || path == "." {
            HarnessError::Parse(msg)
        } else {
            HarnessError::invalid(path, msg)
        }
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read { path: path.to_path_buf(), source })?;
    parse_config(&text)?.resolve()
}

impl RawConfig {
    pub fn with_model(model: &str) -> Self {
        RawConfig { model: Some(model.to_string()), ..Default::default() }
    }

    pub fn resolve(self) -> Result<ExperimentConfig> {
        let name = self.model.as_deref().unwrap_or("krein");
        let model: Preset = name.parse().map_err(|e: String| HarnessError::invalid("model", e))?;
        let parameters = model.resolve_parameters(&self.parameters)?;
        let probes = self.probes.unwrap_or_else(|| model.default_probes());
        for (i, &p) in probes.iter().enumerate() {
            model.check_probe(p).map_err(|e| HarnessError::invalid(format!("probes[{i}]"), e))?;
        }
        let epsilons = self.epsilons.unwrap_or_else(|| model.default_ladder());
        check_ladder(&epsilons)?;
        let sizes = self.sizes.unwrap_or_else(|| vec![model.default_size()]);
        check_sizes("sizes", &sizes)?;
        let trule_sizes = self.trule_sizes.unwrap_or_else(|| DEFAULT_TRULE_SIZES.to_vec());
        check_sizes("trule_sizes", &trule_sizes)?;
        let extrapolation_points = self.extrapolation_points.unwrap_or(3);
        if extrapolation_points == 0 {
            return Err(HarnessError::invalid("extrapolation_points", "must be at least 1"));
        }
        let known = Thresholds::builtin();
        for (key, value) in &self.tolerances {
            if known.get(key).is_none() {
                return Err(HarnessError::invalid(format!("tolerances.{key}"), "no threshold with this name"));
            }
            if !(value.is_finite() && *value >= 0.0) {
                return Err(HarnessError::invalid(format!("tolerances.{key}"), "must be finite and non-negative"));
            }
        }
        Ok(ExperimentConfig {
            model,
            parameters,
            probes,
            epsilons,
            sizes,
            trule_sizes,
            extrapolation_points,
            tolerances: self.tolerances,
            output: self.output.unwrap_or_else(|| PathBuf::from("out")),
            seed: self.seed.unwrap_or(0),
        })
    }
}

impl ExperimentConfig {
    pub fn preset(model: &str) -> Result<Self> {
        RawConfig::with_model(model).resolve()
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds::builtin().with_overrides(&self.tolerances)
    }
}

fn check_ladder(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(HarnessError::invalid("epsilons", "needs at least one rung"));
    }
    for (i, e) in eps.iter().enumerate() {
        if !(e.is_finite() && *e > 0.0) {
            return Err(HarnessError::invalid(format!("epsilons[{i}]"), format!("{e} is not positive")));
        }
    }
    if let Some(i) = eps.windows(2).position(|w| !(w[0] > w[1])) {
        return Err(HarnessError::invalid(format!("epsilons[{}]", i + 1), "ladder must be strictly decreasing"));
    }
    Ok(())
}

fn check_sizes(field: &str, sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(HarnessError::invalid(field, "needs at least one size"));
    }
    if let Some(i) = sizes.iter().position(|&n| n == 0) {
        return Err(HarnessError::invalid(format!("{field}[{i}]"), "sizes must be positive"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_preset() {
        let cfg = ExperimentConfig::preset("krein").unwrap();
        assert_eq!(cfg.probes, vec![0.5]);
        assert_eq!(cfg.sizes, vec![200]);
        assert_eq!(cfg.parameters["length"], 40.0);
    }

    #[test]
    fn unknown_field_is_rejected() {
        let err = parse_config("model = \"krein\"\nprobs = [0.5]\n").unwrap_err();
        assert!(err.to_string().contains("probs"), "{err}");
    }

    #[test]
    fn type_errors_carry_the_field_path() {
        let err = parse_config("probes = [0.5, \"x\"]\n").unwrap_err();
        assert!(err.to_string().contains("probes[1]"), "{err}");
    }

    #[test]
    fn increasing_ladder_is_rejected() {
        let raw = parse_config("epsilons = [0.1, 0.2]\n").unwrap();
        let err = raw.resolve().unwrap_err();
        assert!(err.to_string().contains("epsilons[1]"), "{err}");
    }

    #[test]
    fn probe_outside_band_is_rejected() {
        let raw = parse_config("model = \"krein:spectral\"\nprobes = [1.5]\n").unwrap();
        assert!(raw.resolve().unwrap_err().to_string().contains("probes[0]"));
    }

    #[test]
    fn tolerance_keys_are_checked() {
        let raw = parse_config("[tolerances]\n\"pairing.defect\" = 1e-7\n").unwrap();
        let cfg = raw.resolve().unwrap();
        assert_eq!(cfg.thresholds().get("pairing.defect"), Some(1e-7));
        let raw = parse_config("[tolerances]\n\"pairing.nothing\" = 1.0\n").unwrap();
        assert!(raw.resolve().is_err());
    }
}

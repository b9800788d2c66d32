//! Declarative scenario files (TOML).
//!
//! ```toml
//! fs = 100e6
//! total_duration = 0.02048
//! noise_power = 1e-8        # linear power per Hz
//! seed = 7
//!
//! [[signals]]
//! kind = "ofdm-like"
//! center_freq = 10e6
//! bandwidth = 20e6
//! t_start = 0.002
//! duration = 0.004
//! snr_db = 20.0             # or `power = ...` (linear); exactly one of the two
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{power_for_snr, Scenario, SignalKind, SignalSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub fs: f64,
    pub total_duration: f64,
    pub noise_power: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub signals: Vec<SignalEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalEntry {
    pub kind: SignalKind,
    pub center_freq: f64,
    pub bandwidth: f64,
    pub t_start: f64,
    pub duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
}

impl ScenarioFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Schema(e.message().to_string()))
    }

    pub fn into_scenario(self) -> Result<Scenario> {
        let mut signals = Vec::with_capacity(self.signals.len());
        for (i, s) in self.signals.into_iter().enumerate() {
            let power = match (s.power, s.snr_db) {
                (Some(p), None) => p,
                (None, Some(snr)) => power_for_snr(snr, self.noise_power, s.bandwidth),
                _ => {
                    return Err(Error::invalid(
                        format!("signals[{i}].power"),
                        "give exactly one of `power` or `snr_db`",
                    ))
                }
            };
            signals.push(SignalSpec {
                kind: s.kind,
                center_freq: s.center_freq,
                bandwidth: s.bandwidth,
                t_start: s.t_start,
                duration: s.duration,
                power,
            });
        }
        let scenario = Scenario {
            fs: self.fs,
            total_duration: self.total_duration,
            signals,
            noise_power: self.noise_power,
            seed: self.seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        ScenarioFile {
            fs: s.fs,
            total_duration: s.total_duration,
            noise_power: s.noise_power,
            seed: s.seed,
            signals: s
                .signals
                .iter()
                .map(|x| SignalEntry {
                    kind: x.kind,
                    center_freq: x.center_freq,
                    bandwidth: x.bandwidth,
                    t_start: x.t_start,
                    duration: x.duration,
                    power: Some(x.power),
                    snr_db: None,
                })
                .collect(),
        }
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    ScenarioFile::from_toml_str(&std::fs::read_to_string(path)?)?.into_scenario()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
fs = 100e6
total_duration = 0.001
noise_power = 1e-8
seed = 3

[[signals]]
kind = "noise-like"
center_freq = -10e6
bandwidth = 30e6
t_start = 0.0
duration = 0.0005
snr_db = 14.0
"#;

    #[test]
    fn snr_is_converted_to_power() {
        let s = ScenarioFile::from_toml_str(SAMPLE)
            .unwrap()
            .into_scenario()
            .unwrap();
        let expected = 10f64.powf(1.4) * 1e-8 * 30e6;
        assert!((s.signals[0].power - expected).abs() < 1e-12 * expected);
        assert_eq!(s.seed, 3);
    }

    #[test]
    fn integer_rates_are_accepted() {
        let text = SAMPLE.replace("fs = 100e6", "fs = 100000000");
        let s = ScenarioFile::from_toml_str(&text)
            .unwrap()
            .into_scenario()
            .unwrap();
        assert_eq!(s.fs, 100e6);
    }

    #[test]
    fn missing_field_is_named() {
        let text = SAMPLE.replace("bandwidth = 30e6\n", "");
        let err = ScenarioFile::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("bandwidth"), "{err}");
    }

    #[test]
    fn both_power_forms_is_rejected() {
        let text = SAMPLE.replace("snr_db = 14.0", "snr_db = 14.0\npower = 1.0");
        let err = ScenarioFile::from_toml_str(&text)
            .unwrap()
            .into_scenario()
            .unwrap_err();
        assert!(err.to_string().contains("signals[0].power"), "{err}");
    }

    #[test]
    fn out_of_band_names_the_field() {
        let text = SAMPLE.replace("center_freq = -10e6", "center_freq = -40e6");
        let err = ScenarioFile::from_toml_str(&text)
            .unwrap()
            .into_scenario()
            .unwrap_err();
        assert!(err.to_string().contains("signals[0].center_freq"), "{err}");
    }
}

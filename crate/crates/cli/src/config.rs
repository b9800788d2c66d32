//! The run configuration file shared by `detect`, `eval` and `bench`.
//!
//! ```toml
//! [frontend]
//! fs = 100e6
//! n_fft = 1024
//! plot_height = 2000
//!
//! [detector]          # every section but [frontend] is optional
//! psd_margin_db = 3.0
//!
//! [runtime]
//! n_sensing_workers = 4
//!
//! [input]
//! format = "cf32"
//! ```

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use specsense::baseline::BaselineConfig;
use specsense::detector::DetectorConfig;
use specsense::frontend::FrontendConfig;
use specsense::runtime::RuntimeConfig;
use specsense::signals::SampleFormat;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub format: SampleFormat,
    /// Samples per UDP datagram; 0 means one FFT chunk.
    pub samples_per_datagram: usize,
    /// A socket stream ends after this long without traffic.
    pub idle_timeout_s: f64,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            format: SampleFormat::Cf32,
            samples_per_datagram: 0,
            idle_timeout_s: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub frontend: FrontendConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub runtime: RuntimeConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
    #[serde(default)]
    pub input: InputConfig,
}

impl RunConfig {
    pub fn new(frontend: FrontendConfig) -> Self {
        RunConfig {
            frontend,
            detector: DetectorConfig::default(),
            runtime: RuntimeConfig::default(),
            baseline: BaselineConfig::default(),
            input: InputConfig::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let c: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        c.validate()
            .with_context(|| format!("validating config {}", path.display()))?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.runtime.validate_for(&self.frontend, &self.detector)?;
        self.baseline.validate()?;
        if !(self.input.idle_timeout_s.is_finite() && self.input.idle_timeout_s > 0.0) {
            anyhow::bail!("invalid `input.idle_timeout_s`: must be positive");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn samples_per_datagram(&self) -> usize {
        match self.input.samples_per_datagram {
            0 => self.frontend.n_fft,
            n => n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_takes_defaults() {
        let c: RunConfig =
            toml::from_str("[frontend]\nfs = 1e6\nn_fft = 64\nplot_height = 10\n").unwrap();
        assert_eq!(c.detector, DetectorConfig::default());
        assert_eq!(c.samples_per_datagram(), 64);
        c.validate().unwrap();
    }

    #[test]
    fn round_trips_through_toml() {
        let c = RunConfig::new(FrontendConfig::new(100e6, 1024, 2000).unwrap());
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r = toml::from_str::<RunConfig>(
            "[frontend]\nfs = 1e6\nn_fft = 64\nplot_height = 10\n[detector]\nmargin = 1\n",
        );
        assert!(r.is_err());
    }
}

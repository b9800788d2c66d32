//! Annotated synthetic I/Q scenarios and the interchange file formats.
//!
//! Signal kinds are spectral-shape surrogates rather than protocol waveforms:
//! a tone burst is a single complex sinusoid, an OFDM-like block is white
//! noise masked to a flat band with sharp edges, and a noise-like block uses
//! a raised-cosine roll-off whose half-power points sit on the nominal band
//! edges.

mod iq;
mod scenario_file;
mod snr;
pub mod suite;
mod synth;
mod truth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::iq::{
    decode_samples, encode_samples, read_iq, read_iq_as, write_iq, write_iq_as, SampleFormat,
};
pub use self::scenario_file::{load_scenario, ScenarioFile, SignalEntry};
pub use self::snr::{measure_snr, SNR_NFFT};
pub use self::synth::synthesize;
pub use self::truth::{read_gt, read_gt_str, write_gt, write_gt_string, GroundTruth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    /// A complex sinusoid at the center frequency.
    ToneBurst,
    /// Flat band-limited noise with sharp edges.
    OfdmLike,
    /// Band-limited noise with a Gaussian spectral taper, half power at the
    /// nominal edges.
    NoiseLike,
}

impl SignalKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SignalKind::ToneBurst => "tone-burst",
            SignalKind::OfdmLike => "ofdm-like",
            SignalKind::NoiseLike => "noise-like",
        }
    }
}

impl std::fmt::Display for SignalKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tone-burst" => Ok(SignalKind::ToneBurst),
            "ofdm-like" => Ok(SignalKind::OfdmLike),
            "noise-like" => Ok(SignalKind::NoiseLike),
            other => Err(Error::invalid(
                "kind",
                format!("unknown signal kind `{other}`"),
            )),
        }
    }
}

/// One emitter inside a scenario. Frequencies are relative to the receiver
/// center; `power` is linear, on the same scale as the noise, and counts what
/// falls inside the nominal band (the half-power points). A tapered spectrum
/// carries extra power in its skirts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub center_freq: f64,
    pub bandwidth: f64,
    pub t_start: f64,
    pub duration: f64,
    pub power: f64,
}

impl SignalSpec {
    /// Occupied band edges at the half-power points.
    pub fn band(&self) -> (f64, f64) {
        (
            self.center_freq - self.bandwidth / 2.0,
            self.center_freq + self.bandwidth / 2.0,
        )
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }
}

/// Linear signal power that yields `snr_db` against noise of density
/// `noise_power` (per Hz) integrated over `bandwidth`.
pub fn power_for_snr(snr_db: f64, noise_power: f64, bandwidth: f64) -> f64 {
    10f64.powf(snr_db / 10.0) * noise_power * bandwidth
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub fs: f64,
    pub total_duration: f64,
    pub signals: Vec<SignalSpec>,
    /// Noise power spectral density (linear power per Hz).
    pub noise_power: f64,
    pub seed: u64,
}

impl Scenario {
    /// Number of complex samples [`synthesize`] produces.
    pub fn sample_count(&self) -> usize {
        (self.fs * self.total_duration).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::invalid("fs", "must be a positive finite rate"));
        }
        if !(self.total_duration.is_finite() && self.total_duration > 0.0) {
            return Err(Error::invalid("total_duration", "must be positive"));
        }
        if !(self.noise_power.is_finite() && self.noise_power >= 0.0) {
            return Err(Error::invalid("noise_power", "must be non-negative"));
        }
        let nyquist = self.fs / 2.0;
        for (i, s) in self.signals.iter().enumerate() {
            let field = |name: &str| format!("signals[{i}].{name}");
            if !(s.bandwidth.is_finite() && s.bandwidth > 0.0) {
                return Err(Error::invalid(field("bandwidth"), "must be positive"));
            }
            if !(s.duration.is_finite() && s.duration > 0.0) {
                return Err(Error::invalid(field("duration"), "must be positive"));
            }
            if !(s.t_start.is_finite() && s.t_start >= 0.0) {
                return Err(Error::invalid(field("t_start"), "must be non-negative"));
            }
            if !(s.power.is_finite() && s.power >= 0.0) {
                return Err(Error::invalid(field("power"), "must be non-negative"));
            }
            let (lo, hi) = s.band();
            // A hair of tolerance so bands ending exactly at Nyquist survive float rounding.
            let slack = nyquist * 1e-12;
            if !s.center_freq.is_finite() || lo < -nyquist - slack || hi > nyquist + slack {
                return Err(Error::invalid(
                    field("center_freq"),
                    format!(
                        "band [{lo}, {hi}] Hz leaves [-fs/2, fs/2] = [{}, {nyquist}]",
                        -nyquist
                    ),
                ));
            }
            if s.t_end() > self.total_duration * (1.0 + 1e-12) {
                return Err(Error::invalid(
                    field("duration"),
                    format!(
                        "signal ends at {} s, after total_duration {} s",
                        s.t_end(),
                        self.total_duration
                    ),
                ));
            }
        }
        Ok(())
    }
}

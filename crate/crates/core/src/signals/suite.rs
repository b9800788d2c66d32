//! Built-in coexistence scenarios used by the evaluation harness and the bench.
//!
//! Each preset is a fixed layout of Wi-Fi/BLE-like emitters expressed in MHz
//! and in fractions of one sensing window, so the same layout scales to any
//! plot height. Technologies map onto surrogate kinds with fixed bandwidths
//! and nominal SNRs:
//!
//! | technology | kind       | bandwidth | nominal SNR |
//! |------------|------------|-----------|-------------|
//! | BLE        | noise-like | 2 MHz     | 15 dB       |
//! | OFDM Wi-Fi | ofdm-like  | 20 MHz    | 20 dB       |
//! | DSSS Wi-Fi | noise-like | 30 MHz    | 14 dB       |

use serde::{Deserialize, Serialize};

use super::{power_for_snr, Scenario, SignalKind, SignalSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tech {
    Ble,
    WifiOfdm,
    WifiDsss,
}

impl Tech {
    pub fn kind(&self) -> SignalKind {
        match self {
            Tech::Ble | Tech::WifiDsss => SignalKind::NoiseLike,
            Tech::WifiOfdm => SignalKind::OfdmLike,
        }
    }

    pub fn bandwidth(&self) -> f64 {
        match self {
            Tech::Ble => 2e6,
            Tech::WifiOfdm => 20e6,
            Tech::WifiDsss => 30e6,
        }
    }

    pub fn nominal_snr_db(&self) -> f64 {
        match self {
            Tech::Ble => 15.0,
            Tech::WifiOfdm => 20.0,
            Tech::WifiDsss => 14.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Temporally sparse coexistence of BLE, OFDM and DSSS bursts.
    Sparse,
    /// A long OFDM transmission with a few BLE bursts around it.
    Default,
    /// BLE on a control channel next to Wi-Fi on non-overlapping channels.
    Control,
    /// Closely packed bursts of all three technologies.
    DenseMixed,
    /// Closely packed DSSS bursts only.
    DenseNoiseLike,
    /// 500 MHz capture: the control layout in the middle 100 MHz plus DSSS in the outer band.
    Wideband,
}

/// (technology, center MHz, start fraction, duration fraction)
type Layout = &'static [(Tech, f64, f64, f64)];

const SPARSE: Layout = &[
    (Tech::Ble, -30.0, 0.05, 0.06),
    (Tech::WifiOfdm, 12.0, 0.18, 0.16),
    (Tech::Ble, 38.0, 0.42, 0.05),
    (Tech::WifiDsss, -16.0, 0.55, 0.18),
    (Tech::Ble, 2.0, 0.82, 0.06),
];

const DEFAULT: Layout = &[
    (Tech::WifiOfdm, 0.0, 0.10, 0.45),
    (Tech::Ble, -28.0, 0.20, 0.08),
    (Tech::Ble, 30.0, 0.65, 0.08),
];

const CONTROL: Layout = &[
    (Tech::Ble, -42.0, 0.08, 0.07),
    (Tech::Ble, -42.0, 0.55, 0.07),
    (Tech::WifiOfdm, -22.0, 0.05, 0.35),
    (Tech::WifiOfdm, -1.0, 0.30, 0.30),
    (Tech::WifiOfdm, 20.0, 0.50, 0.35),
    (Tech::WifiDsss, 28.0, 0.05, 0.30),
];

const DENSE_MIXED: Layout = &[
    (Tech::WifiOfdm, -37.0, 0.03, 0.20),
    (Tech::WifiOfdm, -37.0, 0.30, 0.15),
    (Tech::Ble, -24.0, 0.10, 0.05),
    (Tech::Ble, -24.0, 0.50, 0.05),
    (Tech::WifiDsss, -5.0, 0.05, 0.25),
    (Tech::WifiDsss, -5.0, 0.55, 0.20),
    (Tech::Ble, 14.0, 0.20, 0.05),
    (Tech::Ble, 14.0, 0.70, 0.05),
    (Tech::WifiOfdm, 30.0, 0.08, 0.18),
    (Tech::WifiOfdm, 30.0, 0.45, 0.30),
    (Tech::Ble, 44.0, 0.35, 0.05),
    (Tech::Ble, 44.0, 0.85, 0.05),
];

const DENSE_NOISE_LIKE: Layout = &[
    (Tech::WifiDsss, -33.0, 0.04, 0.20),
    (Tech::WifiDsss, -33.0, 0.40, 0.15),
    (Tech::WifiDsss, -33.0, 0.70, 0.20),
    (Tech::WifiDsss, 0.0, 0.15, 0.25),
    (Tech::WifiDsss, 0.0, 0.55, 0.12),
    (Tech::WifiDsss, 33.0, 0.02, 0.15),
    (Tech::WifiDsss, 33.0, 0.30, 0.25),
    (Tech::WifiDsss, 33.0, 0.75, 0.20),
];

const WIDEBAND_OUTER: Layout = &[
    (Tech::WifiDsss, -200.0, 0.10, 0.30),
    (Tech::WifiDsss, -120.0, 0.50, 0.30),
    (Tech::WifiDsss, 110.0, 0.20, 0.25),
    (Tech::WifiDsss, 190.0, 0.60, 0.30),
];

impl Preset {
    /// The five 100 MHz presets used for detection-quality evaluation.
    pub const EVALUATION: [Preset; 5] = [
        Preset::Sparse,
        Preset::Default,
        Preset::Control,
        Preset::DenseMixed,
        Preset::DenseNoiseLike,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Sparse => "sparse",
            Preset::Default => "default",
            Preset::Control => "control",
            Preset::DenseMixed => "dense-mixed",
            Preset::DenseNoiseLike => "dense-noise-like",
            Preset::Wideband => "wideband",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        [
            Preset::Sparse,
            Preset::Default,
            Preset::Control,
            Preset::DenseMixed,
            Preset::DenseNoiseLike,
            Preset::Wideband,
        ]
        .into_iter()
        .find(|p| p.name() == name)
    }

    pub fn sample_rate(&self) -> f64 {
        match self {
            Preset::Wideband => 500e6,
            _ => 100e6,
        }
    }

    fn layout(&self) -> Vec<(Tech, f64, f64, f64)> {
        match self {
            Preset::Sparse => SPARSE.to_vec(),
            Preset::Default => DEFAULT.to_vec(),
            Preset::Control => CONTROL.to_vec(),
            Preset::DenseMixed => DENSE_MIXED.to_vec(),
            Preset::DenseNoiseLike => DENSE_NOISE_LIKE.to_vec(),
            Preset::Wideband => CONTROL.iter().chain(WIDEBAND_OUTER).copied().collect(),
        }
    }

    /// One sensing window of `plot_height` FFT rows of `n_fft` samples.
    ///
    /// With `snr_db = None` every emitter uses its technology's nominal SNR;
    /// otherwise all emitters share the given SNR. Noise density is `1/fs`,
    /// i.e. unit total noise power.
    pub fn scenario(
        &self,
        n_fft: usize,
        plot_height: usize,
        seed: u64,
        snr_db: Option<f64>,
    ) -> Scenario {
        let fs = self.sample_rate();
        let window = (n_fft * plot_height) as f64 / fs;
        let noise_power = 1.0 / fs;
        let signals = self
            .layout()
            .into_iter()
            .map(|(tech, center_mhz, start, dur)| {
                let bandwidth = tech.bandwidth();
                let snr = snr_db.unwrap_or_else(|| tech.nominal_snr_db());
                SignalSpec {
                    kind: tech.kind(),
                    center_freq: center_mhz * 1e6,
                    bandwidth,
                    t_start: start * window,
                    duration: dur * window,
                    power: power_for_snr(snr, noise_power, bandwidth),
                }
            })
            .collect();
        Scenario {
            fs,
            total_duration: window,
            signals,
            noise_power,
            seed,
        }
    }
}

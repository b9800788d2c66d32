//! I/Q ingestion, FFT rows and TF-plot assembly.

mod fft;
mod ingest;
mod pingpong;
mod plot;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::SampleFormat;

pub use self::fft::{fft_row, plots_from_samples, RowTransform};
pub use self::ingest::{
    chunk_samples, send_datagrams, DatagramConfig, FileSource, IngestStats, UdpSource, HEADER_BYTES,
};
pub use self::pingpong::{AssembleEvent, BufferStats, PingPongBuffer};
pub use self::plot::{IqChunk, TfPlot};

/// Largest supported plot height; keeps Otsu's integer statistics exact.
pub const MAX_PLOT_HEIGHT: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontendConfig {
    /// Complex samples per second.
    pub fs: f64,
    /// FFT size F, also the plot width.
    pub n_fft: usize,
    /// Rows per TF plot, T.
    pub plot_height: usize,
}

impl FrontendConfig {
    pub fn new(fs: f64, n_fft: usize, plot_height: usize) -> Result<Self> {
        let c = FrontendConfig {
            fs,
            n_fft,
            plot_height,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::invalid("fs", "must be a positive finite rate"));
        }
        if self.n_fft < 2 || !self.n_fft.is_power_of_two() {
            return Err(Error::invalid("n_fft", "must be a power of two >= 2"));
        }
        if self.plot_height == 0 || self.plot_height > MAX_PLOT_HEIGHT {
            return Err(Error::invalid(
                "plot_height",
                format!("must be in 1..={MAX_PLOT_HEIGHT}"),
            ));
        }
        Ok(())
    }

    /// Time per FFT row: F / fs.
    pub fn delta_t(&self) -> f64 {
        self.n_fft as f64 / self.fs
    }

    /// Frequency per bin: fs / F.
    pub fn delta_f(&self) -> f64 {
        self.fs / self.n_fft as f64
    }

    /// (delta_t, delta_f)
    pub fn resolution(&self) -> (f64, f64) {
        (self.delta_t(), self.delta_f())
    }

    /// Wall-clock span of one plot, T * delta_t; also the per-plot deadline.
    pub fn plot_span(&self) -> f64 {
        self.plot_height as f64 * self.delta_t()
    }

    /// Throughput one FFT stage must sustain, F * bits / delta_t.
    pub fn fft_throughput_bps(&self, format: SampleFormat) -> f64 {
        (self.n_fft * format.bits_per_sample()) as f64 / self.delta_t()
    }

    /// Center frequency of shifted column `k`, relative to the receiver center.
    pub fn column_freq(&self, k: usize) -> f64 {
        (k as f64 - (self.n_fft / 2) as f64) * self.delta_f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_at_100_msps() {
        let c = FrontendConfig::new(100e6, 1024, 2000).unwrap();
        let (dt, df) = c.resolution();
        assert_eq!(dt, 10.24e-6);
        assert_eq!(df, 97_656.25);
        assert!((c.plot_span() - 20.48e-3).abs() < 1e-15);
    }

    #[test]
    fn resolution_when_fs_equals_fft_size() {
        let c = FrontendConfig::new(1024.0, 1024, 1).unwrap();
        assert_eq!(c.resolution(), (1.0, 1.0));
    }

    #[test]
    fn resolution_at_500_msps() {
        let c = FrontendConfig::new(500e6, 1024, 2000).unwrap();
        assert_eq!(c.delta_t(), 2.048e-6);
        assert!((c.plot_span() - 4.096e-3).abs() < 1e-15);
    }

    #[test]
    fn fft_stage_needs_6_4_gbps_with_float_samples() {
        let c = FrontendConfig::new(100e6, 1024, 2000).unwrap();
        assert!((c.fft_throughput_bps(SampleFormat::Cf32) - 6.4e9).abs() < 1.0);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(FrontendConfig::new(1e6, 1000, 10).is_err());
        assert!(FrontendConfig::new(1e6, 1024, 0).is_err());
        assert!(FrontendConfig::new(0.0, 1024, 10).is_err());
    }
}

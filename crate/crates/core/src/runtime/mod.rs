//! Manager/worker execution of the detector under a per-plot deadline.
//!
//! One manager thread owns all scheduling state. Compute workers turn chunks
//! into FFT rows, sensing workers process frequency slabs of a completed plot,
//! and every exchange goes through bounded channels. The manager never blocks
//! on a send: it keeps at most `queue_capacity` tasks outstanding per pool and
//! holds the rest in a local queue.
//!
//! Each plot takes two round trips to the sensing pool. Slabs first return the
//! time-summed power of their core columns; the manager smooths the joined
//! profile and picks the active columns. Slabs then binarize and consolidate
//! their extended columns and return the core part of the mask. The manager
//! pastes the cores together and labels the whole mask once, so the boxes do
//! not depend on the number of slabs as long as the halo covers the reach of
//! the morphology.

mod partition;
mod pipeline;
mod report;
mod stream;
mod workers;

use serde::{Deserialize, Serialize};

use crate::detector::{consolidate_reach, DetectorConfig};
use crate::error::{Error, Result};
use crate::frontend::FrontendConfig;
use crate::geometry::BoundingBox;

pub use self::partition::{partition, Slab, MIN_HALO};
pub use self::report::{
    nearest_rank, report, LatencyRecord, LatencySummary, RunReport, MIN_VALID_SAMPLES,
    REALTIME_PERCENT,
};
pub use self::stream::{replay, run, ReplayConfig};

/// What the ingest thread does when the manager falls behind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backpressure {
    /// Stall the source and the plot assembly; nothing is lost.
    #[default]
    Block,
    /// Drop chunks that find the queue full and plots that find no free bank.
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuntimeConfig {
    /// Threads computing FFT rows.
    pub n_compute_workers: usize,
    /// Threads sensing frequency slabs; also the number of slabs per plot.
    pub n_sensing_workers: usize,
    /// Most tasks outstanding per worker pool, and the ingest queue length.
    pub queue_capacity: usize,
    /// Per-plot budget in seconds; `None` means the plot span T * delta_t.
    pub deadline: Option<f64>,
    /// Extra columns each slab reads on both sides of its core.
    pub halo_width: usize,
    /// Chunks per FFT task.
    pub rows_per_task: usize,
    pub backpressure: Backpressure,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig {
            n_compute_workers: 1,
            n_sensing_workers: 4,
            queue_capacity: 64,
            deadline: None,
            halo_width: 6,
            rows_per_task: 32,
            backpressure: Backpressure::Block,
        }
    }
}

impl RuntimeConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("n_compute_workers", self.n_compute_workers),
            ("n_sensing_workers", self.n_sensing_workers),
            ("queue_capacity", self.queue_capacity),
            ("rows_per_task", self.rows_per_task),
        ] {
            if v == 0 {
                return Err(Error::invalid(field, "must be at least 1"));
            }
        }
        if self.halo_width < MIN_HALO {
            return Err(Error::invalid(
                "halo_width",
                format!("must be at least {MIN_HALO}"),
            ));
        }
        if let Some(d) = self.deadline {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::invalid("deadline", "must be a positive number of seconds"));
            }
        }
        Ok(())
    }

    /// Checks that slabs fit the plot and that the halo covers the morphology.
    pub fn validate_for(&self, frontend: &FrontendConfig, detector: &DetectorConfig) -> Result<()> {
        self.validate()?;
        frontend.validate()?;
        detector.validate()?;
        let reach = consolidate_reach(detector.opening_axis);
        if self.halo_width < reach {
            return Err(Error::invalid(
                "halo_width",
                format!(
                    "{} is below the {reach}-column reach of the morphology",
                    self.halo_width
                ),
            ));
        }
        if self.n_sensing_workers > frontend.n_fft {
            return Err(Error::invalid(
                "n_sensing_workers",
                format!("{} slabs do not fit {} columns", self.n_sensing_workers, frontend.n_fft),
            ));
        }
        Ok(())
    }

    pub fn deadline_for(&self, frontend: &FrontendConfig) -> f64 {
        self.deadline.unwrap_or_else(|| frontend.plot_span())
    }
}

/// Boxes found in one plot, emitted in plot order.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotDetections {
    pub plot_index: u64,
    pub boxes: Vec<BoundingBox>,
    pub latency: LatencyRecord,
}

//! Energy-block detection on one TF plot.
//!
//! Columns are pruned against a noise floor taken from the smoothed PSD, the
//! remaining columns are Otsu-thresholded, the mask is cleaned up with a
//! closing and two openings, and 4-connected components become boxes.

mod label;
mod mask;
mod morphology;
mod otsu;
mod psd;
mod savgol;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{FrontendConfig, TfPlot};
use crate::geometry::BoundingBox;

pub use self::label::{find_components, label, Component, LabeledComponents};
pub use self::mask::BinaryMask;
pub use self::morphology::{
    consolidate, consolidate_in_place, consolidate_reach, dilate_in_place, erode_in_place,
    morphology, MorphOp, OpeningAxis, StructuringElement,
};
pub use self::otsu::{
    best_level, binarize, binarize_columns, column_thresholds, otsu, OtsuThreshold, OTSU_BINS,
};
pub use self::psd::{
    db_to_power, estimate_psd, estimate_psd_columns, local_minima, lowest_local_minimum,
    power_to_db, prune_columns, smooth_and_floor, PsdProfile, POWER_FLOOR,
};
pub use self::savgol::{savgol_coefficients, savgol_smooth};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Savitzky–Golay window in bins; odd.
    pub savgol_window: usize,
    pub savgol_order: usize,
    /// Column threshold above the noise floor, dB.
    pub psd_margin_db: f64,
    /// Smallest component kept, in pixels.
    pub min_component_area: usize,
    pub opening_axis: OpeningAxis,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            savgol_window: 31,
            savgol_order: 3,
            psd_margin_db: 3.0,
            min_component_area: 4,
            opening_axis: OpeningAxis::Frequency,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.savgol_window.is_multiple_of(2) {
            return Err(Error::invalid("savgol_window", "must be odd"));
        }
        if self.savgol_window <= self.savgol_order {
            return Err(Error::invalid("savgol_window", "must exceed savgol_order"));
        }
        if !(self.psd_margin_db.is_finite() && self.psd_margin_db >= 0.0) {
            return Err(Error::invalid(
                "psd_margin_db",
                "must be a finite value >= 0",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub psd: Duration,
    pub binarize: Duration,
    pub consolidate: Duration,
    pub label: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.psd + self.binarize + self.consolidate + self.label
    }
}

/// Everything [`detect`] computes along the way.
#[derive(Debug, Clone)]
pub struct Detection {
    pub psd: PsdProfile,
    pub active: Vec<bool>,
    pub binary: BinaryMask,
    pub consolidated: BinaryMask,
    pub components: Vec<Component>,
    pub boxes: Vec<BoundingBox>,
    pub timings: StageTimings,
}

/// Boxes around the energy blocks of `plot`, in Hz relative to the receiver
/// center and seconds from the start of the stream.
pub fn detect(plot: &TfPlot, config: &DetectorConfig) -> Result<Vec<BoundingBox>> {
    Ok(detect_with_stages(plot, config)?.boxes)
}

pub fn detect_with_stages(plot: &TfPlot, config: &DetectorConfig) -> Result<Detection> {
    config.validate()?;
    let t = Instant::now();
    let psd = smooth_and_floor(estimate_psd(plot), config)?;
    let active = prune_columns(&psd);
    let t_psd = t.elapsed();

    let t = Instant::now();
    let binary = binarize(plot, &active);
    let t_bin = t.elapsed();

    let t = Instant::now();
    let consolidated = consolidate(&binary, config.opening_axis);
    let t_cons = t.elapsed();

    let t = Instant::now();
    let components = find_components(&consolidated, config.min_component_area);
    let boxes = components
        .iter()
        .map(|c| component_to_box(c, plot.config(), plot.start_seq()))
        .collect();
    let t_label = t.elapsed();

    Ok(Detection {
        psd,
        active,
        binary,
        consolidated,
        components,
        boxes,
        timings: StageTimings {
            psd: t_psd,
            binarize: t_bin,
            consolidate: t_cons,
            label: t_label,
        },
    })
}

/// Physical box covering the outer edges of the component's bins. Column `k` is
/// centered at `(k - F/2) * df` and row `r` spans `[(start_seq + r) * dt, (start_seq + r + 1) * dt)`.
pub fn component_to_box(c: &Component, frontend: &FrontendConfig, start_seq: u64) -> BoundingBox {
    let (dt, df) = frontend.resolution();
    let center = (frontend.n_fft / 2) as f64;
    BoundingBox {
        f0: (c.f_min as f64 - center - 0.5) * df,
        f1: (c.f_max as f64 - center + 0.5) * df,
        t0: (start_seq + c.t_min as u64) as f64 * dt,
        t1: (start_seq + c.t_max as u64 + 1) as f64 * dt,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::default().validate().is_ok());
        for bad in [
            DetectorConfig {
                savgol_window: 30,
                ..Default::default()
            },
            DetectorConfig {
                savgol_window: 3,
                savgol_order: 3,
                ..Default::default()
            },
            DetectorConfig {
                psd_margin_db: -1.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Validation { .. })));
        }
    }

    #[test]
    fn config_reads_partial_toml() {
        let c: DetectorConfig =
            toml::from_str("psd_margin_db = 6.0\nopening_axis = \"time\"").unwrap();
        assert_eq!(c.psd_margin_db, 6.0);
        assert_eq!(c.opening_axis, OpeningAxis::Time);
        assert_eq!(c.savgol_window, 31);
    }

    #[test]
    fn box_edges_follow_bin_edges() {
        let fe = FrontendConfig::new(1024.0, 1024, 100).unwrap();
        let c = Component {
            t_min: 2,
            t_max: 4,
            f_min: 512,
            f_max: 513,
            area: 6,
        };
        let b = component_to_box(&c, &fe, 100);
        assert_eq!((b.f0, b.f1, b.t0, b.t1), (-0.5, 1.5, 102.0, 105.0));
    }

    #[test]
    fn constant_plot_yields_nothing() {
        let fe = FrontendConfig::new(1.0, 64, 10).unwrap();
        let plot = TfPlot::from_data(fe, 0, vec![1.0; 640]).unwrap();
        assert!(detect(&plot, &DetectorConfig::default())
            .unwrap()
            .is_empty());
        let zero = TfPlot::from_data(fe, 0, vec![0.0; 640]).unwrap();
        assert!(detect(&zero, &DetectorConfig::default())
            .unwrap()
            .is_empty());
    }
}

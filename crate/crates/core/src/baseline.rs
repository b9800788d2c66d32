//! Convolution-search energy detector used as a point of comparison.
//!
//! The power plot is mean-filtered with every kernel of size 2^i x 2^j up to
//! the plot (or a configured maximum), and every cell whose filtered power
//! exceeds a multiple of the noise floor seeds a detection. Seed regions grow
//! one bin per side while the new edge still carries a large enough fraction
//! of the box's mean power, and overlapping boxes are merged.
//!
//! The noise floor is the one the main detector estimates, so the two differ
//! only in how they find blocks. Cost grows with T F log T log F.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::detector::{
    component_to_box, db_to_power, detect, estimate_psd, find_components, smooth_and_floor,
    BinaryMask, Component, DetectorConfig,
};
use crate::error::{Error, Result};
use crate::frontend::TfPlot;
use crate::geometry::{BinBox, BoundingBox};
use crate::metrics::{IouMatrix, Tally};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Filtered power must exceed this multiple of the noise floor.
    pub conv_threshold: f64,
    /// A box grows while the next edge strip has at least this fraction of its mean power.
    pub rate_change_threshold: f64,
    /// Largest kernel as `[rows, columns]`; `None` searches up to the plot size.
    pub max_kernel: Option<[usize; 2]>,
    /// Added to the estimated noise floor, dB.
    pub noise_offset_db: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            conv_threshold: 96.0,
            rate_change_threshold: 0.4,
            max_kernel: None,
            noise_offset_db: 0.0,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.conv_threshold.is_finite() && self.conv_threshold > 0.0) {
            return Err(Error::invalid("conv_threshold", "must be positive"));
        }
        if !(self.rate_change_threshold.is_finite() && self.rate_change_threshold > 0.0) {
            return Err(Error::invalid("rate_change_threshold", "must be positive"));
        }
        if !self.noise_offset_db.is_finite() {
            return Err(Error::invalid("noise_offset_db", "must be finite"));
        }
        if let Some([h, w]) = self.max_kernel {
            if h == 0 || w == 0 {
                return Err(Error::invalid("max_kernel", "dimensions must be at least 1"));
            }
        }
        Ok(())
    }

    /// Also checks that the kernel limit fits a `height` x `width` plot.
    pub fn validate_for(&self, height: usize, width: usize) -> Result<()> {
        self.validate()?;
        match self.max_kernel {
            Some([h, w]) if h > height || w > width => Err(Error::invalid(
                "max_kernel",
                format!("[{h}, {w}] exceeds the {height} x {width} plot"),
            )),
            _ => Ok(()),
        }
    }
}

fn powers_of_two_up_to(n: usize) -> impl Iterator<Item = usize> {
    std::iter::successors(Some(1usize), move |&k| k.checked_mul(2).filter(|&k| k <= n))
}

/// Kernel sizes `(rows, columns)` searched on a `height` x `width` plot.
pub fn kernel_sizes(height: usize, width: usize, max_kernel: Option<[usize; 2]>) -> Vec<(usize, usize)> {
    let [mh, mw] = max_kernel.unwrap_or([height, width]);
    let mut out = Vec::new();
    for h in powers_of_two_up_to(mh.min(height)) {
        for w in powers_of_two_up_to(mw.min(width)) {
            out.push((h, w));
        }
    }
    out
}

/// Summed-area table of the power plot, `(T + 1) x (F + 1)`.
struct PowerSums {
    width: usize,
    sums: Vec<f64>,
}

impl PowerSums {
    fn new(plot: &TfPlot) -> Self {
        let (t, f) = (plot.height(), plot.width());
        let w = f + 1;
        let mut sums = vec![0.0f64; (t + 1) * w];
        for r in 0..t {
            let mut run = 0.0;
            let (above, row) = sums.split_at_mut((r + 1) * w);
            let above = &above[r * w..];
            for (c, &v) in plot.row(r).iter().enumerate() {
                run += v as f64 * v as f64;
                row[c + 1] = above[c + 1] + run;
            }
        }
        PowerSums { width: w, sums }
    }

    /// Total power in rows `t0..t1`, columns `f0..f1`.
    fn sum(&self, t0: usize, t1: usize, f0: usize, f1: usize) -> f64 {
        let w = self.width;
        let s = &self.sums;
        s[t1 * w + f1] - s[t0 * w + f1] - s[t1 * w + f0] + s[t0 * w + f0]
    }

    fn mean(&self, b: &BinBox) -> f64 {
        self.sum(b.t0, b.t1, b.f0, b.f1) / b.area() as f64
    }
}

/// Window of length `k` centered on each index of `0..n`, clamped to the range.
fn windows(n: usize, k: usize) -> Vec<(usize, usize)> {
    let before = k / 2;
    (0..n)
        .map(|i| (i.saturating_sub(before), (i + k - before).min(n)))
        .collect()
}

/// Cells whose mean-filtered power exceeds `level` for at least one kernel.
/// The filter pads with zeros, so a window hanging over the plot edge is
/// still divided by the full kernel area.
fn seed_mask(sums: &PowerSums, height: usize, width: usize, kernels: &[(usize, usize)], level: f64) -> BinaryMask {
    let mut marked = vec![false; height * width];
    for &(kh, kw) in kernels {
        let need = level * (kh * kw) as f64;
        let rows = windows(height, kh);
        let cols = windows(width, kw);
        for (r, &(t0, t1)) in rows.iter().enumerate() {
            let out = &mut marked[r * width..(r + 1) * width];
            for (m, &(f0, f1)) in out.iter_mut().zip(&cols) {
                *m |= sums.sum(t0, t1, f0, f1) > need;
            }
        }
    }
    BinaryMask::from_fn(height, width, |t, k| marked[t * width + k])
}

/// Grows `b` one bin per side while the new edge keeps at least `rate` of the box mean.
fn expand(sums: &PowerSums, mut b: BinBox, height: usize, width: usize, rate: f64) -> BinBox {
    loop {
        let mean = sums.mean(&b);
        let mut grown = false;
        let strips = [
            (b.t0 > 0).then(|| BinBox { t0: b.t0 - 1, t1: b.t0, ..b }),
            (b.t1 < height).then(|| BinBox { t0: b.t1, t1: b.t1 + 1, ..b }),
            (b.f0 > 0).then(|| BinBox { f0: b.f0 - 1, f1: b.f0, ..b }),
            (b.f1 < width).then(|| BinBox { f0: b.f1, f1: b.f1 + 1, ..b }),
        ];
        for strip in strips.into_iter().flatten() {
            if sums.mean(&strip) >= rate * mean {
                b = b.union(&strip);
                grown = true;
            }
        }
        if !grown {
            return b;
        }
    }
}

/// Replaces overlapping boxes by their union until none overlap.
fn merge(mut boxes: Vec<BinBox>) -> Vec<BinBox> {
    'restart: loop {
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if boxes[i].overlaps(&boxes[j]) {
                    let other = boxes.swap_remove(j);
                    boxes[i] = boxes[i].union(&other);
                    continue 'restart;
                }
            }
        }
        boxes.sort_by_key(|b| (b.t0, b.f0, b.t1, b.f1));
        return boxes;
    }
}

/// Seed regions after expansion and merging, in bin coordinates.
pub fn baseline_bins(plot: &TfPlot, config: &BaselineConfig) -> Result<Vec<BinBox>> {
    let (height, width) = (plot.height(), plot.width());
    config.validate_for(height, width)?;
    let floor = smooth_and_floor(estimate_psd(plot), &DetectorConfig::default())?.noise_floor;
    let level = config.conv_threshold * floor * db_to_power(config.noise_offset_db);
    let sums = PowerSums::new(plot);
    let kernels = kernel_sizes(height, width, config.max_kernel);
    let seeds = seed_mask(&sums, height, width, &kernels, level);
    let grown: Vec<BinBox> = find_components(&seeds, 1)
        .iter()
        .map(|c| expand(&sums, c.bin_box(), height, width, config.rate_change_threshold))
        .collect();
    Ok(merge(grown))
}

/// Boxes in the same physical units as [`detect`](crate::detector::detect).
pub fn baseline_detect(plot: &TfPlot, config: &BaselineConfig) -> Result<Vec<BoundingBox>> {
    Ok(baseline_bins(plot, config)?
        .iter()
        .map(|b| {
            let c = Component {
                t_min: b.t0,
                t_max: b.t1 - 1,
                f_min: b.f0,
                f_max: b.f1 - 1,
                area: b.area(),
            };
            component_to_box(&c, plot.config(), plot.start_seq())
        })
        .collect())
}

/// Scores and mean wall-clock time of one detector over a set of plots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub detector: String,
    pub plots: usize,
    /// Seconds per plot.
    pub mean_latency: f64,
    pub p_d: f64,
    pub p_fa: f64,
    pub mean_iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub theta_iou: f64,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub const CSV_HEADER: &'static str = "detector,plots,mean_latency_ms,p_d,p_fa,mean_iou,relative_latency";

    /// Mean latency of row `i` over that of row `j`.
    pub fn latency_ratio(&self, i: usize, j: usize) -> f64 {
        self.rows[i].mean_latency / self.rows[j].mean_latency
    }

    /// How many times faster the first detector is than the last one.
    pub fn speedup(&self) -> f64 {
        self.latency_ratio(self.rows.len() - 1, 0)
    }

    /// One line per detector; `relative_latency` is against the first row.
    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for (i, r) in self.rows.iter().enumerate() {
            s += &format!(
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.3}\n",
                r.detector,
                r.plots,
                r.mean_latency * 1e3,
                r.p_d,
                r.p_fa,
                r.mean_iou,
                self.latency_ratio(i, 0)
            );
        }
        s
    }
}

/// A named detector for [`compare_with`].
pub type NamedDetector<'a> = (&'a str, &'a mut dyn FnMut(&TfPlot) -> Result<Vec<BoundingBox>>);

/// Runs every detector on every plot in the same thread, alternating per plot,
/// and scores each against the plot's ground truth at `theta_iou`.
pub fn compare_with(
    cases: &[(TfPlot, Vec<BoundingBox>)],
    detectors: &mut [NamedDetector<'_>],
    theta_iou: f64,
) -> Result<Comparison> {
    let mut tallies = vec![Tally::new(theta_iou); detectors.len()];
    let mut time = vec![0.0f64; detectors.len()];
    for (plot, gt) in cases {
        for (i, (_, run)) in detectors.iter_mut().enumerate() {
            let t = Instant::now();
            let boxes = run(plot)?;
            time[i] += t.elapsed().as_secs_f64();
            tallies[i].add(&IouMatrix::new(gt, &boxes));
        }
    }
    let n = cases.len();
    let rows = detectors
        .iter()
        .zip(tallies.iter().zip(&time))
        .map(|((name, _), (tally, &secs))| {
            let r = tally.result();
            ComparisonRow {
                detector: name.to_string(),
                plots: n,
                mean_latency: if n == 0 { 0.0 } else { secs / n as f64 },
                p_d: r.p_d,
                p_fa: r.p_fa,
                mean_iou: r.mean_iou,
            }
        })
        .collect();
    Ok(Comparison { theta_iou, rows })
}

/// The image-processing detector against the baseline, rows in that order.
pub fn compare(
    cases: &[(TfPlot, Vec<BoundingBox>)],
    detector: &DetectorConfig,
    baseline: &BaselineConfig,
    theta_iou: f64,
) -> Result<Comparison> {
    compare_with(
        cases,
        &mut [
            ("detector", &mut |p: &TfPlot| detect(p, detector)),
            ("baseline", &mut |p: &TfPlot| baseline_detect(p, baseline)),
        ],
        theta_iou,
    )
}

use num_complex::{Complex32, Complex64};
use rustfft::FftPlanner;

use super::synth::occupied_band;
use super::GroundTruth;
use crate::error::{Error, Result};

/// Transform size used to resolve boxes in frequency when measuring SNR.
pub const SNR_NFFT: usize = 1024;

/// Guard band (rows, bins) kept between a box and the cells used as the noise
/// reference.
const GUARD_ROWS: usize = 1;
const GUARD_BINS: usize = 2;

/// Effective SNR per ground-truth box, in dB.
///
/// The noise density comes from TF cells outside every signal's occupied
/// spectrum (its box, widened to the taper for noise-like kinds, plus a guard
/// band). For each box, signal power is the box's mean in-band power minus
/// that noise density integrated over the box's bins. A noise reference of
/// zero yields `f64::INFINITY`.
pub fn measure_snr(samples: &[Complex32], gt: &GroundTruth, fs: f64) -> Result<Vec<f64>> {
    let nfft = SNR_NFFT;
    let rows = samples.len() / nfft;
    if rows == 0 {
        return Err(Error::invalid(
            "samples",
            format!("need at least {nfft} samples to resolve frequency"),
        ));
    }
    let dt = nfft as f64 / fs;
    let df = fs / nfft as f64;

    // cell[r * nfft + k]: power in shifted bin k during row r.
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nfft);
    let mut cells = vec![0.0f64; rows * nfft];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    let norm = 1.0 / (nfft as f64 * nfft as f64);
    for r in 0..rows {
        for (b, s) in buf.iter_mut().zip(&samples[r * nfft..(r + 1) * nfft]) {
            *b = Complex64::new(s.re as f64, s.im as f64);
        }
        fft.process(&mut buf);
        let row = &mut cells[r * nfft..(r + 1) * nfft];
        for (k, c) in row.iter_mut().enumerate() {
            *c = buf[(k + nfft / 2) % nfft].norm_sqr() * norm;
        }
    }

    let spans: Vec<_> = gt
        .boxes
        .iter()
        .map(|b| {
            let cols = index_span(b.f0, b.f1, |k| (k as f64 - (nfft / 2) as f64) * df, nfft);
            let rws = index_span(b.t0, b.t1, |r| (r as f64 + 0.5) * dt, rows);
            (rws, cols)
        })
        .collect();

    let mut covered = vec![false; rows * nfft];
    for ((rws, _), (b, &kind)) in spans.iter().zip(gt.boxes.iter().zip(&gt.labels)) {
        let (lo, hi) = occupied_band(kind, b.f0, b.f1);
        let cols = index_span(lo, hi, |k| (k as f64 - (nfft / 2) as f64) * df, nfft);
        let r0 = rws.0.saturating_sub(GUARD_ROWS);
        let r1 = (rws.1 + GUARD_ROWS).min(rows);
        let c0 = cols.0.saturating_sub(GUARD_BINS);
        let c1 = (cols.1 + GUARD_BINS).min(nfft);
        for r in r0..r1 {
            covered[r * nfft + c0..r * nfft + c1].fill(true);
        }
    }
    let (noise_sum, noise_cells) = cells
        .iter()
        .zip(&covered)
        .filter(|(_, &c)| !c)
        .fold((0.0, 0usize), |(s, n), (&v, _)| (s + v, n + 1));
    if noise_cells == 0 && !gt.is_empty() {
        return Err(Error::invalid(
            "ground_truth",
            "boxes cover the whole plane; no signal-free cells for a noise reference",
        ));
    }
    let noise_per_bin = if noise_cells > 0 {
        noise_sum / noise_cells as f64
    } else {
        0.0
    };

    Ok(spans
        .iter()
        .map(|&((r0, r1), (c0, c1))| {
            let n_rows = (r1 - r0) as f64;
            let n_bins = (c1 - c0) as f64;
            let total: f64 = (r0..r1)
                .map(|r| cells[r * nfft + c0..r * nfft + c1].iter().sum::<f64>())
                .sum::<f64>()
                / n_rows;
            let noise = noise_per_bin * n_bins;
            // Relative floor: a reference this far below the box is numerical leakage, not noise.
            if noise <= total * 1e-12 {
                return f64::INFINITY;
            }
            let signal = total - noise;
            if signal <= 0.0 {
                f64::NEG_INFINITY
            } else {
                10.0 * (signal / noise).log10()
            }
        })
        .collect())
}

/// Half-open index range whose sample positions `pos(i)` fall inside `[lo, hi]`.
/// Never empty: falls back to the index nearest the interval's midpoint.
fn index_span(lo: f64, hi: f64, pos: impl Fn(usize) -> f64, len: usize) -> (usize, usize) {
    let mut first = None;
    let mut last = 0;
    for i in 0..len {
        let p = pos(i);
        if p >= lo && p <= hi {
            first.get_or_insert(i);
            last = i;
        }
    }
    match first {
        Some(f) => (f, last + 1),
        None => {
            let mid = 0.5 * (lo + hi);
            let best = (0..len)
                .min_by(|&a, &b| (pos(a) - mid).abs().total_cmp(&(pos(b) - mid).abs()))
                .unwrap_or(0);
            (best, best + 1)
        }
    }
}

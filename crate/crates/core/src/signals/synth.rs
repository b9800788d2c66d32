use std::f64::consts::PI;

use num_complex::{Complex32, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use super::{GroundTruth, Scenario, SignalKind, SignalSpec};
use crate::error::Result;
use crate::geometry::BoundingBox;

/// Depth, in dB below the peak, at which the noise-like taper is cut off.
const TAPER_DEPTH_DB: f64 = 40.0;

/// Renders a scenario to complex baseband samples plus one ground-truth box
/// per signal. Output is a pure function of the scenario, seed included.
pub fn synthesize(scenario: &Scenario) -> Result<(Vec<Complex32>, GroundTruth)> {
    scenario.validate()?;
    let n = scenario.sample_count();
    let fs = scenario.fs;
    let mut acc = vec![Complex64::new(0.0, 0.0); n];

    // Stream 0 is the background noise, stream i + 1 belongs to signal i.
    let mut noise_rng = rng_for(scenario.seed, 0);
    let sigma = (scenario.noise_power * fs / 2.0).sqrt();
    if sigma > 0.0 {
        for v in acc.iter_mut() {
            let re: f64 = noise_rng.sample(StandardNormal);
            let im: f64 = noise_rng.sample(StandardNormal);
            *v += Complex64::new(re * sigma, im * sigma);
        }
    }

    let mut planner = FftPlanner::<f64>::new();
    let mut gt = GroundTruth::default();
    for (i, spec) in scenario.signals.iter().enumerate() {
        let start = ((spec.t_start * fs).round() as usize).min(n);
        let len = ((spec.duration * fs).round() as usize).min(n - start);
        if len > 0 && spec.power > 0.0 {
            let mut rng = rng_for(scenario.seed, i as u64 + 1);
            let burst = match spec.kind {
                SignalKind::ToneBurst => tone(spec, fs, start, len, &mut rng),
                SignalKind::OfdmLike | SignalKind::NoiseLike => {
                    band_limited(spec, fs, len, &mut rng, &mut planner)
                }
            };
            for (dst, src) in acc[start..start + len].iter_mut().zip(&burst) {
                *dst += src;
            }
        }
        let (f0, f1) = spec.band();
        gt.push(
            BoundingBox::new(f0, f1, spec.t_start, spec.t_end()),
            spec.kind,
        );
    }

    let samples = acc
        .into_iter()
        .map(|c| Complex32::new(c.re as f32, c.im as f32))
        .collect();
    Ok((samples, gt))
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn tone(
    spec: &SignalSpec,
    fs: f64,
    start: usize,
    len: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Complex64> {
    let amp = spec.power.sqrt();
    let phase0 = rng.gen::<f64>() * 2.0 * PI;
    let w = 2.0 * PI * spec.center_freq / fs;
    (start..start + len)
        .map(|k| Complex64::from_polar(amp, w * k as f64 + phase0))
        .collect()
}

/// Frequency span a signal actually occupies: its nominal band, widened to the
/// taper cut-off for noise-like kinds.
pub(crate) fn occupied_band(kind: SignalKind, f0: f64, f1: f64) -> (f64, f64) {
    let reach = match kind {
        // 2^(-x^2) falls to the cut-off depth at this x.
        SignalKind::NoiseLike => (TAPER_DEPTH_DB / (10.0 * 2f64.log10())).sqrt(),
        SignalKind::OfdmLike | SignalKind::ToneBurst => 1.0,
    };
    let (center, half) = (0.5 * (f0 + f1), 0.5 * (f1 - f0));
    (center - reach * half, center + reach * half)
}

/// Power shaping for one DFT bin at frequency `f`.
fn spectral_shape(spec: &SignalSpec, f: f64) -> f64 {
    let x = 2.0 * (f - spec.center_freq).abs() / spec.bandwidth;
    match spec.kind {
        SignalKind::OfdmLike => {
            if x <= 1.0 {
                1.0
            } else {
                0.0
            }
        }
        SignalKind::NoiseLike => {
            // 2^(-x^2): exactly half power at the nominal edges (x = 1).
            let log2_gain = -x * x;
            if log2_gain * 10.0 * 2f64.log10() < -TAPER_DEPTH_DB {
                0.0
            } else {
                log2_gain.exp2()
            }
        }
        SignalKind::ToneBurst => unreachable!("tones are synthesized directly"),
    }
}

/// White Gaussian noise masked in the frequency domain, rescaled so the
/// nominal band carries the spec's mean power.
fn band_limited(
    spec: &SignalSpec,
    fs: f64,
    len: usize,
    rng: &mut ChaCha8Rng,
    planner: &mut FftPlanner<f64>,
) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    planner.plan_fft_forward(len).process(&mut buf);

    let bin_freq = |j: usize| {
        let signed = if 2 * j >= len {
            j as f64 - len as f64
        } else {
            j as f64
        };
        signed * fs / len as f64
    };
    let mut kept = 0usize;
    let (mut shaped, mut in_band) = (0.0, 0.0);
    for (j, v) in buf.iter_mut().enumerate() {
        let f = bin_freq(j);
        let p = spectral_shape(spec, f);
        if p > 0.0 {
            kept += 1;
        }
        shaped += p;
        if 2.0 * (f - spec.center_freq).abs() <= spec.bandwidth {
            in_band += p;
        }
        *v *= p.sqrt();
    }
    // Expected share of the burst's power inside the nominal band.
    let fraction = if in_band > 0.0 { in_band / shaped } else { 1.0 };
    if kept == 0 {
        // Narrower than one bin of this burst length: keep the nearest bin.
        let step = fs / len as f64;
        let k = (spec.center_freq / step).round() as i64;
        let j = k.rem_euclid(len as i64) as usize;
        let mut fresh = vec![Complex64::new(0.0, 0.0); len];
        fresh[j] = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        buf = fresh;
    }

    planner.plan_fft_inverse(len).process(&mut buf);
    let mean_power = buf.iter().map(|c| c.norm_sqr()).sum::<f64>() / len as f64;
    let scale = if mean_power > 0.0 {
        (spec.power / fraction / mean_power).sqrt()
    } else {
        0.0
    };
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

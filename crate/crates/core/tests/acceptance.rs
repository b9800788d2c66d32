//! Exit criteria for the whole engine. Each test prints one PASS/FAIL line.
//!
//! Run with `cargo test -p specsense-core --test acceptance -- --nocapture`.
//! Tests hold a shared lock so timing measurements do not compete for cores.

use std::collections::{HashMap, VecDeque};
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use num_complex::Complex32;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specsense::baseline::{baseline_detect, compare, BaselineConfig};
use specsense::detector::{
    consolidate, detect, label, morphology, otsu, BinaryMask, DetectorConfig, MorphOp,
    OpeningAxis, StructuringElement,
};
use specsense::frontend::{plots_from_samples, FrontendConfig, RowTransform, TfPlot};
use specsense::metrics::{IouMatrix, Tally};
use specsense::runtime::{partition, replay, ReplayConfig, RuntimeConfig};
use specsense::signals::suite::Preset;
use specsense::signals::synthesize;
use specsense::BoundingBox;

const N_FFT: usize = 1024;

fn exclusive() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n} ({name}): {tag}: {detail}");
}

type Case = (TfPlot, Vec<BoundingBox>);

/// The first plot of each seed's scenario with its ground truth.
fn cases(preset: Preset, rows: usize, seeds: &[u64], snr_db: Option<f64>) -> Vec<Case> {
    seeds
        .iter()
        .map(|&seed| {
            let sc = preset.scenario(N_FFT, rows, seed, snr_db);
            let fe = FrontendConfig::new(sc.fs, N_FFT, rows).unwrap();
            let (x, gt) = synthesize(&sc).unwrap();
            let plot = plots_from_samples(&x, fe).unwrap().remove(0);
            let truth = gt.clip_time(0.0, fe.plot_span()).boxes;
            (plot, truth)
        })
        .collect()
}

/// The five evaluation presets at full size, seeds 1 to 3.
fn suite() -> &'static [(Preset, Vec<Case>)] {
    static SUITE: OnceLock<Vec<(Preset, Vec<Case>)>> = OnceLock::new();
    SUITE.get_or_init(|| {
        Preset::EVALUATION
            .iter()
            .map(|&p| (p, cases(p, 2000, &[1, 2, 3], None)))
            .collect()
    })
}

fn tally(cases: &[Case], theta: f64, config: &DetectorConfig) -> Tally {
    let mut t = Tally::new(theta);
    for (plot, gt) in cases {
        t.add(&IouMatrix::new(gt, &detect(plot, config).unwrap()));
    }
    t
}

fn mean(x: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = x.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Least-squares line through `(x, y)`: `(slope, intercept, r_squared)`.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let (mx, my) = (mean(x.iter().copied()), mean(y.iter().copied()));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    (slope, intercept, 1.0 - ss_res / ss_tot)
}

#[test]
fn criterion_1_deadline() {
    let _g = exclusive();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let (rows, workers, form) = if cores >= 16 {
        (2000, 16, "full")
    } else {
        (500, 4, "scaled")
    };
    let plots: Vec<TfPlot> = cases(Preset::Default, rows, &[1, 2, 3, 4], None)
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    let runtime = RuntimeConfig {
        n_sensing_workers: workers,
        ..Default::default()
    };
    let schedule = ReplayConfig {
        n_plots: 1000,
        paced: true,
    };
    let report = replay(&plots, schedule, DetectorConfig::default(), runtime, |_| Ok(())).unwrap();
    let s = report.summary;
    let deadline = plots[0].config().plot_span();
    let pass = s.valid && s.count == 1000 && s.fraction_met >= 0.99;
    verdict(
        1,
        "deadline",
        pass,
        format!(
            "{form} form on {cores} cores, T={rows}, {workers} workers: {:.2}% of {} plots within {:.2} ms (p99 {:.3} ms, need >= 99%)",
            100.0 * s.fraction_met,
            s.count,
            deadline * 1e3,
            s.p99 * 1e3
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_2_detection_quality() {
    let _g = exclusive();
    let config = DetectorConfig::default();
    let mut ious = Vec::new();
    let mut gains = Vec::new();
    for (preset, cases) in suite() {
        let at_04 = tally(cases, 0.4, &config).result();
        let at_05 = tally(cases, 0.5, &config).result();
        println!(
            "  {:<17} mean IoU {:.4}  p_d(0.4) {:.4}  p_d(0.5) {:.4}",
            preset.name(),
            at_05.mean_iou,
            at_04.p_d,
            at_05.p_d
        );
        ious.push(at_05.mean_iou);
        gains.push(at_04.p_d - at_05.p_d);
    }
    let (iou, gain) = (mean(ious), mean(gains));
    let pass = iou >= 0.55 && gain >= 0.05;
    verdict(
        2,
        "detection quality",
        pass,
        format!("mean IoU {iou:.4} (need >= 0.55), p_d(0.4) - p_d(0.5) = {gain:.4} (need >= 0.05)"),
    );
    assert!(pass);
}

#[test]
fn criterion_3_snr_monotonicity() {
    let _g = exclusive();
    let config = DetectorConfig::default();
    let snrs = [0.0, 5.0, 10.0, 15.0, 20.0];
    let p_d: Vec<f64> = snrs
        .iter()
        .map(|&snr| {
            mean(Preset::EVALUATION.iter().map(|&p| {
                tally(&cases(p, 2000, &[1, 2], Some(snr)), 0.5, &config)
                    .result()
                    .p_d
            }))
        })
        .collect();
    let monotone = p_d.windows(2).all(|w| w[1] >= w[0] - 0.05);
    let rise = p_d[4] - p_d[0];
    let pass = monotone && rise >= 0.3;
    let curve: Vec<String> = snrs
        .iter()
        .zip(&p_d)
        .map(|(s, p)| format!("{s:.0} dB: {p:.3}"))
        .collect();
    verdict(
        3,
        "SNR monotonicity",
        pass,
        format!(
            "p_d at 0.5 [{}], non-decreasing within 0.05: {monotone}, rise {rise:.3} (need >= 0.3)",
            curve.join(", ")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_baseline_ordering() {
    let _g = exclusive();
    let (detector, baseline) = (DetectorConfig::default(), BaselineConfig::default());
    let (mut det_time, mut base_time) = (0.0, 0.0);
    let (mut det_iou, mut base_iou) = (Vec::new(), Vec::new());
    for (preset, cases) in suite() {
        let c = compare(cases, &detector, &baseline, 0.5).unwrap();
        let (d, b) = (&c.rows[0], &c.rows[1]);
        println!(
            "  {:<17} detector {:.2} ms IoU {:.4} | baseline {:.1} ms IoU {:.4}",
            preset.name(),
            d.mean_latency * 1e3,
            d.mean_iou,
            b.mean_latency * 1e3,
            b.mean_iou
        );
        det_time += d.mean_latency * d.plots as f64;
        base_time += b.mean_latency * b.plots as f64;
        det_iou.push(d.mean_iou);
        base_iou.push(b.mean_iou);
    }
    let speedup = base_time / det_time;
    let (d, b) = (mean(det_iou), mean(base_iou));
    let pass = speedup >= 5.0 && d > b;
    verdict(
        4,
        "baseline ordering",
        pass,
        format!("detector {speedup:.1}x faster (need >= 5x), mean IoU {d:.4} vs baseline {b:.4}"),
    );
    assert!(pass);
}

/// Otsu on the same 256-bin histogram by trying every edge.
fn exhaustive_otsu(values: &[f32]) -> Option<usize> {
    let min = values.iter().copied().fold(f32::INFINITY, f32::min);
    let max = values.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    if max <= min {
        return None;
    }
    let scale = 256.0f32 / (max - min);
    let bins: Vec<f64> = values
        .iter()
        .map(|&v| (((v - min) * scale) as usize).min(255) as f64)
        .collect();
    let n = bins.len() as f64;
    let sigma: Vec<f64> = (1..256)
        .map(|edge| {
            let e = edge as f64;
            let lo: Vec<f64> = bins.iter().copied().filter(|&b| b < e).collect();
            let hi: Vec<f64> = bins.iter().copied().filter(|&b| b >= e).collect();
            if lo.is_empty() || hi.is_empty() {
                return 0.0;
            }
            let (w0, w1) = (lo.len() as f64 / n, hi.len() as f64 / n);
            let d = mean(lo) - mean(hi);
            w0 * w1 * d * d
        })
        .collect();
    let best = sigma.iter().copied().fold(0.0, f64::max);
    if best == 0.0 {
        return None;
    }
    sigma
        .iter()
        .position(|&s| s >= best * (1.0 - 1e-12))
        .map(|i| i + 1)
}

/// 4-connected flood fill; labels from 1 in row-major order of first pixel.
fn flood_fill(m: &BinaryMask) -> Vec<u32> {
    let (h, w) = (m.height(), m.width());
    let mut lab = vec![0u32; h * w];
    let mut next = 0;
    for t in 0..h {
        for k in 0..w {
            if !m.get(t, k) || lab[t * w + k] != 0 {
                continue;
            }
            next += 1;
            lab[t * w + k] = next;
            let mut q = VecDeque::from([(t, k)]);
            while let Some((a, b)) = q.pop_front() {
                let mut visit = |x: usize, y: usize| {
                    if m.get(x, y) && lab[x * w + y] == 0 {
                        lab[x * w + y] = next;
                        q.push_back((x, y));
                    }
                };
                if a > 0 {
                    visit(a - 1, b);
                }
                if a + 1 < h {
                    visit(a + 1, b);
                }
                if b > 0 {
                    visit(a, b - 1);
                }
                if b + 1 < w {
                    visit(a, b + 1);
                }
            }
        }
    }
    lab
}

/// Same partition of pixels, whatever the label values.
fn same_partition(a: &[u32], b: &[u32]) -> bool {
    let (mut ab, mut ba) = (HashMap::new(), HashMap::new());
    a.iter().zip(b).all(|(&x, &y)| {
        (x == 0) == (y == 0) && *ab.entry(x).or_insert(y) == y && *ba.entry(y).or_insert(x) == x
    })
}

fn random_mask(rng: &mut ChaCha8Rng, max_h: usize, max_w: usize) -> BinaryMask {
    let (h, w) = (rng.gen_range(1..=max_h), rng.gen_range(1..=max_w));
    let density = rng.gen_range(0.05..0.7);
    let bits: Vec<bool> = (0..h * w).map(|_| rng.gen_bool(density)).collect();
    BinaryMask::from_fn(h, w, |t, k| bits[t * w + k])
}

/// Consolidates each slab's extended columns and pastes the cores back together.
fn consolidate_by_slabs(m: &BinaryMask, n_slabs: usize, axis: OpeningAxis) -> BinaryMask {
    let mut out = BinaryMask::new(m.height(), m.width());
    for s in partition(m.width(), n_slabs, 6).unwrap() {
        let local = consolidate(&m.columns(s.extended.clone()), axis);
        out.paste_columns(&local.columns(s.core_in_extended()), s.core.start);
    }
    out
}

#[test]
fn criterion_5_oracle_equivalences() {
    let _g = exclusive();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();

    // (a) Otsu against the exhaustive scan.
    let mut otsu_bad = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..2000);
        let split = rng.gen_range(0.0..1.0);
        let level: f32 = rng.gen_range(0.5..20.0);
        let col: Vec<f32> = (0..n)
            .map(|_| {
                let x: f32 = rng.gen_range(0.0..1.0);
                if rng.gen_bool(split) {
                    x + level
                } else {
                    x
                }
            })
            .collect();
        if otsu(&col).map(|t| t.level()) != exhaustive_otsu(&col) {
            otsu_bad += 1;
        }
    }
    if otsu_bad > 0 {
        failures.push(format!("otsu {otsu_bad}/1000"));
    }

    // (b) Labeling against flood fill.
    let ccl_bad = (0..500)
        .filter(|_| {
            let m = random_mask(&mut rng, 40, 300);
            !same_partition(&label(&m, 1).labels, &flood_fill(&m))
        })
        .count();
    if ccl_bad > 0 {
        failures.push(format!("labeling {ccl_bad}/500"));
    }

    // (c) Duality away from the border, and idempotence of open and close.
    let mut morph_bad = 0;
    for _ in 0..500 {
        let m = random_mask(&mut rng, 30, 200);
        let se = StructuringElement::new(2 * rng.gen_range(0..3) + 1, 2 * rng.gen_range(0..3) + 1)
            .unwrap();
        let dil = morphology(&m, MorphOp::Dilate, se);
        let dual = morphology(&m.complement(), MorphOp::Erode, se).complement();
        let (rh, rw) = (se.height() / 2, se.width() / 2);
        let dual_ok = (rh..m.height().saturating_sub(rh))
            .all(|t| (rw..m.width().saturating_sub(rw)).all(|k| dil.get(t, k) == dual.get(t, k)));
        let idem_ok = [MorphOp::Open, MorphOp::Close].iter().all(|&op| {
            let once = morphology(&m, op, se);
            morphology(&once, op, se) == once
        });
        if !(dual_ok && idem_ok) {
            morph_bad += 1;
        }
    }
    if morph_bad > 0 {
        failures.push(format!("morphology {morph_bad}/500"));
    }

    // (d) Slab-stitched consolidation against the whole mask.
    let mut slab_bad = 0;
    for n_slabs in [2, 4, 8] {
        for i in 0..100 {
            let m = random_mask(&mut rng, 60, 1024);
            if m.width() < n_slabs {
                continue;
            }
            let axis = if i % 2 == 0 {
                OpeningAxis::Frequency
            } else {
                OpeningAxis::Time
            };
            if consolidate_by_slabs(&m, n_slabs, axis) != consolidate(&m, axis) {
                slab_bad += 1;
            }
        }
    }
    if slab_bad > 0 {
        failures.push(format!("slab stitching {slab_bad}/300"));
    }

    // (e) Boxes across sensing-worker counts.
    let plots: Vec<TfPlot> = [Preset::Default, Preset::DenseMixed]
        .iter()
        .flat_map(|&p| cases(p, 200, &[1, 2], None))
        .map(|(p, _)| p)
        .collect();
    let expected: Vec<Vec<BoundingBox>> = plots
        .iter()
        .map(|p| detect(p, &DetectorConfig::default()).unwrap())
        .collect();
    for workers in [1, 2, 4, 8, 16] {
        let mut got = Vec::new();
        let runtime = RuntimeConfig {
            n_sensing_workers: workers,
            ..Default::default()
        };
        let schedule = ReplayConfig {
            n_plots: plots.len(),
            paced: false,
        };
        replay(&plots, schedule, DetectorConfig::default(), runtime, |d| {
            got.push(d.boxes);
            Ok(())
        })
        .unwrap();
        if got != expected {
            failures.push(format!("boxes differ with {workers} workers"));
        }
    }

    // (f) Parseval per FFT row.
    let mut fft = RowTransform::new(N_FFT);
    let mut row = vec![0.0f32; N_FFT];
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let amp: f32 = rng.gen_range(1e-3..1e3);
        let x: Vec<Complex32> = (0..N_FFT)
            .map(|_| Complex32::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp)))
            .collect();
        fft.magnitudes_into(&x, &mut row).unwrap();
        let time: f64 = x.iter().map(|c| c.norm_sqr() as f64).sum();
        let freq: f64 = row.iter().map(|&m| m as f64 * m as f64).sum();
        worst = worst.max((freq - N_FFT as f64 * time).abs() / (N_FFT as f64 * time));
    }
    if worst >= 1e-6 {
        failures.push(format!("parseval relative error {worst:.2e}"));
    }

    let pass = failures.is_empty();
    verdict(
        5,
        "oracle equivalences",
        pass,
        if pass {
            format!("otsu 1000, labeling 500, morphology 500, slabs 300, workers 1-16, parseval max error {worst:.2e}")
        } else {
            failures.join("; ")
        },
    );
    assert!(pass);
}

#[test]
fn criterion_6_scaling() {
    let _g = exclusive();
    let heights = [250usize, 500, 1000, 2000];
    let plots: Vec<TfPlot> = heights
        .iter()
        .map(|&t| cases(Preset::Default, t, &[1], None).remove(0).0)
        .collect();
    let config = DetectorConfig::default();
    let baseline = BaselineConfig::default();
    // Round-robin over sizes so a slow spell on the host hits every size alike.
    let timed = |reps: usize, run: &dyn Fn(&TfPlot)| -> Vec<f64> {
        let mut samples = vec![Vec::with_capacity(reps); plots.len()];
        for _ in 0..reps {
            for (p, s) in plots.iter().zip(&mut samples) {
                let t = Instant::now();
                run(p);
                s.push(t.elapsed().as_secs_f64());
            }
        }
        samples.into_iter().map(median).collect()
    };
    let det = timed(31, &|p| {
        std::hint::black_box(detect(p, &config).unwrap());
    });
    let base = timed(3, &|p| {
        std::hint::black_box(baseline_detect(p, &baseline).unwrap());
    });
    let t: Vec<f64> = heights.iter().map(|&h| h as f64).collect();
    let (_, _, r2) = fit_line(&t, &det);
    let log_area: Vec<f64> = heights.iter().map(|&h| ((h * N_FFT) as f64).ln()).collect();
    let log_base: Vec<f64> = base.iter().map(|x| x.ln()).collect();
    let (exponent, _, _) = fit_line(&log_area, &log_base);
    let pass = r2 > 0.98 && exponent > 1.0;
    let ms = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{:.2}", x * 1e3))
            .collect::<Vec<_>>()
            .join("/")
    };
    verdict(
        6,
        "scaling",
        pass,
        format!(
            "detector ms at T=250/500/1000/2000: {} linear R^2 {r2:.4} (need > 0.98); baseline ms {} exponent {exponent:.3} (need > 1)",
            ms(&det),
            ms(&base)
        ),
    );
    assert!(pass);
}

use std::ops::Range;

use super::savgol::savgol_smooth;
use super::DetectorConfig;
use crate::error::Result;
use crate::frontend::TfPlot;

/// Floor applied before converting power to dB, so empty columns stay finite.
pub const POWER_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq)]
pub struct PsdProfile {
    /// Time-mean power per column, linear.
    pub raw: Vec<f64>,
    /// Savitzky–Golay smoothed `raw`, in dB.
    pub smoothed_db: Vec<f64>,
    /// Lowest local minimum of the smoothed profile, linear power.
    pub noise_floor: f64,
    /// Column threshold, linear power. Always `>= noise_floor`.
    pub theta_psd: f64,
}

/// Time-mean of squared magnitudes for every column.
pub fn estimate_psd(plot: &TfPlot) -> Vec<f64> {
    estimate_psd_columns(plot, 0..plot.width())
}

/// [`estimate_psd`] restricted to `cols`; the result is indexed from `cols.start`.
pub fn estimate_psd_columns(plot: &TfPlot, cols: Range<usize>) -> Vec<f64> {
    let mut acc = vec![0.0f64; cols.len()];
    for t in 0..plot.height() {
        let row = &plot.row(t)[cols.clone()];
        for (a, &v) in acc.iter_mut().zip(row) {
            let v = v as f64;
            *a += v * v;
        }
    }
    let n = plot.height() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

pub fn power_to_db(p: f64) -> f64 {
    10.0 * p.max(POWER_FLOOR).log10()
}

pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Smooths the raw profile in dB, takes the lowest local minimum as the noise
/// floor and places the column threshold `psd_margin_db` above it.
pub fn smooth_and_floor(raw: Vec<f64>, config: &DetectorConfig) -> Result<PsdProfile> {
    config.validate()?;
    let db: Vec<f64> = raw.iter().map(|&p| power_to_db(p)).collect();
    let smoothed_db = savgol_smooth(&db, config.savgol_window, config.savgol_order)?;
    let floor_db = lowest_local_minimum(&smoothed_db)
        .unwrap_or_else(|| smoothed_db.iter().copied().fold(f64::INFINITY, f64::min));
    let noise_floor = db_to_power(floor_db);
    let theta_psd = noise_floor * db_to_power(config.psd_margin_db);
    Ok(PsdProfile {
        raw,
        smoothed_db,
        noise_floor,
        theta_psd,
    })
}

/// Smallest value among interior local minima. A run of equal values counts as one
/// minimum when both outside neighbors are strictly larger; endpoints never count.
pub fn lowest_local_minimum(x: &[f64]) -> Option<f64> {
    local_minima(x)
        .into_iter()
        .map(|i| x[i])
        .min_by(|a, b| a.total_cmp(b))
}

/// First index of every interior local minimum (plateaus included).
pub fn local_minima(x: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < x.len() {
        let mut j = i;
        while j + 1 < x.len() && x[j + 1] == x[i] {
            j += 1;
        }
        if i > 0 && j + 1 < x.len() && x[i - 1] > x[i] && x[j + 1] > x[j] {
            out.push(i);
        }
        i = j + 1;
    }
    out
}

/// `true` for every column whose raw power reaches the threshold.
pub fn prune_columns(profile: &PsdProfile) -> Vec<bool> {
    profile
        .raw
        .iter()
        .map(|&p| p >= profile.theta_psd)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::FrontendConfig;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plot(t: usize, f: usize, data: Vec<f32>) -> TfPlot {
        TfPlot::from_data(FrontendConfig::new(f as f64, f, t).unwrap(), 0, data).unwrap()
    }

    #[test]
    fn zero_plot_has_zero_power() {
        assert!(estimate_psd(&plot(3, 8, vec![0.0; 24]))
            .iter()
            .all(|&p| p == 0.0));
    }

    #[test]
    fn constant_column_gives_its_square() {
        let mut d = vec![0.0; 40];
        for t in 0..5 {
            d[t * 8 + 3] = 1.5;
        }
        let raw = estimate_psd(&plot(5, 8, d));
        for (k, p) in raw.iter().enumerate() {
            assert_eq!(*p, if k == 3 { 2.25 } else { 0.0 });
        }
    }

    #[test]
    fn matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (t, f) = (37, 64);
        let d: Vec<f32> = (0..t * f).map(|_| rng.gen_range(0.0..5.0)).collect();
        let raw = estimate_psd(&plot(t, f, d.clone()));
        for k in 0..f {
            let mut s = 0.0f64;
            for r in 0..t {
                let v = d[r * f + k] as f64;
                s += v * v;
            }
            assert_eq!(raw[k], s / t as f64);
        }
    }

    #[test]
    fn slab_sums_match_full_profile() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d: Vec<f32> = (0..20 * 32).map(|_| rng.gen_range(0.0..2.0)).collect();
        let p = plot(20, 32, d);
        let full = estimate_psd(&p);
        let mut parts = estimate_psd_columns(&p, 0..10);
        parts.extend(estimate_psd_columns(&p, 10..32));
        assert_eq!(full, parts);
    }

    #[test]
    fn constant_profile_falls_back_to_global_minimum() {
        let cfg = DetectorConfig {
            savgol_window: 5,
            savgol_order: 2,
            ..DetectorConfig::default()
        };
        let p = smooth_and_floor(vec![4.0; 16], &cfg).unwrap();
        assert!((p.noise_floor - 4.0).abs() < 1e-9);
        assert!((p.theta_psd / p.noise_floor - db_to_power(3.0)).abs() < 1e-12);
    }

    #[test]
    fn v_shape_floor_sits_at_the_vertex() {
        let cfg = DetectorConfig {
            savgol_window: 5,
            savgol_order: 2,
            ..DetectorConfig::default()
        };
        let raw: Vec<f64> = (0..41)
            .map(|i| db_to_power((i as f64 - 20.0).abs()))
            .collect();
        let p = smooth_and_floor(raw, &cfg).unwrap();
        let idx = local_minima(&p.smoothed_db);
        assert_eq!(idx, vec![20]);
        assert!(power_to_db(p.noise_floor).abs() < 1.0);
    }

    #[test]
    fn plateau_minimum_counts_once_and_edges_do_not() {
        assert_eq!(local_minima(&[5.0, 2.0, 2.0, 2.0, 3.0, 1.0, 0.0]), vec![1]);
        assert_eq!(local_minima(&[1.0, 2.0, 3.0]), Vec::<usize>::new());
        assert_eq!(lowest_local_minimum(&[4.0, 1.0, 3.0, 0.5, 2.0]), Some(0.5));
    }

    #[test]
    fn window_longer_than_profile_is_rejected() {
        assert!(smooth_and_floor(vec![1.0; 10], &DetectorConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn raising_margin_never_adds_columns(
            raw in proptest::collection::vec(0.0f64..100.0, 40..80),
            m1 in 0.0f64..10.0,
            dm in 0.0f64..10.0,
        ) {
            let base = DetectorConfig { savgol_window: 7, savgol_order: 2, ..DetectorConfig::default() };
            let lo = smooth_and_floor(raw.clone(), &DetectorConfig { psd_margin_db: m1, ..base }).unwrap();
            let hi = smooth_and_floor(raw, &DetectorConfig { psd_margin_db: m1 + dm, ..base }).unwrap();
            prop_assert!(lo.theta_psd >= lo.noise_floor);
            let a = prune_columns(&lo).iter().filter(|&&b| b).count();
            let b = prune_columns(&hi).iter().filter(|&&b| b).count();
            prop_assert!(b <= a);
        }
    }
}

//! IoU-based scoring of detected boxes against ground truth.

use serde::Serialize;

use crate::geometry::BoundingBox;

/// Intersection over union of two rectangles in (seconds x Hz).
/// A box with zero area scores 0 against everything, itself included.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    if !(a.area() > 0.0 && b.area() > 0.0) {
        return 0.0;
    }
    let inter = a.intersection(b).map_or(0.0, |i| i.area());
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Rows are ground-truth boxes, columns are detections.
#[derive(Debug, Clone, PartialEq)]
pub struct IouMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl IouMatrix {
    pub fn new(gt: &[BoundingBox], det: &[BoundingBox]) -> Self {
        let entries = gt
            .iter()
            .flat_map(|g| det.iter().map(move |d| iou(g, d)))
            .collect();
        IouMatrix {
            rows: gt.len(),
            cols: det.len(),
            entries,
        }
    }

    /// Builds a matrix from row-major entries, clamped to `[0, 1]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged IoU matrix");
        IouMatrix {
            rows: rows.len(),
            cols,
            entries: rows.iter().flatten().map(|v| v.clamp(0.0, 1.0)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    /// Best IoU per ground-truth box; 0 when there are no detections.
    pub fn row_max(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).fold(0.0, f64::max))
            .collect()
    }

    /// Best IoU per detection; 0 when there is no ground truth.
    pub fn col_max(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).fold(0.0, f64::max))
            .collect()
    }
}

/// True detections (ground-truth rows whose best IoU exceeds `theta`) and false
/// detections (columns whose best IoU falls below it). A best IoU equal to `theta`
/// counts as neither.
pub fn count(m: &IouMatrix, theta: f64) -> (usize, usize) {
    let n_t = m.row_max().iter().filter(|&&v| v > theta).count();
    let n_f = m.col_max().iter().filter(|&&v| v < theta).count();
    (n_t, n_f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalResult {
    pub theta_iou: f64,
    pub n_gt: usize,
    pub n_d: usize,
    pub n_t: usize,
    pub n_f: usize,
    pub p_d: f64,
    pub p_fa: f64,
    pub mean_iou: f64,
}

impl EvalResult {
    pub const CSV_HEADER: &'static str = "theta_iou,n_gt,n_d,n_t,n_f,p_d,p_fa,mean_iou";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6},{:.6},{:.6}",
            self.theta_iou,
            self.n_gt,
            self.n_d,
            self.n_t,
            self.n_f,
            self.p_d,
            self.p_fa,
            self.mean_iou
        )
    }
}

pub fn evaluate(gt: &[BoundingBox], det: &[BoundingBox], theta: f64) -> EvalResult {
    evaluate_matrix(&IouMatrix::new(gt, det), theta)
}

pub fn evaluate_matrix(m: &IouMatrix, theta: f64) -> EvalResult {
    let mut acc = Tally::new(theta);
    acc.add(m);
    acc.result()
}

/// One result per threshold, sharing a single IoU matrix.
pub fn sweep(gt: &[BoundingBox], det: &[BoundingBox], thetas: &[f64]) -> Vec<EvalResult> {
    let m = IouMatrix::new(gt, det);
    thetas.iter().map(|&t| evaluate_matrix(&m, t)).collect()
}

/// Pools counts over several plots (or scenarios) before forming ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tally {
    pub theta_iou: f64,
    pub n_gt: usize,
    pub n_d: usize,
    pub n_t: usize,
    pub n_f: usize,
    pub iou_sum: f64,
}

impl Tally {
    pub fn new(theta_iou: f64) -> Self {
        Tally {
            theta_iou,
            n_gt: 0,
            n_d: 0,
            n_t: 0,
            n_f: 0,
            iou_sum: 0.0,
        }
    }

    pub fn add(&mut self, m: &IouMatrix) {
        let (n_t, n_f) = count(m, self.theta_iou);
        self.n_gt += m.rows();
        self.n_d += m.cols();
        self.n_t += n_t;
        self.n_f += n_f;
        self.iou_sum += m.row_max().iter().sum::<f64>();
    }

    pub fn result(&self) -> EvalResult {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        EvalResult {
            theta_iou: self.theta_iou,
            n_gt: self.n_gt,
            n_d: self.n_d,
            n_t: self.n_t,
            n_f: self.n_f,
            p_d: ratio(self.n_t, self.n_gt),
            p_fa: ratio(self.n_f, self.n_d),
            mean_iou: if self.n_gt == 0 {
                0.0
            } else {
                self.iou_sum / self.n_gt as f64
            },
        }
    }
}

/// Scores detections from consecutive plots, each against the ground truth
/// clipped to that plot's time window.
pub fn evaluate_plots<'a>(
    gt: &[BoundingBox],
    plots: impl IntoIterator<Item = (f64, f64, &'a [BoundingBox])>,
    thetas: &[f64],
) -> Vec<EvalResult> {
    let mut tallies: Vec<Tally> = thetas.iter().map(|&t| Tally::new(t)).collect();
    for (t0, t1, det) in plots {
        let clipped: Vec<BoundingBox> = gt.iter().filter_map(|b| b.clip_time(t0, t1)).collect();
        let m = IouMatrix::new(&clipped, det);
        tallies.iter_mut().for_each(|t| t.add(&m));
    }
    tallies.iter().map(Tally::result).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(f0: f64, f1: f64, t0: f64, t1: f64) -> BoundingBox {
        BoundingBox::new(f0, f1, t0, t1)
    }

    #[test]
    fn identical_and_disjoint() {
        let a = b(0.0, 2.0, 0.0, 1.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &b(5.0, 6.0, 0.0, 1.0)), 0.0);
    }

    #[test]
    fn shifted_squares_score_one_seventh() {
        let v = iou(&b(0.0, 2.0, 0.0, 2.0), &b(1.0, 3.0, 1.0, 3.0));
        assert!((v - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn zero_area_scores_zero_even_against_itself() {
        let z = b(1.0, 1.0, 0.0, 5.0);
        assert_eq!(iou(&z, &z), 0.0);
    }

    #[test]
    fn worked_matrix() {
        let m = IouMatrix::from_rows(&[vec![0.6, 0.1], vec![0.2, 0.45]]);
        assert_eq!(count(&m, 0.5), (1, 1));
        let r = evaluate_matrix(&m, 0.5);
        assert_eq!((r.p_d, r.p_fa), (0.5, 0.5));
        assert!((r.mean_iou - 0.525).abs() < 1e-15);
    }

    #[test]
    fn boundary_counts_as_neither() {
        let m = IouMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert_eq!(count(&m, 0.5), (0, 0));
    }

    #[test]
    fn empty_inputs() {
        let g = [b(0.0, 1.0, 0.0, 1.0)];
        let r = evaluate(&g, &[], 0.5);
        assert_eq!(
            (r.n_t, r.n_f, r.p_d, r.p_fa, r.mean_iou),
            (0, 0, 0.0, 0.0, 0.0)
        );
        let r = evaluate(&[], &g, 0.5);
        assert_eq!((r.p_d, r.p_fa), (0.0, 1.0));
        let r = evaluate(&[], &[], 0.5);
        assert_eq!((r.p_d, r.p_fa), (0.0, 0.0));
    }

    #[test]
    fn plot_windows_clip_ground_truth() {
        let gt = [b(0.0, 1.0, 0.5, 1.5)];
        let first = [b(0.0, 1.0, 0.5, 1.0)];
        let second = [b(0.0, 1.0, 1.0, 1.5)];
        let r = evaluate_plots(
            &gt,
            [(0.0, 1.0, &first[..]), (1.0, 2.0, &second[..])],
            &[0.5],
        );
        assert_eq!((r[0].n_gt, r[0].n_t, r[0].mean_iou), (2, 2, 1.0));
    }

    fn arb_box() -> impl Strategy<Value = BoundingBox> {
        (0.0f64..10.0, 0.0f64..5.0, 0.0f64..10.0, 0.0f64..5.0)
            .prop_map(|(f, bw, t, d)| b(f, f + bw, t, t + d))
    }

    proptest! {
        #[test]
        fn iou_is_symmetric_and_bounded(a in arb_box(), c in arb_box()) {
            let x = iou(&a, &c);
            prop_assert!((0.0..=1.0).contains(&x));
            prop_assert_eq!(x, iou(&c, &a));
            if a.area() > 0.0 {
                prop_assert_eq!(iou(&a, &a), 1.0);
            }
        }

        #[test]
        fn sweep_is_monotone(
            gt in proptest::collection::vec(arb_box(), 0..8),
            det in proptest::collection::vec(arb_box(), 0..8),
        ) {
            let thetas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
            let rs = sweep(&gt, &det, &thetas);
            for w in rs.windows(2) {
                prop_assert!(w[1].p_d <= w[0].p_d);
                prop_assert!(w[1].p_fa >= w[0].p_fa);
                prop_assert_eq!(w[1].mean_iou, w[0].mean_iou);
            }
            // Unmatched ground truth contributes nothing to the mean.
            let m = IouMatrix::new(&gt, &det);
            let touched = m.row_max().iter().filter(|&&v| v > 0.0).count();
            let frac = if gt.is_empty() { 0.0 } else { touched as f64 / gt.len() as f64 };
            prop_assert!(rs[0].mean_iou <= frac + 1e-12);
        }

        #[test]
        fn perfect_detection(gt in proptest::collection::vec(arb_box(), 1..8), theta in 0.0f64..0.999) {
            prop_assume!(gt.iter().all(|g| g.area() > 0.0));
            let r = evaluate(&gt, &gt, theta);
            prop_assert_eq!(r.p_fa, 0.0);
            prop_assert_eq!(r.mean_iou, 1.0);
            prop_assert_eq!(r.p_d, 1.0);
        }
    }
}

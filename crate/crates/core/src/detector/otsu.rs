use std::ops::Range;

use super::BinaryMask;
use crate::frontend::TfPlot;

/// Histogram resolution over a column's `[min, max]`.
pub const OTSU_BINS: usize = 256;

/// A column threshold at a histogram bin edge. Values whose bin is at or above
/// `level` are foreground, which for any value off the edge itself is `v > edge()`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtsuThreshold {
    min: f32,
    scale: f32,
    level: usize,
}

impl OtsuThreshold {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn edge(&self) -> f64 {
        self.min as f64 + self.level as f64 / self.scale as f64
    }

    pub fn is_foreground(&self, v: f32) -> bool {
        bin_index(v, self.min, self.scale) >= self.level
    }
}

#[inline]
fn bin_position(v: f32, min: f32, scale: f32) -> f32 {
    (v - min) * scale
}

#[inline]
fn bin_index(v: f32, min: f32, scale: f32) -> usize {
    bin_u8(v, min, scale) as usize
}

/// `min(floor(position), 255)` for a non-negative position, with anything below
/// the column minimum (or NaN) in bin 0.
#[inline]
fn bin_u8(v: f32, min: f32, scale: f32) -> u8 {
    let x = bin_position(v, min, scale)
        .max(0.0)
        .min((OTSU_BINS - 1) as f32);
    // SAFETY: `f32::max` discards NaN, so `x` is finite and within 0..=255.
    unsafe { x.to_int_unchecked::<u8>() }
}

/// Bins per unit value; `None` for a constant (or numerically constant) column.
fn range_scale(min: f32, max: f32) -> Option<f32> {
    let s = OTSU_BINS as f32 / (max - min);
    (max > min && s.is_finite()).then_some(s)
}

/// Otsu's threshold for one column; `None` when the column is constant or empty.
pub fn otsu(values: &[f32]) -> Option<OtsuThreshold> {
    let (min, max) = values
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let scale = range_scale(min, max)?;
    let mut hist = [0u32; OTSU_BINS];
    for &v in values {
        hist[bin_index(v, min, scale)] += 1;
    }
    Some(OtsuThreshold {
        min,
        scale,
        level: best_level(&hist)?,
    })
}

/// Edge index `i` in `1..256` maximizing the between-class variance of the split
/// `bins < i` / `bins >= i`, using bin indices as intensities. Ties go to the lower edge.
pub fn best_level(hist: &[u32; OTSU_BINS]) -> Option<usize> {
    // Only occupied bins give distinct splits; an empty bin below an edge
    // repeats the split of the edge before it, which wins the tie.
    let mut occupied = [0u8; OTSU_BINS];
    let mut m = 0;
    for (bin, &c) in hist.iter().enumerate() {
        // Branch-free: occupancy is close to a coin flip on noisy columns.
        occupied[m] = bin as u8;
        m += (c > 0) as usize;
    }
    if m < 2 {
        return None;
    }
    // Class-0 count and intensity sum for split j (occupied bins 0..=j in
    // class 0). Integer-valued and exact in f64 for any realistic column.
    let splits = m - 1;
    let mut n0 = [0.0f64; OTSU_BINS];
    let mut s0 = [0.0f64; OTSU_BINS];
    let (mut n, mut s) = (0.0, 0.0);
    for j in 0..m {
        let b = occupied[j] as usize;
        let c = hist[b] as f64;
        n += c;
        s += b as f64 * c;
        n0[j] = n;
        s0[j] = s;
    }
    let (nf, sf) = (n, s);
    // Score d^2 / (n0 * n1) with d = s1*n0 - s0*n1 = s*n0 - s0*n is proportional
    // to the between-class variance.
    let mut score = [0.0f64; OTSU_BINS];
    for ((sc, &a), &b) in score[..splits]
        .iter_mut()
        .zip(&n0[..splits])
        .zip(&s0[..splits])
    {
        let d = sf * a - b * nf;
        *sc = d * d / (a * (nf - a));
    }
    let top = score[..splits]
        .iter()
        .fold(0.0f64, |t, &x| if x > t { x } else { t });
    // Settle everything within rounding of the top exactly, lowest edge first.
    let floor = top - 1e-9 * top;
    let edge = |j: usize| occupied[j] as usize + 1;
    let mut best: Option<usize> = None;
    for j in 0..splits {
        if score[j] < floor {
            continue;
        }
        best = match best {
            None => Some(j),
            Some(b) => {
                let wins = exact_greater(hist, edge(j), edge(b)).unwrap_or(score[j] > score[b]);
                Some(if wins { j } else { b })
            }
        };
    }
    best.map(edge)
}

/// Whether edge `a` scores strictly higher than edge `b`, in integers;
/// `None` if the products overflow.
fn exact_greater(hist: &[u32; OTSU_BINS], a: usize, b: usize) -> Option<bool> {
    let sums = |end: usize| {
        hist[..end]
            .iter()
            .enumerate()
            .fold((0u128, 0u128), |(n, s), (i, &h)| {
                (n + h as u128, s + i as u128 * h as u128)
            })
    };
    let (n, s) = sums(OTSU_BINS);
    let parts = |edge: usize| {
        let (n0, s0) = sums(edge);
        ((s * n0).abs_diff(s0 * n), n0 * (n - n0))
    };
    let ((da, ka), (db, kb)) = (parts(a), parts(b));
    let lhs = da.checked_mul(da)?.checked_mul(kb)?;
    let rhs = db.checked_mul(db)?.checked_mul(ka)?;
    Some(lhs > rhs)
}

/// Columns histogrammed together, so their counts stay in L1.
const LANES: usize = 16;

/// Every pixel of a column range reduced to its histogram bin.
struct BinPlane {
    height: usize,
    width: usize,
    min: Vec<f32>,
    /// Zero for columns without a threshold, which puts all their pixels in bin 0.
    scale: Vec<f32>,
    bins: Vec<u8>,
}

impl BinPlane {
    fn new(plot: &TfPlot, active: &[bool], cols: Range<usize>) -> Self {
        let (height, width) = (plot.height(), cols.len());
        let mut min = vec![f32::INFINITY; width];
        let mut max = vec![f32::NEG_INFINITY; width];
        for t in 0..height {
            let row = &plot.row(t)[cols.clone()];
            // Compare-select rather than f32::min/max, which vectorize poorly;
            // plot values are finite.
            for ((lo, hi), &v) in min.iter_mut().zip(max.iter_mut()).zip(row) {
                *lo = if v < *lo { v } else { *lo };
                *hi = if v > *hi { v } else { *hi };
            }
        }
        let mut scale = vec![0.0f32; width];
        for j in 0..width {
            match range_scale(min[j], max[j]) {
                Some(s) if active[cols.start + j] => scale[j] = s,
                _ => min[j] = 0.0,
            }
        }
        let mut bins = vec![0u8; height * width];
        if scale.iter().any(|&s| s > 0.0) {
            for (t, out) in bins.chunks_exact_mut(width.max(1)).enumerate().take(height) {
                let row = &plot.row(t)[cols.clone()];
                for (((o, &v), &l), &s) in out.iter_mut().zip(row).zip(&min).zip(&scale) {
                    *o = bin_u8(v, l, s);
                }
            }
        }
        BinPlane {
            height,
            width,
            min,
            scale,
            bins,
        }
    }

    fn is_blank(&self) -> bool {
        self.scale.iter().all(|&s| s == 0.0)
    }

    fn thresholds(&self) -> Vec<Option<OtsuThreshold>> {
        let mut out = vec![None; self.width];
        if self.is_blank() {
            return out;
        }
        let mut hist = vec![[0u32; OTSU_BINS]; LANES];
        for c0 in (0..self.width).step_by(LANES) {
            let m = LANES.min(self.width - c0);
            if self.scale[c0..c0 + m].iter().all(|&s| s == 0.0) {
                continue;
            }
            for h in &mut hist {
                h.fill(0);
            }
            for t in 0..self.height {
                let row = &self.bins[t * self.width + c0..t * self.width + c0 + m];
                for (h, &b) in hist.iter_mut().zip(row) {
                    h[b as usize] += 1;
                }
            }
            for l in 0..m {
                if self.scale[c0 + l] > 0.0 {
                    out[c0 + l] = best_level(&hist[l]).map(|level| OtsuThreshold {
                        min: self.min[c0 + l],
                        scale: self.scale[c0 + l],
                        level,
                    });
                }
            }
        }
        out
    }

    fn mask(&self, thresholds: &[Option<OtsuThreshold>]) -> BinaryMask {
        let mut mask = BinaryMask::new(self.height, self.width);
        if thresholds.iter().all(Option::is_none) {
            return mask;
        }
        // bin >= level as bin > level - 1; 255 can never be exceeded.
        let pad = self.width.div_ceil(64) * 64;
        let mut below = vec![u8::MAX; pad];
        for (b, th) in below.iter_mut().zip(thresholds) {
            if let Some(th) = th {
                *b = (th.level - 1) as u8;
            }
        }
        let mut padded = vec![0u8; pad];
        for t in 0..self.height {
            padded[..self.width].copy_from_slice(&self.bins[t * self.width..(t + 1) * self.width]);
            for ((word, v), b) in mask
                .row_words_mut(t)
                .iter_mut()
                .zip(padded.chunks_exact(64))
                .zip(below.chunks_exact(64))
            {
                *word = pack(v, b);
            }
        }
        mask
    }
}

#[inline]
fn pack(v: &[u8], below: &[u8]) -> u64 {
    let mut flags = [0u8; 64];
    for ((f, &x), &b) in flags.iter_mut().zip(v).zip(below) {
        *f = (x > b) as u8;
    }
    let mut bits = 0u64;
    for (g, chunk) in flags.chunks_exact(8).enumerate() {
        // Byte i holds 0 or 1; the product gathers byte i into bit 56 + i.
        let x = u64::from_le_bytes(chunk.try_into().unwrap());
        bits |= (x.wrapping_mul(0x0102_0408_1020_4080) >> 56) << (8 * g);
    }
    bits
}

/// Per-column thresholds for `cols`; inactive and constant columns get `None`.
pub fn column_thresholds(
    plot: &TfPlot,
    active: &[bool],
    cols: Range<usize>,
) -> Vec<Option<OtsuThreshold>> {
    BinPlane::new(plot, active, cols).thresholds()
}

/// Otsu-binarizes every active column; pruned and constant columns stay background.
pub fn binarize(plot: &TfPlot, active: &[bool]) -> BinaryMask {
    binarize_columns(plot, active, 0..plot.width())
}

/// [`binarize`] over `cols` only; column `cols.start` becomes mask column 0.
pub fn binarize_columns(plot: &TfPlot, active: &[bool], cols: Range<usize>) -> BinaryMask {
    let plane = BinPlane::new(plot, active, cols);
    let thresholds = plane.thresholds();
    plane.mask(&thresholds)
}

/// A T x F binary image, one bit per pixel, rows packed into `u64` words.
/// Column `k` of a row is bit `k % 64` of word `k / 64`; bits past the width are zero.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    words: usize,
    bits: Vec<u64>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryMask {}x{}", self.height, self.width)?;
        for t in 0..self.height.min(64) {
            let line: String = (0..self.width.min(128))
                .map(|k| if self.get(t, k) { '#' } else { '.' })
                .collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

impl BinaryMask {
    pub fn new(height: usize, width: usize) -> Self {
        let words = width.div_ceil(64);
        BinaryMask {
            height,
            width,
            words,
            bits: vec![0; height * words],
        }
    }

    pub fn full(height: usize, width: usize) -> Self {
        let mut m = Self::new(height, width);
        m.bits.fill(!0);
        m.clear_tails();
        m
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut m = Self::new(height, width);
        for t in 0..height {
            for k in 0..width {
                if f(t, k) {
                    m.set(t, k, true);
                }
            }
        }
        m
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn words_per_row(&self) -> usize {
        self.words
    }

    pub fn get(&self, t: usize, k: usize) -> bool {
        self.bits[t * self.words + k / 64] >> (k % 64) & 1 == 1
    }

    pub fn set(&mut self, t: usize, k: usize, on: bool) {
        let w = &mut self.bits[t * self.words + k / 64];
        if on {
            *w |= 1 << (k % 64);
        } else {
            *w &= !(1 << (k % 64));
        }
    }

    pub fn row_words(&self, t: usize) -> &[u64] {
        &self.bits[t * self.words..(t + 1) * self.words]
    }

    pub fn row_words_mut(&mut self, t: usize) -> &mut [u64] {
        &mut self.bits[t * self.words..(t + 1) * self.words]
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [u64] {
        &mut self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn complement(&self) -> Self {
        let mut m = self.clone();
        m.bits.iter_mut().for_each(|w| *w = !*w);
        m.clear_tails();
        m
    }

    /// Mask of the last word in each row.
    pub(crate) fn tail_mask(&self) -> u64 {
        match self.width % 64 {
            0 => !0,
            r => (1u64 << r) - 1,
        }
    }

    pub(crate) fn clear_tails(&mut self) {
        if self.words == 0 {
            return;
        }
        let tail = self.tail_mask();
        for row in self.bits.chunks_exact_mut(self.words) {
            row[self.words - 1] &= tail;
        }
    }

    /// Copies columns `cols` of every row into a new mask.
    pub fn columns(&self, cols: std::ops::Range<usize>) -> Self {
        assert!(cols.end <= self.width, "columns {cols:?} outside width {}", self.width);
        let mut m = Self::new(self.height, cols.len());
        for t in 0..self.height {
            let src = self.row_words(t);
            let dst = &mut m.bits[t * m.words..(t + 1) * m.words];
            for (w, d) in dst.iter_mut().enumerate() {
                *d = read_bits(src, cols.start + 64 * w);
            }
        }
        m.clear_tails();
        m
    }

    /// Writes `src` into this mask starting at column `at`.
    pub fn paste_columns(&mut self, src: &BinaryMask, at: usize) {
        assert!(at + src.width <= self.width, "paste past width {}", self.width);
        assert_eq!(src.height, self.height, "paste between different heights");
        for t in 0..self.height {
            let from = src.row_words(t);
            let words = self.words;
            let dst = &mut self.bits[t * words..(t + 1) * words];
            for (w, &v) in from.iter().enumerate() {
                let n = (src.width - 64 * w).min(64);
                write_bits(dst, at + 64 * w, v, n);
            }
        }
    }
}

/// 64 bits of `row` starting at bit `off`; bits past the row read as zero.
#[inline]
fn read_bits(row: &[u64], off: usize) -> u64 {
    let (i, s) = (off / 64, off % 64);
    let lo = row.get(i).copied().unwrap_or(0) >> s;
    if s == 0 {
        lo
    } else {
        lo | row.get(i + 1).copied().unwrap_or(0) << (64 - s)
    }
}

/// Overwrites the `n` bits of `row` starting at bit `off` with the low bits of `v`.
#[inline]
fn write_bits(row: &mut [u64], off: usize, v: u64, n: usize) {
    let keep = if n == 64 { !0 } else { (1u64 << n) - 1 };
    let v = v & keep;
    let (i, s) = (off / 64, off % 64);
    row[i] = (row[i] & !(keep << s)) | (v << s);
    if s > 0 && s + n > 64 {
        let hi = 64 - s;
        row[i + 1] = (row[i + 1] & !(keep >> hi)) | (v >> hi);
    }
}

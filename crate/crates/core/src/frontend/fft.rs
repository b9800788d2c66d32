use std::sync::Arc;

use num_complex::Complex32;
use rustfft::{Fft, FftPlanner};

use super::{FrontendConfig, IqChunk, TfPlot};
use crate::error::{Error, Result};

/// Rectangular-window FFT magnitudes for one chunk, FFT-shifted so column 0
/// is -fs/2 and column F/2 is DC. Holds its plan and scratch for reuse.
pub struct RowTransform {
    n: usize,
    fft: Arc<dyn Fft<f32>>,
    buf: Vec<Complex32>,
    scratch: Vec<Complex32>,
}

impl RowTransform {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n);
        let scratch = vec![Complex32::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        RowTransform {
            n,
            fft,
            buf: vec![Complex32::new(0.0, 0.0); n],
            scratch,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn magnitudes_into(&mut self, samples: &[Complex32], out: &mut [f32]) -> Result<()> {
        if samples.len() != self.n || out.len() != self.n {
            return Err(Error::Framing(format!(
                "FFT of size {} got {} samples into a {}-bin row",
                self.n,
                samples.len(),
                out.len()
            )));
        }
        self.buf.copy_from_slice(samples);
        self.fft
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        let half = self.n / 2;
        let (neg, pos) = self.buf.split_at(half);
        for (o, c) in out[..half].iter_mut().zip(pos) {
            *o = c.norm();
        }
        for (o, c) in out[half..].iter_mut().zip(neg) {
            *o = c.norm();
        }
        Ok(())
    }

    pub fn row(&mut self, chunk: &IqChunk) -> Result<Vec<f32>> {
        let mut out = vec![0.0; self.n];
        self.magnitudes_into(&chunk.samples, &mut out)?;
        Ok(out)
    }
}

/// One-shot form of [`RowTransform::row`] for a chunk of `n_fft` samples.
pub fn fft_row(chunk: &IqChunk, n_fft: usize) -> Result<Vec<f32>> {
    RowTransform::new(n_fft).row(chunk)
}

/// Cuts `samples` into whole plots offline; leftover rows are dropped.
pub fn plots_from_samples(samples: &[Complex32], config: FrontendConfig) -> Result<Vec<TfPlot>> {
    config.validate()?;
    let (t, f) = (config.plot_height, config.n_fft);
    let mut tr = RowTransform::new(f);
    samples
        .chunks_exact(t * f)
        .enumerate()
        .map(|(p, block)| {
            let mut data = vec![0.0f32; t * f];
            for (row, chunk) in data.chunks_exact_mut(f).zip(block.chunks_exact(f)) {
                tr.magnitudes_into(chunk, row)?;
            }
            TfPlot::from_data(config, (p * t) as u64, data)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chunk(samples: Vec<Complex32>) -> IqChunk {
        IqChunk { seq: 0, samples }
    }

    #[test]
    fn zeros_give_zeros() {
        let row = fft_row(&chunk(vec![Complex32::new(0.0, 0.0); 64]), 64).unwrap();
        assert!(row.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_lands_in_center_bin() {
        let c = Complex32::new(0.6, -0.8);
        let row = fft_row(&chunk(vec![c; 256]), 256).unwrap();
        assert!((row[128] - 256.0).abs() < 1e-3);
        for (k, v) in row.iter().enumerate() {
            if k != 128 {
                assert!(*v < 1e-4, "bin {k} = {v}");
            }
        }
    }

    #[test]
    fn short_chunk_is_a_framing_error() {
        let err = fft_row(&chunk(vec![Complex32::new(1.0, 0.0); 10]), 16).unwrap_err();
        assert!(matches!(err, Error::Framing(_)));
    }

    #[test]
    fn parseval_holds_per_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut t = RowTransform::new(1024);
        for _ in 0..50 {
            let x: Vec<Complex32> = (0..1024)
                .map(|_| Complex32::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let row = t.row(&chunk(x.clone())).unwrap();
            let time: f64 = x.iter().map(|c| c.norm_sqr() as f64).sum();
            let freq: f64 = row.iter().map(|&m| (m as f64) * (m as f64)).sum();
            let rel = (freq - 1024.0 * time).abs() / (1024.0 * time);
            assert!(rel < 1e-6, "relative error {rel}");
        }
    }
}

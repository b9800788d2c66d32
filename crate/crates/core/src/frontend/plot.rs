use std::sync::Arc;

use num_complex::Complex32;

use super::pingpong::BankPool;
use super::FrontendConfig;
use crate::error::{Error, Result};

/// One FFT-sized block of samples. `seq` counts chunks from the start of the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct IqChunk {
    pub seq: u64,
    pub samples: Vec<Complex32>,
}

pub(crate) struct Bank {
    id: Option<usize>,
    data: Vec<f32>,
    pool: Option<Arc<BankPool>>,
}

impl Drop for Bank {
    fn drop(&mut self) {
        if let (Some(pool), Some(id)) = (&self.pool, self.id) {
            pool.release(id, std::mem::take(&mut self.data));
        }
    }
}

/// A T x F matrix of non-negative magnitudes, row-major, column 0 at -fs/2.
///
/// Clones share storage. A plot assembled by a [`PingPongBuffer`](super::PingPongBuffer)
/// hands its bank back when the last clone is dropped.
#[derive(Clone)]
pub struct TfPlot {
    config: FrontendConfig,
    start_seq: u64,
    bank: Arc<Bank>,
}

impl std::fmt::Debug for TfPlot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TfPlot")
            .field("start_seq", &self.start_seq)
            .field("height", &self.height())
            .field("width", &self.width())
            .field("bank", &self.bank.id)
            .finish()
    }
}

impl TfPlot {
    /// Wraps owned magnitudes. Fails on a size mismatch or a negative/non-finite entry.
    pub fn from_data(config: FrontendConfig, start_seq: u64, data: Vec<f32>) -> Result<Self> {
        config.validate()?;
        let expected = config.plot_height * config.n_fft;
        if data.len() != expected {
            return Err(Error::Framing(format!(
                "plot needs {expected} values, got {}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid(
                "plot",
                format!("magnitude {bad} is not a finite non-negative value"),
            ));
        }
        Ok(Self::from_bank(config, start_seq, None, data, None))
    }

    pub(crate) fn from_bank(
        config: FrontendConfig,
        start_seq: u64,
        id: Option<usize>,
        data: Vec<f32>,
        pool: Option<Arc<BankPool>>,
    ) -> Self {
        TfPlot {
            config,
            start_seq,
            bank: Arc::new(Bank { id, data, pool }),
        }
    }

    pub fn config(&self) -> &FrontendConfig {
        &self.config
    }

    pub fn start_seq(&self) -> u64 {
        self.start_seq
    }

    /// Stream time of the first row's leading edge.
    pub fn start_time(&self) -> f64 {
        self.start_seq as f64 * self.config.delta_t()
    }

    pub fn height(&self) -> usize {
        self.config.plot_height
    }

    pub fn width(&self) -> usize {
        self.config.n_fft
    }

    pub fn data(&self) -> &[f32] {
        &self.bank.data
    }

    pub fn row(&self, t: usize) -> &[f32] {
        let w = self.width();
        &self.bank.data[t * w..(t + 1) * w]
    }

    pub fn get(&self, t: usize, k: usize) -> f32 {
        self.bank.data[t * self.width() + k]
    }

    /// Which ping-pong bank holds this plot, if any.
    pub fn bank_id(&self) -> Option<usize> {
        self.bank.id
    }

    /// A detached copy that does not pin a ping-pong bank.
    pub fn detached(&self) -> TfPlot {
        Self::from_bank(
            self.config,
            self.start_seq,
            None,
            self.bank.data.clone(),
            None,
        )
    }
}

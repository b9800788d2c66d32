use std::sync::{Arc, Mutex};

use super::{FrontendConfig, TfPlot};
use crate::error::{Error, Result};

/// Storage for the two banks. A slot is `Some` while its bank is free.
pub(crate) struct BankPool {
    slots: Mutex<[Option<Vec<f32>>; 2]>,
}

impl BankPool {
    fn take(&self, id: usize) -> Option<Vec<f32>> {
        self.slots.lock().unwrap_or_else(|e| e.into_inner())[id].take()
    }

    pub(crate) fn release(&self, id: usize, data: Vec<f32>) {
        self.slots.lock().unwrap_or_else(|e| e.into_inner())[id] = Some(data);
    }

    fn is_free(&self, id: usize) -> bool {
        self.slots.lock().unwrap_or_else(|e| e.into_inner())[id].is_some()
    }
}

#[derive(Debug)]
pub enum AssembleEvent {
    /// All T rows of a plot are written; the bank now belongs to the reader.
    Plot(TfPlot),
    /// The next bank was still held by the reader when plot `plot_index` began.
    /// Its rows are dropped and writing resumes at the next plot boundary.
    Overrun { plot_index: u64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BufferStats {
    pub rows_written: u64,
    pub rows_dropped: u64,
    pub plots: u64,
    pub overruns: u64,
    /// Partially filled plots abandoned because the row sequence skipped ahead.
    pub discarded: u64,
}

struct Filling {
    bank: usize,
    data: Vec<f32>,
    plot: u64,
    rows: usize,
}

/// Two-bank plot assembler. Plot `p` covers row sequence numbers `[p*T, (p+1)*T)`.
///
/// A completed plot owns its bank until every clone of it is dropped, which is
/// the bank-complete handshake. Banks are filled in strict alternation.
pub struct PingPongBuffer {
    config: FrontendConfig,
    pool: Arc<BankPool>,
    next_bank: usize,
    filling: Option<Filling>,
    skipping: Option<u64>,
    last_seq: Option<u64>,
    stats: BufferStats,
}

impl PingPongBuffer {
    pub fn new(config: FrontendConfig) -> Result<Self> {
        config.validate()?;
        let len = config.plot_height * config.n_fft;
        Ok(PingPongBuffer {
            config,
            pool: Arc::new(BankPool {
                slots: Mutex::new([Some(vec![0.0; len]), Some(vec![0.0; len])]),
            }),
            next_bank: 0,
            filling: None,
            skipping: None,
            last_seq: None,
            stats: BufferStats::default(),
        })
    }

    pub fn config(&self) -> &FrontendConfig {
        &self.config
    }

    pub fn stats(&self) -> BufferStats {
        self.stats
    }

    /// Bank the next plot will be written into.
    pub fn active_bank(&self) -> usize {
        self.filling.as_ref().map_or(self.next_bank, |f| f.bank)
    }

    /// Rows written so far into the bank being filled.
    pub fn fill_count(&self) -> usize {
        self.filling.as_ref().map_or(0, |f| f.rows)
    }

    pub fn bank_free(&self, id: usize) -> bool {
        self.pool.is_free(id)
    }

    /// Writes one FFT row. `seq` must increase; a skipped sequence abandons the partial plot.
    pub fn push_row(&mut self, seq: u64, row: &[f32]) -> Result<Option<AssembleEvent>> {
        self.write_with(seq, |dst| {
            if row.len() != dst.len() {
                return Err(Error::Framing(format!(
                    "row has {} bins, plot width is {}",
                    row.len(),
                    dst.len()
                )));
            }
            dst.copy_from_slice(row);
            Ok(())
        })
    }

    /// Like [`push_row`](Self::push_row) but lets the caller fill the row slot in place.
    /// `fill` is not called when the row is dropped.
    pub fn write_with<F>(&mut self, seq: u64, fill: F) -> Result<Option<AssembleEvent>>
    where
        F: FnOnce(&mut [f32]) -> Result<()>,
    {
        if let Some(last) = self.last_seq {
            if seq <= last {
                return Err(Error::Framing(format!(
                    "row sequence went from {last} to {seq}"
                )));
            }
        }
        let (t, w) = (self.config.plot_height, self.config.n_fft);
        let plot = seq / t as u64;
        let r = (seq % t as u64) as usize;

        if let Some(f) = &self.filling {
            if f.plot != plot || f.rows != r {
                let f = self.filling.take().expect("checked above");
                self.stats.discarded += 1;
                self.stats.rows_dropped += f.rows as u64;
                self.pool.release(f.bank, f.data);
            }
        }

        if self.filling.is_none() {
            if r != 0 || self.skipping == Some(plot) {
                self.last_seq = Some(seq);
                self.stats.rows_dropped += 1;
                return Ok(None);
            }
            match self.pool.take(self.next_bank) {
                Some(data) => {
                    self.skipping = None;
                    self.filling = Some(Filling {
                        bank: self.next_bank,
                        data,
                        plot,
                        rows: 0,
                    });
                    self.next_bank ^= 1;
                }
                None => {
                    self.last_seq = Some(seq);
                    self.skipping = Some(plot);
                    self.stats.overruns += 1;
                    self.stats.rows_dropped += 1;
                    return Ok(Some(AssembleEvent::Overrun { plot_index: plot }));
                }
            }
        }

        let f = self.filling.as_mut().expect("bank acquired above");
        fill(&mut f.data[r * w..(r + 1) * w])?;
        self.last_seq = Some(seq);
        f.rows += 1;
        self.stats.rows_written += 1;
        if f.rows < t {
            return Ok(None);
        }
        let f = self.filling.take().expect("present");
        self.stats.plots += 1;
        Ok(Some(AssembleEvent::Plot(TfPlot::from_bank(
            self.config,
            f.plot * t as u64,
            Some(f.bank),
            f.data,
            Some(self.pool.clone()),
        ))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(t: usize, f: usize) -> FrontendConfig {
        FrontendConfig::new(f as f64, f, t).unwrap()
    }

    fn row(seq: u64, f: usize) -> Vec<f32> {
        (0..f).map(|k| (seq * f as u64 + k as u64) as f32).collect()
    }

    fn feed(buf: &mut PingPongBuffer, seqs: impl IntoIterator<Item = u64>) -> Vec<AssembleEvent> {
        let f = buf.config().n_fft;
        seqs.into_iter()
            .filter_map(|s| buf.push_row(s, &row(s, f)).unwrap())
            .collect()
    }

    fn plots(events: Vec<AssembleEvent>) -> Vec<TfPlot> {
        events
            .into_iter()
            .filter_map(|e| match e {
                AssembleEvent::Plot(p) => Some(p),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn two_plots_from_2t_rows_alternate_banks() {
        let mut buf = PingPongBuffer::new(cfg(5, 8)).unwrap();
        let mut out = Vec::new();
        for s in 0..10 {
            if let Some(AssembleEvent::Plot(p)) = buf.push_row(s, &row(s, 8)).unwrap() {
                out.push((p.start_seq(), p.bank_id()));
            }
        }
        assert_eq!(out, vec![(0, Some(0)), (5, Some(1))]);
        assert_eq!(buf.stats().overruns, 0);
    }

    #[test]
    fn t_minus_one_rows_make_no_plot() {
        let mut buf = PingPongBuffer::new(cfg(5, 8)).unwrap();
        assert!(feed(&mut buf, 0..4).is_empty());
        assert_eq!(buf.fill_count(), 4);
    }

    #[test]
    fn slow_reader_causes_exactly_one_overrun() {
        let mut buf = PingPongBuffer::new(cfg(4, 8)).unwrap();
        // Reader holds bank A (plot 0) and has not yet taken bank B (plot 1).
        let held = plots(feed(&mut buf, 0..8));
        assert_eq!(held.len(), 2);
        // Writer wraps around to plot 2 while both banks are busy.
        let ev = feed(&mut buf, 8..12);
        assert_eq!(ev.len(), 1);
        assert!(matches!(ev[0], AssembleEvent::Overrun { plot_index: 2 }));
        drop(held);
        assert!(buf.bank_free(0) && buf.bank_free(1));
        // Plot 3 proceeds normally into bank A.
        let next = plots(feed(&mut buf, 12..16));
        assert_eq!(next.len(), 1);
        assert_eq!(next[0].start_seq(), 12);
        assert_eq!(next[0].bank_id(), Some(0));
        assert_eq!(buf.stats().overruns, 1);
        assert_eq!(buf.stats().rows_dropped, 4);
    }

    #[test]
    fn prompt_reader_never_overruns() {
        let mut buf = PingPongBuffer::new(cfg(3, 4)).unwrap();
        for s in 0..300 {
            if let Some(ev) = buf.push_row(s, &row(s, 4)).unwrap() {
                assert!(matches!(ev, AssembleEvent::Plot(_)));
            }
        }
        assert_eq!(buf.stats().overruns, 0);
        assert_eq!(buf.stats().plots, 100);
    }

    #[test]
    fn sequence_gap_discards_partial_plot_and_realigns() {
        let mut buf = PingPongBuffer::new(cfg(4, 2)).unwrap();
        let ev = plots(feed(&mut buf, [0, 1, 2, 5, 6, 7, 8, 9, 10, 11]));
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].start_seq(), 8);
        assert_eq!(buf.stats().discarded, 1);
    }

    #[test]
    fn non_increasing_sequence_is_rejected() {
        let mut buf = PingPongBuffer::new(cfg(4, 2)).unwrap();
        buf.push_row(3, &[0.0, 0.0]).unwrap();
        assert!(buf.push_row(3, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn rows_are_reproduced_in_order() {
        let mut buf = PingPongBuffer::new(cfg(3, 4)).unwrap();
        let mut seen = Vec::new();
        for s in 0..9 {
            if let Some(AssembleEvent::Plot(p)) = buf.push_row(s, &row(s, 4)).unwrap() {
                seen.extend_from_slice(p.data());
            }
        }
        let expected: Vec<f32> = (0..9).flat_map(|s| row(s, 4)).collect();
        assert_eq!(seen, expected);
    }
}

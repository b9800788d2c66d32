use std::collections::{BTreeMap, VecDeque};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, never, select, Receiver, Sender, TrySendError};

use super::pipeline::SensingPool;
use super::workers::{fft_worker, FftDone, FftTask};
use super::{report, Backpressure, PlotDetections, RunReport, RuntimeConfig};
use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::frontend::{AssembleEvent, FrontendConfig, IqChunk, PingPongBuffer, TfPlot};

enum Ingest {
    Chunks(Vec<IqChunk>),
    Lost(u64),
    Failed(Error),
    End { dropped: u64 },
}

fn ingest<S>(source: S, out: Sender<Ingest>, batch: usize, plot_height: u64, drop: bool)
where
    S: Iterator<Item = Result<IqChunk>>,
{
    let mut dropped = 0u64;
    let mut pending = Vec::with_capacity(batch);
    let flush = |chunks: Vec<IqChunk>, dropped: &mut u64| -> bool {
        let n = chunks.len() as u64;
        let msg = Ingest::Chunks(chunks);
        if drop {
            match out.try_send(msg) {
                Ok(()) => true,
                Err(TrySendError::Full(_)) => {
                    *dropped += n;
                    true
                }
                Err(TrySendError::Disconnected(_)) => false,
            }
        } else {
            out.send(msg).is_ok()
        }
    };
    for item in source {
        match item {
            Ok(chunk) => {
                // A batch never spans a plot boundary, so a full plot is not held back.
                let last_row = (chunk.seq + 1) % plot_height == 0;
                pending.push(chunk);
                if (pending.len() >= batch || last_row)
                    && !flush(std::mem::replace(&mut pending, Vec::with_capacity(batch)), &mut dropped)
                {
                    return;
                }
            }
            Err(Error::Overrun { lost_chunks }) => {
                if out.send(Ingest::Lost(lost_chunks)).is_err() {
                    return;
                }
            }
            Err(e) => {
                let _ = out.send(Ingest::Failed(e));
                return;
            }
        }
    }
    if !pending.is_empty() && !flush(pending, &mut dropped) {
        return;
    }
    let _ = out.send(Ingest::End { dropped });
}

struct FftPool {
    tx: Option<Sender<FftTask>>,
    done: Receiver<FftDone>,
    workers: Vec<JoinHandle<()>>,
    capacity: usize,
    pending: VecDeque<FftTask>,
    outstanding: usize,
    next_task: u64,
    next_apply: u64,
    finished: BTreeMap<u64, Vec<(u64, Vec<f32>)>>,
    ready: VecDeque<(u64, Vec<f32>)>,
}

impl FftPool {
    fn start(n_fft: usize, runtime: &RuntimeConfig) -> Result<Self> {
        let capacity = runtime.queue_capacity;
        let (tx, task_rx) = bounded(capacity);
        let (done_tx, done) = bounded(capacity);
        let workers = (0..runtime.n_compute_workers)
            .map(|i| {
                let (rx, tx) = (task_rx.clone(), done_tx.clone());
                std::thread::Builder::new()
                    .name(format!("fft-{i}"))
                    .spawn(move || fft_worker(n_fft, rx, tx))
            })
            .collect::<std::io::Result<Vec<_>>>()?;
        Ok(FftPool {
            tx: Some(tx),
            done,
            workers,
            capacity,
            pending: VecDeque::new(),
            outstanding: 0,
            next_task: 0,
            next_apply: 0,
            finished: BTreeMap::new(),
            ready: VecDeque::new(),
        })
    }

    fn push(&mut self, chunks: Vec<IqChunk>) {
        self.pending.push_back(FftTask {
            task: self.next_task,
            chunks,
        });
        self.next_task += 1;
        self.dispatch();
    }

    fn dispatch(&mut self) {
        let tx = self.tx.as_ref().expect("pool is running");
        while self.outstanding < self.capacity {
            let Some(task) = self.pending.pop_front() else {
                break;
            };
            tx.send(task).expect("compute workers outlive the pool");
            self.outstanding += 1;
        }
    }

    fn on_done(&mut self, done: FftDone) -> Result<()> {
        self.outstanding -= 1;
        let rows = done.rows?;
        self.finished.insert(done.task, rows);
        self.dispatch();
        Ok(())
    }

    /// Next row in stream order, if it has been computed.
    fn front(&mut self) -> Option<&(u64, Vec<f32>)> {
        if self.ready.is_empty() {
            if let Some(rows) = self.finished.remove(&self.next_apply) {
                self.ready.extend(rows);
                self.next_apply += 1;
            }
        }
        self.ready.front()
    }

    /// Whether more input may be accepted without growing the backlog.
    fn has_room(&self) -> bool {
        self.pending.is_empty() && self.finished.len() < self.capacity
    }

    fn is_idle(&self) -> bool {
        self.outstanding == 0 && self.pending.is_empty() && self.finished.is_empty() && self.ready.is_empty()
    }

    fn shutdown(&mut self) {
        self.tx = None;
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

/// Runs the full chain on a chunk stream: FFT rows, plot assembly in the
/// ping-pong buffer, and slab-parallel detection. `sink` receives every plot's
/// boxes in plot order. Returns once the source is exhausted and every
/// completed plot has been emitted; a trailing partial plot is discarded.
///
/// The source runs on its own thread. `Err(Error::Overrun)` items are counted
/// as lost chunks; any other error, a worker panic or a sink error aborts the run.
pub fn run<S>(
    source: S,
    frontend: FrontendConfig,
    detector: DetectorConfig,
    runtime: RuntimeConfig,
    mut sink: impl FnMut(PlotDetections) -> Result<()>,
) -> Result<RunReport>
where
    S: Iterator<Item = Result<IqChunk>> + Send + 'static,
{
    runtime.validate_for(&frontend, &detector)?;
    let epoch = Instant::now();
    let deadline = runtime.deadline_for(&frontend);
    let t = frontend.plot_height as u64;
    let block = runtime.backpressure == Backpressure::Block;

    let (ingest_tx, ingest_rx) = bounded(runtime.queue_capacity);
    let batch = runtime.rows_per_task;
    let reader = std::thread::Builder::new()
        .name("ingest".into())
        .spawn(move || ingest(source, ingest_tx, batch, t, !block))?;

    let mut fft = FftPool::start(frontend.n_fft, &runtime)?;
    let mut sense = SensingPool::start(frontend.n_fft, detector, &runtime, deadline, epoch)?;
    let mut buffer = PingPongBuffer::new(frontend)?;
    let mut overruns = 0u64;
    let mut lost = 0u64;
    let mut dropped = 0u64;
    let mut ended = false;
    let sink: &mut dyn FnMut(PlotDetections) -> Result<()> = &mut sink;
    let none_ingest = never::<Ingest>();

    loop {
        // Move computed rows into the buffer. In block mode a row that would
        // start a plot waits until the next bank is free.
        while let Some((seq, _)) = fft.front() {
            let seq = *seq;
            if block
                && seq % t == 0
                && buffer.fill_count() == 0
                && !buffer.bank_free(buffer.active_bank())
            {
                break;
            }
            let (seq, row) = fft.ready.pop_front().expect("front exists");
            match buffer.push_row(seq, &row)? {
                Some(AssembleEvent::Plot(plot)) => sense.submit(seq / t, plot, Instant::now()),
                Some(AssembleEvent::Overrun { .. }) => overruns += 1,
                None => {}
            }
        }
        if ended && fft.is_idle() && sense.is_idle() {
            break;
        }
        let ingest_rx = if !ended && fft.has_room() {
            &ingest_rx
        } else {
            &none_ingest
        };
        select! {
            recv(ingest_rx) -> msg => match msg {
                Ok(Ingest::Chunks(c)) => fft.push(c),
                Ok(Ingest::Lost(n)) => lost += n,
                Ok(Ingest::End { dropped: d }) => {
                    dropped = d;
                    ended = true;
                }
                Ok(Ingest::Failed(e)) => return Err(e),
                Err(_) => return Err(Error::Worker("ingest thread stopped unexpectedly".into())),
            },
            recv(fft.done) -> msg => {
                fft.on_done(msg.map_err(|_| Error::Worker("compute pool closed".into()))?)?;
            }
            recv(sense.done) -> msg => {
                sense.on_done(msg.map_err(|_| Error::Worker("sensing pool closed".into()))?, sink)?;
            }
        }
    }

    let _ = reader.join();
    fft.shutdown();
    let (records, stage_means) = sense.shutdown();
    Ok(RunReport {
        overruns,
        lost_chunks: lost,
        dropped_chunks: dropped,
        stage_means,
        ..report(records)
    })
}

/// Schedule for [`replay`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayConfig {
    /// Plots to release; the input list is cycled.
    pub n_plots: usize,
    /// Release plot `k` at `(k + 1) * plot span` after the start, as a live
    /// stream would. Otherwise each plot is released as soon as a bank is free.
    pub paced: bool,
}

/// Feeds already assembled plots through the sensing stage as if they came
/// out of a two-bank buffer. Skips FFT and ingest, so the latency of the
/// image stage can be measured at stream rates the host could not transform.
///
/// A paced plot needs the bank of the plot two before it, which must have been
/// emitted by the time the plot starts filling. Otherwise the plot is lost as
/// an overrun in drop mode, or starts filling late in block mode.
pub fn replay(
    plots: &[TfPlot],
    schedule: ReplayConfig,
    detector: DetectorConfig,
    runtime: RuntimeConfig,
    mut sink: impl FnMut(PlotDetections) -> Result<()>,
) -> Result<RunReport> {
    let first = plots
        .first()
        .ok_or_else(|| Error::invalid("plots", "replay needs at least one plot"))?;
    let frontend = *first.config();
    if plots.iter().any(|p| *p.config() != frontend) {
        return Err(Error::invalid("plots", "all plots must share one frontend config"));
    }
    runtime.validate_for(&frontend, &detector)?;
    let epoch = Instant::now();
    let deadline = runtime.deadline_for(&frontend);
    let period = if schedule.paced {
        Duration::from_secs_f64(frontend.plot_span())
    } else {
        Duration::ZERO
    };
    let drop_late = schedule.paced && runtime.backpressure == Backpressure::Drop;
    let mut sense = SensingPool::start(frontend.n_fft, detector, &runtime, deadline, epoch)?;
    let sink: &mut dyn FnMut(PlotDetections) -> Result<()> = &mut sink;

    // Plot `next` is filling since `fill_start`, or waiting for a bank if `None`.
    let mut next = 0usize;
    let mut fill_start = Some(epoch);
    let mut skipping = false;
    let mut overruns = 0u64;

    while next < schedule.n_plots || !sense.is_idle() {
        if next < schedule.n_plots {
            match fill_start {
                None if sense.in_flight() < 2 => fill_start = Some(Instant::now()),
                Some(start) if Instant::now() >= start + period => {
                    let due = start + period;
                    if !skipping {
                        sense.submit(next as u64, plots[next % plots.len()].clone(), Instant::now());
                    }
                    next += 1;
                    // The following plot needs the bank of the plot before this one.
                    skipping = false;
                    fill_start = if next == schedule.n_plots || sense.in_flight() < 2 {
                        Some(if period.is_zero() { Instant::now() } else { due })
                    } else if drop_late {
                        overruns += 1;
                        skipping = true;
                        Some(due)
                    } else {
                        None
                    };
                    continue;
                }
                _ => {}
            }
        }
        let wake = match fill_start {
            Some(start) if next < schedule.n_plots => Some(start + period),
            _ => None,
        };
        let msg = match wake {
            Some(at) => match sense.done.recv_deadline(at) {
                Ok(m) => Some(m),
                Err(crossbeam_channel::RecvTimeoutError::Timeout) => None,
                Err(_) => return Err(Error::Worker("sensing pool closed".into())),
            },
            None => Some(
                sense
                    .done
                    .recv()
                    .map_err(|_| Error::Worker("sensing pool closed".into()))?,
            ),
        };
        if let Some(m) = msg {
            sense.on_done(m, sink)?;
        }
    }

    let (records, stage_means) = sense.shutdown();
    Ok(RunReport {
        overruns,
        stage_means,
        ..report(records)
    })
}

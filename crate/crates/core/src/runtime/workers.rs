use std::any::Any;
use std::ops::Range;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crossbeam_channel::{Receiver, Sender};

use crate::detector::{
    binarize_columns, consolidate_in_place, estimate_psd_columns, BinaryMask, OpeningAxis,
};
use crate::error::{Error, Result};
use crate::frontend::{IqChunk, RowTransform, TfPlot};

/// A run of consecutive chunks to transform into rows.
pub(crate) struct FftTask {
    pub task: u64,
    pub chunks: Vec<IqChunk>,
}

pub(crate) struct FftDone {
    pub task: u64,
    /// `(seq, magnitudes)` per chunk, in input order.
    pub rows: Result<Vec<(u64, Vec<f32>)>>,
}

pub(crate) enum SenseWork {
    /// Time-summed power of the core columns.
    Psd { cols: Range<usize> },
    /// Binarize and consolidate the extended columns, keep the core.
    Mask {
        active: Arc<Vec<bool>>,
        extended: Range<usize>,
        core: Range<usize>,
        axis: OpeningAxis,
    },
}

pub(crate) struct SenseTask {
    pub plot: u64,
    pub slab: usize,
    pub data: TfPlot,
    pub work: SenseWork,
}

pub(crate) enum SenseOutput {
    Psd {
        raw: Vec<f64>,
        time: Duration,
    },
    Mask {
        mask: BinaryMask,
        binarize: Duration,
        consolidate: Duration,
    },
}

pub(crate) struct SenseDone {
    pub plot: u64,
    pub slab: usize,
    pub output: Result<SenseOutput>,
}

fn panic_message(p: Box<dyn Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic with a non-string payload".into())
}

/// Serves `tasks` until the queue closes or the manager hangs up. A panic in
/// `handle` becomes an [`Error::Worker`] reply built by `failed`.
pub(crate) fn serve<T, R>(
    tasks: Receiver<T>,
    done: Sender<R>,
    mut handle: impl FnMut(T) -> R,
    failed: impl Fn(Error) -> R,
) {
    for task in tasks {
        let reply = catch_unwind(AssertUnwindSafe(|| handle(task)))
            .unwrap_or_else(|p| failed(Error::Worker(panic_message(p))));
        if done.send(reply).is_err() {
            return;
        }
    }
}

pub(crate) fn fft_worker(n_fft: usize, tasks: Receiver<FftTask>, done: Sender<FftDone>) {
    let mut transform = RowTransform::new(n_fft);
    // The task id is lost if the handler panics; the manager aborts on any failure.
    serve(
        tasks,
        done,
        |t: FftTask| FftDone {
            task: t.task,
            rows: t
                .chunks
                .iter()
                .map(|c| Ok((c.seq, transform.row(c)?)))
                .collect(),
        },
        |e| FftDone {
            task: u64::MAX,
            rows: Err(e),
        },
    );
}

pub(crate) fn sense_worker(tasks: Receiver<SenseTask>, done: Sender<SenseDone>) {
    serve(
        tasks,
        done,
        |t: SenseTask| SenseDone {
            plot: t.plot,
            slab: t.slab,
            output: Ok(sense(&t.data, t.work)),
        },
        |e| SenseDone {
            plot: u64::MAX,
            slab: usize::MAX,
            output: Err(e),
        },
    );
}

pub(crate) fn sense(plot: &TfPlot, work: SenseWork) -> SenseOutput {
    match work {
        SenseWork::Psd { cols } => {
            let t = Instant::now();
            let raw = estimate_psd_columns(plot, cols);
            SenseOutput::Psd {
                raw,
                time: t.elapsed(),
            }
        }
        SenseWork::Mask {
            active,
            extended,
            core,
            axis,
        } => {
            let t = Instant::now();
            let offset = extended.start;
            let mut mask = binarize_columns(plot, &active, extended);
            let binarize = t.elapsed();
            let t = Instant::now();
            consolidate_in_place(&mut mask, axis);
            let mask = mask.columns(core.start - offset..core.end - offset);
            SenseOutput::Mask {
                mask,
                binarize,
                consolidate: t.elapsed(),
            }
        }
    }
}

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Instant;

use crossbeam_channel::{bounded, Receiver, Sender};

use super::workers::{sense_worker, SenseDone, SenseOutput, SenseTask, SenseWork};
use super::{partition, LatencyRecord, PlotDetections, RuntimeConfig, Slab};
use crate::detector::{
    component_to_box, find_components, prune_columns, smooth_and_floor, BinaryMask,
    DetectorConfig, StageTimings,
};
use crate::error::{Error, Result};
use crate::frontend::TfPlot;

struct PlotJob {
    plot: TfPlot,
    start: Instant,
    /// Slabs still to report in the current phase.
    waiting: usize,
    /// Joined raw PSD during the first phase.
    raw: Vec<f64>,
    /// Stitched mask during the second phase.
    mask: Option<BinaryMask>,
    timings: StageTimings,
    finished: Option<PlotDetections>,
}

/// Frequency-parallel detection of whole plots on a pool of sensing workers.
pub(crate) struct SensingPool {
    detector: DetectorConfig,
    slabs: Vec<Slab>,
    capacity: usize,
    deadline: f64,
    epoch: Instant,
    tx: Option<Sender<SenseTask>>,
    pub(crate) done: Receiver<SenseDone>,
    workers: Vec<JoinHandle<()>>,
    pending: VecDeque<SenseTask>,
    outstanding: usize,
    jobs: BTreeMap<u64, PlotJob>,
    records: Vec<LatencyRecord>,
    stage_sum: StageTimings,
}

impl SensingPool {
    pub(crate) fn start(
        width: usize,
        detector: DetectorConfig,
        runtime: &RuntimeConfig,
        deadline: f64,
        epoch: Instant,
    ) -> Result<Self> {
        let slabs = partition(width, runtime.n_sensing_workers, runtime.halo_width)?;
        let capacity = runtime.queue_capacity;
        let (tx, task_rx) = bounded(capacity);
        let (done_tx, done) = bounded(capacity);
        let workers = (0..runtime.n_sensing_workers)
            .map(|i| {
                let (rx, tx) = (task_rx.clone(), done_tx.clone());
                std::thread::Builder::new()
                    .name(format!("sense-{i}"))
                    .spawn(move || sense_worker(rx, tx))
            })
            .collect::<std::io::Result<Vec<_>>>()?;
        Ok(SensingPool {
            detector,
            slabs,
            capacity,
            deadline,
            epoch,
            tx: Some(tx),
            done,
            workers,
            pending: VecDeque::new(),
            outstanding: 0,
            jobs: BTreeMap::new(),
            records: Vec::new(),
            stage_sum: StageTimings::default(),
        })
    }

    /// Plots accepted and not yet emitted.
    pub(crate) fn in_flight(&self) -> usize {
        self.jobs.len()
    }

    pub(crate) fn is_idle(&self) -> bool {
        self.jobs.is_empty() && self.outstanding == 0
    }

    /// Starts detection on `plot`, which completed at `start`.
    pub(crate) fn submit(&mut self, index: u64, plot: TfPlot, start: Instant) {
        for (i, s) in self.slabs.iter().enumerate() {
            self.pending.push_back(SenseTask {
                plot: index,
                slab: i,
                data: plot.clone(),
                work: SenseWork::Psd {
                    cols: s.core.clone(),
                },
            });
        }
        let job = PlotJob {
            raw: vec![0.0; plot.width()],
            plot,
            start,
            waiting: self.slabs.len(),
            mask: None,
            timings: StageTimings::default(),
            finished: None,
        };
        let old = self.jobs.insert(index, job);
        assert!(old.is_none(), "plot {index} submitted twice");
        self.dispatch();
    }

    fn dispatch(&mut self) {
        let tx = self.tx.as_ref().expect("pool is running");
        while self.outstanding < self.capacity {
            let Some(task) = self.pending.pop_front() else {
                break;
            };
            // Never blocks: the channel holds at most `outstanding` tasks.
            tx.send(task).expect("sensing workers outlive the pool");
            self.outstanding += 1;
        }
    }

    /// Applies one worker reply and emits every plot that is ready, in order.
    pub(crate) fn on_done(
        &mut self,
        done: SenseDone,
        sink: &mut dyn FnMut(PlotDetections) -> Result<()>,
    ) -> Result<()> {
        self.outstanding -= 1;
        let output = done.output?;
        let job = self
            .jobs
            .get_mut(&done.plot)
            .ok_or_else(|| Error::Worker(format!("reply for unknown plot {}", done.plot)))?;
        let slab = &self.slabs[done.slab];
        match output {
            SenseOutput::Psd { raw, time } => {
                job.raw[slab.core.clone()].copy_from_slice(&raw);
                job.timings.psd += time;
            }
            SenseOutput::Mask {
                mask,
                binarize,
                consolidate,
            } => {
                job.mask
                    .as_mut()
                    .expect("mask phase")
                    .paste_columns(&mask, slab.core.start);
                job.timings.binarize += binarize;
                job.timings.consolidate += consolidate;
            }
        }
        job.waiting -= 1;
        if job.waiting == 0 {
            if job.mask.is_none() {
                self.begin_masks(done.plot)?;
            } else {
                self.finish(done.plot);
            }
        }
        self.dispatch();
        self.emit(sink)
    }

    fn begin_masks(&mut self, index: u64) -> Result<()> {
        let job = self.jobs.get_mut(&index).expect("known plot");
        let t = Instant::now();
        let profile = smooth_and_floor(std::mem::take(&mut job.raw), &self.detector)?;
        let active = Arc::new(prune_columns(&profile));
        job.timings.psd += t.elapsed();
        job.mask = Some(BinaryMask::new(job.plot.height(), job.plot.width()));
        job.waiting = self.slabs.len();
        for (i, s) in self.slabs.iter().enumerate() {
            self.pending.push_back(SenseTask {
                plot: index,
                slab: i,
                data: job.plot.clone(),
                work: SenseWork::Mask {
                    active: active.clone(),
                    extended: s.extended.clone(),
                    core: s.core.clone(),
                    axis: self.detector.opening_axis,
                },
            });
        }
        Ok(())
    }

    fn finish(&mut self, index: u64) {
        let job = self.jobs.get_mut(&index).expect("known plot");
        let t = Instant::now();
        let mask = job.mask.as_ref().expect("stitched");
        let (config, seq) = (*job.plot.config(), job.plot.start_seq());
        let boxes = find_components(mask, self.detector.min_component_area)
            .iter()
            .map(|c| component_to_box(c, &config, seq))
            .collect();
        job.timings.label += t.elapsed();
        job.finished = Some(PlotDetections {
            plot_index: index,
            boxes,
            latency: LatencyRecord::new(index, 0.0, 0.0, 0.0),
        });
    }

    fn emit(&mut self, sink: &mut dyn FnMut(PlotDetections) -> Result<()>) -> Result<()> {
        while let Some(entry) = self.jobs.first_entry() {
            if entry.get().finished.is_none() {
                break;
            }
            let job = entry.remove();
            let mut out = job.finished.expect("checked");
            // Release the bank before handing the boxes on.
            drop(job.plot);
            let end = Instant::now();
            let secs = |t: Instant| t.duration_since(self.epoch).as_secs_f64();
            out.latency = LatencyRecord::new(out.plot_index, secs(job.start), secs(end), self.deadline);
            self.records.push(out.latency);
            let s = &mut self.stage_sum;
            s.psd += job.timings.psd;
            s.binarize += job.timings.binarize;
            s.consolidate += job.timings.consolidate;
            s.label += job.timings.label;
            sink(out)?;
        }
        Ok(())
    }

    /// Stops the workers and returns the latency records and mean stage times.
    pub(crate) fn shutdown(mut self) -> (Vec<LatencyRecord>, StageTimings) {
        self.tx = None;
        self.pending.clear();
        for w in self.workers.drain(..) {
            // Panics are caught inside the worker loop.
            let _ = w.join();
        }
        let n = self.records.len().max(1) as u32;
        let s = self.stage_sum;
        let mean = StageTimings {
            psd: s.psd / n,
            binarize: s.binarize / n,
            consolidate: s.consolidate / n,
            label: s.label / n,
        };
        (std::mem::take(&mut self.records), mean)
    }
}

impl Drop for SensingPool {
    fn drop(&mut self) {
        // On an aborted run, close the queue so workers exit once their replies fail.
        self.tx = None;
    }
}

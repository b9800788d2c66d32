use std::fmt::Write as _;

use serde::Serialize;

use crate::detector::StageTimings;

/// Percentage of plots that must meet the deadline for a run to count as real time.
pub const REALTIME_PERCENT: usize = 99;

/// Fewest samples for which a p99 means anything.
pub const MIN_VALID_SAMPLES: usize = 100;

/// Processing time of one plot, from bank complete to boxes emitted.
/// Timestamps are seconds since the start of the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyRecord {
    pub plot_index: u64,
    pub start: f64,
    pub end: f64,
    pub elapsed: f64,
    pub deadline: f64,
    pub met: bool,
}

impl LatencyRecord {
    pub fn new(plot_index: u64, start: f64, end: f64, deadline: f64) -> Self {
        let elapsed = end - start;
        LatencyRecord {
            plot_index,
            start,
            end,
            elapsed,
            deadline,
            met: elapsed <= deadline,
        }
    }
}

/// Nearest-rank percentiles of the elapsed times, in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LatencySummary {
    pub count: usize,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
    pub mean: f64,
    pub fraction_met: f64,
    /// At least [`REALTIME_PERCENT`] of the plots met their deadline.
    pub realtime: bool,
    /// Enough samples for the p99 to be meaningful.
    pub valid: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub records: Vec<LatencyRecord>,
    pub summary: LatencySummary,
    /// Plots lost because no bank was free when they started.
    pub overruns: u64,
    /// Chunks the source reported lost in transport.
    pub lost_chunks: u64,
    /// Chunks dropped because the ingest queue was full.
    pub dropped_chunks: u64,
    /// Mean time per plot in each detector stage, summed across workers.
    pub stage_means: StageTimings,
}

/// Value at nearest rank `ceil(p * n)` of an ascending slice.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of no samples");
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Summarizes `records`; an empty list yields a zero summary that is neither
/// valid nor real time.
pub fn report(records: Vec<LatencyRecord>) -> RunReport {
    RunReport {
        summary: summarize(&records),
        records,
        ..Default::default()
    }
}

fn summarize(records: &[LatencyRecord]) -> LatencySummary {
    if records.is_empty() {
        return LatencySummary::default();
    }
    let mut e: Vec<f64> = records.iter().map(|r| r.elapsed).collect();
    e.sort_by(f64::total_cmp);
    let n = e.len();
    let met = records.iter().filter(|r| r.met).count();
    let fraction_met = met as f64 / n as f64;
    LatencySummary {
        count: n,
        p50: nearest_rank(&e, 0.50),
        p90: nearest_rank(&e, 0.90),
        p99: nearest_rank(&e, 0.99),
        max: e[n - 1],
        mean: e.iter().sum::<f64>() / n as f64,
        fraction_met,
        realtime: 100 * met >= REALTIME_PERCENT * n,
        valid: n >= MIN_VALID_SAMPLES,
    }
}

impl RunReport {
    /// `(latency, P[elapsed > latency])` at every distinct latency, ascending.
    pub fn ccdf(&self) -> Vec<(f64, f64)> {
        let mut e: Vec<f64> = self.records.iter().map(|r| r.elapsed).collect();
        e.sort_by(f64::total_cmp);
        let n = e.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &x) in e.iter().enumerate() {
            let above = (e.len() - i - 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = above,
                _ => out.push((x, above)),
            }
        }
        out
    }

    pub const RECORDS_CSV_HEADER: &'static str =
        "plot_index,start_s,end_s,elapsed_ms,deadline_ms,met";

    pub fn records_csv(&self) -> String {
        let mut s = String::from(Self::RECORDS_CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{:.9},{:.9},{:.6},{:.6},{}",
                r.plot_index,
                r.start,
                r.end,
                r.elapsed * 1e3,
                r.deadline * 1e3,
                r.met
            );
        }
        s
    }

    pub fn ccdf_csv(&self) -> String {
        let mut s = String::from("latency_ms,ccdf\n");
        for (x, p) in self.ccdf() {
            let _ = writeln!(s, "{:.6},{:.6}", x * 1e3, p);
        }
        s
    }

    /// Human-readable block with the percentiles, verdict and stage breakdown.
    pub fn summary_text(&self) -> String {
        let m = &self.summary;
        let ms = |x: f64| x * 1e3;
        let deadline = self.records.first().map_or(0.0, |r| r.deadline);
        let mut s = String::new();
        let _ = writeln!(s, "plots            {}", m.count);
        let _ = writeln!(s, "deadline_ms      {:.3}", ms(deadline));
        let _ = writeln!(s, "p50_ms           {:.3}", ms(m.p50));
        let _ = writeln!(s, "p90_ms           {:.3}", ms(m.p90));
        let _ = writeln!(s, "p99_ms           {:.3}", ms(m.p99));
        let _ = writeln!(s, "max_ms           {:.3}", ms(m.max));
        let _ = writeln!(s, "mean_ms          {:.3}", ms(m.mean));
        let _ = writeln!(s, "fraction_met     {:.4}", m.fraction_met);
        let verdict = match (m.realtime, m.valid) {
            (true, true) => "pass",
            (false, true) => "fail",
            (true, false) => "pass (fewer than 100 plots)",
            (false, false) => "fail (fewer than 100 plots)",
        };
        let _ = writeln!(s, "realtime         {verdict}");
        let _ = writeln!(s, "overruns         {}", self.overruns);
        let _ = writeln!(s, "lost_chunks      {}", self.lost_chunks);
        let _ = writeln!(s, "dropped_chunks   {}", self.dropped_chunks);
        let t = &self.stage_means;
        for (name, d) in [
            ("psd", t.psd),
            ("binarize", t.binarize),
            ("consolidate", t.consolidate),
            ("label", t.label),
        ] {
            let _ = writeln!(s, "stage_{name:<12}{:.3} ms", d.as_secs_f64() * 1e3);
        }
        s
    }
}

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde_json::json;
use specsense::baseline::compare;
use specsense::frontend::{plots_from_samples, FrontendConfig, TfPlot};
use specsense::runtime::{replay, ReplayConfig, RuntimeConfig};
use specsense::signals::suite::Preset;
use specsense::signals::synthesize;
use specsense::BoundingBox;

use crate::config::RunConfig;
use crate::detect::write_report;
use crate::manifest::ManifestBuilder;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Scenario preset the plots are drawn from.
    #[arg(long, default_value = "default")]
    pub preset: String,
    /// Sensing worker counts to measure.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 4])]
    pub workers: Vec<usize>,
    /// Rows per plot.
    #[arg(long, default_value_t = 500)]
    pub rows: usize,
    #[arg(long, default_value_t = 1024)]
    pub n_fft: usize,
    /// Plots released per worker count; the synthesized plots are cycled.
    #[arg(long, default_value_t = 1000)]
    pub plots: usize,
    /// Distinct synthesized plots (seeds 1..=N).
    #[arg(long, default_value_t = 3)]
    pub seeds: u64,
    /// Release plots at the stream rate instead of as soon as a bank is free.
    #[arg(long)]
    pub paced: bool,
    /// Also compare single-threaded latency and accuracy against the baseline detector.
    #[arg(long)]
    pub baseline: bool,
    /// Detector, runtime and baseline settings; the frontend section is replaced.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub const BENCH: &str = "bench.csv";
pub const COMPARISON: &str = "comparison.csv";
const BENCH_HEADER: &str =
    "workers,plots,deadline_ms,p50_ms,p90_ms,p99_ms,max_ms,mean_ms,fraction_met,realtime,overruns";

pub fn run(args: BenchArgs) -> Result<()> {
    let Some(preset) = Preset::from_name(&args.preset) else {
        bail!("unknown preset `{}`", args.preset);
    };
    if args.seeds == 0 || args.plots == 0 || args.workers.is_empty() {
        bail!("`seeds`, `plots` and `workers` must be non-empty");
    }
    let frontend = FrontendConfig::new(preset.sample_rate(), args.n_fft, args.rows)?;
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::new(frontend),
    };
    config.frontend = frontend;
    let mut manifest = ManifestBuilder::new("bench", &config);
    if let Some(path) = &args.config {
        manifest.input(path);
    }

    let mut cases: Vec<(TfPlot, Vec<BoundingBox>)> = Vec::new();
    for seed in 1..=args.seeds {
        let sc = preset.scenario(args.n_fft, args.rows, seed, None);
        let (samples, gt) = synthesize(&sc)?;
        for p in plots_from_samples(&samples, frontend)? {
            let t0 = p.start_time();
            let truth = gt.clip_time(t0, t0 + frontend.plot_span()).boxes;
            cases.push((p.detached(), truth));
        }
    }
    let plots: Vec<TfPlot> = cases.iter().map(|(p, _)| p.clone()).collect();

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let schedule = ReplayConfig {
        n_plots: args.plots,
        paced: args.paced,
    };
    let mut table = format!("{BENCH_HEADER}\n");
    let mut summary = String::new();
    let mut results = Vec::new();
    for &w in &args.workers {
        let runtime = RuntimeConfig {
            n_sensing_workers: w,
            ..config.runtime
        };
        let report = replay(&plots, schedule, config.detector, runtime, |_| Ok(()))
            .with_context(|| format!("replay with {w} workers"))?;
        for n in write_report(&args.out, &report, &format!("_w{w}"))? {
            manifest.output(&n);
        }
        let s = &report.summary;
        let ms = |x: f64| x * 1e3;
        let _ = writeln!(
            table,
            "{w},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{:.4},{},{}",
            s.count,
            ms(runtime.deadline_for(&frontend)),
            ms(s.p50),
            ms(s.p90),
            ms(s.p99),
            ms(s.max),
            ms(s.mean),
            s.fraction_met,
            s.realtime,
            report.overruns
        );
        let _ = writeln!(summary, "== {w} sensing workers ==\n{}", report.summary_text());
        results.push(json!({ "workers": w, "summary": s, "overruns": report.overruns }));
        eprintln!(
            "{w} workers: p99 {:.3} ms, {:.2}% met, {} overruns",
            ms(s.p99),
            100.0 * s.fraction_met,
            report.overruns
        );
    }
    std::fs::write(args.out.join(BENCH), &table)?;
    std::fs::write(args.out.join("summary.txt"), &summary)?;
    manifest.output(BENCH).output("summary.txt");

    let mut comparison = None;
    if args.baseline {
        config.baseline.validate_for(args.rows, args.n_fft)?;
        let c = compare(&cases, &config.detector, &config.baseline, 0.5)?;
        std::fs::write(args.out.join(COMPARISON), c.to_csv())?;
        manifest.output(COMPARISON);
        eprintln!("detector is {:.1}x faster than the baseline", c.speedup());
        comparison = Some(json!({ "speedup": c.speedup(), "rows": c.rows }));
    }
    manifest
        .results(json!({ "workers": results, "comparison": comparison }))
        .write(&args.out)?;
    print!("{table}");
    Ok(())
}

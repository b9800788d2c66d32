use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde_json::{json, Value};
use specsense::metrics::{evaluate_plots, EvalResult};
use specsense::signals::read_gt;
use specsense::BoundingBox;

use crate::config::RunConfig;
use crate::detections::read_detections;
use crate::manifest::{ManifestBuilder, MANIFEST_FILE};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Detection CSV written by `detect`.
    #[arg(long)]
    pub detections: PathBuf,
    /// Ground-truth JSON written by `synth`.
    #[arg(long)]
    pub truth: PathBuf,
    /// Run configuration used for detection; gives the plot span.
    #[arg(long)]
    pub config: PathBuf,
    /// IoU thresholds to score at.
    #[arg(long, value_delimiter = ',', default_values_t = default_thetas())]
    pub thetas: Vec<f64>,
    /// Number of plots processed; read from the detection run's manifest when omitted.
    #[arg(long)]
    pub plots: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn default_thetas() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

pub const METRICS: &str = "metrics.csv";

/// The plot count recorded next to a detection file.
fn plots_from_manifest(detections: &Path) -> Result<u64> {
    let path = detections
        .parent()
        .unwrap_or(Path::new("."))
        .join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).with_context(|| {
        format!(
            "no --plots given and no detection manifest at {}",
            path.display()
        )
    })?;
    let m: Value = serde_json::from_str(&text)?;
    m["results"]["plots"]
        .as_u64()
        .with_context(|| format!("{} records no plot count", path.display()))
}

pub fn run(args: EvalArgs) -> Result<()> {
    let config = RunConfig::load(&args.config)?;
    for &t in &args.thetas {
        if !(0.0..=1.0).contains(&t) {
            bail!("invalid `thetas`: {t} is outside [0, 1]");
        }
    }
    let n_plots = match args.plots {
        Some(n) => n,
        None => plots_from_manifest(&args.detections)?,
    };
    let rows = read_detections(
        File::open(&args.detections)
            .with_context(|| format!("opening {}", args.detections.display()))?,
    )?;
    let gt = read_gt(&args.truth).with_context(|| format!("reading {}", args.truth.display()))?;

    let span = config.frontend.plot_span();
    let mut per_plot: Vec<Vec<BoundingBox>> = vec![Vec::new(); n_plots as usize];
    let mut outside = 0usize;
    for r in &rows {
        let Some(boxes) = per_plot.get_mut(r.plot_index as usize) else {
            bail!(
                "detection for plot {} but only {n_plots} plots were processed",
                r.plot_index
            );
        };
        let (t0, t1) = (r.plot_index as f64 * span, (r.plot_index + 1) as f64 * span);
        let eps = 1e-9 * span.max(1.0);
        if r.t0_s < t0 - eps || r.t1_s > t1 + eps {
            outside += 1;
        }
        boxes.push(r.bounding_box());
    }
    if outside > 0 {
        eprintln!("warning: {outside} detections extend outside their plot's time window");
    }
    let results = evaluate_plots(
        &gt.boxes,
        per_plot
            .iter()
            .enumerate()
            .map(|(i, b)| (i as f64 * span, (i + 1) as f64 * span, b.as_slice())),
        &args.thetas,
    );

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let mut csv = String::from(EvalResult::CSV_HEADER);
    csv.push('\n');
    for r in &results {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    std::fs::write(args.out.join(METRICS), &csv)?;
    ManifestBuilder::new("eval", &config)
        .input(&args.detections)
        .input(&args.truth)
        .input(&args.config)
        .output(METRICS)
        .results(json!({ "plots": n_plots, "detections": rows.len(), "metrics": results }))
        .write(&args.out)?;
    print!("{csv}");
    Ok(())
}

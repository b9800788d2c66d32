use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::Args;
use serde_json::json;
use specsense::frontend::{DatagramConfig, FileSource, IqChunk, UdpSource};
use specsense::runtime::{run as run_pipeline, RunReport};
use specsense::signals::SampleFormat;

use crate::config::RunConfig;
use crate::detections::{DetectionRow, DetectionWriter};
use crate::manifest::ManifestBuilder;

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Raw IQ file to replay.
    #[arg(long, required_unless_present = "listen", conflicts_with = "listen")]
    pub input: Option<PathBuf>,
    /// UDP address to receive sequenced datagrams on, e.g. 127.0.0.1:5000.
    #[arg(long)]
    pub listen: Option<String>,
    /// Release file samples at the configured sample rate instead of as fast as possible.
    #[arg(long, requires = "input")]
    pub paced: bool,
    /// Overrides the sample format from the config.
    #[arg(long)]
    pub format: Option<SampleFormat>,
    #[arg(long)]
    pub out: PathBuf,
}

pub const DETECTIONS: &str = "detections.csv";

/// Writes the latency table, CCDF and summary of a run into `dir`.
pub fn write_report(dir: &std::path::Path, report: &RunReport, suffix: &str) -> Result<[String; 3]> {
    let names = [
        format!("latency{suffix}.csv"),
        format!("ccdf{suffix}.csv"),
        format!("summary{suffix}.txt"),
    ];
    std::fs::write(dir.join(&names[0]), report.records_csv())?;
    std::fs::write(dir.join(&names[1]), report.ccdf_csv())?;
    std::fs::write(dir.join(&names[2]), report.summary_text())?;
    Ok(names)
}

pub fn run(args: DetectArgs) -> Result<()> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(f) = args.format {
        config.input.format = f;
    }
    let mut manifest = ManifestBuilder::new("detect", &config);
    manifest.input(&args.config);
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let fe = config.frontend;
    let source: Box<dyn Iterator<Item = specsense::Result<IqChunk>> + Send> =
        match (&args.input, &args.listen) {
            (Some(path), _) => {
                manifest.input(path);
                let src = FileSource::open(path, config.input.format, fe.n_fft)
                    .with_context(|| format!("opening {}", path.display()))?;
                if args.paced {
                    Box::new(src.paced(fe.fs))
                } else {
                    Box::new(src)
                }
            }
            (None, Some(addr)) => {
                let dgram = DatagramConfig {
                    format: config.input.format,
                    samples_per_datagram: config.samples_per_datagram(),
                };
                let idle = Duration::from_secs_f64(config.input.idle_timeout_s);
                let src = UdpSource::bind(addr.as_str(), fe.n_fft, dgram, Some(idle))
                    .with_context(|| format!("binding {addr}"))?;
                eprintln!("listening on {}", src.local_addr()?);
                Box::new(src)
            }
            (None, None) => unreachable!("clap requires one of the two"),
        };

    let file = File::create(args.out.join(DETECTIONS))?;
    let mut writer = DetectionWriter::new(BufWriter::new(file))?;
    let mut n_boxes = 0usize;
    let mut write_err = None;
    let report = run_pipeline(source, fe, config.detector, config.runtime, |d| {
        for b in &d.boxes {
            if let Err(e) = writer.write(&DetectionRow::new(d.plot_index, b)) {
                write_err = Some(e);
                return Err(specsense::Error::Worker("could not write detections".into()));
            }
        }
        n_boxes += d.boxes.len();
        Ok(())
    });
    if let Some(e) = write_err {
        return Err(e.context("writing detections"));
    }
    let report = report.context("detection run failed")?;
    writer.finish()?;

    let names = write_report(&args.out, &report, "")?;
    let s = &report.summary;
    manifest.output(DETECTIONS);
    for n in &names {
        manifest.output(n);
    }
    manifest
        .results(json!({
            "plots": s.count,
            "boxes": n_boxes,
            "overruns": report.overruns,
            "lost_chunks": report.lost_chunks,
            "dropped_chunks": report.dropped_chunks,
            "summary": s,
        }))
        .write(&args.out)?;
    print!("{}", report.summary_text());
    if report.overruns > 0 {
        eprintln!("warning: {} plots lost to buffer overruns", report.overruns);
    }
    Ok(())
}

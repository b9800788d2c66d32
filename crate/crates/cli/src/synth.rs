use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde_json::json;
use specsense::frontend::FrontendConfig;
use specsense::signals::suite::Preset;
use specsense::signals::{
    load_scenario, synthesize, write_gt, write_iq_as, SampleFormat, Scenario, ScenarioFile,
};

use crate::config::RunConfig;
use crate::manifest::ManifestBuilder;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scenario file (TOML).
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    pub scenario: Option<PathBuf>,
    /// Built-in scenario: sparse, default, control, dense-mixed, dense-noise-like, wideband.
    #[arg(long)]
    pub preset: Option<String>,
    /// Overrides the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Gives every preset emitter this SNR instead of its nominal one.
    #[arg(long, requires = "preset")]
    pub snr_db: Option<f64>,
    /// Consecutive preset windows to render.
    #[arg(long, default_value_t = 1, requires = "preset")]
    pub plots: usize,
    /// FFT size written to the run config.
    #[arg(long, default_value_t = 1024)]
    pub n_fft: usize,
    /// Rows per plot written to the run config.
    #[arg(long, default_value_t = 2000)]
    pub rows: usize,
    #[arg(long, default_value = "cf32")]
    pub format: SampleFormat,
    #[arg(long)]
    pub out: PathBuf,
}

pub const SAMPLES_CF32: &str = "samples.32cf";
pub const SAMPLES_CI16: &str = "samples.16sc";
pub const TRUTH: &str = "truth.json";
pub const SCENARIO: &str = "scenario.toml";
pub const RUN_CONFIG: &str = "run.toml";

/// `plots` copies of a one-window preset scenario, back to back.
fn preset_scenario(args: &SynthArgs, name: &str) -> Result<Scenario> {
    let Some(preset) = Preset::from_name(name) else {
        bail!("unknown preset `{name}`");
    };
    if args.plots == 0 {
        bail!("invalid `plots`: must be at least 1");
    }
    let seed = args.seed.unwrap_or(1);
    let mut s = preset.scenario(args.n_fft, args.rows, seed, args.snr_db);
    let window = s.total_duration;
    let one = std::mem::take(&mut s.signals);
    for i in 0..args.plots {
        let offset = i as f64 * window;
        s.signals.extend(one.iter().map(|x| {
            let mut x = *x;
            x.t_start += offset;
            x
        }));
    }
    s.total_duration = window * args.plots as f64;
    Ok(s)
}

pub fn run(args: SynthArgs) -> Result<()> {
    let mut scenario = match (&args.scenario, &args.preset) {
        (Some(path), _) => load_scenario(path)
            .with_context(|| format!("loading scenario {}", path.display()))?,
        (None, Some(name)) => preset_scenario(&args, name)?,
        (None, None) => unreachable!("clap requires one of the two"),
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    scenario.validate().context("invalid scenario")?;
    let frontend = FrontendConfig::new(scenario.fs, args.n_fft, args.rows)
        .context("invalid frontend settings")?;

    let (samples, gt) = synthesize(&scenario)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let samples_name = match args.format {
        SampleFormat::Cf32 => SAMPLES_CF32,
        SampleFormat::Ci16 => SAMPLES_CI16,
    };
    write_iq_as(args.out.join(samples_name), &samples, args.format)?;
    write_gt(args.out.join(TRUTH), &gt)?;
    let scenario_text = toml::to_string_pretty(&ScenarioFile::from(&scenario))?;
    std::fs::write(args.out.join(SCENARIO), scenario_text)?;
    let mut run = RunConfig::new(frontend);
    run.input.format = args.format;
    std::fs::write(args.out.join(RUN_CONFIG), run.to_toml())?;

    let mut m = ManifestBuilder::new("synth", &scenario);
    if let Some(path) = &args.scenario {
        m.input(path);
    }
    m.output(samples_name)
        .output(TRUTH)
        .output(SCENARIO)
        .output(RUN_CONFIG)
        .results(json!({
            "samples": samples.len(),
            "signals": gt.len(),
            "plots": samples.len() / (args.n_fft * args.rows),
        }))
        .write(&args.out)?;
    eprintln!(
        "wrote {} samples and {} ground-truth boxes to {}",
        samples.len(),
        gt.len(),
        args.out.display()
    );
    Ok(())
}

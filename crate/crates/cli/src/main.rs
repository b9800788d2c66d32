//! `specsense`: synthesize IQ scenarios, run the detector on files or UDP
//! streams, score detections against ground truth and benchmark latency.

mod bench;
mod config;
mod detect;
mod detections;
mod eval;
mod manifest;
mod synth;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "specsense", version, about = "Wideband spectrum sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write synthetic IQ samples with their ground truth.
    Synth(synth::SynthArgs),
    /// Detect signals in an IQ file or UDP stream.
    Detect(detect::DetectArgs),
    /// Score detections against ground truth.
    Eval(eval::EvalArgs),
    /// Measure per-plot latency against the deadline.
    Bench(bench::BenchArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth::run(a),
        Command::Detect(a) => detect::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Bench(a) => bench::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

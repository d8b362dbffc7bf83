//! `celltraffic` — command-line front end for the cellular grid-traffic
//! toolkit.
//!
//! Every command reads `--key value` settings (optionally seeded from a
//! `--config FILE` of `key = value` lines) and writes its artifacts plus a
//! `run_config.txt` snapshot into `--out_dir`. All runs are deterministic:
//! repeating a command with the same settings reproduces every output file
//! byte for byte (wall-clock timing columns aside).

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use celltraffic_core::{Error, Result};
use config::Settings;

const USAGE: &str = "\
usage: celltraffic <command> [--config FILE] [--key value ...]

commands:
  ingest     materialize a snapshot series (committed fixture or raw TSV)
  graph      build a proximity or Gaussian-kernel graph from node coordinates
  embed      compute 2-D node embeddings (spectral or convolutional)
  classify   train the semi-supervised high-demand node classifier
  forecast   train and evaluate the sliding-window traffic forecaster
  sweep      run the forecaster across a memory or horizon grid

settings come from --key value pairs, optionally layered over a --config
file of `key = value` lines (command line wins). Every command requires
--out_dir and documents its resolved settings there as run_config.txt.

common keys per command:
  ingest    --fixture tiny_6|two_hotspots_100|periodic_200
            (or --raw FILE --geometry FILE) [--interval_minutes 10]
  graph     --data_dir DIR [--graph_kind epsilon|gaussian]
            [--edge_radius_m AUTO] [--sigma_m R] [--weight_floor 0.1]
  embed     --graph_dir DIR [--method laplacian|gcn_method1|gcn_method2]
            [--dims 2] [--hidden 16] [--seed 7] (--data_dir for gcn_*)
  classify  --data_dir DIR --graph_dir DIR [--method method1|method2]
            [--hidden 16] [--dropout 0.3] [--epochs 200] [--seed 7]
            [--visible_fraction 0.3] [--balance 0.5] [--label_channel 4]
            [--alpha 0.01]
  forecast  --data_dir DIR --graph_dir DIR [--method method1|method2]
            [--memory 6] [--horizon 3] [--target_channel 4] [--c1 8]
            [--c2 8] [--c3 4] [--kernel_len 3] [--epochs 50]
            [--batch_size 16] [--seed 7] [--alpha 0.001]
            [--train_fraction 0.8]
  sweep     forecast keys plus --sweep_kind memory|horizon --values 1,3,6
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        eprint!("{USAGE}");
        return ExitCode::from(2);
    }
    if args[0] == "help" || args[0] == "--help" || args[0] == "-h" {
        print!("{USAGE}");
        return ExitCode::SUCCESS;
    }
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_numeric() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(args: &[String]) -> Result<()> {
    type Runner = fn(&Settings) -> Result<()>;
    let (keys, runner): (&[&str], Runner) = match args[0].as_str() {
        "ingest" => (commands::ingest::KEYS, commands::ingest::run),
        "graph" => (commands::graph::KEYS, commands::graph::run),
        "embed" => (commands::embed::KEYS, commands::embed::run),
        "classify" => (commands::classify::KEYS, commands::classify::run),
        "forecast" => (commands::forecast::KEYS, commands::forecast::run),
        "sweep" => (commands::sweep::KEYS, commands::sweep::run),
        other => {
            return Err(Error::domain(format!(
                "unknown command `{other}`; expected ingest, graph, embed, classify, forecast, or sweep"
            )))
        }
    };
    let parsed = parse_overrides(&args[1..])?;
    let settings = Settings::load(parsed.config.as_deref(), &parsed.overrides, keys)?;
    runner(&settings)
}

/// Arguments after the command name: an optional config file and the
/// `--key value` overrides in order.
struct ParsedArgs {
    config: Option<PathBuf>,
    overrides: Vec<(String, String)>,
}

fn parse_overrides(args: &[String]) -> Result<ParsedArgs> {
    let mut config = None;
    let mut overrides = Vec::new();
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let key = arg.strip_prefix("--").ok_or_else(|| {
            Error::domain(format!("expected `--key value` pairs, got `{arg}`"))
        })?;
        let value = iter
            .next()
            .ok_or_else(|| Error::domain(format!("missing value after `--{key}`")))?;
        if key == "config" {
            config = Some(PathBuf::from(value));
        } else {
            overrides.push((key.to_string(), value.to_string()));
        }
    }
    Ok(ParsedArgs { config, overrides })
}

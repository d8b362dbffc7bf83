//! `celltraffic sweep` — retrain the forecaster across a grid of memory
//! lengths or forecast horizons and tabulate held-out error per point.
//!
//! Outputs `sweep.csv` (one row per grid value with RMSE, MAE, and seconds
//! per training epoch), a per-point loss history, and an error-vs-parameter
//! plot. Everything except the timing column is deterministic.

use celltraffic_core::forecast::{sweep_horizon, sweep_memory, SweepPoint};
use celltraffic_core::scalar::widen;
use celltraffic_core::{Error, Result};

use crate::commands::{forecast, write_text};
use crate::config::Settings;
use crate::svg;

pub const KEYS: &[&str] = &[
    "data_dir",
    "graph_dir",
    "method",
    "memory",
    "horizon",
    "target_channel",
    "c1",
    "c2",
    "c3",
    "kernel_len",
    "epochs",
    "batch_size",
    "seed",
    "alpha",
    "train_fraction",
    "sweep_kind",
    "values",
    "out_dir",
];

pub fn run(settings: &Settings) -> Result<()> {
    let out_dir = settings.require_path("out_dir")?;
    let sweep_kind = settings.str("sweep_kind", "memory");
    let values = settings.usize_list("values", "1,3,6")?;
    let s = forecast::load_setup(settings)?;

    let points: Vec<SweepPoint<f64>> = match sweep_kind.as_str() {
        "memory" => sweep_memory(
            &s.graph,
            &s.train,
            &s.eval,
            &values,
            s.horizon,
            s.target_channel,
            &s.cfg,
        )?,
        "horizon" => sweep_horizon(
            &s.graph,
            &s.train,
            &s.eval,
            s.memory,
            &values,
            s.target_channel,
            &s.cfg,
        )?,
        other => {
            return Err(Error::domain(format!(
                "unknown sweep_kind `{other}`; expected memory or horizon"
            )))
        }
    };

    let mut table = format!("{sweep_kind},rmse,mae,sec_per_epoch\n");
    for p in &points {
        table.push_str(&format!(
            "{},{},{},{}\n",
            p.param,
            widen(p.metrics.rmse),
            widen(p.metrics.mae),
            p.sec_per_epoch
        ));
        let mut history = String::from("epoch,loss\n");
        for (i, loss) in p.history.epoch_losses.iter().enumerate() {
            history.push_str(&format!("{},{}\n", i, loss));
        }
        write_text(&out_dir, &format!("history_{sweep_kind}_{}.csv", p.param), &history)?;
    }
    write_text(&out_dir, "sweep.csv", &table)?;

    let curve = |f: fn(&SweepPoint<f64>) -> f64| {
        points.iter().map(|p| (p.param as f64, f(p))).collect::<Vec<_>>()
    };
    let plot = svg::line_plot(
        &format!("held-out error vs. {sweep_kind}"),
        &sweep_kind,
        "error",
        &[
            ("rmse".to_string(), curve(|p| widen(p.metrics.rmse))),
            ("mae".to_string(), curve(|p| widen(p.metrics.mae))),
        ],
    );
    write_text(&out_dir, "sweep.svg", &plot)?;
    settings.write_resolved(&out_dir)?;

    for p in &points {
        println!(
            "{sweep_kind} {}: rmse {:.4}, mae {:.4}, {:.3} s/epoch",
            p.param,
            p.metrics.rmse,
            p.metrics.mae,
            p.sec_per_epoch
        );
    }
    println!("swept {} points -> {}", points.len(), out_dir.display());
    Ok(())
}

//! `celltraffic forecast` — sliding-window traffic forecasting.
//!
//! The series is split chronologically (`train_fraction`), a temporal-conv /
//! graph-conv / temporal-conv network is trained to map each `memory`-step
//! window onto the next `horizon` values of `target_channel`, and the held
//! out tail is scored with RMSE and MAE in original units. Outputs: metrics,
//! per-epoch losses, a reloadable checkpoint, and the loss curve.

use celltraffic_core::forecast::{
    clamp_kernel_len, evaluate_forecaster, save_forecast_model, train_forecaster,
    ForecastConfig,
};
use celltraffic_core::ingest::split_series;
use celltraffic_core::nn::AdamHyper;
use celltraffic_core::scalar::widen;
use celltraffic_core::{Error, Result, SnapshotSeries64};

use crate::commands::{check_same_nodes, load_graph_dir, load_series_dir, parse_propagation, write_text};
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
    "out_dir",
];

/// Settings shared between `forecast` and `sweep`.
pub struct ForecastSetup {
    pub cfg: ForecastConfig<f64>,
    pub memory: usize,
    pub horizon: usize,
    pub target_channel: usize,
    pub train: SnapshotSeries64,
    pub eval: SnapshotSeries64,
    pub graph: celltraffic_core::Graph64,
}

pub fn load_setup(settings: &Settings) -> Result<ForecastSetup> {
    let data_dir = settings.require_path("data_dir")?;
    let graph_dir = settings.require_path("graph_dir")?;
    let cfg = ForecastConfig::<f64> {
        kind: parse_propagation(&settings.str("method", "method1"))?,
        c1: settings.usize("c1", 8)?,
        c2: settings.usize("c2", 8)?,
        c3: settings.usize("c3", 4)?,
        kernel_len: settings.usize("kernel_len", 3)?,
        epochs: settings.usize("epochs", 50)?,
        batch_size: settings.usize("batch_size", 16)?,
        seed: settings.u64("seed", 7)?,
        adam: AdamHyper::with_alpha(settings.f64("alpha", 1e-3)?),
    };
    let memory = settings.usize("memory", 6)?;
    let horizon = settings.usize("horizon", 3)?;
    let target_channel = settings.usize("target_channel", 4)?;
    let train_fraction = settings.f64("train_fraction", 0.8)?;

    let series = load_series_dir(&data_dir)?;
    let graph = load_graph_dir(&graph_dir)?;
    check_same_nodes(&graph, &series)?;
    if target_channel >= series.n_features() {
        return Err(Error::domain(format!(
            "target_channel {target_channel} out of range; data has {} channels",
            series.n_features()
        )));
    }
    let (train, eval) = split_series(&series, train_fraction)?;
    Ok(ForecastSetup {
        cfg,
        memory,
        horizon,
        target_channel,
        train,
        eval,
        graph,
    })
}

pub fn run(settings: &Settings) -> Result<()> {
    let out_dir = settings.require_path("out_dir")?;
    let s = load_setup(settings)?;
    settings.record("kernel_len_effective", clamp_kernel_len(s.cfg.kernel_len, s.memory));

    let (model, history) = train_forecaster(
        &s.graph,
        &s.train,
        s.memory,
        s.horizon,
        s.target_channel,
        &s.cfg,
    )?;
    let metrics = evaluate_forecaster(&model, &s.graph, &s.eval)?;

    save_forecast_model(&model, &out_dir.join("model.ckpt"))?;
    write_text(
        &out_dir,
        "metrics.csv",
        &format!(
            "rmse,mae,n_windows\n{},{},{}\n",
            widen(metrics.rmse),
            widen(metrics.mae),
            metrics.n_windows
        ),
    )?;

    let mut out = String::from("epoch,loss,sec_per_epoch\n");
    for (i, loss) in history.epoch_losses.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", i, loss, history.sec_per_epoch[i]));
    }
    write_text(&out_dir, "history.csv", &out)?;

    let points: Vec<(f64, f64)> = history
        .epoch_losses
        .iter()
        .enumerate()
        .map(|(i, &l)| (i as f64, l))
        .collect();
    let plot = svg::line_plot(
        "forecaster training",
        "epoch",
        "mean window loss",
        &[("loss".to_string(), points)],
    );
    write_text(&out_dir, "loss.svg", &plot)?;
    settings.write_resolved(&out_dir)?;

    println!(
        "evaluated {} windows: rmse {:.4}, mae {:.4} -> {}",
        metrics.n_windows,
        metrics.rmse,
        metrics.mae,
        out_dir.display()
    );
    Ok(())
}

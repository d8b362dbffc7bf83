//! `celltraffic classify` — semi-supervised high-demand cell detection.
//!
//! Cells are labeled high/low by thresholding their mean activity on
//! `label_channel` (threshold chosen so `balance` of the cells land high),
//! then only `visible_fraction` of the labels are shown to a two-layer
//! graph-convolutional classifier. Outputs: per-cell predictions, the
//! training curve, a reloadable model checkpoint, and a plot.

use celltraffic_core::classify::{
    choose_kappa, save_classifier_model, save_predictions, standardize_columns,
    threshold_labels, train_classifier, visibility_mask, ClassifierConfig, LabeledNodes,
};
use celltraffic_core::nn::AdamHyper;
use celltraffic_core::{Error, Result};

use crate::commands::{check_same_nodes, load_graph_dir, load_series_dir, parse_propagation, write_text};
use crate::config::Settings;
use crate::svg;

pub const KEYS: &[&str] = &[
    "data_dir",
    "graph_dir",
    "method",
    "hidden",
    "dropout",
    "epochs",
    "seed",
    "visible_fraction",
    "balance",
    "label_channel",
    "alpha",
    "out_dir",
];

pub fn run(settings: &Settings) -> Result<()> {
    let data_dir = settings.require_path("data_dir")?;
    let graph_dir = settings.require_path("graph_dir")?;
    let out_dir = settings.require_path("out_dir")?;

    let cfg = ClassifierConfig::<f64> {
        kind: parse_propagation(&settings.str("method", "method1"))?,
        hidden: settings.usize("hidden", 16)?,
        dropout_rate: settings.f64("dropout", 0.3)?,
        epochs: settings.usize("epochs", 200)?,
        seed: settings.u64("seed", 7)?,
        adam: AdamHyper::with_alpha(settings.f64("alpha", 1e-2)?),
    };
    let visible_fraction = settings.f64("visible_fraction", 0.3)?;
    let balance = settings.f64("balance", 0.5)?;
    let label_channel = settings.usize("label_channel", 4)?;

    let series = load_series_dir(&data_dir)?;
    let graph = load_graph_dir(&graph_dir)?;
    check_same_nodes(&graph, &series)?;
    if label_channel >= series.n_features() {
        return Err(Error::domain(format!(
            "label_channel {label_channel} out of range; data has {} channels",
            series.n_features()
        )));
    }

    let mean = series.mean_snapshot().features;
    let values: Vec<f64> = (0..graph.n_nodes()).map(|i| mean.at2(i, label_channel)).collect();
    let kappa = choose_kappa(&values, balance)?;
    settings.record("kappa", kappa);
    let labels = threshold_labels(&values, kappa);
    let visible = visibility_mask(graph.n_nodes(), visible_fraction, cfg.seed)?;
    let labeled = LabeledNodes::new(labels, visible, kappa)?;

    let (x, _, _) = standardize_columns(&mean)?;
    let (model, stats) = train_classifier(&graph, &x, &labeled, &cfg)?;
    let probs = celltraffic_core::classify::predict(&model, &graph, &x)?;

    save_predictions(
        graph.node_ids(),
        &labeled.labels,
        &probs,
        &out_dir.join("predictions.csv"),
    )?;
    save_classifier_model(&model, &out_dir.join("model.ckpt"))?;

    let mut history = String::from("epoch,loss,train_accuracy,holdout_accuracy\n");
    for s in &stats {
        history.push_str(&format!(
            "{},{},{},{}\n",
            s.epoch, s.loss, s.train_accuracy, s.holdout_accuracy
        ));
    }
    write_text(&out_dir, "history.csv", &history)?;

    let curve = |f: fn(&celltraffic_core::classify::EpochStats<f64>) -> f64| {
        stats.iter().map(|s| (s.epoch as f64, f(s))).collect::<Vec<_>>()
    };
    let plot = svg::line_plot(
        "classifier training",
        "epoch",
        "loss / accuracy",
        &[
            ("loss".to_string(), curve(|s| s.loss)),
            ("train accuracy".to_string(), curve(|s| s.train_accuracy)),
            ("holdout accuracy".to_string(), curve(|s| s.holdout_accuracy)),
        ],
    );
    write_text(&out_dir, "training.svg", &plot)?;
    settings.write_resolved(&out_dir)?;

    let last = stats.last().expect("at least one epoch");
    println!(
        "trained {} epochs: loss {:.4}, train accuracy {:.3}, holdout accuracy {:.3} -> {}",
        stats.len(),
        last.loss,
        last.train_accuracy,
        last.holdout_accuracy,
        out_dir.display()
    );
    Ok(())
}

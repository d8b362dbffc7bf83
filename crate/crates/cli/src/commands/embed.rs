//! `celltraffic embed` — node embeddings for a built graph.
//!
//! `laplacian` takes the first non-null eigenvectors of the normalized
//! Laplacian (and also writes the full spectrum). `gcn_method1` /
//! `gcn_method2` push the standardized per-cell mean activity through a
//! seeded, untrained two-layer convolution stack over the corresponding
//! propagation matrix; that needs `--data_dir` for the activity features.

use celltraffic_core::classify::standardize_columns;
use celltraffic_core::embedding::{
    gcn_embed, laplacian_eigenmap, save_embedding, EmbeddingMethod,
};
use celltraffic_core::graph::{propagation, PropagationKind};
use celltraffic_core::scalar::widen;
use celltraffic_core::{Error, Result};

use crate::commands::{check_same_nodes, load_graph_dir, load_series_dir, write_text};
use crate::config::Settings;
use crate::svg;

pub const KEYS: &[&str] = &[
    "data_dir",
    "graph_dir",
    "method",
    "dims",
    "hidden",
    "seed",
    "out_dir",
];

pub fn run(settings: &Settings) -> Result<()> {
    let graph_dir = settings.require_path("graph_dir")?;
    let out_dir = settings.require_path("out_dir")?;
    let method_name = settings.str("method", "laplacian");
    let dims = settings.usize("dims", 2)?;

    let graph = load_graph_dir(&graph_dir)?;
    let result = match method_name.as_str() {
        "laplacian" => laplacian_eigenmap(&graph, dims)?,
        "gcn_method1" | "gcn_method2" => {
            let (method, kind) = if method_name == "gcn_method1" {
                (EmbeddingMethod::GcnMethod1, PropagationKind::Method1)
            } else {
                (EmbeddingMethod::GcnMethod2, PropagationKind::Method2)
            };
            let data_dir = settings.require_path("data_dir")?;
            let hidden = settings.usize("hidden", 16)?;
            let seed = settings.u64("seed", 7)?;
            let series = load_series_dir(&data_dir)?;
            check_same_nodes(&graph, &series)?;
            let (x, _, _) = standardize_columns(&series.mean_snapshot().features)?;
            let l = propagation(&graph, kind)?;
            gcn_embed(&l.matrix, &x, &[hidden, dims], seed, method)?
        }
        other => {
            return Err(Error::domain(format!(
                "unknown method `{other}`; expected laplacian, gcn_method1, or gcn_method2"
            )))
        }
    };

    save_embedding(graph.node_ids(), &result.coords, &out_dir.join("embedding.csv"))?;
    if let Some(values) = &result.eigenvalues {
        let mut out = String::from("index,eigenvalue\n");
        for (i, v) in values.iter().enumerate() {
            out.push_str(&format!("{i},{}\n", widen(*v)));
        }
        write_text(&out_dir, "eigenvalues.csv", &out)?;
    }

    // scatter the first two embedding axes (or index vs. value in 1-D)
    let points: Vec<(f64, f64)> = (0..result.coords.rows())
        .map(|i| {
            if result.coords.cols() >= 2 {
                (result.coords.at2(i, 0), result.coords.at2(i, 1))
            } else {
                (i as f64, result.coords.at2(i, 0))
            }
        })
        .collect();
    let (x_label, y_label) = if result.coords.cols() >= 2 {
        ("component 1", "component 2")
    } else {
        ("node index", "component 1")
    };
    let plot = svg::scatter_plot(
        &format!("{method_name} embedding"),
        x_label,
        y_label,
        &[("cells".to_string(), points)],
    );
    write_text(&out_dir, "embedding.svg", &plot)?;
    settings.write_resolved(&out_dir)?;
    println!(
        "embedded {} nodes into {} dimensions ({}) -> {}",
        graph.n_nodes(),
        result.coords.cols(),
        method_name,
        out_dir.display()
    );
    Ok(())
}

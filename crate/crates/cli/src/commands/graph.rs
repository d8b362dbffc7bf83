//! `celltraffic graph` — build a spatial graph over the cells of a data
//! directory and save it as `nodes.csv` + `edges.csv`.
//!
//! Two constructions: `epsilon` connects nodes strictly closer than
//! `edge_radius_m` with unit weight; `gaussian` weights pairs by
//! `exp(-d^2 / sigma_m^2)` and keeps weights above `weight_floor`. When no
//! radius is given, twice the median nearest-neighbor spacing is used — a
//! scale at which grid-like layouts connect each cell to its immediate
//! neighborhood without going dense.

use celltraffic_core::graph::{
    build_epsilon_graph, build_gaussian_graph, load_coords, median_nn_distance, save_coords,
    save_edges,
};
use celltraffic_core::{Error, Result};

use crate::config::Settings;

pub const KEYS: &[&str] = &[
    "data_dir",
    "graph_kind",
    "edge_radius_m",
    "sigma_m",
    "weight_floor",
    "out_dir",
];

pub fn run(settings: &Settings) -> Result<()> {
    let data_dir = settings.require_path("data_dir")?;
    let out_dir = settings.require_path("out_dir")?;
    let kind = settings.str("graph_kind", "epsilon");

    let (node_ids, coords) = load_coords::<f64>(&data_dir.join("coords.csv"))?;
    let edge_radius_m = match settings.opt_f64("edge_radius_m")? {
        Some(r) => r,
        None => 2.0 * median_nn_distance(&coords)?,
    };
    settings.record("edge_radius_m", edge_radius_m);

    let graph = match kind.as_str() {
        "epsilon" => build_epsilon_graph(node_ids, coords, edge_radius_m)?,
        "gaussian" => {
            let sigma_m = settings.opt_f64("sigma_m")?.unwrap_or(edge_radius_m);
            settings.record("sigma_m", sigma_m);
            let weight_floor = settings.f64("weight_floor", 0.1)?;
            build_gaussian_graph(node_ids, coords, sigma_m, weight_floor)?
        }
        other => {
            return Err(Error::domain(format!(
                "unknown graph_kind `{other}`; expected epsilon or gaussian"
            )))
        }
    };

    settings.record("n_nodes", graph.n_nodes());
    settings.record("n_edges", graph.n_edges());

    save_coords(graph.node_ids(), graph.coords(), &out_dir.join("nodes.csv"))?;
    save_edges(&graph, &out_dir.join("edges.csv"))?;
    settings.write_resolved(&out_dir)?;
    println!(
        "built {} graph: {} nodes, {} edges -> {}",
        kind,
        graph.n_nodes(),
        graph.n_edges(),
        out_dir.display()
    );
    Ok(())
}

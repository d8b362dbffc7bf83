//! The six subcommands plus the loaders they share.

pub mod classify;
pub mod embed;
pub mod forecast;
pub mod graph;
pub mod ingest;
pub mod sweep;

use std::path::Path;

use celltraffic_core::graph::{load_coords, load_edges, Graph, PropagationKind};
use celltraffic_core::ingest::load_cache;
use celltraffic_core::{Error, Graph64, Result, SnapshotSeries64};

/// Rebuild a graph from the `nodes.csv` + `edges.csv` pair the `graph`
/// command writes.
pub fn load_graph_dir(dir: &Path) -> Result<Graph64> {
    let (ids, coords) = load_coords::<f64>(&dir.join("nodes.csv"))?;
    let edges = load_edges::<f64>(&dir.join("edges.csv"))?;
    Graph::from_edge_list(ids, coords, &edges)
}

/// Load the snapshot cache the `ingest` command writes.
pub fn load_series_dir(dir: &Path) -> Result<SnapshotSeries64> {
    load_cache::<f64>(dir)
}

/// Graph and series must describe the same cells in the same order for any
/// node-aligned computation to make sense.
pub fn check_same_nodes(graph: &Graph64, series: &SnapshotSeries64) -> Result<()> {
    if graph.node_ids() != series.node_ids() {
        return Err(Error::domain(
            "graph_dir and data_dir disagree on the cell id set; \
             rebuild the graph from this data directory",
        ));
    }
    Ok(())
}

pub fn parse_propagation(name: &str) -> Result<PropagationKind> {
    match name {
        "method1" => Ok(PropagationKind::Method1),
        "method2" => Ok(PropagationKind::Method2),
        other => Err(Error::domain(format!(
            "unknown propagation `{other}`; expected method1 or method2"
        ))),
    }
}

/// Write `text` into `dir/name` through the shared atomic writer.
pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    celltraffic_core::bytes::atomic_write(&dir.join(name), text.as_bytes())
}

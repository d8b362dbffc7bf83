//! `celltraffic ingest` — materialize a snapshot series into a data
//! directory: per-snapshot `.bin` payloads, `manifest.json`, and the node
//! coordinates as `coords.csv`.
//!
//! The source is either one of the committed synthetic fixtures
//! (`--fixture`) or a raw activity TSV plus a grid-geometry CSV
//! (`--raw` / `--geometry`).

use celltraffic_core::graph::save_coords;
use celltraffic_core::ingest::{build_snapshots, parse_cdr_file, save_cache, GridGeometry};
use celltraffic_core::synth::{fixture, FixtureName};
use celltraffic_core::{Error, Result};

use crate::config::Settings;

pub const KEYS: &[&str] = &["fixture", "raw", "geometry", "interval_minutes", "out_dir"];

pub fn run(settings: &Settings) -> Result<()> {
    let out_dir = settings.require_path("out_dir")?;
    let fixture_name = settings.opt_str("fixture");
    let raw = settings.opt_path("raw");

    let (node_ids, coords, series) = match (fixture_name, raw) {
        (Some(name), None) => {
            let f = fixture::<f64>(name.parse::<FixtureName>()?)?;
            (f.node_ids, f.coords, f.series)
        }
        (None, Some(raw_path)) => {
            let geometry = settings.require_path("geometry")?;
            let minutes = settings.i64("interval_minutes", 10)?;
            if minutes <= 0 {
                return Err(Error::domain("interval_minutes must be positive"));
            }
            let grid = GridGeometry::load_csv(&geometry, None)?;
            let records = parse_cdr_file(&raw_path)?;
            let series = build_snapshots::<f64>(records, &grid, minutes * 60_000)?;
            let node_ids = grid.node_ids();
            let coords = grid.planar_coords::<f64>(&node_ids)?;
            (node_ids, coords, series)
        }
        (Some(_), Some(_)) => {
            return Err(Error::domain("pass either --fixture or --raw, not both"))
        }
        (None, None) => {
            return Err(Error::domain(
                "pass --fixture NAME or --raw FILE --geometry FILE",
            ))
        }
    };

    settings.record("n_nodes", node_ids.len());
    settings.record("n_snapshots", series.len());
    settings.record("n_channels", series.n_features());

    save_cache(&series, &out_dir)?;
    save_coords(&node_ids, &coords, &out_dir.join("coords.csv"))?;
    settings.write_resolved(&out_dir)?;
    println!(
        "ingested {} snapshots x {} cells x {} channels at {} min intervals into {}",
        series.len(),
        node_ids.len(),
        series.n_features(),
        series.interval_ms() / 60_000,
        out_dir.display()
    );
    Ok(())
}

//! Raw record parsing, grid geometry, snapshot assembly and the on-disk
//! snapshot cache.
//!
//! The input feed is tab-separated activity records per (cell, interval,
//! country code). Ingestion sums duplicates, zero-fills every missing
//! (cell, interval) combination and emits a gap-free [`SnapshotSeries`] whose
//! row order is ascending cell id.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bytes;
use crate::error::{Error, Result};
use crate::scalar::{cast, widen, Scalar};
use crate::tensor::Tensor;

/// Activity channels carried by each record, in column order.
pub const CHANNELS: [&str; 5] = ["sms_in", "sms_out", "call_in", "call_out", "internet"];

/// Resolve a channel name (or numeric index) to its column index.
pub fn channel_index(name: &str) -> Result<usize> {
    if let Some(i) = CHANNELS.iter().position(|&c| c == name) {
        return Ok(i);
    }
    if let Ok(i) = name.parse::<usize>() {
        if i < CHANNELS.len() {
            return Ok(i);
        }
    }
    Err(Error::domain(format!(
        "unknown channel `{name}` (expected one of {CHANNELS:?} or an index < {})",
        CHANNELS.len()
    )))
}

/// One parsed input line: activity intensities for a grid cell over one
/// aggregation interval. Values for the same (cell, interval) arriving split
/// by country code are summed later, at snapshot assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficRecord {
    pub cell_id: u64,
    pub interval_start_ms: i64,
    pub activity: [f64; 5],
}

/// Cell centroids in WGS84 degrees plus the projection origin.
#[derive(Debug, Clone)]
pub struct GridGeometry {
    cells: BTreeMap<u64, (f64, f64)>,
    origin: (f64, f64),
}

fn check_lon_lat(lon: f64, lat: f64) -> Result<()> {
    if !(-180.0..=180.0).contains(&lon) || !lon.is_finite() {
        return Err(Error::domain(format!("longitude {lon} outside [-180, 180]")));
    }
    if !(-90.0..=90.0).contains(&lat) || !lat.is_finite() {
        return Err(Error::domain(format!("latitude {lat} outside [-90, 90]")));
    }
    Ok(())
}

impl GridGeometry {
    pub fn new(cells: BTreeMap<u64, (f64, f64)>, origin: (f64, f64)) -> Result<GridGeometry> {
        for (&id, &(lon, lat)) in &cells {
            if id < 1 {
                return Err(Error::domain("grid cell_id must be >= 1".to_string()));
            }
            check_lon_lat(lon, lat)?;
        }
        check_lon_lat(origin.0, origin.1)?;
        Ok(GridGeometry { cells, origin })
    }

    /// Origin at the arithmetic mean of the cell centroids.
    pub fn with_mean_origin(cells: BTreeMap<u64, (f64, f64)>) -> Result<GridGeometry> {
        if cells.is_empty() {
            return Err(Error::domain("grid has no cells"));
        }
        let n = cells.len() as f64;
        let (slon, slat) = cells
            .values()
            .fold((0.0, 0.0), |(a, b), &(lon, lat)| (a + lon, b + lat));
        GridGeometry::new(cells, (slon / n, slat / n))
    }

    /// Parse a `cell_id,lon,lat` CSV. `origin = None` uses the centroid mean.
    pub fn load_csv(path: &Path, origin: Option<(f64, f64)>) -> Result<GridGeometry> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cells = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 {
                if line.trim() != "cell_id,lon,lat" {
                    return Err(Error::format(path, "expected header `cell_id,lon,lat`"));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected 3 comma-separated fields, got {}", parts.len()),
                });
            }
            let id: u64 = parts[0].trim().parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("bad cell_id `{}`", parts[0]),
            })?;
            let lon: f64 = parts[1].trim().parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("bad longitude `{}`", parts[1]),
            })?;
            let lat: f64 = parts[2].trim().parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("bad latitude `{}`", parts[2]),
            })?;
            if cells.insert(id, (lon, lat)).is_some() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("duplicate cell_id {id}"),
                });
            }
        }
        match origin {
            Some(o) => GridGeometry::new(cells, o),
            None => GridGeometry::with_mean_origin(cells),
        }
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell_id: u64) -> bool {
        self.cells.contains_key(&cell_id)
    }

    /// Cell ids in ascending order; this is the node order of every snapshot.
    pub fn node_ids(&self) -> Vec<u64> {
        self.cells.keys().copied().collect()
    }

    /// Project every cell centroid to local planar meters, rows in the order
    /// of `node_ids`.
    pub fn planar_coords<T: Scalar>(&self, node_ids: &[u64]) -> Result<Tensor<T>> {
        let origin = (cast::<T>(self.origin.0), cast::<T>(self.origin.1));
        let mut data = Vec::with_capacity(node_ids.len() * 2);
        for &id in node_ids {
            let &(lon, lat) = self
                .cells
                .get(&id)
                .ok_or_else(|| Error::MissingCells(vec![id]))?;
            let (x, y) = project_wgs84(cast::<T>(lon), cast::<T>(lat), origin)?;
            data.push(x);
            data.push(y);
        }
        Tensor::new(&[node_ids.len(), 2], data)
    }
}

/// Mean Earth radius used by the projection, in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Local equirectangular projection about `origin`:
/// `y = R * dlat_rad`, `x = R * cos(lat0) * dlon_rad` with R = 6371000 m.
/// The exact formula is normative so distances are reproducible.
pub fn project_wgs84<T: Scalar>(lon: T, lat: T, origin: (T, T)) -> Result<(T, T)> {
    check_lon_lat(widen(lon), widen(lat))?;
    check_lon_lat(widen(origin.0), widen(origin.1))?;
    let r = cast::<T>(EARTH_RADIUS_M);
    let deg: T = cast(std::f64::consts::PI / 180.0);
    let y = r * (lat - origin.1) * deg;
    let x = r * (origin.1 * deg).cos() * (lon - origin.0) * deg;
    Ok((x, y))
}

/// All node features at one interval start. Row order is fixed by the series.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    pub timestamp_ms: i64,
    /// N x d activity matrix, rows ordered by ascending cell id.
    pub features: Tensor<T>,
}

/// Time-ordered stack of snapshots with uniform spacing and shared node set.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSeries<T> {
    interval_ms: i64,
    node_ids: Vec<u64>,
    snapshots: Vec<Snapshot<T>>,
}

impl<T: Scalar> SnapshotSeries<T> {
    pub fn new(
        interval_ms: i64,
        node_ids: Vec<u64>,
        snapshots: Vec<Snapshot<T>>,
    ) -> Result<SnapshotSeries<T>> {
        if interval_ms <= 0 {
            return Err(Error::domain("interval must be positive"));
        }
        if snapshots.is_empty() {
            return Err(Error::domain("series has no snapshots"));
        }
        let d = snapshots[0].features.shape().to_vec();
        if d[0] != node_ids.len() {
            return Err(Error::shape("SnapshotSeries", &[node_ids.len()], &d));
        }
        for (i, s) in snapshots.iter().enumerate() {
            if s.features.shape() != d.as_slice() {
                return Err(Error::shape("SnapshotSeries", &d, s.features.shape()));
            }
            s.features.check_finite("snapshot features")?;
            let expect = snapshots[0].timestamp_ms + i as i64 * interval_ms;
            if s.timestamp_ms != expect {
                return Err(Error::domain(format!(
                    "snapshot {i} at {} breaks uniform spacing (expected {expect})",
                    s.timestamp_ms
                )));
            }
        }
        Ok(SnapshotSeries {
            interval_ms,
            node_ids,
            snapshots,
        })
    }

    pub fn interval_ms(&self) -> i64 {
        self.interval_ms
    }

    pub fn start_ms(&self) -> i64 {
        self.snapshots[0].timestamp_ms
    }

    pub fn node_ids(&self) -> &[u64] {
        &self.node_ids
    }

    /// Number of snapshots (T).
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.snapshots[0].features.shape()[1]
    }

    pub fn snapshot(&self, i: usize) -> &Snapshot<T> {
        &self.snapshots[i]
    }

    pub fn snapshots(&self) -> &[Snapshot<T>] {
        &self.snapshots
    }

    /// Per-(node, channel) mean over time, reported at the series start time.
    pub fn mean_snapshot(&self) -> Snapshot<T> {
        let shape = self.snapshots[0].features.shape().to_vec();
        let mut acc = Tensor::<T>::zeros(&shape);
        for s in &self.snapshots {
            acc = acc.add(&s.features).expect("uniform shapes");
        }
        let scale = T::one() / cast::<T>(self.snapshots.len() as f64);
        Snapshot {
            timestamp_ms: self.start_ms(),
            features: acc.scale(scale),
        }
    }

    /// Restrict every snapshot to a channel subset (order preserved).
    pub fn select_channels(&self, subset: &[usize]) -> Result<SnapshotSeries<T>> {
        if subset.is_empty() {
            return Err(Error::domain("channel subset is empty"));
        }
        let snapshots = self
            .snapshots
            .iter()
            .map(|s| {
                Ok(Snapshot {
                    timestamp_ms: s.timestamp_ms,
                    features: s.features.select_columns(subset)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SnapshotSeries::new(self.interval_ms, self.node_ids.clone(), snapshots)
    }
}

/// Parse one tab-separated CDR line:
/// `cell_id  interval_start_ms  country_code  sms_in  sms_out  call_in  call_out  internet`.
/// Empty numeric cells read as zero. `lineno` (1-based) is only used for error
/// reporting; the country code is validated but not stored.
pub fn parse_cdr_line(line: &str, lineno: usize) -> Result<TrafficRecord> {
    let parse_err = |message: String| Error::Parse {
        line: lineno,
        message,
    };
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 8 {
        return Err(parse_err(format!(
            "expected 8 tab-separated fields, got {}",
            fields.len()
        )));
    }
    let cell_id: u64 = fields[0]
        .trim()
        .parse()
        .map_err(|_| parse_err(format!("bad cell_id `{}`", fields[0])))?;
    if cell_id < 1 {
        return Err(parse_err("cell_id must be >= 1".to_string()));
    }
    let interval_start_ms: i64 = fields[1]
        .trim()
        .parse()
        .map_err(|_| parse_err(format!("bad timestamp `{}`", fields[1])))?;
    let _country: i64 = fields[2]
        .trim()
        .parse()
        .map_err(|_| parse_err(format!("bad country_code `{}`", fields[2])))?;
    let mut activity = [0.0f64; 5];
    for (k, slot) in activity.iter_mut().enumerate() {
        let raw = fields[3 + k].trim();
        if raw.is_empty() {
            continue;
        }
        let v: f64 = raw
            .parse()
            .map_err(|_| parse_err(format!("bad {} value `{raw}`", CHANNELS[k])))?;
        if !v.is_finite() {
            return Err(parse_err(format!("{} value `{raw}` is not finite", CHANNELS[k])));
        }
        if v < 0.0 {
            return Err(parse_err(format!("negative {} value {v}", CHANNELS[k])));
        }
        *slot = v;
    }
    Ok(TrafficRecord {
        cell_id,
        interval_start_ms,
        activity,
    })
}

/// Parse a whole CDR file. Blank lines are skipped.
pub fn parse_cdr_file(path: &Path) -> Result<Vec<TrafficRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_cdr_line(line, i + 1)?);
    }
    Ok(records)
}

/// Assemble records into a gap-free series over the full grid.
///
/// Duplicate (cell, interval) records are summed channel-wise; every
/// (cell, interval) with no record gets zeros; the series spans the min to
/// max observed interval with no temporal gaps. Node order is ascending
/// cell id over *all* grid cells, so cells never seen in the records still
/// occupy an all-zero row.
pub fn build_snapshots<T: Scalar>(
    records: impl IntoIterator<Item = TrafficRecord>,
    grid: &GridGeometry,
    interval_ms: i64,
) -> Result<SnapshotSeries<T>> {
    if interval_ms <= 0 {
        return Err(Error::domain("interval must be positive"));
    }
    let mut summed: BTreeMap<(i64, u64), [f64; 5]> = BTreeMap::new();
    let mut missing: BTreeSet<u64> = BTreeSet::new();
    for rec in records {
        if !grid.contains(rec.cell_id) {
            missing.insert(rec.cell_id);
            continue;
        }
        let slot = summed
            .entry((rec.interval_start_ms, rec.cell_id))
            .or_insert([0.0; 5]);
        for (s, v) in slot.iter_mut().zip(rec.activity.iter()) {
            *s += v;
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingCells(missing.into_iter().collect()));
    }
    if summed.is_empty() {
        return Err(Error::domain("no records"));
    }
    let t_min = summed.keys().map(|&(t, _)| t).min().unwrap();
    let t_max = summed.keys().map(|&(t, _)| t).max().unwrap();
    for &(t, _) in summed.keys() {
        if (t - t_min) % interval_ms != 0 {
            return Err(Error::domain(format!(
                "timestamp {t} is not aligned to the {interval_ms} ms interval grid starting at {t_min}"
            )));
        }
    }
    let node_ids = grid.node_ids();
    let index: BTreeMap<u64, usize> = node_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i))
        .collect();
    let n = node_ids.len();
    let d = CHANNELS.len();
    let count = ((t_max - t_min) / interval_ms) as usize + 1;
    let mut snapshots = Vec::with_capacity(count);
    for ti in 0..count {
        let t = t_min + ti as i64 * interval_ms;
        let mut features = Tensor::<T>::zeros(&[n, d]);
        for ((_, cell), values) in summed.range((t, u64::MIN)..=(t, u64::MAX)) {
            let row = index[cell];
            for (k, &v) in values.iter().enumerate() {
                features.set2(row, k, cast(v));
            }
        }
        snapshots.push(Snapshot {
            timestamp_ms: t,
            features,
        });
    }
    SnapshotSeries::new(interval_ms, node_ids, snapshots)
}

/// Temporal prefix/suffix split at floor(T * train_fraction). No shuffling.
pub fn split_series<T: Scalar>(
    series: &SnapshotSeries<T>,
    train_fraction: f64,
) -> Result<(SnapshotSeries<T>, SnapshotSeries<T>)> {
    if !(0.0..1.0).contains(&train_fraction) || train_fraction == 0.0 {
        return Err(Error::domain(format!(
            "train_fraction {train_fraction} outside (0, 1)"
        )));
    }
    let t = series.len();
    if t < 2 {
        return Err(Error::domain("series too short to split"));
    }
    let cut = (t as f64 * train_fraction).floor() as usize;
    if cut == 0 || cut == t {
        return Err(Error::domain(format!(
            "train_fraction {train_fraction} leaves an empty side for T = {t}"
        )));
    }
    let train = SnapshotSeries::new(
        series.interval_ms,
        series.node_ids.clone(),
        series.snapshots[..cut].to_vec(),
    )?;
    let test = SnapshotSeries::new(
        series.interval_ms,
        series.node_ids.clone(),
        series.snapshots[cut..].to_vec(),
    )?;
    Ok((train, test))
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheManifest {
    interval_ms: i64,
    start_ms: i64,
    count: usize,
    features: usize,
    node_ids: Vec<u64>,
}

/// Write a series to `dir`: one `<timestamp>.bin` of little-endian f64 per
/// snapshot plus `manifest.json`. Files are written atomically.
pub fn save_cache<T: Scalar>(series: &SnapshotSeries<T>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for s in &series.snapshots {
        let payload = bytes::f64s_to_le(s.features.data().iter().map(|&v| widen(v)));
        bytes::atomic_write(&dir.join(format!("{}.bin", s.timestamp_ms)), &payload)?;
    }
    let manifest = CacheManifest {
        interval_ms: series.interval_ms,
        start_ms: series.start_ms(),
        count: series.len(),
        features: series.n_features(),
        node_ids: series.node_ids.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    bytes::atomic_write(&dir.join("manifest.json"), text.as_bytes())
}

/// Load a series previously written by [`save_cache`].
pub fn load_cache<T: Scalar>(dir: &Path) -> Result<SnapshotSeries<T>> {
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: CacheManifest = serde_json::from_str(&text)
        .map_err(|e| Error::format(&manifest_path, format!("bad manifest: {e}")))?;
    let n = manifest.node_ids.len();
    let d = manifest.features;
    let mut snapshots = Vec::with_capacity(manifest.count);
    for i in 0..manifest.count {
        let t = manifest.start_ms + i as i64 * manifest.interval_ms;
        let path = dir.join(format!("{t}.bin"));
        let raw = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let values = bytes::f64s_from_le(&path, &raw)?;
        if values.len() != n * d {
            return Err(Error::format(
                &path,
                format!("expected {} values, found {}", n * d, values.len()),
            ));
        }
        let features = Tensor::new(&[n, d], values.into_iter().map(cast).collect())?;
        snapshots.push(Snapshot {
            timestamp_ms: t,
            features,
        });
    }
    SnapshotSeries::new(manifest.interval_ms, manifest.node_ids, snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3() -> GridGeometry {
        let cells = BTreeMap::from([
            (1u64, (9.0, 45.0)),
            (5u64, (9.01, 45.0)),
            (7u64, (9.0, 45.01)),
        ]);
        GridGeometry::with_mean_origin(cells).unwrap()
    }

    #[test]
    fn parses_line_with_empty_fields() {
        let r = parse_cdr_line("1\t1383260400000\t39\t0.27\t\t0.11\t0.30\t8.14", 1).unwrap();
        assert_eq!(r.cell_id, 1);
        assert_eq!(r.interval_start_ms, 1_383_260_400_000);
        assert_eq!(r.activity, [0.27, 0.0, 0.11, 0.30, 8.14]);
    }

    #[test]
    fn rejects_cell_id_zero() {
        let err = parse_cdr_line("0\t1383260400000\t39\t0\t0\t0\t0\t0", 3).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parses_all_five_channels() {
        let r = parse_cdr_line("5\t1383260400000\t39\t1\t2\t3\t4\t5", 1).unwrap();
        assert_eq!(r.activity, [1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn rejects_negative_activity_and_bad_timestamp() {
        assert!(parse_cdr_line("1\t1\t39\t-0.5\t0\t0\t0\t0", 1).is_err());
        assert!(parse_cdr_line("1\tnot_a_time\t39\t0\t0\t0\t0\t0", 1).is_err());
        assert!(parse_cdr_line("1\t1\t39\t0\t0\t0\t0", 1).is_err());
    }

    #[test]
    fn projection_identity_at_origin() {
        let (x, y) = project_wgs84(9.0f64, 45.0, (9.0, 45.0)).unwrap();
        assert_eq!((x, y), (0.0, 0.0));
    }

    #[test]
    fn projection_matches_spherical_oracle() {
        // Oracle: y = R * dlat_rad; x = R * cos(lat0) * dlon_rad.
        let (x, y) = project_wgs84(9.0f64, 45.01, (9.0, 45.0)).unwrap();
        assert_eq!(x, 0.0);
        assert!((y - 1111.9492664455875).abs() < 1e-9, "y = {y}");

        let (x, y) = project_wgs84(9.01f64, 45.0, (9.0, 45.0)).unwrap();
        assert_eq!(y, 0.0);
        assert!((x - 786.2668666390821).abs() < 1e-9, "x = {x}");
    }

    #[test]
    fn projection_rejects_out_of_range() {
        assert!(project_wgs84(181.0f64, 0.0, (0.0, 0.0)).is_err());
        assert!(project_wgs84(0.0f64, 90.5, (0.0, 0.0)).is_err());
    }

    #[test]
    fn projection_distances_are_symmetric() {
        let mut rng = crate::rng::Rng::new(17);
        let origin = (9.0, 45.0);
        for _ in 0..200 {
            let a = (rng.uniform(8.0, 10.0), rng.uniform(44.0, 46.0));
            let b = (rng.uniform(8.0, 10.0), rng.uniform(44.0, 46.0));
            let pa = project_wgs84(a.0, a.1, origin).unwrap();
            let pb = project_wgs84(b.0, b.1, origin).unwrap();
            let d_ab = ((pa.0 - pb.0).powi(2) + (pa.1 - pb.1).powi(2)).sqrt();
            let d_ba = ((pb.0 - pa.0).powi(2) + (pb.1 - pa.1).powi(2)).sqrt();
            assert_eq!(d_ab, d_ba);
        }
    }

    fn rec(cell: u64, t: i64, internet: f64) -> TrafficRecord {
        TrafficRecord {
            cell_id: cell,
            interval_start_ms: t,
            activity: [0.0, 0.0, 0.0, 0.0, internet],
        }
    }

    #[test]
    fn duplicate_cell_interval_records_are_summed() {
        let series: SnapshotSeries<f64> =
            build_snapshots([rec(7, 0, 1.0), rec(7, 0, 2.5)], &grid3(), 600_000).unwrap();
        assert_eq!(series.len(), 1);
        // node order is 1, 5, 7 -> cell 7 is row 2
        assert_eq!(series.snapshot(0).features.at2(2, 4), 3.5);
    }

    #[test]
    fn unseen_grid_cell_gets_zero_rows() {
        let series: SnapshotSeries<f64> =
            build_snapshots([rec(7, 0, 1.0)], &grid3(), 600_000).unwrap();
        for s in series.snapshots() {
            assert!(s.features.row(0).iter().all(|&v| v == 0.0));
            assert!(s.features.row(1).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn temporal_gaps_are_zero_filled() {
        let series: SnapshotSeries<f64> =
            build_snapshots([rec(1, 0, 1.0), rec(1, 1_200_000, 2.0)], &grid3(), 600_000).unwrap();
        assert_eq!(series.len(), 3);
        assert!(series.snapshot(1).features.data().iter().all(|&v| v == 0.0));
        assert_eq!(series.snapshot(0).features.at2(0, 4), 1.0);
        assert_eq!(series.snapshot(2).features.at2(0, 4), 2.0);
    }

    #[test]
    fn record_for_unknown_cell_errors_with_cell_id() {
        let err = build_snapshots::<f64>([rec(9, 0, 1.0)], &grid3(), 600_000).unwrap_err();
        match err {
            Error::MissingCells(cells) => assert_eq!(cells, vec![9]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn snapshot_count_matches_span() {
        let series: SnapshotSeries<f64> =
            build_snapshots([rec(1, 600_000, 1.0), rec(5, 3_000_000, 1.0)], &grid3(), 600_000)
                .unwrap();
        assert_eq!(series.len(), (3_000_000 - 600_000) / 600_000 + 1);
    }

    #[test]
    fn feature_mass_is_preserved() {
        let recs = [rec(1, 0, 1.5), rec(5, 0, 2.0), rec(1, 0, 0.5), rec(7, 600_000, 3.0)];
        let input_sum: f64 = recs.iter().map(|r| r.activity.iter().sum::<f64>()).sum();
        let series: SnapshotSeries<f64> = build_snapshots(recs, &grid3(), 600_000).unwrap();
        let series_sum: f64 = series.snapshots().iter().map(|s| s.features.sum()).sum();
        assert!((input_sum - series_sum).abs() < 1e-12);
    }

    #[test]
    fn misaligned_timestamp_is_rejected() {
        let err =
            build_snapshots::<f64>([rec(1, 0, 1.0), rec(1, 700_000, 1.0)], &grid3(), 600_000)
                .unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn split_lengths_follow_floor_rule() {
        let snaps = (0..10)
            .map(|i| Snapshot {
                timestamp_ms: i * 10,
                features: Tensor::<f64>::zeros(&[2, 1]),
            })
            .collect();
        let series = SnapshotSeries::new(10, vec![1, 2], snaps).unwrap();
        let (train, test) = split_series(&series, 0.8).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));

        let snaps2 = (0..2)
            .map(|i| Snapshot {
                timestamp_ms: i * 10,
                features: Tensor::<f64>::zeros(&[1, 1]),
            })
            .collect();
        let series2 = SnapshotSeries::new(10, vec![1], snaps2).unwrap();
        let (a, b) = split_series(&series2, 0.5).unwrap();
        assert_eq!((a.len(), b.len()), (1, 1));
    }

    #[test]
    fn split_rejects_empty_sides() {
        let snaps = (0..3)
            .map(|i| Snapshot {
                timestamp_ms: i * 10,
                features: Tensor::<f64>::zeros(&[1, 1]),
            })
            .collect();
        let series = SnapshotSeries::new(10, vec![1], snaps).unwrap();
        assert!(split_series(&series, 0.1).is_err());
        assert!(split_series(&series, 1.0).is_err());
    }

    #[test]
    fn cache_round_trip_is_bit_identical() {
        let series: SnapshotSeries<f64> = build_snapshots(
            [rec(1, 0, 0.1), rec(5, 0, 2.7), rec(7, 600_000, 1.0 / 3.0)],
            &grid3(),
            600_000,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_cache(&series, dir.path()).unwrap();
        let loaded: SnapshotSeries<f64> = load_cache(dir.path()).unwrap();
        assert_eq!(loaded.interval_ms(), series.interval_ms());
        assert_eq!(loaded.node_ids(), series.node_ids());
        for (a, b) in series.snapshots().iter().zip(loaded.snapshots()) {
            assert_eq!(a.timestamp_ms, b.timestamp_ms);
            let eq = a
                .features
                .data()
                .iter()
                .zip(b.features.data())
                .all(|(x, y)| x.to_bits() == y.to_bits());
            assert!(eq, "cache round trip changed bits");
        }
    }

    #[test]
    fn mean_snapshot_averages_over_time() {
        let series: SnapshotSeries<f64> =
            build_snapshots([rec(1, 0, 1.0), rec(1, 600_000, 3.0)], &grid3(), 600_000).unwrap();
        let mean = series.mean_snapshot();
        assert_eq!(mean.features.at2(0, 4), 2.0);
    }

    #[test]
    fn select_channels_projects_columns() {
        let series: SnapshotSeries<f64> =
            build_snapshots([rec(1, 0, 5.0)], &grid3(), 600_000).unwrap();
        let sub = series.select_channels(&[4, 0]).unwrap();
        assert_eq!(sub.n_features(), 2);
        assert_eq!(sub.snapshot(0).features.at2(0, 0), 5.0);
        assert!(series.select_channels(&[]).is_err());
        assert!(series.select_channels(&[9]).is_err());
    }

    #[test]
    fn channel_index_resolves_names_and_indices() {
        assert_eq!(channel_index("internet").unwrap(), 4);
        assert_eq!(channel_index("0").unwrap(), 0);
        assert!(channel_index("snail_mail").is_err());
    }
}

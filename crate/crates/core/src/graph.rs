//! Spatial graph construction over projected cell centroids, plus the two
//! propagation matrices used by the graph-convolutional layers.
//!
//! Edge rules are defined on squared distances so no square root enters the
//! comparison. Both builders produce symmetric adjacency with an empty
//! diagonal.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::bytes;
use crate::error::{Error, Result};
use crate::scalar::{cast, widen, Scalar};
use crate::sparse::SparseMatrix;
use crate::tensor::Tensor;

/// Undirected weighted graph over grid cells.
#[derive(Debug, Clone)]
pub struct Graph<T> {
    node_ids: Vec<u64>,
    coords: Tensor<T>,
    adjacency: SparseMatrix<T>,
}

impl<T: Scalar> Graph<T> {
    pub fn new(node_ids: Vec<u64>, coords: Tensor<T>, adjacency: SparseMatrix<T>) -> Result<Graph<T>> {
        let n = node_ids.len();
        if coords.shape() != [n, 2] {
            return Err(Error::shape("Graph coords", &[n, 2], coords.shape()));
        }
        if adjacency.rows() != n || adjacency.cols() != n {
            return Err(Error::shape(
                "Graph adjacency",
                &[n, n],
                &[adjacency.rows(), adjacency.cols()],
            ));
        }
        if !adjacency.is_symmetric() {
            return Err(Error::domain("adjacency is not symmetric"));
        }
        for (i, j, _) in adjacency.iter() {
            if i == j {
                return Err(Error::domain(format!(
                    "adjacency has a self-loop at node index {i}"
                )));
            }
        }
        Ok(Graph {
            node_ids,
            coords,
            adjacency,
        })
    }

    /// Rebuild a graph from an undirected edge list keyed by cell id.
    /// Each edge must appear once with `src < dst`.
    pub fn from_edge_list(
        node_ids: Vec<u64>,
        coords: Tensor<T>,
        edges: &[(u64, u64, T)],
    ) -> Result<Graph<T>> {
        let index: BTreeMap<u64, usize> = node_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i))
            .collect();
        let mut triplets = Vec::with_capacity(edges.len() * 2);
        for &(src, dst, w) in edges {
            if src >= dst {
                return Err(Error::domain(format!(
                    "edge ({src}, {dst}) must satisfy src < dst"
                )));
            }
            let (&i, &j) = match (index.get(&src), index.get(&dst)) {
                (Some(i), Some(j)) => (i, j),
                _ => return Err(Error::domain(format!("edge ({src}, {dst}) references unknown cells"))),
            };
            triplets.push((i, j, w));
            triplets.push((j, i, w));
        }
        let n = node_ids.len();
        let adjacency = SparseMatrix::from_triplets(n, n, triplets)?;
        Graph::new(node_ids, coords, adjacency)
    }

    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn node_ids(&self) -> &[u64] {
        &self.node_ids
    }

    pub fn coords(&self) -> &Tensor<T> {
        &self.coords
    }

    pub fn adjacency(&self) -> &SparseMatrix<T> {
        &self.adjacency
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }
}

const GRID_INDEX_THRESHOLD: usize = 2_000;

fn dist2<T: Scalar>(coords: &Tensor<T>, i: usize, j: usize) -> T {
    let dx = coords.at2(i, 0) - coords.at2(j, 0);
    let dy = coords.at2(i, 1) - coords.at2(j, 1);
    dx * dx + dy * dy
}

fn pairs_within_brute<T: Scalar>(coords: &Tensor<T>, cutoff: T) -> Vec<(usize, usize, T)> {
    let n = coords.shape()[0];
    let c2 = cutoff * cutoff;
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d2 = dist2(coords, i, j);
            if d2 < c2 {
                out.push((i, j, d2));
            }
        }
    }
    out
}

/// Uniform-bin candidate pruning; bins are `cutoff`-sized so only the 3x3
/// neighborhood of a point's bin can hold partners. Emits the same pair set
/// as the brute-force scan (pairs come out sorted).
pub(crate) fn pairs_within_grid<T: Scalar>(coords: &Tensor<T>, cutoff: T) -> Vec<(usize, usize, T)> {
    let n = coords.shape()[0];
    if n == 0 {
        return Vec::new();
    }
    let c2 = cutoff * cutoff;
    let min_x = (0..n).map(|i| widen(coords.at2(i, 0))).fold(f64::INFINITY, f64::min);
    let min_y = (0..n).map(|i| widen(coords.at2(i, 1))).fold(f64::INFINITY, f64::min);
    let cell = widen(cutoff).max(f64::MIN_POSITIVE);
    let bin_of = |i: usize| -> (i64, i64) {
        (
            ((widen(coords.at2(i, 0)) - min_x) / cell).floor() as i64,
            ((widen(coords.at2(i, 1)) - min_y) / cell).floor() as i64,
        )
    };
    let mut bins: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        bins.entry(bin_of(i)).or_default().push(i);
    }
    let mut out = Vec::new();
    for i in 0..n {
        let (bx, by) = bin_of(i);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(members) = bins.get(&(bx + dx, by + dy)) else {
                    continue;
                };
                for &j in members {
                    if j <= i {
                        continue;
                    }
                    let d2 = dist2(coords, i, j);
                    if d2 < c2 {
                        out.push((i, j, d2));
                    }
                }
            }
        }
    }
    out.sort_by_key(|&(i, j, _)| (i, j));
    out
}

/// All unordered pairs with distance strictly below `cutoff`, as
/// `(i, j, squared_distance)` with `i < j`, sorted.
pub(crate) fn pairs_within<T: Scalar>(coords: &Tensor<T>, cutoff: T) -> Vec<(usize, usize, T)> {
    if coords.shape()[0] > GRID_INDEX_THRESHOLD {
        pairs_within_grid(coords, cutoff)
    } else {
        pairs_within_brute(coords, cutoff)
    }
}

/// Unit-weight graph connecting nodes strictly closer than `epsilon` meters.
pub fn build_epsilon_graph<T: Scalar>(
    node_ids: Vec<u64>,
    coords: Tensor<T>,
    epsilon: T,
) -> Result<Graph<T>> {
    if epsilon <= T::zero() || !epsilon.is_finite() {
        return Err(Error::domain(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    let n = node_ids.len();
    let mut triplets = Vec::new();
    for (i, j, _) in pairs_within(&coords, epsilon) {
        triplets.push((i, j, T::one()));
        triplets.push((j, i, T::one()));
    }
    let adjacency = SparseMatrix::from_triplets(n, n, triplets)?;
    Graph::new(node_ids, coords, adjacency)
}

/// Gaussian-kernel graph: `w = exp(-d^2 / sigma^2)`, kept when
/// `w > weight_floor` and the endpoints differ. `weight_floor` must lie in
/// (0, 1) so the support radius is finite.
pub fn build_gaussian_graph<T: Scalar>(
    node_ids: Vec<u64>,
    coords: Tensor<T>,
    sigma: T,
    weight_floor: T,
) -> Result<Graph<T>> {
    if sigma <= T::zero() || !sigma.is_finite() {
        return Err(Error::domain(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    if weight_floor <= T::zero() || weight_floor >= T::one() {
        return Err(Error::domain(format!(
            "weight_floor must lie in (0, 1), got {weight_floor}"
        )));
    }
    let n = node_ids.len();
    // w > floor  <=>  d^2 < sigma^2 * ln(1/floor); inflate the candidate
    // radius slightly so sqrt rounding cannot drop a boundary pair. The
    // weight test below is the normative filter.
    let cutoff = sigma * (T::one() / weight_floor).ln().sqrt() * cast::<T>(1.0 + 1e-6);
    let mut triplets = Vec::new();
    for (i, j, d2) in pairs_within(&coords, cutoff) {
        let w = (-d2 / (sigma * sigma)).exp();
        if w > weight_floor {
            triplets.push((i, j, w));
            triplets.push((j, i, w));
        }
    }
    let adjacency = SparseMatrix::from_triplets(n, n, triplets)?;
    Graph::new(node_ids, coords, adjacency)
}

/// Weighted degree of each node; `with_self_loops` adds one per node.
pub fn degree<T: Scalar>(graph: &Graph<T>, with_self_loops: bool) -> Vec<T> {
    let mut deg = graph.adjacency.row_sums();
    if with_self_loops {
        for d in &mut deg {
            *d = *d + T::one();
        }
    }
    deg
}

/// Which normalization produced a propagation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationKind {
    /// Row-stochastic: self-loops added, each row divided by its degree.
    Method1,
    /// Symmetric: degree^(-1/2) scaling on both sides.
    Method2,
}

impl PropagationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PropagationKind::Method1 => "method1",
            PropagationKind::Method2 => "method2",
        }
    }
}

impl std::str::FromStr for PropagationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<PropagationKind> {
        match s {
            "method1" => Ok(PropagationKind::Method1),
            "method2" => Ok(PropagationKind::Method2),
            other => Err(Error::domain(format!(
                "unknown propagation method `{other}` (expected method1 or method2)"
            ))),
        }
    }
}

/// Sparse propagation operator ready for `L * H` products.
#[derive(Debug, Clone)]
pub struct PropagationMatrix<T> {
    pub kind: PropagationKind,
    pub matrix: SparseMatrix<T>,
}

/// Row-stochastic propagation: add self-loops, then divide each row of the
/// augmented adjacency by its degree. Every row sums to one.
pub fn propagation_method1<T: Scalar>(graph: &Graph<T>) -> Result<PropagationMatrix<T>> {
    let n = graph.n_nodes();
    let deg = degree(graph, true);
    let mut triplets = Vec::with_capacity(graph.adjacency.nnz() + n);
    for (i, j, w) in graph.adjacency.iter() {
        triplets.push((i, j, w / deg[i]));
    }
    for (i, d) in deg.iter().enumerate() {
        triplets.push((i, i, T::one() / *d));
    }
    let matrix = SparseMatrix::from_triplets(n, n, triplets)?;
    Ok(PropagationMatrix {
        kind: PropagationKind::Method1,
        matrix,
    })
}

/// Options for [`propagation_method2`]; the default normalizes the bare
/// adjacency and treats isolated nodes as an error.
#[derive(Debug, Clone, Copy, Default)]
pub struct Method2Options {
    /// Normalize `A + I` instead of the bare adjacency.
    pub self_loops: bool,
    /// Keep zero rows for isolated nodes instead of failing.
    pub repair_isolated: bool,
}

/// Symmetric propagation: scale the (optionally self-looped) adjacency by
/// degree^(-1/2) on both sides. The result is exactly symmetric because each
/// mirrored entry is computed as `(dinv[i] * dinv[j]) * w` in that order.
pub fn propagation_method2<T: Scalar>(
    graph: &Graph<T>,
    opts: Method2Options,
) -> Result<PropagationMatrix<T>> {
    let n = graph.n_nodes();
    let base = if opts.self_loops {
        graph.adjacency.add_identity()?
    } else {
        graph.adjacency.clone()
    };
    let deg = base.row_sums();
    let mut dinv = vec![T::zero(); n];
    for (i, &d) in deg.iter().enumerate() {
        if d <= T::zero() {
            if !opts.repair_isolated {
                return Err(Error::Degenerate(format!(
                    "node {} (cell {}) is isolated; symmetric normalization needs positive degree",
                    i, graph.node_ids[i]
                )));
            }
        } else {
            dinv[i] = T::one() / d.sqrt();
        }
    }
    let mut triplets = Vec::with_capacity(base.nnz());
    for (i, j, w) in base.iter() {
        triplets.push((i, j, (dinv[i] * dinv[j]) * w));
    }
    let matrix = SparseMatrix::from_triplets(n, n, triplets)?;
    debug_assert!(matrix.is_symmetric());
    Ok(PropagationMatrix {
        kind: PropagationKind::Method2,
        matrix,
    })
}

/// Build the propagation matrix selected by `kind` under default options.
pub fn propagation<T: Scalar>(graph: &Graph<T>, kind: PropagationKind) -> Result<PropagationMatrix<T>> {
    match kind {
        PropagationKind::Method1 => propagation_method1(graph),
        PropagationKind::Method2 => propagation_method2(graph, Method2Options::default()),
    }
}

/// Median over nodes of the distance to the nearest other node. With an even
/// node count the two middle values are averaged.
pub fn median_nn_distance<T: Scalar>(coords: &Tensor<T>) -> Result<T> {
    let n = coords.shape()[0];
    if n < 2 {
        return Err(Error::domain("nearest-neighbor median needs at least 2 nodes"));
    }
    let mut nearest = Vec::with_capacity(n);
    for i in 0..n {
        let mut best = T::infinity();
        for j in 0..n {
            if i != j {
                let d2 = dist2(coords, i, j);
                if d2 < best {
                    best = d2;
                }
            }
        }
        nearest.push(best.sqrt());
    }
    nearest.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let mid = n / 2;
    let half: T = cast(0.5);
    if n % 2 == 1 {
        Ok(nearest[mid])
    } else {
        Ok((nearest[mid - 1] + nearest[mid]) * half)
    }
}

/// Write the upper-triangle edge list as `src,dst,weight` CSV, one row per
/// undirected edge, cell ids ascending.
pub fn save_edges<T: Scalar>(graph: &Graph<T>, path: &Path) -> Result<()> {
    let mut out = String::from("src,dst,weight\n");
    for (i, j, w) in graph.adjacency.iter() {
        if i < j {
            out.push_str(&format!(
                "{},{},{}\n",
                graph.node_ids[i],
                graph.node_ids[j],
                widen(w)
            ));
        }
    }
    bytes::atomic_write(path, out.as_bytes())
}

/// Read an edge list written by [`save_edges`].
pub fn load_edges<T: Scalar>(path: &Path) -> Result<Vec<(u64, u64, T)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line.trim() != "src,dst,weight" {
                return Err(Error::format(path, "expected header `src,dst,weight`"));
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
                message: format!("expected 3 fields, got {}", parts.len()),
            });
        }
        let src: u64 = parts[0].trim().parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            message: format!("bad src `{}`", parts[0]),
        })?;
        let dst: u64 = parts[1].trim().parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            message: format!("bad dst `{}`", parts[1]),
        })?;
        let w: f64 = parts[2].trim().parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            message: format!("bad weight `{}`", parts[2]),
        })?;
        edges.push((src, dst, cast(w)));
    }
    Ok(edges)
}

/// Write projected node coordinates as `cell_id,x_m,y_m` CSV.
pub fn save_coords<T: Scalar>(node_ids: &[u64], coords: &Tensor<T>, path: &Path) -> Result<()> {
    if coords.shape() != [node_ids.len(), 2] {
        return Err(Error::shape("save_coords", &[node_ids.len(), 2], coords.shape()));
    }
    let mut out = String::from("cell_id,x_m,y_m\n");
    for (i, &id) in node_ids.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            id,
            widen(coords.at2(i, 0)),
            widen(coords.at2(i, 1))
        ));
    }
    bytes::atomic_write(path, out.as_bytes())
}

/// Read coordinates written by [`save_coords`].
pub fn load_coords<T: Scalar>(path: &Path) -> Result<(Vec<u64>, Tensor<T>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line.trim() != "cell_id,x_m,y_m" {
                return Err(Error::format(path, "expected header `cell_id,x_m,y_m`"));
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
                message: format!("expected 3 fields, got {}", parts.len()),
            });
        }
        let id: u64 = parts[0].trim().parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            message: format!("bad cell_id `{}`", parts[0]),
        })?;
        let x: f64 = parts[1].trim().parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            message: format!("bad x `{}`", parts[1]),
        })?;
        let y: f64 = parts[2].trim().parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            message: format!("bad y `{}`", parts[2]),
        })?;
        ids.push(id);
        data.push(cast::<T>(x));
        data.push(cast::<T>(y));
    }
    let n = ids.len();
    Ok((ids, Tensor::new(&[n, 2], data)?))
}

//! Low-dimensional node embeddings: spectral coordinates from the
//! normalized Laplacian, and untrained graph-convolution feature stacks.

use std::fs;
use std::path::Path;

use crate::bytes;
use crate::eigen::jacobi_eigh;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nn::glorot_uniform;
use crate::rng::Rng;
use crate::scalar::{cast, widen, Scalar};
use crate::sparse::SparseMatrix;
use crate::tensor::Tensor;

/// Eigenvalues below this are treated as the zero eigenvalues contributed
/// by connected components.
pub const NULL_SPACE_TOL: f64 = 1e-10;

/// Which construction produced an embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingMethod {
    /// Smallest nonzero eigenvectors of the normalized Laplacian.
    Laplacian,
    /// Untrained convolution stack over the row-stochastic propagation.
    GcnMethod1,
    /// Untrained convolution stack over the symmetric propagation.
    GcnMethod2,
}

impl EmbeddingMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EmbeddingMethod::Laplacian => "laplacian",
            EmbeddingMethod::GcnMethod1 => "gcn_method1",
            EmbeddingMethod::GcnMethod2 => "gcn_method2",
        }
    }
}

impl std::str::FromStr for EmbeddingMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<EmbeddingMethod> {
        match s {
            "laplacian" => Ok(EmbeddingMethod::Laplacian),
            "gcn_method1" => Ok(EmbeddingMethod::GcnMethod1),
            "gcn_method2" => Ok(EmbeddingMethod::GcnMethod2),
            other => Err(Error::domain(format!(
                "unknown embedding method `{other}` (expected laplacian, gcn_method1 or gcn_method2)"
            ))),
        }
    }
}

/// Node coordinates plus provenance.
#[derive(Debug, Clone)]
pub struct EmbeddingResult<T> {
    pub method: EmbeddingMethod,
    /// N x d_emb coordinates, rows in graph node order.
    pub coords: Tensor<T>,
    /// Full Laplacian spectrum when the method is spectral.
    pub eigenvalues: Option<Vec<T>>,
}

/// Dense symmetric normalized Laplacian `I - D^(-1/2) A D^(-1/2)`.
/// Isolated nodes keep a bare diagonal 1.
pub fn laplacian_matrix<T: Scalar>(graph: &Graph<T>) -> Tensor<T> {
    let n = graph.n_nodes();
    let deg = graph.adjacency().row_sums();
    let dinv: Vec<T> = deg
        .iter()
        .map(|&d| {
            if d > T::zero() {
                T::one() / d.sqrt()
            } else {
                T::zero()
            }
        })
        .collect();
    let mut l = Tensor::<T>::eye(n);
    for (i, j, w) in graph.adjacency().iter() {
        l.set2(i, j, l.at2(i, j) - (dinv[i] * dinv[j]) * w);
    }
    l
}

/// Full eigendecomposition of the normalized Laplacian, ascending.
pub fn laplacian_spectrum<T: Scalar>(graph: &Graph<T>) -> Result<(Vec<T>, Tensor<T>)> {
    jacobi_eigh(&laplacian_matrix(graph), 1e-14, 100)
}

/// Spectral embedding: the `d_emb` eigenvectors past the null space
/// (eigenvalues below [`NULL_SPACE_TOL`]) become the coordinate columns.
pub fn laplacian_eigenmap<T: Scalar>(graph: &Graph<T>, d_emb: usize) -> Result<EmbeddingResult<T>> {
    if d_emb == 0 {
        return Err(Error::domain("embedding dimension must be at least 1"));
    }
    let n = graph.n_nodes();
    let (values, vectors) = laplacian_spectrum(graph)?;
    let skip = values.iter().filter(|&&v| widen(v) < NULL_SPACE_TOL).count();
    if skip + d_emb > n {
        return Err(Error::domain(format!(
            "embedding needs {d_emb} nonzero eigenvectors but only {} exist \
             ({n} nodes, {skip} zero eigenvalues)",
            n - skip
        )));
    }
    let cols: Vec<usize> = (skip..skip + d_emb).collect();
    Ok(EmbeddingResult {
        method: EmbeddingMethod::Laplacian,
        coords: vectors.select_columns(&cols)?,
        eigenvalues: Some(values),
    })
}

/// Apply an untrained convolution stack `H <- relu(L H W)` layer by layer.
pub fn gcn_forward_stack<T: Scalar>(
    l: &SparseMatrix<T>,
    x: &Tensor<T>,
    weights: &[Tensor<T>],
) -> Result<Tensor<T>> {
    if weights.is_empty() {
        return Err(Error::domain("convolution stack has no layers"));
    }
    let mut h = x.clone();
    for w in weights {
        let lh = l.mul_dense(&h)?;
        let pre = lh.matmul(w)?;
        h = pre.map(|v| if v > T::zero() { v } else { T::zero() });
    }
    Ok(h)
}

/// Random-weight convolutional embedding. `layer_dims` lists the output
/// width of each layer; weights come from seeded Glorot init so the result
/// is reproducible.
pub fn gcn_embed<T: Scalar>(
    l: &SparseMatrix<T>,
    x: &Tensor<T>,
    layer_dims: &[usize],
    seed: u64,
    method: EmbeddingMethod,
) -> Result<EmbeddingResult<T>> {
    if layer_dims.contains(&0) {
        return Err(Error::domain("layer widths must be positive"));
    }
    if method == EmbeddingMethod::Laplacian {
        return Err(Error::domain(
            "gcn_embed builds convolutional embeddings; use laplacian_eigenmap for spectral ones",
        ));
    }
    let mut rng = Rng::new(seed);
    let mut weights = Vec::with_capacity(layer_dims.len());
    let mut d_in = x.cols();
    for &d_out in layer_dims {
        weights.push(glorot_uniform(&[d_in, d_out], d_in, d_out, &mut rng)?);
        d_in = d_out;
    }
    Ok(EmbeddingResult {
        method,
        coords: gcn_forward_stack(l, x, &weights)?,
        eigenvalues: None,
    })
}

/// Scale each edge weight by a feature affinity kernel:
/// `w_ij <- w_ij * exp(-||f_i - f_j||^2 / sigma_f^2)`.
pub fn reweight_by_features<T: Scalar>(
    graph: &Graph<T>,
    features: &Tensor<T>,
    sigma_f: T,
) -> Result<Graph<T>> {
    if sigma_f <= T::zero() || !sigma_f.is_finite() {
        return Err(Error::domain(format!(
            "sigma_f must be positive and finite, got {sigma_f}"
        )));
    }
    let n = graph.n_nodes();
    if features.rows() != n {
        return Err(Error::shape(
            "reweight_by_features",
            &[n],
            &[features.rows()],
        ));
    }
    let f_cols = features.cols();
    let s2 = sigma_f * sigma_f;
    let mut triplets = Vec::with_capacity(graph.adjacency().nnz());
    for (i, j, w) in graph.adjacency().iter() {
        if i < j {
            let mut d2 = T::zero();
            for c in 0..f_cols {
                let d = features.at2(i, c) - features.at2(j, c);
                d2 = d2 + d * d;
            }
            let scaled = w * (-d2 / s2).exp();
            triplets.push((i, j, scaled));
            triplets.push((j, i, scaled));
        }
    }
    let adjacency = SparseMatrix::from_triplets(n, n, triplets)?;
    Graph::new(graph.node_ids().to_vec(), graph.coords().clone(), adjacency)
}

/// Write embedding coordinates as `cell_id,e1,...,ed` CSV.
pub fn save_embedding<T: Scalar>(node_ids: &[u64], coords: &Tensor<T>, path: &Path) -> Result<()> {
    if coords.rows() != node_ids.len() {
        return Err(Error::shape(
            "save_embedding",
            &[node_ids.len()],
            &[coords.rows()],
        ));
    }
    let d = coords.cols();
    let mut out = String::from("cell_id");
    for k in 1..=d {
        out.push_str(&format!(",e{k}"));
    }
    out.push('\n');
    for (i, &id) in node_ids.iter().enumerate() {
        out.push_str(&id.to_string());
        for c in 0..d {
            out.push_str(&format!(",{}", widen(coords.at2(i, c))));
        }
        out.push('\n');
    }
    bytes::atomic_write(path, out.as_bytes())
}

/// Read a CSV written by [`save_embedding`].
pub fn load_embedding<T: Scalar>(path: &Path) -> Result<(Vec<u64>, Tensor<T>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::format(path, "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"cell_id") || cols.len() < 2 {
        return Err(Error::format(path, "expected header `cell_id,e1,...`"));
    }
    let d = cols.len() - 1;
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != d + 1 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected {} fields, got {}", d + 1, parts.len()),
            });
        }
        ids.push(parts[0].trim().parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            message: format!("bad cell_id `{}`", parts[0]),
        })?);
        for p in &parts[1..] {
            let v: f64 = p.trim().parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("bad coordinate `{p}`"),
            })?;
            data.push(cast::<T>(v));
        }
    }
    let n = ids.len();
    Ok((ids, Tensor::new(&[n, d], data)?))
}

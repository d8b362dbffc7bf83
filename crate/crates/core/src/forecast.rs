//! Short-term traffic forecasting with a temporal-graph-temporal
//! convolution stack and a per-node linear head.
//!
//! The model consumes `m` consecutive snapshots of all channels and emits
//! the next `k` values of one target channel for every node. Training runs
//! in per-channel standardized space; predictions are mapped back to raw
//! scale before metrics are computed.

use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::graph::{propagation, Graph, PropagationKind};
use crate::ingest::{Snapshot, SnapshotSeries};
use crate::nn::{
    adam_step, dense_backward, dense_forward, glorot_uniform, graph_conv_backward,
    graph_conv_forward, l2_loss_with_grad, load_checkpoint, relu, relu_backward, save_checkpoint,
    temporal_conv_backward, temporal_conv_forward, AdamHyper, AdamState, Activation, DenseCache,
    GraphConvCache, TemporalConvCache,
};
use crate::rng::{split_mix64, Rng};
use crate::scalar::{cast, widen, Scalar};
use crate::sparse::SparseMatrix;
use crate::tensor::Tensor;

/// Sliding windows over a series: window `i` covers inputs
/// `[i, i + m)` (all channels) and targets `[i + m, i + m + k)` of the
/// target channel.
#[derive(Debug, Clone)]
pub struct WindowBatch<T> {
    /// One m x N x d tensor per window.
    pub inputs: Vec<Tensor<T>>,
    /// One N x k tensor per window (row per node).
    pub targets: Vec<Tensor<T>>,
    /// Start snapshot index of each window.
    pub starts: Vec<usize>,
    pub m: usize,
    pub k: usize,
    pub target_channel: usize,
}

impl<T> WindowBatch<T> {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Exhaustive stride-1 windowing; yields exactly `T - m - k + 1` windows.
pub fn build_windows<T: Scalar>(
    series: &SnapshotSeries<T>,
    m: usize,
    k: usize,
    target_channel: usize,
) -> Result<WindowBatch<T>> {
    if m == 0 || k == 0 {
        return Err(Error::domain("window sizes m and k must be positive"));
    }
    let t = series.len();
    let n = series.n_nodes();
    let d = series.n_features();
    if target_channel >= d {
        return Err(Error::domain(format!(
            "target channel {target_channel} out of range for {d} channels"
        )));
    }
    if m + k > t {
        return Err(Error::domain(format!(
            "series of {t} snapshots is too short for memory m = {m} plus horizon k = {k}"
        )));
    }
    let count = t - m - k + 1;
    let mut inputs = Vec::with_capacity(count);
    let mut targets = Vec::with_capacity(count);
    let mut starts = Vec::with_capacity(count);
    for s in 0..count {
        let mut x = Tensor::<T>::zeros(&[m, n, d]);
        for dt in 0..m {
            let f = &series.snapshot(s + dt).features;
            for i in 0..n {
                for c in 0..d {
                    x.set3(dt, i, c, f.at2(i, c));
                }
            }
        }
        let mut y = Tensor::<T>::zeros(&[n, k]);
        for j in 0..k {
            let f = &series.snapshot(s + m + j).features;
            for i in 0..n {
                y.set2(i, j, f.at2(i, target_channel));
            }
        }
        inputs.push(x);
        targets.push(y);
        starts.push(s);
    }
    Ok(WindowBatch {
        inputs,
        targets,
        starts,
        m,
        k,
        target_channel,
    })
}

/// Per-channel mean and standard deviation of a series. Channels with a
/// standard deviation below 1e-12 keep scale 1 so constant channels
/// survive the round trip.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> ChannelStats<T> {
    pub fn identity(d: usize) -> ChannelStats<T> {
        ChannelStats {
            mean: vec![T::zero(); d],
            std: vec![T::one(); d],
        }
    }

    pub fn from_series(series: &SnapshotSeries<T>) -> ChannelStats<T> {
        let d = series.n_features();
        let n = series.n_nodes();
        let count = cast::<T>((series.len() * n) as f64);
        let mut mean = vec![T::zero(); d];
        for s in series.snapshots() {
            for i in 0..n {
                for (c, m) in mean.iter_mut().enumerate() {
                    *m = *m + s.features.at2(i, c);
                }
            }
        }
        for m in &mut mean {
            *m = *m / count;
        }
        let mut var = vec![T::zero(); d];
        for s in series.snapshots() {
            for i in 0..n {
                for (c, v) in var.iter_mut().enumerate() {
                    let dlt = s.features.at2(i, c) - mean[c];
                    *v = *v + dlt * dlt;
                }
            }
        }
        let floor: T = cast(1e-12);
        let std = var
            .iter()
            .map(|&v| {
                let sd = (v / count).sqrt();
                if sd > floor {
                    sd
                } else {
                    T::one()
                }
            })
            .collect();
        ChannelStats { mean, std }
    }

    /// Standardize every channel of a raw m x N x d window.
    pub fn normalize_window(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let d = self.mean.len();
        if x.rank() != 3 || x.shape()[2] != d {
            return Err(Error::shape("normalize_window", &[d], x.shape()));
        }
        let mut out = x.clone();
        for t in 0..x.shape()[0] {
            for i in 0..x.shape()[1] {
                for c in 0..d {
                    out.set3(t, i, c, (x.at3(t, i, c) - self.mean[c]) / self.std[c]);
                }
            }
        }
        Ok(out)
    }

    /// Map standardized target-channel values back to raw scale.
    pub fn denormalize_targets(&self, y: &Tensor<T>, channel: usize) -> Result<Tensor<T>> {
        if channel >= self.mean.len() {
            return Err(Error::domain(format!(
                "channel {channel} out of range for {} stats",
                self.mean.len()
            )));
        }
        Ok(y.map(|v| v * self.std[channel] + self.mean[channel]))
    }

    /// Standardize a whole series.
    pub fn normalize_series(&self, series: &SnapshotSeries<T>) -> Result<SnapshotSeries<T>> {
        let d = self.mean.len();
        if series.n_features() != d {
            return Err(Error::shape(
                "normalize_series",
                &[d],
                &[series.n_features()],
            ));
        }
        let snapshots = series
            .snapshots()
            .iter()
            .map(|s| {
                let mut f = s.features.clone();
                for i in 0..f.rows() {
                    for c in 0..d {
                        f.set2(i, c, (s.features.at2(i, c) - self.mean[c]) / self.std[c]);
                    }
                }
                Snapshot {
                    timestamp_ms: s.timestamp_ms,
                    features: f,
                }
            })
            .collect();
        SnapshotSeries::new(series.interval_ms(), series.node_ids().to_vec(), snapshots)
    }
}

/// Largest temporal kernel that still leaves at least one step after two
/// valid convolutions over `m` inputs.
pub fn clamp_kernel_len(k_t: usize, m: usize) -> usize {
    k_t.min(m.div_ceil(2)).max(1)
}

/// Remaining time steps after the two temporal convolutions.
fn remaining_steps(m: usize, k_t: usize) -> usize {
    m - 2 * (k_t - 1)
}

/// Trained forecaster: temporal conv, graph conv, temporal conv, per-node
/// linear head, all bias-free.
#[derive(Debug, Clone)]
pub struct ForecastModel<T> {
    pub kind: PropagationKind,
    /// k_t x d x c1 input temporal kernel.
    pub temporal_in: Tensor<T>,
    /// c1 x c2 graph-convolution weights.
    pub spatial: Tensor<T>,
    /// k_t x c2 x c3 output temporal kernel.
    pub temporal_out: Tensor<T>,
    /// (m_rem * c3) x k read-out weights.
    pub head: Tensor<T>,
    pub k_t: usize,
    pub m: usize,
    pub k: usize,
    pub target_channel: usize,
    pub stats: ChannelStats<T>,
}

impl<T: Scalar> ForecastModel<T> {
    fn validate(&self) -> Result<()> {
        if self.k_t == 0 || self.m == 0 || self.k == 0 {
            return Err(Error::domain("model dimensions must be positive"));
        }
        if self.m + 1 < 2 * self.k_t {
            return Err(Error::domain(format!(
                "temporal kernel {} needs at least {} memory steps, got {}",
                self.k_t,
                2 * self.k_t - 1,
                self.m
            )));
        }
        let m_rem = remaining_steps(self.m, self.k_t);
        let c3 = self.temporal_out.shape()[2];
        if self.head.shape()[0] != m_rem * c3 {
            return Err(Error::shape(
                "forecast head",
                &[m_rem * c3],
                &[self.head.shape()[0]],
            ));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.temporal_in.shape()[1]
    }
}

fn time_slice<T: Scalar>(x: &Tensor<T>, t: usize) -> Tensor<T> {
    let (n, c) = (x.shape()[1], x.shape()[2]);
    let mut out = Tensor::zeros(&[n, c]);
    for i in 0..n {
        for j in 0..c {
            out.set2(i, j, x.at3(t, i, j));
        }
    }
    out
}

fn set_time_slice<T: Scalar>(dst: &mut Tensor<T>, t: usize, src: &Tensor<T>) {
    let (n, c) = (dst.shape()[1], dst.shape()[2]);
    for i in 0..n {
        for j in 0..c {
            dst.set3(t, i, j, src.at2(i, j));
        }
    }
}

/// Intermediate activations of one window pass, consumed by
/// [`backward_window`].
pub struct WindowCaches<T> {
    tc1: TemporalConvCache<T>,
    a1: Tensor<T>,
    gcs: Vec<GraphConvCache<T>>,
    tc2: TemporalConvCache<T>,
    a3: Tensor<T>,
    head_cache: DenseCache<T>,
}

/// One forward pass over a standardized m x N x d window; returns N x k
/// standardized predictions.
pub fn forward_window<T: Scalar>(
    model: &ForecastModel<T>,
    l: &SparseMatrix<T>,
    x: &Tensor<T>,
) -> Result<(Tensor<T>, WindowCaches<T>)> {
    let (h1_pre, tc1) = temporal_conv_forward(x, &model.temporal_in, None)?;
    let a1 = relu(&h1_pre);
    let t1 = a1.shape()[0];
    let n = a1.shape()[1];
    let c2 = model.spatial.shape()[1];
    let mut h2 = Tensor::<T>::zeros(&[t1, n, c2]);
    let mut gcs = Vec::with_capacity(t1);
    for t in 0..t1 {
        let slice = time_slice(&a1, t);
        let (out, cache) = graph_conv_forward(l, &slice, &model.spatial, None, Activation::Relu)?;
        set_time_slice(&mut h2, t, &out);
        gcs.push(cache);
    }
    // the output temporal stage is linear: a nonlinearity this close to the
    // narrow read-out can gate off every feature and freeze training
    let (a3, tc2) = temporal_conv_forward(&h2, &model.temporal_out, None)?;
    let m_rem = a3.shape()[0];
    let c3 = a3.shape()[2];
    let mut flat = Tensor::<T>::zeros(&[n, m_rem * c3]);
    for t in 0..m_rem {
        for i in 0..n {
            for c in 0..c3 {
                flat.set2(i, t * c3 + c, a3.at3(t, i, c));
            }
        }
    }
    let (out, head_cache) = dense_forward(&flat, &model.head, None)?;
    Ok((
        out,
        WindowCaches {
            tc1,
            a1,
            gcs,
            tc2,
            a3,
            head_cache,
        },
    ))
}

/// Parameter gradients of one window pass, in model-field order.
pub struct WindowGrads<T> {
    pub temporal_in: Tensor<T>,
    pub spatial: Tensor<T>,
    pub temporal_out: Tensor<T>,
    pub head: Tensor<T>,
}

/// Backpropagate a loss gradient on the N x k output through one window
/// pass; pairs with [`forward_window`].
pub fn backward_window<T: Scalar>(
    model: &ForecastModel<T>,
    l: &SparseMatrix<T>,
    caches: &WindowCaches<T>,
    grad_out: &Tensor<T>,
) -> Result<WindowGrads<T>> {
    let (grad_flat, grad_head, _) = dense_backward(&model.head, &caches.head_cache, grad_out)?;
    let m_rem = caches.a3.shape()[0];
    let n = caches.a3.shape()[1];
    let c3 = caches.a3.shape()[2];
    let mut grad_a3 = Tensor::<T>::zeros(&[m_rem, n, c3]);
    for t in 0..m_rem {
        for i in 0..n {
            for c in 0..c3 {
                grad_a3.set3(t, i, c, grad_flat.at2(i, t * c3 + c));
            }
        }
    }
    let g_tc2 = temporal_conv_backward(&model.temporal_out, &caches.tc2, &grad_a3)?;

    let t1 = caches.a1.shape()[0];
    let c1 = caches.a1.shape()[2];
    let mut grad_a1 = Tensor::<T>::zeros(&[t1, n, c1]);
    let mut grad_spatial = Tensor::<T>::zeros(model.spatial.shape());
    for t in 0..t1 {
        let gslice = time_slice(&g_tc2.grad_x, t);
        let g = graph_conv_backward(l, &model.spatial, &caches.gcs[t], &gslice)?;
        grad_spatial = grad_spatial.add(&g.grad_w)?;
        set_time_slice(&mut grad_a1, t, &g.grad_h);
    }
    let grad_h1_pre = relu_backward(&caches.a1, &grad_a1)?;
    let g_tc1 = temporal_conv_backward(&model.temporal_in, &caches.tc1, &grad_h1_pre)?;
    Ok(WindowGrads {
        temporal_in: g_tc1.grad_k,
        spatial: grad_spatial,
        temporal_out: g_tc2.grad_k,
        head: grad_head,
    })
}

/// Raw-scale prediction for one raw m x N x d window: standardize, run the
/// stack, map the target channel back.
pub fn predict_window<T: Scalar>(
    model: &ForecastModel<T>,
    l: &SparseMatrix<T>,
    x_raw: &Tensor<T>,
) -> Result<Tensor<T>> {
    model.validate()?;
    let x = model.stats.normalize_window(x_raw)?;
    let (out, _) = forward_window(model, l, &x)?;
    model.stats.denormalize_targets(&out, model.target_channel)
}

/// Training knobs for [`train_forecaster`].
#[derive(Debug, Clone)]
pub struct ForecastConfig<T> {
    pub kind: PropagationKind,
    pub c1: usize,
    pub c2: usize,
    pub c3: usize,
    pub kernel_len: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamHyper<T>,
}

impl<T: Scalar> Default for ForecastConfig<T> {
    fn default() -> ForecastConfig<T> {
        ForecastConfig {
            kind: PropagationKind::Method1,
            c1: 8,
            c2: 8,
            c3: 4,
            kernel_len: 3,
            epochs: 50,
            batch_size: 16,
            seed: 7,
            adam: AdamHyper::default(),
        }
    }
}

/// Loss trajectory plus wall-clock timing of a training run.
#[derive(Debug, Clone)]
pub struct TrainHistory<T> {
    /// Mean window loss of every optimizer step, in step order.
    pub step_losses: Vec<T>,
    /// Mean step loss per epoch.
    pub epoch_losses: Vec<T>,
    /// Wall-clock seconds per epoch.
    pub sec_per_epoch: Vec<f64>,
}

impl<T: Scalar> TrainHistory<T> {
    pub fn mean_sec_per_epoch(&self) -> f64 {
        if self.sec_per_epoch.is_empty() {
            return 0.0;
        }
        self.sec_per_epoch.iter().sum::<f64>() / self.sec_per_epoch.len() as f64
    }
}

/// Mini-batch ADAM training on standardized windows. The temporal kernel
/// length is clamped so `m` steps survive both convolutions; the effective
/// value is recorded on the model.
pub fn train_forecaster<T: Scalar>(
    graph: &Graph<T>,
    train_series: &SnapshotSeries<T>,
    m: usize,
    k: usize,
    target_channel: usize,
    cfg: &ForecastConfig<T>,
) -> Result<(ForecastModel<T>, TrainHistory<T>)> {
    if cfg.c1 == 0 || cfg.c2 == 0 || cfg.c3 == 0 || cfg.kernel_len == 0 {
        return Err(Error::domain("channel widths and kernel length must be positive"));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::domain("epochs and batch size must be positive"));
    }
    if graph.n_nodes() != train_series.n_nodes() {
        return Err(Error::shape(
            "train_forecaster",
            &[graph.n_nodes()],
            &[train_series.n_nodes()],
        ));
    }
    let k_t = clamp_kernel_len(cfg.kernel_len, m);
    let d = train_series.n_features();
    let m_rem = remaining_steps(m, k_t);
    let stats = ChannelStats::from_series(train_series);
    let normalized = stats.normalize_series(train_series)?;
    let windows = build_windows(&normalized, m, k, target_channel)?;
    let l = propagation(graph, cfg.kind)?;

    let mut rng = Rng::new(cfg.seed);
    let mut model = ForecastModel {
        kind: cfg.kind,
        temporal_in: glorot_uniform(&[k_t, d, cfg.c1], k_t * d, k_t * cfg.c1, &mut rng)?,
        spatial: glorot_uniform(&[cfg.c1, cfg.c2], cfg.c1, cfg.c2, &mut rng)?,
        temporal_out: glorot_uniform(&[k_t, cfg.c2, cfg.c3], k_t * cfg.c2, k_t * cfg.c3, &mut rng)?,
        head: glorot_uniform(&[m_rem * cfg.c3, k], m_rem * cfg.c3, k, &mut rng)?,
        k_t,
        m,
        k,
        target_channel,
        stats,
    };
    model.validate()?;

    let mut state = AdamState::new(&[
        &model.temporal_in,
        &model.spatial,
        &model.temporal_out,
        &model.head,
    ]);
    let mut history = TrainHistory {
        step_losses: Vec::new(),
        epoch_losses: Vec::new(),
        sec_per_epoch: Vec::with_capacity(cfg.epochs),
    };
    let count = windows.len();
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let mut order: Vec<usize> = (0..count).collect();
        let mut shuffle_rng = Rng::new(split_mix64(cfg.seed ^ (0x5EED_0000 + epoch as u64)));
        shuffle_rng.shuffle(&mut order);
        let mut epoch_loss = T::zero();
        let mut steps_in_epoch = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let inv_b = T::one() / cast::<T>(batch.len() as f64);
            let mut g_tin = Tensor::<T>::zeros(model.temporal_in.shape());
            let mut g_sp = Tensor::<T>::zeros(model.spatial.shape());
            let mut g_tout = Tensor::<T>::zeros(model.temporal_out.shape());
            let mut g_head = Tensor::<T>::zeros(model.head.shape());
            let mut batch_loss = T::zero();
            for &wi in batch {
                let (out, caches) = forward_window(&model, &l.matrix, &windows.inputs[wi])?;
                let (loss, grad_out) = l2_loss_with_grad(&out, &windows.targets[wi])?;
                batch_loss = batch_loss + loss;
                let grads = backward_window(&model, &l.matrix, &caches, &grad_out)?;
                g_tin = g_tin.add(&grads.temporal_in)?;
                g_sp = g_sp.add(&grads.spatial)?;
                g_tout = g_tout.add(&grads.temporal_out)?;
                g_head = g_head.add(&grads.head)?;
            }
            batch_loss = batch_loss * inv_b;
            if !batch_loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "forecast loss at epoch {epoch}"
                )));
            }
            g_tin = g_tin.scale(inv_b);
            g_sp = g_sp.scale(inv_b);
            g_tout = g_tout.scale(inv_b);
            g_head = g_head.scale(inv_b);
            adam_step(
                &mut [
                    &mut model.temporal_in,
                    &mut model.spatial,
                    &mut model.temporal_out,
                    &mut model.head,
                ],
                &[&g_tin, &g_sp, &g_tout, &g_head],
                &mut state,
                &cfg.adam,
            )?;
            history.step_losses.push(batch_loss);
            epoch_loss = epoch_loss + batch_loss;
            steps_in_epoch += 1;
        }
        history
            .epoch_losses
            .push(epoch_loss / cast::<T>(steps_in_epoch as f64));
        history.sec_per_epoch.push(started.elapsed().as_secs_f64());
    }
    Ok((model, history))
}

/// Root-mean-square and mean-absolute error over matching prediction and
/// target tensors, pooled across every element.
pub fn rmse_mae<T: Scalar>(preds: &[Tensor<T>], targets: &[Tensor<T>]) -> Result<(T, T)> {
    if preds.len() != targets.len() || preds.is_empty() {
        return Err(Error::domain(format!(
            "need matching non-empty prediction/target sets, got {} and {}",
            preds.len(),
            targets.len()
        )));
    }
    let mut sq = T::zero();
    let mut abs = T::zero();
    let mut count = 0usize;
    for (p, t) in preds.iter().zip(targets.iter()) {
        if p.shape() != t.shape() {
            return Err(Error::shape("rmse_mae", p.shape(), t.shape()));
        }
        for (&a, &b) in p.data().iter().zip(t.data()) {
            let d = a - b;
            sq = sq + d * d;
            abs = abs + d.abs();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::domain("rmse_mae over zero elements"));
    }
    let n = cast::<T>(count as f64);
    Ok(((sq / n).sqrt(), abs / n))
}

/// Evaluation summary. The constructor enforces the root-mean-square vs
/// mean-absolute ordering, which holds for any error distribution.
#[derive(Debug, Clone, Copy)]
pub struct MetricsReport<T> {
    pub rmse: T,
    pub mae: T,
    pub n_windows: usize,
}

impl<T: Scalar> MetricsReport<T> {
    pub fn new(rmse: T, mae: T, n_windows: usize) -> Result<MetricsReport<T>> {
        if !rmse.is_finite() || !mae.is_finite() {
            return Err(Error::NonFinite("evaluation metrics".to_string()));
        }
        let slack = cast::<T>(1e-12) * (T::one() + mae.abs());
        if rmse + slack < mae {
            return Err(Error::domain(format!(
                "rmse {rmse} below mae {mae}; metric computation is inconsistent"
            )));
        }
        Ok(MetricsReport {
            rmse,
            mae,
            n_windows,
        })
    }
}

/// Slide the model across a raw series and score raw-scale predictions.
pub fn evaluate_forecaster<T: Scalar>(
    model: &ForecastModel<T>,
    graph: &Graph<T>,
    series: &SnapshotSeries<T>,
) -> Result<MetricsReport<T>> {
    model.validate()?;
    if graph.n_nodes() != series.n_nodes() {
        return Err(Error::shape(
            "evaluate_forecaster",
            &[graph.n_nodes()],
            &[series.n_nodes()],
        ));
    }
    let windows = build_windows(series, model.m, model.k, model.target_channel)?;
    let l = propagation(graph, model.kind)?;
    let mut preds = Vec::with_capacity(windows.len());
    for x in &windows.inputs {
        preds.push(predict_window(model, &l.matrix, x)?);
    }
    let (rmse, mae) = rmse_mae(&preds, &windows.targets)?;
    MetricsReport::new(rmse, mae, windows.len())
}

/// One sweep entry: parameter value, scores and training telemetry.
#[derive(Debug, Clone)]
pub struct SweepPoint<T> {
    pub param: usize,
    pub metrics: MetricsReport<T>,
    pub sec_per_epoch: f64,
    pub history: TrainHistory<T>,
}

fn sweep_one<T: Scalar>(
    graph: &Graph<T>,
    train_series: &SnapshotSeries<T>,
    eval_series: &SnapshotSeries<T>,
    m: usize,
    k: usize,
    target_channel: usize,
    cfg: &ForecastConfig<T>,
) -> Result<(MetricsReport<T>, TrainHistory<T>)> {
    let (model, history) = train_forecaster(graph, train_series, m, k, target_channel, cfg)?;
    let metrics = evaluate_forecaster(&model, graph, eval_series)?;
    Ok((metrics, history))
}

fn sweep_point<T: Scalar>(param: usize, metrics: MetricsReport<T>, history: TrainHistory<T>) -> SweepPoint<T> {
    SweepPoint {
        param,
        metrics,
        sec_per_epoch: history.mean_sec_per_epoch(),
        history,
    }
}

/// Retrain per memory length in `m_values` (fixed horizon) and score each
/// model on the held-out series. Every run reuses the same seed and config.
pub fn sweep_memory<T: Scalar>(
    graph: &Graph<T>,
    train_series: &SnapshotSeries<T>,
    eval_series: &SnapshotSeries<T>,
    m_values: &[usize],
    k: usize,
    target_channel: usize,
    cfg: &ForecastConfig<T>,
) -> Result<Vec<SweepPoint<T>>> {
    if m_values.is_empty() {
        return Err(Error::domain("memory sweep needs at least one value"));
    }
    m_values
        .iter()
        .map(|&m| {
            let (metrics, history) =
                sweep_one(graph, train_series, eval_series, m, k, target_channel, cfg)?;
            Ok(sweep_point(m, metrics, history))
        })
        .collect()
}

/// Retrain per horizon in `k_values` (fixed memory), scoring each model.
pub fn sweep_horizon<T: Scalar>(
    graph: &Graph<T>,
    train_series: &SnapshotSeries<T>,
    eval_series: &SnapshotSeries<T>,
    m: usize,
    k_values: &[usize],
    target_channel: usize,
    cfg: &ForecastConfig<T>,
) -> Result<Vec<SweepPoint<T>>> {
    if k_values.is_empty() {
        return Err(Error::domain("horizon sweep needs at least one value"));
    }
    k_values
        .iter()
        .map(|&k| {
            let (metrics, history) =
                sweep_one(graph, train_series, eval_series, m, k, target_channel, cfg)?;
            Ok(sweep_point(k, metrics, history))
        })
        .collect()
}

const META_LEN: usize = 6;

/// Persist a forecaster to a single checkpoint file.
pub fn save_forecast_model<T: Scalar>(model: &ForecastModel<T>, path: &Path) -> Result<()> {
    model.validate()?;
    let d = model.d();
    let kind_code = match model.kind {
        PropagationKind::Method1 => 1.0,
        PropagationKind::Method2 => 2.0,
    };
    let meta = Tensor::<T>::new(
        &[1, META_LEN],
        vec![
            cast(model.m as f64),
            cast(model.k as f64),
            cast(model.target_channel as f64),
            cast(model.k_t as f64),
            cast(kind_code),
            cast(d as f64),
        ],
    )?;
    let mean = Tensor::new(&[1, d], model.stats.mean.clone())?;
    let std = Tensor::new(&[1, d], model.stats.std.clone())?;
    save_checkpoint(
        path,
        &[
            ("meta", &meta),
            ("stats.mean", &mean),
            ("stats.std", &std),
            ("temporal_in", &model.temporal_in),
            ("spatial", &model.spatial),
            ("temporal_out", &model.temporal_out),
            ("head", &model.head),
        ],
    )
}

/// Restore a forecaster written by [`save_forecast_model`].
pub fn load_forecast_model<T: Scalar>(path: &Path) -> Result<ForecastModel<T>> {
    let entries = load_checkpoint::<T>(path)?;
    let mut lookup = std::collections::BTreeMap::new();
    for (name, tensor) in entries {
        lookup.insert(name, tensor);
    }
    let mut take = |name: &str| -> Result<Tensor<T>> {
        lookup
            .remove(name)
            .ok_or_else(|| Error::format(path, format!("checkpoint is missing `{name}`")))
    };
    let meta = take("meta")?;
    if meta.len() != META_LEN {
        return Err(Error::format(path, "malformed forecaster metadata"));
    }
    let at = |i: usize| widen(meta.data()[i]);
    let kind = match at(4) as i64 {
        1 => PropagationKind::Method1,
        2 => PropagationKind::Method2,
        other => {
            return Err(Error::format(
                path,
                format!("unknown propagation code {other}"),
            ))
        }
    };
    let model = ForecastModel {
        kind,
        stats: ChannelStats {
            mean: take("stats.mean")?.into_data(),
            std: take("stats.std")?.into_data(),
        },
        temporal_in: take("temporal_in")?,
        spatial: take("spatial")?,
        temporal_out: take("temporal_out")?,
        head: take("head")?,
        m: at(0) as usize,
        k: at(1) as usize,
        target_channel: at(2) as usize,
        k_t: at(3) as usize,
    };
    model.validate()?;
    if model.stats.mean.len() != model.d() || model.stats.std.len() != model.d() {
        return Err(Error::format(path, "stats do not match model width"));
    }
    Ok(model)
}

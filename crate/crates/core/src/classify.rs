//! Semi-supervised node classification: threshold labeling, partial label
//! visibility and a two-layer graph-convolutional classifier trained with
//! masked cross-entropy.

use std::path::Path;

use crate::bytes;
use crate::error::{Error, Result};
use crate::graph::{propagation, Graph, PropagationKind};
use crate::nn::{
    adam_step, dropout, dropout_backward, glorot_uniform, graph_conv_backward, graph_conv_forward,
    load_checkpoint, masked_cross_entropy_with_grad, save_checkpoint, softmax_backward,
    softmax_rows, AdamHyper, AdamState, Activation, DropoutCache, GraphConvCache, Mode,
};
use crate::rng::{split_mix64, Rng};
use crate::scalar::{cast, widen, Scalar};
use crate::sparse::SparseMatrix;
use crate::tensor::Tensor;

/// Binary labels via inclusive thresholding: 1 where `value >= kappa`.
pub fn threshold_labels<T: Scalar>(values: &[T], kappa: T) -> Vec<u8> {
    values.iter().map(|&v| u8::from(v >= kappa)).collect()
}

/// Pick a threshold so that roughly `balance` of the values land in the
/// high class. With `h = (1 - balance) * n` values meant to stay low, an
/// integral interior `h` puts the cut midway between the two straddling
/// order statistics; otherwise the clamped order statistic itself becomes
/// the (inclusive) threshold.
pub fn choose_kappa<T: Scalar>(values: &[T], balance: f64) -> Result<T> {
    if !(0.0..1.0).contains(&balance) || balance == 0.0 {
        return Err(Error::domain(format!("balance {balance} outside (0, 1)")));
    }
    let n = values.len();
    if n < 2 {
        return Err(Error::domain("need at least 2 values to choose a threshold"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    if sorted[0] == sorted[n - 1] {
        return Err(Error::Degenerate(
            "all values are equal; no threshold can split them".to_string(),
        ));
    }
    let h = (1.0 - balance) * n as f64;
    let hf = h.floor();
    let half: T = cast(0.5);
    if h == hf && h > 0.0 && (h as usize) < n {
        let k = h as usize;
        Ok((sorted[k - 1] + sorted[k]) * half)
    } else {
        let idx = (hf.max(0.0) as usize).min(n - 1);
        Ok(sorted[idx])
    }
}

/// Ground-truth labels with a visibility mask; only visible labels join the
/// training loss.
#[derive(Debug, Clone)]
pub struct LabeledNodes<T> {
    pub labels: Vec<u8>,
    pub visible: Vec<bool>,
    pub kappa: T,
}

impl<T: Scalar> LabeledNodes<T> {
    pub fn new(labels: Vec<u8>, visible: Vec<bool>, kappa: T) -> Result<LabeledNodes<T>> {
        if labels.len() != visible.len() {
            return Err(Error::shape(
                "LabeledNodes",
                &[labels.len()],
                &[visible.len()],
            ));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::domain("labels must be 0 or 1"));
        }
        Ok(LabeledNodes {
            labels,
            visible,
            kappa,
        })
    }

    pub fn holdout(&self) -> Vec<bool> {
        self.visible.iter().map(|&v| !v).collect()
    }
}

/// Mark `floor(n * visible_fraction)` nodes (clamped to keep both sides
/// non-empty) as label-visible, chosen by seeded sampling.
pub fn visibility_mask(n: usize, visible_fraction: f64, seed: u64) -> Result<Vec<bool>> {
    if n < 2 {
        return Err(Error::domain("need at least 2 nodes to hide labels"));
    }
    if !(0.0..1.0).contains(&visible_fraction) || visible_fraction == 0.0 {
        return Err(Error::domain(format!(
            "visible_fraction {visible_fraction} outside (0, 1)"
        )));
    }
    let count = ((n as f64 * visible_fraction).floor() as usize).clamp(1, n - 1);
    let mut rng = Rng::new(seed);
    let chosen = rng.distinct_indices(n, count);
    let mut mask = vec![false; n];
    for i in chosen {
        mask[i] = true;
    }
    Ok(mask)
}

/// Two-layer convolutional classifier:
/// `softmax(L * dropout(relu(L X W1)) * W2)`.
#[derive(Debug, Clone)]
pub struct ClassifierModel<T> {
    pub kind: PropagationKind,
    pub w1: Tensor<T>,
    pub w2: Tensor<T>,
    pub dropout_rate: f64,
}

pub struct ClassifierCache<T> {
    c1: GraphConvCache<T>,
    cd: DropoutCache<T>,
    c2: GraphConvCache<T>,
    probs: Tensor<T>,
}

/// Forward pass; `seed` only matters in [`Mode::Train`] where it drives the
/// dropout mask.
pub fn classifier_forward<T: Scalar>(
    model: &ClassifierModel<T>,
    l: &SparseMatrix<T>,
    x: &Tensor<T>,
    mode: Mode,
    seed: u64,
) -> Result<(Tensor<T>, ClassifierCache<T>)> {
    let (h1, c1) = graph_conv_forward(l, x, &model.w1, None, Activation::Relu)?;
    let (h1d, cd) = dropout(&h1, model.dropout_rate, mode, seed)?;
    let (logits, c2) = graph_conv_forward(l, &h1d, &model.w2, None, Activation::Identity)?;
    let probs = softmax_rows(&logits)?;
    Ok((
        probs.clone(),
        ClassifierCache { c1, cd, c2, probs },
    ))
}

/// Gradients of the two weight matrices given the loss gradient with
/// respect to the output probabilities.
pub fn classifier_backward<T: Scalar>(
    model: &ClassifierModel<T>,
    l: &SparseMatrix<T>,
    cache: &ClassifierCache<T>,
    grad_probs: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let grad_logits = softmax_backward(&cache.probs, grad_probs)?;
    let g2 = graph_conv_backward(l, &model.w2, &cache.c2, &grad_logits)?;
    let grad_h1 = dropout_backward(&cache.cd, &g2.grad_h)?;
    let g1 = graph_conv_backward(l, &model.w1, &cache.c1, &grad_h1)?;
    Ok((g1.grad_w, g2.grad_w))
}

/// Fraction of masked rows whose argmax matches the label; the first class
/// wins ties.
pub fn accuracy<T: Scalar>(probs: &Tensor<T>, labels: &[u8], mask: &[bool]) -> Result<T> {
    let rows = probs.rows();
    if labels.len() != rows || mask.len() != rows {
        return Err(Error::shape(
            "accuracy",
            &[rows, rows],
            &[labels.len(), mask.len()],
        ));
    }
    let mut total = 0usize;
    let mut hits = 0usize;
    for i in 0..rows {
        if !mask[i] {
            continue;
        }
        total += 1;
        let pred = u8::from(probs.at2(i, 1) > probs.at2(i, 0));
        if pred == labels[i] {
            hits += 1;
        }
    }
    if total == 0 {
        return Err(Error::domain("accuracy mask selects no nodes"));
    }
    Ok(cast::<T>(hits as f64) / cast::<T>(total as f64))
}

/// Center each feature column and scale it to unit variance. Constant
/// columns are left centered only. Returns the transformed matrix with the
/// per-column means and scales.
pub fn standardize_columns<T: Scalar>(x: &Tensor<T>) -> Result<(Tensor<T>, Vec<T>, Vec<T>)> {
    let rows = x.rows();
    let cols = x.cols();
    if rows == 0 {
        return Err(Error::domain("cannot standardize an empty matrix"));
    }
    let inv_n = T::one() / cast::<T>(rows as f64);
    let mut means = vec![T::zero(); cols];
    let mut scales = vec![T::one(); cols];
    let mut out = x.clone();
    for c in 0..cols {
        let mut mean = T::zero();
        for r in 0..rows {
            mean = mean + x.at2(r, c);
        }
        mean = mean * inv_n;
        let mut var = T::zero();
        for r in 0..rows {
            let d = x.at2(r, c) - mean;
            var = var + d * d;
        }
        var = var * inv_n;
        let sd = var.sqrt();
        let scale = if sd > T::zero() { T::one() / sd } else { T::one() };
        means[c] = mean;
        scales[c] = scale;
        for r in 0..rows {
            out.set2(r, c, (x.at2(r, c) - mean) * scale);
        }
    }
    Ok((out, means, scales))
}

/// Training knobs for [`train_classifier`].
#[derive(Debug, Clone)]
pub struct ClassifierConfig<T> {
    pub kind: PropagationKind,
    pub hidden: usize,
    pub dropout_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub adam: AdamHyper<T>,
}

impl<T: Scalar> Default for ClassifierConfig<T> {
    fn default() -> ClassifierConfig<T> {
        ClassifierConfig {
            kind: PropagationKind::Method1,
            hidden: 16,
            dropout_rate: 0.3,
            epochs: 200,
            seed: 7,
            adam: AdamHyper::with_alpha(cast(1e-2)),
        }
    }
}

/// Per-epoch training diagnostics; accuracies are computed with dropout
/// disabled. With no hidden nodes the holdout accuracy repeats the train
/// accuracy.
#[derive(Debug, Clone, Copy)]
pub struct EpochStats<T> {
    pub epoch: usize,
    pub loss: T,
    pub train_accuracy: T,
    pub holdout_accuracy: T,
}

/// Full-batch training of the two-layer classifier. Only `labeled.visible`
/// nodes contribute to the loss; every epoch draws a fresh dropout mask
/// from a seed derived from `cfg.seed` and the epoch index.
pub fn train_classifier<T: Scalar>(
    graph: &Graph<T>,
    x: &Tensor<T>,
    labeled: &LabeledNodes<T>,
    cfg: &ClassifierConfig<T>,
) -> Result<(ClassifierModel<T>, Vec<EpochStats<T>>)> {
    let n = graph.n_nodes();
    if x.rows() != n || labeled.labels.len() != n {
        return Err(Error::shape(
            "train_classifier",
            &[n, n],
            &[x.rows(), labeled.labels.len()],
        ));
    }
    if cfg.hidden == 0 || cfg.epochs == 0 {
        return Err(Error::domain("hidden width and epochs must be positive"));
    }
    let l = propagation(graph, cfg.kind)?;
    let d = x.cols();
    let mut rng = Rng::new(cfg.seed);
    let mut model = ClassifierModel {
        kind: cfg.kind,
        w1: glorot_uniform(&[d, cfg.hidden], d, cfg.hidden, &mut rng)?,
        w2: glorot_uniform(&[cfg.hidden, 2], cfg.hidden, 2, &mut rng)?,
        dropout_rate: cfg.dropout_rate,
    };
    let mut state = AdamState::new(&[&model.w1, &model.w2]);
    let holdout = labeled.holdout();
    let any_holdout = holdout.iter().any(|&h| h);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let drop_seed = split_mix64(cfg.seed ^ epoch as u64);
        let (probs, cache) = classifier_forward(&model, &l.matrix, x, Mode::Train, drop_seed)?;
        let (loss, grad_probs) =
            masked_cross_entropy_with_grad(&probs, &labeled.labels, &labeled.visible)?;
        let (gw1, gw2) = classifier_backward(&model, &l.matrix, &cache, &grad_probs)?;
        adam_step(
            &mut [&mut model.w1, &mut model.w2],
            &[&gw1, &gw2],
            &mut state,
            &cfg.adam,
        )?;

        let (eval_probs, _) = classifier_forward(&model, &l.matrix, x, Mode::Eval, 0)?;
        let train_accuracy = accuracy(&eval_probs, &labeled.labels, &labeled.visible)?;
        let holdout_accuracy = if any_holdout {
            accuracy(&eval_probs, &labeled.labels, &holdout)?
        } else {
            train_accuracy
        };
        loss.is_finite()
            .then_some(())
            .ok_or_else(|| Error::NonFinite(format!("classifier loss at epoch {epoch}")))?;
        history.push(EpochStats {
            epoch,
            loss,
            train_accuracy,
            holdout_accuracy,
        });
    }
    Ok((model, history))
}

/// Class probabilities with dropout disabled.
pub fn predict<T: Scalar>(
    model: &ClassifierModel<T>,
    graph: &Graph<T>,
    x: &Tensor<T>,
) -> Result<Tensor<T>> {
    let l = propagation(graph, model.kind)?;
    let (probs, _) = classifier_forward(model, &l.matrix, x, Mode::Eval, 0)?;
    Ok(probs)
}

/// Write per-node predictions as
/// `cell_id,label_true,label_pred,p_high` CSV.
pub fn save_predictions<T: Scalar>(
    node_ids: &[u64],
    labels: &[u8],
    probs: &Tensor<T>,
    path: &Path,
) -> Result<()> {
    let n = node_ids.len();
    if labels.len() != n || probs.rows() != n || probs.cols() != 2 {
        return Err(Error::shape(
            "save_predictions",
            &[n, n, 2],
            &[labels.len(), probs.rows(), probs.cols()],
        ));
    }
    let mut out = String::from("cell_id,label_true,label_pred,p_high\n");
    for i in 0..n {
        let pred = u8::from(probs.at2(i, 1) > probs.at2(i, 0));
        out.push_str(&format!(
            "{},{},{},{}\n",
            node_ids[i],
            labels[i],
            pred,
            widen(probs.at2(i, 1))
        ));
    }
    bytes::atomic_write(path, out.as_bytes())
}

/// Persist a classifier to a single checkpoint file.
pub fn save_classifier_model<T: Scalar>(model: &ClassifierModel<T>, path: &Path) -> Result<()> {
    let kind_code = match model.kind {
        PropagationKind::Method1 => 1.0,
        PropagationKind::Method2 => 2.0,
    };
    let meta = Tensor::<T>::new(&[1, 2], vec![cast(kind_code), cast(model.dropout_rate)])?;
    save_checkpoint(
        path,
        &[("meta", &meta), ("w1", &model.w1), ("w2", &model.w2)],
    )
}

/// Load a classifier previously written by [`save_classifier_model`].
pub fn load_classifier_model<T: Scalar>(path: &Path) -> Result<ClassifierModel<T>> {
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
    if meta.len() != 2 {
        return Err(Error::format(path, "malformed classifier metadata"));
    }
    let kind = match widen(meta.data()[0]) as i64 {
        1 => PropagationKind::Method1,
        2 => PropagationKind::Method2,
        other => {
            return Err(Error::format(
                path,
                format!("unknown propagation code {other}"),
            ))
        }
    };
    let model = ClassifierModel {
        kind,
        dropout_rate: widen(meta.data()[1]),
        w1: take("w1")?,
        w2: take("w2")?,
    };
    if model.w1.cols() != model.w2.rows() || model.w2.cols() != 2 {
        return Err(Error::format(path, "classifier weight shapes do not chain"));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_epsilon_graph;

    #[test]
    fn threshold_is_inclusive() {
        assert_eq!(threshold_labels(&[1.0, 2.0, 3.0], 2.0), vec![0, 1, 1]);
    }

    #[test]
    fn kappa_midpoint_on_integral_cut() {
        let k = choose_kappa(&[4.0, 1.0, 3.0, 2.0], 0.5).unwrap();
        assert_eq!(k, 2.5);
        assert_eq!(threshold_labels(&[1.0, 2.0, 3.0, 4.0], k), vec![0, 0, 1, 1]);

        let k = choose_kappa(&[1.0, 2.0, 3.0, 4.0], 0.25).unwrap();
        assert_eq!(k, 3.5);
    }

    #[test]
    fn kappa_falls_back_to_order_statistic() {
        // h = (1 - 1/3) * 4 = 8/3 -> index 2 -> value 3, inclusive
        let k = choose_kappa(&[1.0, 2.0, 3.0, 4.0], 1.0 / 3.0).unwrap();
        assert_eq!(k, 3.0);
        assert_eq!(threshold_labels(&[1.0, 2.0, 3.0, 4.0], k), vec![0, 0, 1, 1]);
    }

    #[test]
    fn kappa_rejects_degenerate_input() {
        assert!(choose_kappa(&[2.0, 2.0, 2.0], 0.5).is_err());
        assert!(choose_kappa(&[1.0], 0.5).is_err());
        assert!(choose_kappa(&[1.0, 2.0], 0.0).is_err());
        assert!(choose_kappa(&[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn visibility_mask_is_seeded_and_balanced() {
        let a = visibility_mask(10, 0.3, 7).unwrap();
        let b = visibility_mask(10, 0.3, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().filter(|&&v| v).count(), 3);
        assert!(a.iter().any(|&v| !v));

        let tiny = visibility_mask(2, 0.9, 1).unwrap();
        assert_eq!(tiny.iter().filter(|&&v| v).count(), 1);
        assert!(visibility_mask(1, 0.5, 1).is_err());
    }

    #[test]
    fn accuracy_counts_masked_rows_with_tie_to_low() {
        let probs = Tensor::from_rows(&[
            vec![0.9, 0.1],
            vec![0.5, 0.5],
            vec![0.2, 0.8],
        ])
        .unwrap();
        // tie on row 1 predicts class 0
        let acc: f64 = accuracy(&probs, &[0, 0, 1], &[true, true, true]).unwrap();
        assert_eq!(acc, 1.0);
        let acc: f64 = accuracy(&probs, &[1, 1, 1], &[true, true, false]).unwrap();
        assert_eq!(acc, 0.0);
        assert!(accuracy(&probs, &[0, 0, 1], &[false, false, false]).is_err());
    }

    #[test]
    fn standardize_gives_zero_mean_unit_variance() {
        let x = Tensor::from_rows(&[vec![1.0, 5.0], vec![3.0, 5.0], vec![5.0, 5.0]]).unwrap();
        let (z, means, scales) = standardize_columns(&x).unwrap();
        assert_eq!(means[0], 3.0);
        let m: f64 = (0..3).map(|r| z.at2(r, 0)).sum::<f64>() / 3.0;
        assert!(m.abs() < 1e-15);
        let v: f64 = (0..3).map(|r| z.at2(r, 0).powi(2)).sum::<f64>() / 3.0;
        assert!((v - 1.0).abs() < 1e-12);
        // constant column: centered, scale 1
        assert_eq!(scales[1], 1.0);
        for r in 0..3 {
            assert_eq!(z.at2(r, 1), 0.0);
        }
    }

    fn line_graph(n: usize) -> Graph<f64> {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 * 10.0, 0.0]).collect();
        let coords = Tensor::from_rows(&rows).unwrap();
        build_epsilon_graph((1..=n as u64).collect(), coords, 15.0).unwrap()
    }

    #[test]
    fn forward_rows_are_distributions() {
        let g = line_graph(4);
        let x = Tensor::from_rows(&[vec![1.0], vec![0.0], vec![-1.0], vec![2.0]]).unwrap();
        let model = ClassifierModel {
            kind: PropagationKind::Method1,
            w1: glorot_uniform(&[1, 4], 1, 4, &mut Rng::new(1)).unwrap(),
            w2: glorot_uniform(&[4, 2], 4, 2, &mut Rng::new(2)).unwrap(),
            dropout_rate: 0.5,
        };
        let l = propagation(&g, PropagationKind::Method1).unwrap();
        let (probs, _) = classifier_forward(&model, &l.matrix, &x, Mode::Eval, 0).unwrap();
        for r in 0..4 {
            let s = probs.at2(r, 0) + probs.at2(r, 1);
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn training_fits_separable_clusters() {
        // two spatial clusters with cluster-coded features; half the labels
        // hidden, the rest recovered
        let mut rows = Vec::new();
        let mut feats = Vec::new();
        let mut rng = Rng::new(3);
        for i in 0..12 {
            let cluster = (i >= 6) as usize;
            rows.push(vec![
                cluster as f64 * 1_000.0 + (i % 6) as f64 * 10.0,
                rng.uniform(0.0, 5.0),
            ]);
            feats.push(vec![cluster as f64 + rng.uniform(-0.2, 0.2)]);
        }
        let coords = Tensor::from_rows(&rows).unwrap();
        let g = build_epsilon_graph((1..=12).collect(), coords, 60.0).unwrap();
        let x = Tensor::from_rows(&feats).unwrap();
        let labels: Vec<u8> = (0..12).map(|i| u8::from(i >= 6)).collect();
        let visible: Vec<bool> = (0..12).map(|i| i % 2 == 0).collect();
        let labeled = LabeledNodes::new(labels, visible, 0.5).unwrap();
        let cfg = ClassifierConfig {
            epochs: 120,
            ..ClassifierConfig::default()
        };
        let (model, history) = train_classifier(&g, &x, &labeled, &cfg).unwrap();
        let last = history.last().unwrap();
        assert!(
            last.holdout_accuracy == 1.0,
            "holdout accuracy {}",
            last.holdout_accuracy
        );
        assert!(last.loss < history[0].loss);

        let probs = predict(&model, &g, &x).unwrap();
        let acc = accuracy(&probs, &labeled.labels, &[true; 12]).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn training_is_seed_deterministic() {
        let g = line_graph(6);
        let x = Tensor::from_rows(&[
            vec![0.1],
            vec![0.2],
            vec![0.3],
            vec![2.1],
            vec![2.2],
            vec![2.3],
        ])
        .unwrap();
        let labeled =
            LabeledNodes::new(vec![0, 0, 0, 1, 1, 1], vec![true, false, true, true, false, true], 1.0)
                .unwrap();
        let cfg = ClassifierConfig {
            epochs: 30,
            ..ClassifierConfig::default()
        };
        let (ma, ha) = train_classifier(&g, &x, &labeled, &cfg).unwrap();
        let (mb, hb) = train_classifier(&g, &x, &labeled, &cfg).unwrap();
        assert_eq!(ma.w1.data(), mb.w1.data());
        assert_eq!(ma.w2.data(), mb.w2.data());
        for (a, b) in ha.iter().zip(hb.iter()) {
            assert_eq!(a.loss.to_bits(), b.loss.to_bits());
        }
    }

    #[test]
    fn predictions_csv_has_expected_rows() {
        let probs = Tensor::from_rows(&[vec![0.25, 0.75], vec![0.9, 0.1]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("predictions.csv");
        save_predictions(&[3, 8], &[1, 1], &probs, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "cell_id,label_true,label_pred,p_high");
        assert_eq!(lines[1], "3,1,1,0.75");
        assert_eq!(lines[2], "8,1,0,0.1");
    }

    #[test]
    fn checkpoint_round_trip_preserves_bits() {
        let mut rng = Rng::new(11);
        let model = ClassifierModel::<f64> {
            kind: PropagationKind::Method2,
            w1: glorot_uniform(&[3, 5], 3, 5, &mut rng).unwrap(),
            w2: glorot_uniform(&[5, 2], 5, 2, &mut rng).unwrap(),
            dropout_rate: 0.4,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_classifier_model(&model, &path).unwrap();
        let loaded = load_classifier_model::<f64>(&path).unwrap();
        assert_eq!(loaded.kind, PropagationKind::Method2);
        assert_eq!(loaded.dropout_rate, 0.4);
        for (a, b) in model.w1.data().iter().zip(loaded.w1.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in model.w2.data().iter().zip(loaded.w2.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

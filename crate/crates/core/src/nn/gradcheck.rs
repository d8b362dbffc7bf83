use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::{cast, widen, Scalar};
use crate::tensor::Tensor;

/// Compare analytic gradients against central finite differences.
///
/// `f` evaluates the scalar loss at an arbitrary parameter setting;
/// `analytic` holds one gradient tensor per parameter. Up to
/// `max_coords_per_param` coordinates per tensor are probed (all of them if
/// the tensor is small enough; otherwise a deterministic sample). Returns
/// the worst relative error
/// `|a - fd| / max(|a|, |fd|, 1e-8)` over every probed coordinate.
pub fn gradient_check<T, F>(
    mut f: F,
    params: &[Tensor<T>],
    analytic: &[Tensor<T>],
    h: f64,
    max_coords_per_param: usize,
) -> Result<f64>
where
    T: Scalar,
    F: FnMut(&[Tensor<T>]) -> Result<T>,
{
    if params.len() != analytic.len() {
        return Err(Error::shape(
            "gradient_check",
            &[params.len()],
            &[analytic.len()],
        ));
    }
    for (p, a) in params.iter().zip(analytic.iter()) {
        if p.shape() != a.shape() {
            return Err(Error::shape("gradient_check param", p.shape(), a.shape()));
        }
    }
    if h <= 0.0 || max_coords_per_param == 0 {
        return Err(Error::domain(
            "gradient_check needs h > 0 and at least one probe per parameter",
        ));
    }
    let mut working: Vec<Tensor<T>> = params.to_vec();
    let step = cast::<T>(h);
    let mut worst = 0.0f64;
    for pi in 0..params.len() {
        let len = params[pi].len();
        let coords: Vec<usize> = if len <= max_coords_per_param {
            (0..len).collect()
        } else {
            let mut rng = Rng::new(0xC0FF_EE00 ^ pi as u64);
            let mut picked = rng.distinct_indices(len, max_coords_per_param);
            picked.sort_unstable();
            picked
        };
        for ci in coords {
            let orig = working[pi].data()[ci];
            working[pi].data_mut()[ci] = orig + step;
            let fp = widen(f(&working)?);
            working[pi].data_mut()[ci] = orig - step;
            let fm = widen(f(&working)?);
            working[pi].data_mut()[ci] = orig;
            let fd = (fp - fm) / (2.0 * h);
            let a = widen(analytic[pi].data()[ci]);
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-8);
            if rel > worst {
                worst = rel;
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ops::{
        dense_backward, dense_forward, dropout, dropout_backward, graph_conv_backward,
        graph_conv_forward, l2_loss, l2_loss_with_grad, masked_cross_entropy,
        masked_cross_entropy_with_grad, softmax_backward, softmax_rows, temporal_conv_backward,
        temporal_conv_forward, Activation, Mode,
    };
    use crate::sparse::SparseMatrix;

    fn rand_tensor(shape: &[usize], seed: u64, scale: f64) -> Tensor<f64> {
        let mut rng = Rng::new(seed);
        let len = shape.iter().product();
        Tensor::new(
            shape,
            (0..len).map(|_| rng.uniform(-scale, scale)).collect(),
        )
        .unwrap()
    }

    fn ring_sparse(n: usize) -> SparseMatrix<f64> {
        let mut triplets = Vec::new();
        for i in 0..n {
            triplets.push((i, i, 0.5));
            triplets.push((i, (i + 1) % n, 0.25));
            triplets.push(((i + 1) % n, i, 0.25));
        }
        SparseMatrix::from_triplets(n, n, triplets).unwrap()
    }

    #[test]
    fn dense_gradients_match_finite_differences() {
        let x = rand_tensor(&[4, 3], 1, 1.0);
        let w = rand_tensor(&[3, 2], 2, 1.0);
        let b = rand_tensor(&[1, 2], 3, 0.5);
        let target = rand_tensor(&[4, 2], 4, 1.0);

        let (out, cache) = dense_forward(&x, &w, Some(&b)).unwrap();
        let (_, grad_out) = l2_loss_with_grad(&out, &target).unwrap();
        let (gx, gw, gb) = dense_backward(&w, &cache, &grad_out).unwrap();

        let f = |p: &[Tensor<f64>]| {
            let (out, _) = dense_forward(&p[0], &p[1], Some(&p[2]))?;
            l2_loss(&out, &target)
        };
        let worst = gradient_check(
            f,
            &[x.clone(), w.clone(), b.clone()],
            &[gx, gw, gb],
            1e-5,
            100,
        )
        .unwrap();
        assert!(worst < 1e-6, "worst rel err {worst}");
    }

    #[test]
    fn graph_conv_gradients_match_finite_differences() {
        let l = ring_sparse(5);
        let h = rand_tensor(&[5, 3], 11, 1.0);
        let w = rand_tensor(&[3, 2], 12, 1.0);
        let b = rand_tensor(&[1, 2], 13, 0.5);
        let target = rand_tensor(&[5, 2], 14, 1.0);

        let (out, cache) = graph_conv_forward(&l, &h, &w, Some(&b), Activation::Relu).unwrap();
        let (_, grad_out) = l2_loss_with_grad(&out, &target).unwrap();
        let grads = graph_conv_backward(&l, &w, &cache, &grad_out).unwrap();

        let f = |p: &[Tensor<f64>]| {
            let (out, _) = graph_conv_forward(&l, &p[0], &p[1], Some(&p[2]), Activation::Relu)?;
            l2_loss(&out, &target)
        };
        let worst = gradient_check(
            f,
            &[h, w, b],
            &[grads.grad_h, grads.grad_w, grads.grad_b],
            1e-5,
            100,
        )
        .unwrap();
        assert!(worst < 1e-6, "worst rel err {worst}");
    }

    #[test]
    fn temporal_conv_gradients_match_finite_differences() {
        let x = rand_tensor(&[5, 3, 2], 21, 1.0);
        let k = rand_tensor(&[3, 2, 2], 22, 1.0);
        let b = rand_tensor(&[1, 2], 23, 0.5);
        let target = rand_tensor(&[3, 3, 2], 24, 1.0);

        let (out, cache) = temporal_conv_forward(&x, &k, Some(&b)).unwrap();
        let (_, grad_out) = l2_loss_with_grad(&out, &target).unwrap();
        let grads = temporal_conv_backward(&k, &cache, &grad_out).unwrap();

        let f = |p: &[Tensor<f64>]| {
            let (out, _) = temporal_conv_forward(&p[0], &p[1], Some(&p[2]))?;
            l2_loss(&out, &target)
        };
        let worst = gradient_check(
            f,
            &[x, k, b],
            &[grads.grad_x, grads.grad_k, grads.grad_b],
            1e-5,
            150,
        )
        .unwrap();
        assert!(worst < 1e-6, "worst rel err {worst}");
    }

    #[test]
    fn softmax_cross_entropy_gradients_match_finite_differences() {
        let logits = rand_tensor(&[6, 2], 31, 2.0);
        let labels = [0u8, 1, 1, 0, 1, 0];
        let mask = [true, true, false, true, true, true];

        let probs = softmax_rows(&logits).unwrap();
        let (_, grad_p) = masked_cross_entropy_with_grad(&probs, &labels, &mask).unwrap();
        let grad_logits = softmax_backward(&probs, &grad_p).unwrap();

        let f = |p: &[Tensor<f64>]| {
            let probs = softmax_rows(&p[0])?;
            masked_cross_entropy(&probs, &labels, &mask)
        };
        let worst = gradient_check(f, &[logits], &[grad_logits], 1e-5, 100).unwrap();
        assert!(worst < 1e-6, "worst rel err {worst}");
    }

    #[test]
    fn dropout_gradients_match_finite_differences() {
        let x = rand_tensor(&[4, 4], 41, 1.0);
        let target = rand_tensor(&[4, 4], 42, 1.0);
        let seed = 99;

        let (out, cache) = dropout(&x, 0.4, Mode::Train, seed).unwrap();
        let (_, grad_out) = l2_loss_with_grad(&out, &target).unwrap();
        let gx = dropout_backward(&cache, &grad_out).unwrap();

        let f = |p: &[Tensor<f64>]| {
            let (out, _) = dropout(&p[0], 0.4, Mode::Train, seed)?;
            l2_loss(&out, &target)
        };
        let worst = gradient_check(f, &[x], &[gx], 1e-5, 100).unwrap();
        assert!(worst < 1e-6, "worst rel err {worst}");
    }

    #[test]
    fn detects_a_wrong_gradient() {
        let x = rand_tensor(&[3, 3], 51, 1.0);
        let target = rand_tensor(&[3, 3], 52, 1.0);
        let (_, grad) = l2_loss_with_grad(&x, &target).unwrap();
        let wrong = grad.scale(1.01);
        let f = |p: &[Tensor<f64>]| l2_loss(&p[0], &target);
        let worst = gradient_check(f, &[x], &[wrong], 1e-5, 100).unwrap();
        assert!(worst > 1e-3, "a 1% scaling should be caught, got {worst}");
    }

    #[test]
    fn samples_large_parameters_deterministically() {
        let x = rand_tensor(&[40, 40], 61, 1.0);
        let target = rand_tensor(&[40, 40], 62, 1.0);
        let (_, grad) = l2_loss_with_grad(&x, &target).unwrap();
        let f = |p: &[Tensor<f64>]| l2_loss(&p[0], &target);
        let a = gradient_check(
            f,
            std::slice::from_ref(&x),
            std::slice::from_ref(&grad),
            1e-5,
            20,
        )
        .unwrap();
        let f2 = |p: &[Tensor<f64>]| l2_loss(&p[0], &target);
        let b = gradient_check(f2, &[x], &[grad], 1e-5, 20).unwrap();
        assert_eq!(a, b);
        assert!(a < 1e-6);
    }
}

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::{cast, Scalar};
use crate::sparse::SparseMatrix;
use crate::tensor::Tensor;

/// Nonlinearity applied inside a fused op.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply<T: Scalar>(&self, x: T) -> T {
        match self {
            Activation::Relu => {
                if x > T::zero() {
                    x
                } else {
                    T::zero()
                }
            }
            Activation::Identity => x,
        }
    }

    /// Derivative as a function of the pre-activation; ReLU uses 0 at 0.
    fn derivative<T: Scalar>(&self, pre: T) -> T {
        match self {
            Activation::Relu => {
                if pre > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Identity => T::one(),
        }
    }
}

/// Train/eval switch; only dropout behaves differently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Elementwise max(x, 0).
pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Backward of [`relu`] given the forward *output* (output > 0 exactly when
/// the unit was active).
pub fn relu_backward<T: Scalar>(output: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    output.zip_map(grad_out, |o, g| if o > T::zero() { g } else { T::zero() })
}

/// Saved intermediates for [`graph_conv_backward`].
#[derive(Debug, Clone)]
pub struct GraphConvCache<T> {
    lh: Tensor<T>,
    pre: Tensor<T>,
    act: Activation,
}

/// Gradients of one graph convolution.
#[derive(Debug, Clone)]
pub struct GraphConvGrads<T> {
    pub grad_h: Tensor<T>,
    pub grad_w: Tensor<T>,
    pub grad_b: Tensor<T>,
}

/// Fused graph convolution: `act(L * H * W + b)`.
/// `l` is N x N sparse, `h` is N x c_in, `w` is c_in x c_out, `bias` (if
/// any) is 1 x c_out broadcast over rows.
pub fn graph_conv_forward<T: Scalar>(
    l: &SparseMatrix<T>,
    h: &Tensor<T>,
    w: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    act: Activation,
) -> Result<(Tensor<T>, GraphConvCache<T>)> {
    let lh = l.mul_dense(h)?;
    let mut pre = lh.matmul(w)?;
    if let Some(b) = bias {
        if b.shape() != [1, pre.cols()] {
            return Err(Error::shape("graph_conv bias", &[1, pre.cols()], b.shape()));
        }
        let cols = pre.cols();
        for r in 0..pre.rows() {
            for c in 0..cols {
                pre.set2(r, c, pre.at2(r, c) + b.at2(0, c));
            }
        }
    }
    let out = pre.map(|v| act.apply(v));
    Ok((out, GraphConvCache { lh, pre, act }))
}

pub fn graph_conv_backward<T: Scalar>(
    l: &SparseMatrix<T>,
    w: &Tensor<T>,
    cache: &GraphConvCache<T>,
    grad_out: &Tensor<T>,
) -> Result<GraphConvGrads<T>> {
    let g = grad_out.zip_map(&cache.pre, |go, p| go * cache.act.derivative(p))?;
    let grad_w = cache.lh.transpose2().matmul(&g)?;
    let cols = g.cols();
    let mut grad_b = Tensor::zeros(&[1, cols]);
    for r in 0..g.rows() {
        for c in 0..cols {
            grad_b.set2(0, c, grad_b.at2(0, c) + g.at2(r, c));
        }
    }
    let gw = g.matmul(&w.transpose2())?;
    let grad_h = l.mul_dense_transposed(&gw)?;
    Ok(GraphConvGrads {
        grad_h,
        grad_w,
        grad_b,
    })
}

/// Saved input for [`dense_backward`].
#[derive(Debug, Clone)]
pub struct DenseCache<T> {
    input: Tensor<T>,
}

/// Linear layer `x * w + b` on rank-2 input.
pub fn dense_forward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    bias: Option<&Tensor<T>>,
) -> Result<(Tensor<T>, DenseCache<T>)> {
    let mut out = x.matmul(w)?;
    if let Some(b) = bias {
        if b.shape() != [1, out.cols()] {
            return Err(Error::shape("dense bias", &[1, out.cols()], b.shape()));
        }
        let cols = out.cols();
        for r in 0..out.rows() {
            for c in 0..cols {
                out.set2(r, c, out.at2(r, c) + b.at2(0, c));
            }
        }
    }
    Ok((out, DenseCache { input: x.clone() }))
}

/// Returns `(grad_x, grad_w, grad_b)`.
pub fn dense_backward<T: Scalar>(
    w: &Tensor<T>,
    cache: &DenseCache<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let grad_x = grad_out.matmul(&w.transpose2())?;
    let grad_w = cache.input.transpose2().matmul(grad_out)?;
    let cols = grad_out.cols();
    let mut grad_b = Tensor::zeros(&[1, cols]);
    for r in 0..grad_out.rows() {
        for c in 0..cols {
            grad_b.set2(0, c, grad_b.at2(0, c) + grad_out.at2(r, c));
        }
    }
    Ok((grad_x, grad_w, grad_b))
}

/// Saved intermediates for [`temporal_conv_backward`].
#[derive(Debug, Clone)]
pub struct TemporalConvCache<T> {
    input: Tensor<T>,
}

/// Gradients of one temporal convolution.
#[derive(Debug, Clone)]
pub struct TemporalConvGrads<T> {
    pub grad_x: Tensor<T>,
    pub grad_k: Tensor<T>,
    pub grad_b: Tensor<T>,
}

/// Valid (no padding) 1-D convolution along the leading time axis, applied
/// independently per node. `x` is t x n x c_in, `kernel` is
/// k_t x c_in x c_out, output is (t - k_t + 1) x n x c_out.
pub fn temporal_conv_forward<T: Scalar>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: Option<&Tensor<T>>,
) -> Result<(Tensor<T>, TemporalConvCache<T>)> {
    if x.rank() != 3 || kernel.rank() != 3 {
        return Err(Error::shape("temporal_conv", &[3], &[x.rank(), kernel.rank()]));
    }
    let (t, n, c_in) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (k_t, kc_in, c_out) = (kernel.shape()[0], kernel.shape()[1], kernel.shape()[2]);
    if kc_in != c_in {
        return Err(Error::shape("temporal_conv channels", &[c_in], &[kc_in]));
    }
    if k_t == 0 || k_t > t {
        return Err(Error::domain(format!(
            "temporal kernel length {k_t} does not fit {t} steps"
        )));
    }
    if let Some(b) = bias {
        if b.shape() != [1, c_out] {
            return Err(Error::shape("temporal_conv bias", &[1, c_out], b.shape()));
        }
    }
    let t_out = t - k_t + 1;
    let mut out = Tensor::zeros(&[t_out, n, c_out]);
    for tau in 0..t_out {
        for i in 0..n {
            for o in 0..c_out {
                let mut acc = match bias {
                    Some(b) => b.at2(0, o),
                    None => T::zero(),
                };
                for dt in 0..k_t {
                    for c in 0..c_in {
                        acc = acc + x.at3(tau + dt, i, c) * kernel.at3(dt, c, o);
                    }
                }
                out.set3(tau, i, o, acc);
            }
        }
    }
    Ok((out, TemporalConvCache { input: x.clone() }))
}

pub fn temporal_conv_backward<T: Scalar>(
    kernel: &Tensor<T>,
    cache: &TemporalConvCache<T>,
    grad_out: &Tensor<T>,
) -> Result<TemporalConvGrads<T>> {
    let x = &cache.input;
    let (t, n, c_in) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (k_t, _, c_out) = (kernel.shape()[0], kernel.shape()[1], kernel.shape()[2]);
    let t_out = t - k_t + 1;
    if grad_out.shape() != [t_out, n, c_out] {
        return Err(Error::shape(
            "temporal_conv grad",
            &[t_out, n, c_out],
            grad_out.shape(),
        ));
    }
    let mut grad_x = Tensor::zeros(&[t, n, c_in]);
    let mut grad_k = Tensor::zeros(&[k_t, c_in, c_out]);
    let mut grad_b = Tensor::zeros(&[1, c_out]);
    for tau in 0..t_out {
        for i in 0..n {
            for o in 0..c_out {
                let g = grad_out.at3(tau, i, o);
                grad_b.set2(0, o, grad_b.at2(0, o) + g);
                for dt in 0..k_t {
                    for c in 0..c_in {
                        grad_x.set3(
                            tau + dt,
                            i,
                            c,
                            grad_x.at3(tau + dt, i, c) + g * kernel.at3(dt, c, o),
                        );
                        grad_k.set3(dt, c, o, grad_k.at3(dt, c, o) + g * x.at3(tau + dt, i, c));
                    }
                }
            }
        }
    }
    Ok(TemporalConvGrads {
        grad_x,
        grad_k,
        grad_b,
    })
}

/// Mask saved by [`dropout`]; `None` means the pass was identity.
#[derive(Debug, Clone)]
pub struct DropoutCache<T> {
    scale: Option<Vec<T>>,
}

/// Inverted dropout. In [`Mode::Train`] each element is zeroed with
/// probability `rate` and survivors are scaled by 1/(1-rate); in eval the
/// input passes through unchanged. The mask is drawn from a dedicated
/// generator seeded with `seed`, in row-major order.
pub fn dropout<T: Scalar>(
    h: &Tensor<T>,
    rate: f64,
    mode: Mode,
    seed: u64,
) -> Result<(Tensor<T>, DropoutCache<T>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::domain(format!(
            "dropout rate {rate} outside [0, 1)"
        )));
    }
    if mode == Mode::Eval || rate == 0.0 {
        return Ok((h.clone(), DropoutCache { scale: None }));
    }
    let keep = cast::<T>(1.0 / (1.0 - rate));
    let mut rng = Rng::new(seed);
    let scale: Vec<T> = (0..h.len())
        .map(|_| {
            if rng.next_f64() < rate {
                T::zero()
            } else {
                keep
            }
        })
        .collect();
    let data = h
        .data()
        .iter()
        .zip(scale.iter())
        .map(|(&v, &s)| v * s)
        .collect();
    let out = Tensor::new(h.shape(), data)?;
    Ok((out, DropoutCache { scale: Some(scale) }))
}

pub fn dropout_backward<T: Scalar>(
    cache: &DropoutCache<T>,
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    match &cache.scale {
        None => Ok(grad_out.clone()),
        Some(scale) => {
            if scale.len() != grad_out.len() {
                return Err(Error::shape("dropout grad", &[scale.len()], &[grad_out.len()]));
            }
            let data = grad_out
                .data()
                .iter()
                .zip(scale.iter())
                .map(|(&g, &s)| g * s)
                .collect();
            Tensor::new(grad_out.shape(), data)
        }
    }
}

/// Row-wise softmax with max subtraction for stability.
pub fn softmax_rows<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    let rows = logits.rows();
    let cols = logits.cols();
    if cols == 0 {
        return Err(Error::domain("softmax over zero columns"));
    }
    let mut out = Tensor::zeros(&[rows, cols]);
    for r in 0..rows {
        let mut mx = logits.at2(r, 0);
        for c in 1..cols {
            if logits.at2(r, c) > mx {
                mx = logits.at2(r, c);
            }
        }
        let mut sum = T::zero();
        for c in 0..cols {
            let e = (logits.at2(r, c) - mx).exp();
            out.set2(r, c, e);
            sum = sum + e;
        }
        for c in 0..cols {
            out.set2(r, c, out.at2(r, c) / sum);
        }
    }
    Ok(out)
}

/// Backward of [`softmax_rows`]:
/// `grad_logits = p .* (grad_out - rowdot(grad_out, p))`.
pub fn softmax_backward<T: Scalar>(probs: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if probs.shape() != grad_out.shape() {
        return Err(Error::shape("softmax grad", probs.shape(), grad_out.shape()));
    }
    let rows = probs.rows();
    let cols = probs.cols();
    let mut out = Tensor::zeros(&[rows, cols]);
    for r in 0..rows {
        let mut dot = T::zero();
        for c in 0..cols {
            dot = dot + grad_out.at2(r, c) * probs.at2(r, c);
        }
        for c in 0..cols {
            out.set2(r, c, probs.at2(r, c) * (grad_out.at2(r, c) - dot));
        }
    }
    Ok(out)
}

const PROB_FLOOR: f64 = 1e-12;

fn check_ce_args<T: Scalar>(probs: &Tensor<T>, labels: &[u8], mask: &[bool]) -> Result<usize> {
    let rows = probs.rows();
    let cols = probs.cols();
    if labels.len() != rows || mask.len() != rows {
        return Err(Error::shape(
            "masked_cross_entropy",
            &[rows, rows],
            &[labels.len(), mask.len()],
        ));
    }
    for (i, &l) in labels.iter().enumerate() {
        if (l as usize) >= cols {
            return Err(Error::domain(format!(
                "label {l} at row {i} exceeds {cols} classes"
            )));
        }
    }
    let m = mask.iter().filter(|&&b| b).count();
    if m == 0 {
        return Err(Error::domain("mask selects no nodes"));
    }
    Ok(m)
}

/// Mean negative log-likelihood over masked rows:
/// `-(1/M) * sum_i ln p[i, y_i]`, probabilities floored at 1e-12 inside the
/// log.
pub fn masked_cross_entropy<T: Scalar>(
    probs: &Tensor<T>,
    labels: &[u8],
    mask: &[bool],
) -> Result<T> {
    let m = check_ce_args(probs, labels, mask)?;
    let floor = cast::<T>(PROB_FLOOR);
    let mut acc = T::zero();
    for (i, (&y, &keep)) in labels.iter().zip(mask.iter()).enumerate() {
        if keep {
            let p = probs.at2(i, y as usize).max(floor);
            acc = acc - p.ln();
        }
    }
    Ok(acc / cast::<T>(m as f64))
}

/// Loss plus its gradient with respect to the probabilities. Rows outside
/// the mask get zero gradient, as do probabilities at the floor.
pub fn masked_cross_entropy_with_grad<T: Scalar>(
    probs: &Tensor<T>,
    labels: &[u8],
    mask: &[bool],
) -> Result<(T, Tensor<T>)> {
    let m = check_ce_args(probs, labels, mask)?;
    let floor = cast::<T>(PROB_FLOOR);
    let inv_m = T::one() / cast::<T>(m as f64);
    let mut acc = T::zero();
    let mut grad = Tensor::zeros(probs.shape());
    for (i, (&y, &keep)) in labels.iter().zip(mask.iter()).enumerate() {
        if !keep {
            continue;
        }
        let p = probs.at2(i, y as usize);
        if p > floor {
            acc = acc - p.ln();
            grad.set2(i, y as usize, -inv_m / p);
        } else {
            acc = acc - floor.ln();
        }
    }
    Ok((acc * inv_m, grad))
}

/// Mean squared error over all elements.
pub fn l2_loss<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<T> {
    if pred.shape() != target.shape() {
        return Err(Error::shape("l2_loss", pred.shape(), target.shape()));
    }
    if pred.is_empty() {
        return Err(Error::domain("l2_loss over zero elements"));
    }
    let mut acc = T::zero();
    for (&p, &t) in pred.data().iter().zip(target.data()) {
        let d = p - t;
        acc = acc + d * d;
    }
    Ok(acc / cast::<T>(pred.len() as f64))
}

/// Loss plus gradient with respect to the prediction: `2 * (pred - target) / len`.
pub fn l2_loss_with_grad<T: Scalar>(
    pred: &Tensor<T>,
    target: &Tensor<T>,
) -> Result<(T, Tensor<T>)> {
    let loss = l2_loss(pred, target)?;
    let scale = cast::<T>(2.0 / pred.len() as f64);
    let grad = pred.zip_map(target, |p, t| (p - t) * scale)?;
    Ok((loss, grad))
}

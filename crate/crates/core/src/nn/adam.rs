use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};
use crate::tensor::Tensor;

/// ADAM hyperparameters; defaults are the customary
/// alpha = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
#[derive(Debug, Clone, Copy)]
pub struct AdamHyper<T> {
    pub alpha: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Scalar> Default for AdamHyper<T> {
    fn default() -> AdamHyper<T> {
        AdamHyper {
            alpha: cast(1e-3),
            beta1: cast(0.9),
            beta2: cast(0.999),
            eps: cast(1e-8),
        }
    }
}

impl<T: Scalar> AdamHyper<T> {
    pub fn with_alpha(alpha: T) -> AdamHyper<T> {
        AdamHyper {
            alpha,
            ..AdamHyper::default()
        }
    }
}

/// First/second moment accumulators, one pair per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &[&Tensor<T>]) -> AdamState<T> {
        AdamState {
            step: 0,
            m: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected update of every parameter in place.
pub fn adam_step<T: Scalar>(
    params: &mut [&mut Tensor<T>],
    grads: &[&Tensor<T>],
    state: &mut AdamState<T>,
    hyper: &AdamHyper<T>,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::shape(
            "adam_step",
            &[params.len()],
            &[grads.len(), state.m.len()],
        ));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = T::one() - hyper.beta1.powi(t);
    let bc2 = T::one() - hyper.beta2.powi(t);
    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads.iter())
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        if p.shape() != g.shape() {
            return Err(Error::shape("adam_step param", p.shape(), g.shape()));
        }
        let one = T::one();
        for i in 0..p.len() {
            let gi = g.data()[i];
            let mi = hyper.beta1 * m.data()[i] + (one - hyper.beta1) * gi;
            let vi = hyper.beta2 * v.data()[i] + (one - hyper.beta2) * gi * gi;
            m.data_mut()[i] = mi;
            v.data_mut()[i] = vi;
            let m_hat = mi / bc1;
            let v_hat = vi / bc2;
            p.data_mut()[i] = p.data()[i] - hyper.alpha * m_hat / (v_hat.sqrt() + hyper.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_alpha() {
        // with constant gradient g, the bias-corrected first step is
        // alpha * g / (|g| + eps) ~ alpha * sign(g)
        let mut p = Tensor::<f64>::new(&[1, 2], vec![1.0, -2.0]).unwrap();
        let g = Tensor::new(&[1, 2], vec![10.0, -0.5]).unwrap();
        let mut state = AdamState::new(&[&p]);
        let hyper = AdamHyper::default();
        adam_step(&mut [&mut p], &[&g], &mut state, &hyper).unwrap();
        assert!((p.data()[0] - (1.0 - 1e-3)).abs() < 1e-9);
        assert!((p.data()[1] - (-2.0 + 1e-3)).abs() < 1e-9);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn converges_on_quadratic() {
        // minimize (x - 3)^2; gradient 2(x - 3)
        let mut x = Tensor::<f64>::new(&[1, 1], vec![0.0]).unwrap();
        let mut state = AdamState::new(&[&x]);
        let hyper = AdamHyper::with_alpha(0.05);
        for _ in 0..2_000 {
            let g = Tensor::new(&[1, 1], vec![2.0 * (x.data()[0] - 3.0)]).unwrap();
            adam_step(&mut [&mut x], &[&g], &mut state, &hyper).unwrap();
        }
        assert!((x.data()[0] - 3.0).abs() < 1e-3, "x = {}", x.data()[0]);
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let mut p = Tensor::<f64>::zeros(&[1, 1]);
        let g = Tensor::<f64>::zeros(&[2, 1]);
        let mut state = AdamState::new(&[&p]);
        let hyper = AdamHyper::default();
        assert!(adam_step(&mut [&mut p], &[&g], &mut state, &hyper).is_err());
    }
}

use crate::error::Result;
use crate::rng::Rng;
use crate::scalar::{cast, Scalar};
use crate::tensor::Tensor;

/// Glorot/Xavier uniform init: entries drawn from
/// U(-limit, limit) with `limit = sqrt(6 / (fan_in + fan_out))`, row-major
/// draw order from the caller's generator.
pub fn glorot_uniform<T: Scalar>(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut Rng,
) -> Result<Tensor<T>> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let len: usize = shape.iter().product();
    let data = (0..len)
        .map(|_| cast::<T>(rng.uniform(-limit, limit)))
        .collect();
    Tensor::new(shape, data)
}

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Element, Tensor};

#[derive(Clone, Debug)]
pub struct ReluCache {
    shape: Vec<usize>,
    active: Vec<bool>,
}

pub fn relu_forward<T: Element>(x: &Tensor<T>) -> (Tensor<T>, ReluCache) {
    let active: Vec<bool> = x.data().iter().map(|&v| v > T::zero()).collect();
    let y = x.map(|v| if v > T::zero() { v } else { T::zero() });
    (
        y,
        ReluCache {
            shape: x.shape().to_vec(),
            active,
        },
    )
}

/// Gradient is zero wherever the input was `<= 0`.
pub fn relu_backward<T: Element>(cache: ReluCache, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if grad_out.shape() != cache.shape.as_slice() {
        return Err(Error::Shape(format!(
            "relu backward: grad_out {:?} vs input {:?}",
            grad_out.shape(),
            cache.shape
        )));
    }
    let data = grad_out
        .data()
        .iter()
        .zip(&cache.active)
        .map(|(&g, &on)| if on { g } else { T::zero() })
        .collect();
    Tensor::from_data(&cache.shape, data)
}

/// Inverted-dropout mask (`0` or `1/(1-rate)` per unit), or `None` when the
/// layer ran as identity.
#[derive(Clone, Debug)]
pub struct DropoutCache<T: Element> {
    shape: Vec<usize>,
    mask: Option<Vec<T>>,
}

/// Inverted dropout. With `rng = None` (eval mode) or `rate == 0` this is the
/// identity map.
pub fn dropout_forward<T: Element>(
    x: &Tensor<T>,
    rate: f64,
    rng: Option<&mut Rng>,
) -> Result<(Tensor<T>, DropoutCache<T>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Argument(format!("dropout rate {rate} outside [0, 1)")));
    }
    let shape = x.shape().to_vec();
    match rng {
        Some(rng) if rate > 0.0 => {
            let keep = T::from_f64(1.0 / (1.0 - rate));
            let mask: Vec<T> = (0..x.len())
                .map(|_| if rng.bernoulli(rate) { T::zero() } else { keep })
                .collect();
            let y = Tensor::from_data(&shape, x.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect())?;
            Ok((
                y,
                DropoutCache {
                    shape,
                    mask: Some(mask),
                },
            ))
        }
        _ => Ok((x.clone(), DropoutCache { shape, mask: None })),
    }
}

pub fn dropout_backward<T: Element>(cache: DropoutCache<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if grad_out.shape() != cache.shape.as_slice() {
        return Err(Error::Shape(format!(
            "dropout backward: grad_out {:?} vs input {:?}",
            grad_out.shape(),
            cache.shape
        )));
    }
    match cache.mask {
        None => Ok(grad_out.clone()),
        Some(mask) => Tensor::from_data(
            &cache.shape,
            grad_out.data().iter().zip(&mask).map(|(&g, &m)| g * m).collect(),
        ),
    }
}

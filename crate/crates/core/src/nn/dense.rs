use crate::error::{Error, Result};
use crate::tensor::{gemm_nn, gemm_nt, gemm_tn, Element, Tensor};

#[derive(Clone, Debug)]
pub struct DenseCache<T: Element> {
    input: Tensor<T>,
    weight: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct DenseGrads<T: Element> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

/// `out = x·W + b` with `x: [N, d_in]`, `W: [d_in, d_out]`, `b: [d_out]`.
pub fn dense_forward<T: Element>(
    x: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<(Tensor<T>, DenseCache<T>)> {
    let (xs, ws) = (x.shape(), weight.shape());
    if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[0] || bias.shape() != [ws[1]] {
        return Err(Error::Shape(format!(
            "dense: x {xs:?}, W {ws:?}, b {:?} do not line up",
            bias.shape()
        )));
    }
    let (n, d_in, d_out) = (xs[0], xs[1], ws[1]);
    let mut out = Vec::with_capacity(n * d_out);
    for _ in 0..n {
        out.extend_from_slice(bias.data());
    }
    gemm_nn(n, d_in, d_out, x.data(), weight.data(), &mut out);
    Ok((
        Tensor::from_data(&[n, d_out], out)?,
        DenseCache {
            input: x.clone(),
            weight: weight.clone(),
        },
    ))
}

pub fn dense_backward<T: Element>(cache: DenseCache<T>, grad_out: &Tensor<T>) -> Result<DenseGrads<T>> {
    let (n, d_in) = (cache.input.shape()[0], cache.input.shape()[1]);
    let d_out = cache.weight.shape()[1];
    if grad_out.shape() != [n, d_out] {
        return Err(Error::Shape(format!(
            "dense backward: grad_out {:?}, expected [{n}, {d_out}]",
            grad_out.shape()
        )));
    }
    let g = grad_out.data();

    let mut grad_x = vec![T::zero(); n * d_in];
    gemm_nt(n, d_out, d_in, g, cache.weight.data(), &mut grad_x);
    let mut grad_w = vec![T::zero(); d_in * d_out];
    gemm_tn(d_in, n, d_out, cache.input.data(), g, &mut grad_w);
    let mut grad_b = vec![T::zero(); d_out];
    for row in g.chunks(d_out) {
        for (acc, &v) in grad_b.iter_mut().zip(row) {
            *acc = *acc + v;
        }
    }

    Ok(DenseGrads {
        input: Tensor::from_data(&[n, d_in], grad_x)?,
        weight: Tensor::from_data(&[d_in, d_out], grad_w)?,
        bias: Tensor::from_data(&[d_out], grad_b)?,
    })
}

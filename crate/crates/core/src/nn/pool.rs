use crate::error::{Error, Result};
use crate::tensor::{Element, Tensor};

/// Max-pooling window and stride.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoolSpec {
    pub window: (usize, usize),
    pub stride: usize,
}

impl PoolSpec {
    /// 2×2 window, stride 2.
    pub const HALVE: PoolSpec = PoolSpec {
        window: (2, 2),
        stride: 2,
    };

    pub fn output_len(&self, input: usize, window: usize) -> Result<usize> {
        if self.stride == 0 || window == 0 {
            return Err(Error::Geometry("pool window and stride must be positive".into()));
        }
        if input < window || !(input - window).is_multiple_of(self.stride) {
            return Err(Error::Geometry(format!(
                "pool window {window}/stride {} does not tile input length {input}",
                self.stride
            )));
        }
        Ok((input - window) / self.stride + 1)
    }
}

/// Flat input index of each output's maximizer.
#[derive(Clone, Debug)]
pub struct PoolCache {
    input_shape: Vec<usize>,
    output_shape: Vec<usize>,
    argmax: Vec<usize>,
}

impl PoolCache {
    pub fn argmax(&self) -> &[usize] {
        &self.argmax
    }
}

/// Ties go to the first maximizer in row-major scan order of the window.
pub fn maxpool2d_forward<T: Element>(x: &Tensor<T>, spec: PoolSpec) -> Result<(Tensor<T>, PoolCache)> {
    let xs = x.shape();
    if xs.len() != 4 {
        return Err(Error::Shape(format!("maxpool2d input must be NCHW, got {xs:?}")));
    }
    let (n, c, h, w) = (xs[0], xs[1], xs[2], xs[3]);
    let (ph, pw) = spec.window;
    let oh = spec.output_len(h, ph)?;
    let ow = spec.output_len(w, pw)?;

    let data = x.data();
    let mut out = Vec::with_capacity(n * c * oh * ow);
    let mut argmax = Vec::with_capacity(n * c * oh * ow);
    for plane in 0..n * c {
        let base = plane * h * w;
        for i in 0..oh {
            for j in 0..ow {
                let mut best_idx = base + i * spec.stride * w + j * spec.stride;
                let mut best = data[best_idx];
                for a in 0..ph {
                    let row = base + (i * spec.stride + a) * w + j * spec.stride;
                    for b in 0..pw {
                        let v = data[row + b];
                        if v > best {
                            best = v;
                            best_idx = row + b;
                        }
                    }
                }
                out.push(best);
                argmax.push(best_idx);
            }
        }
    }
    let output_shape = vec![n, c, oh, ow];
    Ok((
        Tensor::from_data(&output_shape, out)?,
        PoolCache {
            input_shape: xs.to_vec(),
            output_shape,
            argmax,
        },
    ))
}

pub fn maxpool2d_backward<T: Element>(cache: PoolCache, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if grad_out.shape() != cache.output_shape.as_slice() {
        return Err(Error::Shape(format!(
            "maxpool backward: grad_out {:?} does not match forward output {:?}",
            grad_out.shape(),
            cache.output_shape
        )));
    }
    let mut grad = Tensor::zeros(&cache.input_shape)?;
    let gx = grad.data_mut();
    for (&idx, &g) in cache.argmax.iter().zip(grad_out.data()) {
        gx[idx] = gx[idx] + g;
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn single_window() {
        let x = Tensor::<f32>::from_data(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (y, cache) = maxpool2d_forward(&x, PoolSpec::HALVE).unwrap();
        assert_eq!(y.data(), &[4.0]);
        let g = maxpool2d_backward(cache, &Tensor::full(&[1, 1, 1, 1], 1.0).unwrap()).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn constant_input() {
        let x = Tensor::<f32>::full(&[2, 3, 4, 4], -1.25).unwrap();
        let (y, _) = maxpool2d_forward(&x, PoolSpec::HALVE).unwrap();
        assert_eq!(y.shape(), &[2, 3, 2, 2]);
        assert!(y.data().iter().all(|&v| v == -1.25));
    }

    #[test]
    fn ties_route_to_first_in_scan_order() {
        let x = Tensor::<f64>::full(&[1, 1, 2, 2], 5.0).unwrap();
        let (_, cache) = maxpool2d_forward(&x, PoolSpec::HALVE).unwrap();
        let g = maxpool2d_backward(cache, &Tensor::full(&[1, 1, 1, 1], 2.5).unwrap()).unwrap();
        assert_eq!(g.data(), &[2.5, 0.0, 0.0, 0.0]);

        // tie between positions (0,1) and (1,0): row-major scan reaches (0,1) first
        let x = Tensor::<f64>::from_f64s(&[1, 1, 2, 2], &[1.0, 9.0, 9.0, 0.0]).unwrap();
        let (_, cache) = maxpool2d_forward(&x, PoolSpec::HALVE).unwrap();
        assert_eq!(cache.argmax(), &[1]);
    }

    #[test]
    fn zero_grad() {
        let x = Tensor::<f64>::rng_uniform(&mut Rng::new(1), &[1, 2, 4, 4], -1.0, 1.0).unwrap();
        let (y, cache) = maxpool2d_forward(&x, PoolSpec::HALVE).unwrap();
        let g = maxpool2d_backward(cache, &y.zeros_like()).unwrap();
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nested_loop_oracle() {
        let x = Tensor::<f32>::rng_uniform(&mut Rng::new(6), &[1, 1, 6, 6], -1.0, 1.0).unwrap();
        let (y, _) = maxpool2d_forward(&x, PoolSpec::HALVE).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut m = f32::NEG_INFINITY;
                for a in 0..2 {
                    for b in 0..2 {
                        m = m.max(x.get(&[0, 0, 2 * i + a, 2 * j + b]).unwrap());
                    }
                }
                assert_eq!(y.get(&[0, 0, i, j]).unwrap(), m);
            }
        }
    }

    #[test]
    fn overlapping_windows_accumulate() {
        // 3×3 window, stride 1 over a 4×4 with a single global max: every window hits it
        let mut v = vec![0.0; 16];
        v[5] = 10.0;
        let x = Tensor::<f64>::from_data(&[1, 1, 4, 4], v).unwrap();
        let spec = PoolSpec {
            window: (3, 3),
            stride: 1,
        };
        let (y, cache) = maxpool2d_forward(&x, spec).unwrap();
        assert_eq!(y.shape(), &[1, 1, 2, 2]);
        let g = maxpool2d_backward(cache, &Tensor::full(&[1, 1, 2, 2], 1.0).unwrap()).unwrap();
        assert_eq!(g.data()[5], 4.0);
    }

    #[test]
    fn indivisible_input() {
        let x = Tensor::<f32>::zeros(&[1, 1, 5, 4]).unwrap();
        assert!(matches!(
            maxpool2d_forward(&x, PoolSpec::HALVE),
            Err(Error::Geometry(_))
        ));
    }
}

//! 2-D convolution (cross-correlation, no kernel flip) via im2col + GEMM.

use crate::error::{Error, Result};
use crate::tensor::{gemm_nn, gemm_nt, gemm_tn, Element, Tensor};

/// Borrowed kernel/bias pair plus stride and symmetric zero padding.
///
/// `kernel` is `[F, C_in, kh, kw]`, `bias` is `[F]`.
#[derive(Clone, Copy, Debug)]
pub struct ConvParams<'a, T: Element> {
    pub kernel: &'a Tensor<T>,
    pub bias: &'a Tensor<T>,
    pub stride: usize,
    pub padding: usize,
}

/// Output length along one spatial axis, enforcing exact division.
pub fn conv_output_len(input: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize> {
    if stride == 0 || kernel == 0 {
        return Err(Error::Geometry("kernel size and stride must be positive".into()));
    }
    let padded = input + 2 * padding;
    if padded < kernel {
        return Err(Error::Geometry(format!(
            "kernel {kernel} larger than padded input {padded}"
        )));
    }
    if !(padded - kernel).is_multiple_of(stride) {
        return Err(Error::Geometry(format!(
            "(input {input} + 2*pad {padding} - kernel {kernel}) is not divisible by stride {stride}"
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Geometry {
    batch: usize,
    channels: usize,
    height: usize,
    width: usize,
    filters: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    padding: usize,
    out_h: usize,
    out_w: usize,
}

impl Geometry {
    fn patch_len(&self) -> usize {
        self.channels * self.kh * self.kw
    }

    fn positions(&self) -> usize {
        self.out_h * self.out_w
    }
}

/// Values saved by [`conv2d_forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ConvCache<T: Element> {
    geom: Geometry,
    kernel: Tensor<T>,
    // im2col matrices, one `[C*kh*kw, out_h*out_w]` block per sample
    cols: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct ConvGrads<T: Element> {
    pub input: Tensor<T>,
    pub kernel: Tensor<T>,
    pub bias: Tensor<T>,
}

fn geometry<T: Element>(x: &Tensor<T>, p: &ConvParams<'_, T>) -> Result<Geometry> {
    let xs = x.shape();
    let ks = p.kernel.shape();
    if xs.len() != 4 {
        return Err(Error::Shape(format!("conv2d input must be NCHW, got {xs:?}")));
    }
    if ks.len() != 4 {
        return Err(Error::Shape(format!(
            "conv2d kernel must be [F, C, kh, kw], got {ks:?}"
        )));
    }
    if xs[1] != ks[1] {
        return Err(Error::Shape(format!(
            "conv2d: input has {} channels, kernel expects {}",
            xs[1], ks[1]
        )));
    }
    if p.bias.shape() != [ks[0]] {
        return Err(Error::Shape(format!(
            "conv2d: bias shape {:?} does not match {} filters",
            p.bias.shape(),
            ks[0]
        )));
    }
    Ok(Geometry {
        batch: xs[0],
        channels: xs[1],
        height: xs[2],
        width: xs[3],
        filters: ks[0],
        kh: ks[2],
        kw: ks[3],
        stride: p.stride,
        padding: p.padding,
        out_h: conv_output_len(xs[2], ks[2], p.stride, p.padding)?,
        out_w: conv_output_len(xs[3], ks[3], p.stride, p.padding)?,
    })
}

/// Row `(c*kh + a)*kw + b` of the patch matrix holds, for every output
/// position, the padded-input value under kernel tap `(c, a, b)`.
fn im2col<T: Element>(g: &Geometry, x: &[T], cols: &mut [T]) {
    let positions = g.positions();
    for c in 0..g.channels {
        let plane = &x[c * g.height * g.width..(c + 1) * g.height * g.width];
        for a in 0..g.kh {
            for b in 0..g.kw {
                let row = (c * g.kh + a) * g.kw + b;
                let dst = &mut cols[row * positions..(row + 1) * positions];
                for i in 0..g.out_h {
                    let y = (i * g.stride + a) as isize - g.padding as isize;
                    if y < 0 || y as usize >= g.height {
                        continue;
                    }
                    let src = &plane[y as usize * g.width..(y as usize + 1) * g.width];
                    for j in 0..g.out_w {
                        let xc = (j * g.stride + b) as isize - g.padding as isize;
                        if xc >= 0 && (xc as usize) < g.width {
                            dst[i * g.out_w + j] = src[xc as usize];
                        }
                    }
                }
            }
        }
    }
}

fn col2im<T: Element>(g: &Geometry, cols: &[T], x: &mut [T]) {
    let positions = g.positions();
    for c in 0..g.channels {
        let plane = &mut x[c * g.height * g.width..(c + 1) * g.height * g.width];
        for a in 0..g.kh {
            for b in 0..g.kw {
                let row = (c * g.kh + a) * g.kw + b;
                let src = &cols[row * positions..(row + 1) * positions];
                for i in 0..g.out_h {
                    let y = (i * g.stride + a) as isize - g.padding as isize;
                    if y < 0 || y as usize >= g.height {
                        continue;
                    }
                    for j in 0..g.out_w {
                        let xc = (j * g.stride + b) as isize - g.padding as isize;
                        if xc >= 0 && (xc as usize) < g.width {
                            let idx = y as usize * g.width + xc as usize;
                            plane[idx] = plane[idx] + src[i * g.out_w + j];
                        }
                    }
                }
            }
        }
    }
}

/// `out[n,f,i,j] = bias[f] + Σ_{c,a,b} kernel[f,c,a,b] · x_pad[n,c,i·s+a,j·s+b]`
pub fn conv2d_forward<T: Element>(x: &Tensor<T>, p: &ConvParams<'_, T>) -> Result<(Tensor<T>, ConvCache<T>)> {
    let g = geometry(x, p)?;
    let (patch, positions) = (g.patch_len(), g.positions());
    let in_len = g.channels * g.height * g.width;
    let out_len = g.filters * positions;

    let mut cols = vec![T::zero(); g.batch * patch * positions];
    let mut out = vec![T::zero(); g.batch * out_len];
    let bias = p.bias.data();
    for n in 0..g.batch {
        let cols_n = &mut cols[n * patch * positions..(n + 1) * patch * positions];
        im2col(&g, &x.data()[n * in_len..(n + 1) * in_len], cols_n);
        let out_n = &mut out[n * out_len..(n + 1) * out_len];
        for (f, row) in out_n.chunks_mut(positions).enumerate() {
            row.fill(bias[f]);
        }
        gemm_nn(g.filters, patch, positions, p.kernel.data(), cols_n, out_n);
    }

    let out = Tensor::from_data(&[g.batch, g.filters, g.out_h, g.out_w], out)?;
    Ok((
        out,
        ConvCache {
            geom: g,
            kernel: p.kernel.clone(),
            cols,
        },
    ))
}

pub fn conv2d_backward<T: Element>(cache: ConvCache<T>, grad_out: &Tensor<T>) -> Result<ConvGrads<T>> {
    let g = cache.geom;
    let expected = [g.batch, g.filters, g.out_h, g.out_w];
    if grad_out.shape() != expected {
        return Err(Error::Shape(format!(
            "conv2d backward: grad_out {:?} does not match forward output {expected:?}",
            grad_out.shape()
        )));
    }
    let (patch, positions) = (g.patch_len(), g.positions());
    let in_len = g.channels * g.height * g.width;
    let out_len = g.filters * positions;

    let mut grad_x = vec![T::zero(); g.batch * in_len];
    let mut grad_k = vec![T::zero(); g.filters * patch];
    let mut grad_b = vec![T::zero(); g.filters];
    let mut grad_cols = vec![T::zero(); patch * positions];
    for n in 0..g.batch {
        let g_n = &grad_out.data()[n * out_len..(n + 1) * out_len];
        let cols_n = &cache.cols[n * patch * positions..(n + 1) * patch * positions];
        for (f, row) in g_n.chunks(positions).enumerate() {
            grad_b[f] = grad_b[f] + row.iter().copied().sum::<T>();
        }
        gemm_nt(g.filters, positions, patch, g_n, cols_n, &mut grad_k);
        grad_cols.fill(T::zero());
        gemm_tn(patch, g.filters, positions, cache.kernel.data(), g_n, &mut grad_cols);
        col2im(&g, &grad_cols, &mut grad_x[n * in_len..(n + 1) * in_len]);
    }

    Ok(ConvGrads {
        input: Tensor::from_data(&[g.batch, g.channels, g.height, g.width], grad_x)?,
        kernel: Tensor::from_data(&[g.filters, g.channels, g.kh, g.kw], grad_k)?,
        bias: Tensor::from_data(&[g.filters], grad_b)?,
    })
}

//! Finite-difference checks of the analytic backward passes (f64 only).
//!
//! Every coordinate of every checked tensor is perturbed by `±FD_STEP` and
//! the central difference of a scalar loss is compared to the analytic
//! gradient. The relative error of one coordinate is
//! `|analytic - numeric| / max(|analytic|, |numeric|, REL_ERROR_FLOOR)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::nn::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, dropout_backward, dropout_forward,
    maxpool2d_backward, maxpool2d_forward, one_hot, relu_backward, relu_forward, softmax_cross_entropy, ConvParams,
    PoolSpec,
};
use crate::rng::Rng;
use crate::tensor::Tensor;

pub const FD_STEP: f64 = 1e-5;
pub const REL_ERROR_FLOOR: f64 = 1e-6;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Central-difference gradient of `loss` with respect to `x`.
pub fn numerical_gradient(x: &Tensor<f64>, mut loss: impl FnMut(&Tensor<f64>) -> Result<f64>) -> Result<Tensor<f64>> {
    let mut probe = x.clone();
    let mut grad = x.zeros_like();
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + FD_STEP;
        let plus = loss(&probe)?;
        probe.data_mut()[i] = orig - FD_STEP;
        let minus = loss(&probe)?;
        probe.data_mut()[i] = orig;
        grad.data_mut()[i] = (plus - minus) / (2.0 * FD_STEP);
    }
    Ok(grad)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckEntry {
    pub name: String,
    pub max_rel_error: f64,
    pub coordinates: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub label: String,
    pub tolerance: f64,
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheckReport {
    pub fn new(label: impl Into<String>, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            tolerance,
            entries: Vec::new(),
        }
    }

    /// Compares `analytic` against the numeric gradient and records the worst coordinate.
    pub fn record(&mut self, name: impl Into<String>, analytic: &Tensor<f64>, numeric: &Tensor<f64>) {
        let max_rel_error = analytic
            .data()
            .iter()
            .zip(numeric.data())
            .map(|(&a, &n)| relative_error(a, n))
            .fold(0.0, f64::max);
        self.entries.push(GradCheckEntry {
            name: name.into(),
            max_rel_error,
            coordinates: analytic.len(),
        });
    }

    pub fn max_rel_error(&self) -> f64 {
        self.entries.iter().map(|e| e.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.max_rel_error <= self.tolerance)
    }

    pub fn offenders(&self) -> impl Iterator<Item = &GradCheckEntry> {
        self.entries.iter().filter(|e| e.max_rel_error > self.tolerance)
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        writeln!(
            f,
            "{status} {} (max rel err {:.3e}, tol {:.1e})",
            self.label,
            self.max_rel_error(),
            self.tolerance
        )?;
        for e in &self.entries {
            writeln!(
                f,
                "    {:<16} {:>8} coords  {:.3e}",
                e.name, e.coordinates, e.max_rel_error
            )?;
        }
        Ok(())
    }
}

/// The layer under test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LayerProbe {
    Conv2d {
        filters: usize,
        kernel: (usize, usize),
        stride: usize,
        padding: usize,
    },
    MaxPool2d(PoolSpec),
    Relu,
    Dense {
        units: usize,
    },
    /// Dropout in eval mode (identity path).
    Dropout {
        rate: f64,
    },
    /// Logits `[N, c]` through softmax and cross-entropy.
    SoftmaxCrossEntropy,
    /// conv 3×3/pad 1 → ReLU → 2×2 max-pool → flatten → dense → softmax-xent.
    Stack {
        filters: usize,
        classes: usize,
    },
}

impl LayerProbe {
    pub fn name(&self) -> String {
        match self {
            LayerProbe::Conv2d { stride, padding, .. } => format!("conv2d(s={stride},p={padding})"),
            LayerProbe::MaxPool2d(s) => format!("maxpool2d({}x{}/{})", s.window.0, s.window.1, s.stride),
            LayerProbe::Relu => "relu".into(),
            LayerProbe::Dense { .. } => "dense".into(),
            LayerProbe::Dropout { .. } => "dropout(eval)".into(),
            LayerProbe::SoftmaxCrossEntropy => "softmax-xent".into(),
            LayerProbe::Stack { .. } => "conv-relu-pool-dense-xent".into(),
        }
    }
}

/// Random input whose entries stay at least 0.05 away from zero, so ReLU
/// kinks never fall inside the finite-difference stencil.
fn probe_input(rng: &mut Rng, shape: &[usize]) -> Result<Tensor<f64>> {
    let t = Tensor::<f64>::rng_uniform(rng, shape, -1.0, 1.0)?;
    Ok(t.map(|v| if v.abs() < 0.05 { v + 0.1f64.copysign(v) } else { v }))
}

fn dot(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Checks one layer type on random data of the given input shape.
///
/// Layers without their own loss are scored with `L = Σ r ⊙ layer(x)` for a
/// fixed random `r`, so the upstream gradient is `r`.
pub fn gradcheck(layer: &LayerProbe, input_shape: &[usize], rng: &mut Rng, tolerance: f64) -> Result<GradCheckReport> {
    if input_shape.is_empty() || input_shape.contains(&0) {
        return Err(Error::Argument(format!(
            "gradcheck: degenerate input shape {input_shape:?}"
        )));
    }
    let mut report = GradCheckReport::new(layer.name(), tolerance);
    let x = probe_input(rng, input_shape)?;

    match *layer {
        LayerProbe::Conv2d {
            filters,
            kernel,
            stride,
            padding,
        } => {
            if input_shape.len() != 4 {
                return Err(Error::Shape("conv probe needs an NCHW input shape".into()));
            }
            let k = Tensor::rng_uniform(rng, &[filters, input_shape[1], kernel.0, kernel.1], -1.0, 1.0)?;
            let b = Tensor::rng_uniform(rng, &[filters], -1.0, 1.0)?;
            let run = |x: &Tensor<f64>, k: &Tensor<f64>, b: &Tensor<f64>| {
                conv2d_forward(
                    x,
                    &ConvParams {
                        kernel: k,
                        bias: b,
                        stride,
                        padding,
                    },
                )
            };
            let (y, cache) = run(&x, &k, &b)?;
            let r = Tensor::rng_uniform(rng, y.shape(), -1.0, 1.0)?;
            let g = conv2d_backward(cache, &r)?;
            report.record(
                "input",
                &g.input,
                &numerical_gradient(&x, |x| Ok(dot(&run(x, &k, &b)?.0, &r)))?,
            );
            report.record(
                "kernel",
                &g.kernel,
                &numerical_gradient(&k, |k| Ok(dot(&run(&x, k, &b)?.0, &r)))?,
            );
            report.record(
                "bias",
                &g.bias,
                &numerical_gradient(&b, |b| Ok(dot(&run(&x, &k, b)?.0, &r)))?,
            );
        }
        LayerProbe::MaxPool2d(spec) => {
            let (y, cache) = maxpool2d_forward(&x, spec)?;
            let r = Tensor::rng_uniform(rng, y.shape(), -1.0, 1.0)?;
            let g = maxpool2d_backward(cache, &r)?;
            let num = numerical_gradient(&x, |x| Ok(dot(&maxpool2d_forward(x, spec)?.0, &r)))?;
            report.record("input", &g, &num);
        }
        LayerProbe::Relu => {
            let (y, cache) = relu_forward(&x);
            let r = Tensor::rng_uniform(rng, y.shape(), -1.0, 1.0)?;
            let g = relu_backward(cache, &r)?;
            let num = numerical_gradient(&x, |x| Ok(dot(&relu_forward(x).0, &r)))?;
            report.record("input", &g, &num);
        }
        LayerProbe::Dense { units } => {
            if input_shape.len() != 2 {
                return Err(Error::Shape("dense probe needs an [N, d_in] input shape".into()));
            }
            let w = Tensor::rng_uniform(rng, &[input_shape[1], units], -1.0, 1.0)?;
            let b = Tensor::rng_uniform(rng, &[units], -1.0, 1.0)?;
            let (y, cache) = dense_forward(&x, &w, &b)?;
            let r = Tensor::rng_uniform(rng, y.shape(), -1.0, 1.0)?;
            let g = dense_backward(cache, &r)?;
            report.record(
                "input",
                &g.input,
                &numerical_gradient(&x, |x| Ok(dot(&dense_forward(x, &w, &b)?.0, &r)))?,
            );
            report.record(
                "weight",
                &g.weight,
                &numerical_gradient(&w, |w| Ok(dot(&dense_forward(&x, w, &b)?.0, &r)))?,
            );
            report.record(
                "bias",
                &g.bias,
                &numerical_gradient(&b, |b| Ok(dot(&dense_forward(&x, &w, b)?.0, &r)))?,
            );
        }
        LayerProbe::Dropout { rate } => {
            let (y, cache) = dropout_forward(&x, rate, None)?;
            let r = Tensor::rng_uniform(rng, y.shape(), -1.0, 1.0)?;
            let g = dropout_backward(cache, &r)?;
            let num = numerical_gradient(&x, |x| Ok(dot(&dropout_forward(x, rate, None)?.0, &r)))?;
            report.record("input", &g, &num);
        }
        LayerProbe::SoftmaxCrossEntropy => {
            if input_shape.len() != 2 {
                return Err(Error::Shape("softmax-xent probe needs [N, classes]".into()));
            }
            let labels: Vec<usize> = (0..input_shape[0]).map(|_| rng.below(input_shape[1])).collect();
            let y = one_hot::<f64>(&labels, input_shape[1])?;
            let z = x.scale(3.0);
            let (_, g) = softmax_cross_entropy(&z, &y)?;
            let num = numerical_gradient(&z, |z| Ok(softmax_cross_entropy(z, &y)?.0))?;
            report.record("logits", &g, &num);
        }
        LayerProbe::Stack { filters, classes } => {
            if input_shape.len() != 4 {
                return Err(Error::Shape("stack probe needs an NCHW input shape".into()));
            }
            let (n, c, h, w) = (input_shape[0], input_shape[1], input_shape[2], input_shape[3]);
            let pooled = filters * (h / 2) * (w / 2);
            let k = Tensor::rng_uniform(rng, &[filters, c, 3, 3], -1.0, 1.0)?;
            let kb = Tensor::rng_uniform(rng, &[filters], -0.5, 0.5)?;
            let dw = Tensor::rng_uniform(rng, &[pooled, classes], -1.0, 1.0)?;
            let db = Tensor::rng_uniform(rng, &[classes], -1.0, 1.0)?;
            let labels: Vec<usize> = (0..n).map(|_| rng.below(classes)).collect();
            let y = one_hot::<f64>(&labels, classes)?;

            let forward = |x: &Tensor<f64>, k: &Tensor<f64>, kb: &Tensor<f64>, dw: &Tensor<f64>, db: &Tensor<f64>| {
                let (a, c1) = conv2d_forward(
                    x,
                    &ConvParams {
                        kernel: k,
                        bias: kb,
                        stride: 1,
                        padding: 1,
                    },
                )?;
                let (a, c2) = relu_forward(&a);
                let (a, c3) = maxpool2d_forward(&a, PoolSpec::HALVE)?;
                let pool_shape = a.shape().to_vec();
                let a = a.reshape(&[n, pooled])?;
                let (z, c4) = dense_forward(&a, dw, db)?;
                let (loss, gz) = softmax_cross_entropy(&z, &y)?;
                Ok::<_, Error>((loss, gz, c1, c2, c3, c4, pool_shape))
            };
            let (_, gz, c1, c2, c3, c4, pool_shape) = forward(&x, &k, &kb, &dw, &db)?;
            let gd = dense_backward(c4, &gz)?;
            let ga = maxpool2d_backward(c3, &gd.input.reshape(&pool_shape)?)?;
            let ga = relu_backward(c2, &ga)?;
            let gc = conv2d_backward(c1, &ga)?;

            let loss = |x: &Tensor<f64>, k: &Tensor<f64>, kb: &Tensor<f64>, dw: &Tensor<f64>, db: &Tensor<f64>| {
                forward(x, k, kb, dw, db).map(|r| r.0)
            };
            report.record(
                "input",
                &gc.input,
                &numerical_gradient(&x, |v| loss(v, &k, &kb, &dw, &db))?,
            );
            report.record(
                "conv.kernel",
                &gc.kernel,
                &numerical_gradient(&k, |v| loss(&x, v, &kb, &dw, &db))?,
            );
            report.record(
                "conv.bias",
                &gc.bias,
                &numerical_gradient(&kb, |v| loss(&x, &k, v, &dw, &db))?,
            );
            report.record(
                "dense.weight",
                &gd.weight,
                &numerical_gradient(&dw, |v| loss(&x, &k, &kb, v, &db))?,
            );
            report.record(
                "dense.bias",
                &gd.bias,
                &numerical_gradient(&db, |v| loss(&x, &k, &kb, &dw, v))?,
            );
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_dense_is_nearly_exact() {
        let r = gradcheck(&LayerProbe::Dense { units: 3 }, &[4, 5], &mut Rng::new(1), 1e-7).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn stack_passes() {
        let probe = LayerProbe::Stack { filters: 2, classes: 3 };
        let r = gradcheck(&probe, &[2, 1, 4, 4], &mut Rng::new(2), DEFAULT_TOLERANCE).unwrap();
        assert!(r.passed(), "{r}");
        assert_eq!(r.entries.len(), 5);
    }

    #[test]
    fn degenerate_shapes_rejected() {
        let r = gradcheck(&LayerProbe::Relu, &[3, 0], &mut Rng::new(0), 1e-4);
        assert!(matches!(r, Err(Error::Argument(_))));
        assert!(gradcheck(&LayerProbe::Relu, &[], &mut Rng::new(0), 1e-4).is_err());
    }

    #[test]
    fn report_flags_offenders() {
        let mut rep = GradCheckReport::new("x", 1e-4);
        let a = Tensor::<f64>::from_f64s(&[2], &[1.0, 2.0]).unwrap();
        let n = Tensor::<f64>::from_f64s(&[2], &[1.0, 2.1]).unwrap();
        rep.record("w", &a, &n);
        assert!(!rep.passed());
        assert_eq!(rep.offenders().count(), 1);
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1e-12, 0.0) - 1e-6).abs() < 1e-18);
        assert!((relative_error(2.0, 1.0) - 0.5).abs() < 1e-15);
    }
}

use super::{LayerSpec, Mode, Model};
use crate::error::{Error, Result};
use crate::nn::gradcheck::{numerical_gradient, GradCheckReport};
use crate::nn::softmax_cross_entropy;
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Finite-difference check of every parameter gradient of `model` under
/// mean softmax cross-entropy, with dropout disabled.
pub fn check_model_gradients(
    model: &Model<f64>,
    x: &Tensor<f64>,
    y_onehot: &Tensor<f64>,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let mut model = model.clone();
    model.set_mode(Mode::Eval);
    let mut rng = Rng::new(0);
    let (_, analytic) = model.loss_and_grads(x, y_onehot, &mut rng)?;

    let mut report = GradCheckReport::new(format!("{} (whole model)", model.config().name), tolerance);
    let names: Vec<String> = model.params().names().map(str::to_owned).collect();
    for name in names {
        let original = model.params().get(&name)?.clone();
        let numeric = {
            let loss = |p: &Tensor<f64>| -> Result<f64> {
                let mut probe = model.clone();
                *probe
                    .params_mut()
                    .get_mut(&name)
                    .ok_or_else(|| Error::State(format!("missing parameter `{name}`")))? = p.clone();
                let logits = probe.forward(x, &mut Rng::new(0))?.0;
                Ok(softmax_cross_entropy(&logits, y_onehot)?.0)
            };
            numerical_gradient(&original, loss)?
        };
        report.record(name.clone(), analytic.get(&name)?, &numeric);
    }
    Ok(report)
}

/// Distance of the eval-mode forward pass at `x` from the nearest point
/// where the network is not differentiable: the smallest `|input|` of any
/// ReLU and the smallest gap between the two largest entries of any pooling
/// window (windows that are entirely zero are skipped). Finite differences
/// are only meaningful when this is well above the step size times the
/// local slope.
pub fn kink_margin(model: &Model<f64>, x: &Tensor<f64>) -> Result<f64> {
    let acts = model.layer_inputs(x)?;
    let mut margin = f64::INFINITY;
    for (layer, a) in model.plan().iter().zip(&acts) {
        match layer.spec {
            LayerSpec::Relu => {
                margin = a.data().iter().fold(margin, |m, v| m.min(v.abs()));
            }
            LayerSpec::MaxPool(spec) => {
                let &[n, c, h, w] = a.shape() else {
                    return Err(Error::Shape("pool input must be NCHW".into()));
                };
                let (kh, kw) = spec.window;
                let (oh, ow) = (spec.output_len(h, kh)?, spec.output_len(w, kw)?);
                let d = a.data();
                for plane in 0..n * c {
                    let base = plane * h * w;
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let (mut top, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                            for ky in 0..kh {
                                for kx in 0..kw {
                                    let v = d[base + (oy * spec.stride + ky) * w + ox * spec.stride + kx];
                                    if v > top {
                                        second = top;
                                        top = v;
                                    } else if v > second {
                                        second = v;
                                    }
                                }
                            }
                            // an all-zero window is a block of dead ReLU units; the ReLU
                            // term already keeps them dead under small perturbations
                            if kh * kw > 1 && top != 0.0 {
                                margin = margin.min(top - second);
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }
    Ok(margin)
}

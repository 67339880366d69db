//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use convforge::optim::{Algorithm, Hyperparams};

/// Naive nested-loop cross-correlation. `x` is NCHW, `k` is FCkhkw.
#[allow(clippy::too_many_arguments)]
pub fn naive_conv(
    x: &[f64],
    (n, c, h, w): (usize, usize, usize, usize),
    k: &[f64],
    (f, kh, kw): (usize, usize, usize),
    b: &[f64],
    stride: usize,
    pad: usize,
) -> (Vec<f64>, usize, usize) {
    let oh = (h + 2 * pad - kh) / stride + 1;
    let ow = (w + 2 * pad - kw) / stride + 1;
    let mut out = vec![0.0; n * f * oh * ow];
    for ni in 0..n {
        for fi in 0..f {
            for i in 0..oh {
                for j in 0..ow {
                    let mut acc = b[fi];
                    for ci in 0..c {
                        for a in 0..kh {
                            for bb in 0..kw {
                                let y = (i * stride + a) as isize - pad as isize;
                                let xx = (j * stride + bb) as isize - pad as isize;
                                if y < 0 || xx < 0 || y >= h as isize || xx >= w as isize {
                                    continue;
                                }
                                let xv = x[((ni * c + ci) * h + y as usize) * w + xx as usize];
                                let kv = k[((fi * c + ci) * kh + a) * kw + bb];
                                acc += xv * kv;
                            }
                        }
                    }
                    out[((ni * f + fi) * oh + i) * ow + j] = acc;
                }
            }
        }
    }
    (out, oh, ow)
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counting half.
pub fn pairwise_auc(scores: &[f64], labels: &[usize]) -> f64 {
    let mut good = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                good += 1.0;
            } else if si == sj {
                good += 0.5;
            }
        }
    }
    good / pairs
}

/// tp, fp, fn for class `k` by direct counting.
pub fn count_tp_fp_fn(truth: &[usize], pred: &[usize], k: usize) -> (u64, u64, u64) {
    let mut tp = 0;
    let mut fp = 0;
    let mut fneg = 0;
    for (&t, &p) in truth.iter().zip(pred) {
        match (t == k, p == k) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fneg += 1,
            _ => {}
        }
    }
    (tp, fp, fneg)
}

/// One update of a single scalar parameter, written out per algorithm.
/// `slots` holds the state in slot-kind order and is updated in place.
/// Returns the new parameter.
pub fn reference_step(alg: Algorithm, h: &Hyperparams, t: u64, lr: f64, p: f64, g: f64, slots: &mut [f64]) -> f64 {
    match alg {
        Algorithm::Sgd => {
            let v = h.momentum * slots[0] + g;
            slots[0] = v;
            p - lr * v
        }
        Algorithm::RmsProp => {
            let s = h.rmsprop_rho * slots[0] + (1.0 - h.rmsprop_rho) * g * g;
            slots[0] = s;
            p - lr * g / (s.sqrt() + h.rmsprop_eps)
        }
        Algorithm::Adam | Algorithm::AdamW => {
            let lambda = if alg == Algorithm::AdamW { h.weight_decay } else { 0.0 };
            let decayed = p - lr * lambda * p;
            let m = h.beta1 * slots[0] + (1.0 - h.beta1) * g;
            let v = h.beta2 * slots[1] + (1.0 - h.beta2) * g * g;
            slots[0] = m;
            slots[1] = v;
            let m_hat = m / (1.0 - h.beta1.powi(t as i32));
            let v_hat = v / (1.0 - h.beta2.powi(t as i32));
            decayed - lr * m_hat / (v_hat.sqrt() + h.adam_eps)
        }
        Algorithm::AdaDelta => {
            let rho = h.adadelta_rho;
            let eps = h.adadelta_eps;
            let eg2 = rho * slots[0] + (1.0 - rho) * g * g;
            let dx = ((slots[1] + eps) / (eg2 + eps)).sqrt() * g;
            let edx2 = rho * slots[1] + (1.0 - rho) * dx * dx;
            slots[0] = eg2;
            slots[1] = edx2;
            p - lr * dx
        }
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

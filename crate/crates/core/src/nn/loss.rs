//! Softmax and cross-entropy.

use crate::error::{Error, Result};
use crate::tensor::{Element, Tensor};

/// Added inside the logarithm so confident wrong predictions stay finite.
pub const LOG_EPSILON: f64 = 1e-12;

fn rows_cols<T: Element>(t: &Tensor<T>, what: &str) -> Result<(usize, usize)> {
    match t.shape() {
        &[n, c] => Ok((n, c)),
        s => Err(Error::Shape(format!("{what} must be [N, classes], got {s:?}"))),
    }
}

/// Row-wise softmax, computed after subtracting each row's maximum.
pub fn softmax<T: Element>(z: &Tensor<T>) -> Result<Tensor<T>> {
    let (_, c) = rows_cols(z, "softmax input")?;
    if c < 2 {
        return Err(Error::Argument(format!("softmax needs at least 2 classes, got {c}")));
    }
    if !z.all_finite() {
        return Err(Error::Argument("softmax: non-finite logits".into()));
    }
    let mut out = z.data().to_vec();
    for row in out.chunks_mut(c) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total = total + *v;
        }
        for v in row.iter_mut() {
            *v = *v / total;
        }
    }
    Tensor::from_data(z.shape(), out)
}

/// Index of the hot entry in each row; errors unless every row is one-hot.
pub fn one_hot_labels<T: Element>(y: &Tensor<T>) -> Result<Vec<usize>> {
    let (_, c) = rows_cols(y, "one-hot labels")?;
    y.data()
        .chunks(c)
        .enumerate()
        .map(|(i, row)| {
            let mut hot = None;
            for (j, &v) in row.iter().enumerate() {
                if v == T::one() && hot.is_none() {
                    hot = Some(j);
                } else if v != T::zero() {
                    return Err(Error::Argument(format!("label row {i} is not one-hot")));
                }
            }
            hot.ok_or_else(|| Error::Argument(format!("label row {i} has no hot entry")))
        })
        .collect()
}

pub fn one_hot<T: Element>(labels: &[usize], classes: usize) -> Result<Tensor<T>> {
    let mut t = Tensor::zeros(&[labels.len().max(1), classes])?;
    if labels.is_empty() {
        return Err(Error::Argument("one_hot: no labels".into()));
    }
    for (i, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::Argument(format!("label {l} out of range for {classes} classes")));
        }
        t.data_mut()[i * classes + l] = T::one();
    }
    Ok(t)
}

/// Mean over the batch of `-Σ_i y_i · log(p_i + ε)`.
///
/// The argument of the log is capped at 1 so the loss is never negative.
pub fn cross_entropy_loss<T: Element>(p: &Tensor<T>, y_onehot: &Tensor<T>) -> Result<T> {
    let (n, _) = rows_cols(p, "probabilities")?;
    if p.shape() != y_onehot.shape() {
        return Err(Error::Shape(format!(
            "cross-entropy: probabilities {:?} vs labels {:?}",
            p.shape(),
            y_onehot.shape()
        )));
    }
    let hot = one_hot_labels(y_onehot)?;
    let c = p.shape()[1];
    let eps = T::from_f64(LOG_EPSILON);
    let total = hot
        .iter()
        .enumerate()
        .map(|(i, &j)| -(p.data()[i * c + j] + eps).min(T::one()).ln())
        .fold(T::zero(), |a, b| a + b);
    Ok(total / T::from_f64(n as f64))
}

/// Gradient of `cross_entropy_loss(softmax(z), y)` w.r.t. `z`: `(softmax(z) - y) / N`.
pub fn softmax_xent_backward<T: Element>(z: &Tensor<T>, y_onehot: &Tensor<T>) -> Result<Tensor<T>> {
    Ok(softmax_cross_entropy(z, y_onehot)?.1)
}

/// Loss and logit gradient in one pass.
pub fn softmax_cross_entropy<T: Element>(z: &Tensor<T>, y_onehot: &Tensor<T>) -> Result<(T, Tensor<T>)> {
    if z.shape() != y_onehot.shape() {
        return Err(Error::Shape(format!(
            "softmax cross-entropy: logits {:?} vs labels {:?}",
            z.shape(),
            y_onehot.shape()
        )));
    }
    let p = softmax(z)?;
    let loss = cross_entropy_loss(&p, y_onehot)?;
    let inv_n = T::one() / T::from_f64(z.shape()[0] as f64);
    let grad = p.sub(y_onehot)?.scale(inv_n);
    Ok((loss, grad))
}

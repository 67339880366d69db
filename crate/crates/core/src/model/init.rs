use std::fmt;
use std::str::FromStr;

use super::Model;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Element, Tensor};

/// Weight initialization. Biases always start at zero.
///
/// Fans: conv `fan_in = C_in·kh·kw`, `fan_out = F·kh·kw`; dense
/// `fan_in = d_in`, `fan_out = d_out`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InitScheme {
    /// `N(0, sqrt(2 / fan_in))`
    #[default]
    HeNormal,
    /// `U(-l, l)` with `l = sqrt(6 / (fan_in + fan_out))`
    XavierUniform,
}

impl fmt::Display for InitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitScheme::HeNormal => "he_normal",
            InitScheme::XavierUniform => "xavier_uniform",
        })
    }
}

impl FromStr for InitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "he_normal" => Ok(InitScheme::HeNormal),
            "xavier_uniform" => Ok(InitScheme::XavierUniform),
            other => Err(Error::Argument(format!("unknown init scheme `{other}`"))),
        }
    }
}

pub(super) fn init_params<T: Element>(model: &mut Model<T>, rng: &mut Rng, scheme: InitScheme) -> Result<()> {
    let mut fresh = Vec::new();
    for layer in &model.plan {
        let (Some((fan_in, fan_out)), Some((ws, _)), Some(wn), Some(bn)) = (
            layer.fans(),
            layer.param_shapes(),
            layer.weight_name(),
            layer.bias_name(),
        ) else {
            continue;
        };
        let w = match scheme {
            InitScheme::HeNormal => Tensor::rng_normal(rng, &ws, 0.0, (2.0 / fan_in as f64).sqrt())?,
            InitScheme::XavierUniform => {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Tensor::rng_uniform(rng, &ws, -limit, limit)?
            }
        };
        fresh.push((wn, Some(w)));
        fresh.push((bn, None));
    }
    for (name, w) in fresh {
        let t = model
            .params
            .get_mut(&name)
            .ok_or_else(|| Error::State(format!("missing parameter `{name}`")))?;
        match w {
            Some(w) => *t = w,
            None => t.data_mut().fill(T::zero()),
        }
    }
    Ok(())
}

//! Declarative architecture descriptions and their static shape check.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nn::{conv_output_len, PoolSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LayerSpec {
    Conv {
        filters: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    Relu,
    MaxPool(PoolSpec),
    Flatten,
    Dense {
        units: usize,
    },
    Dropout {
        rate: f64,
    },
}

impl LayerSpec {
    /// 3×3, stride 1, pad 1 ("same") convolution.
    pub fn conv3x3(filters: usize) -> Self {
        LayerSpec::Conv {
            filters,
            kernel: 3,
            stride: 1,
            padding: 1,
        }
    }

    pub fn has_params(&self) -> bool {
        matches!(self, LayerSpec::Conv { .. } | LayerSpec::Dense { .. })
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Conv {
                filters,
                kernel,
                stride,
                padding,
            } => {
                write!(f, "conv({filters},{kernel},{stride},{padding})")
            }
            LayerSpec::Relu => write!(f, "relu"),
            LayerSpec::MaxPool(p) => write!(f, "maxpool({},{},{})", p.window.0, p.window.1, p.stride),
            LayerSpec::Flatten => write!(f, "flatten"),
            LayerSpec::Dense { units } => write!(f, "dense({units})"),
            LayerSpec::Dropout { rate } => write!(f, "dropout({rate})"),
        }
    }
}

impl FromStr for LayerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unrecognized layer spec `{s}`"));
        let s = s.trim();
        let (kind, args) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(&s[i + 1..s.len() - 1])),
            Some(_) => return Err(bad()),
            None => (s, None),
        };
        let ints = |n: usize| -> Result<Vec<usize>> {
            let v: Vec<usize> = args
                .ok_or_else(bad)?
                .split(',')
                .map(|a| a.trim().parse::<usize>().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            if v.len() == n {
                Ok(v)
            } else {
                Err(bad())
            }
        };
        match (kind, args) {
            ("relu", None) => Ok(LayerSpec::Relu),
            ("flatten", None) => Ok(LayerSpec::Flatten),
            ("conv", Some(_)) => {
                let v = ints(4)?;
                Ok(LayerSpec::Conv {
                    filters: v[0],
                    kernel: v[1],
                    stride: v[2],
                    padding: v[3],
                })
            }
            ("maxpool", Some(_)) => {
                let v = ints(3)?;
                Ok(LayerSpec::MaxPool(PoolSpec {
                    window: (v[0], v[1]),
                    stride: v[2],
                }))
            }
            ("dense", Some(_)) => Ok(LayerSpec::Dense { units: ints(1)?[0] }),
            ("dropout", Some(a)) => Ok(LayerSpec::Dropout {
                rate: a.trim().parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Per-sample input geometry (channels, height, width).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InputShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl InputShape {
    pub fn new(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
        }
    }

    pub fn square(channels: usize, hw: usize) -> Self {
        Self::new(channels, hw, hw)
    }

    pub fn numel(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn batch_shape(&self, n: usize) -> [usize; 4] {
        [n, self.channels, self.height, self.width]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub name: String,
    pub input: InputShape,
    pub num_classes: usize,
    pub layers: Vec<LayerSpec>,
}

/// One layer after shape propagation.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerPlan {
    pub spec: LayerSpec,
    /// Per-sample input shape: `[C, H, W]` before flatten, `[D]` after.
    pub input: Vec<usize>,
    pub output: Vec<usize>,
    /// Layer name for parameter-bearing layers (`conv2_1`, `fc3`, ...).
    pub name: Option<String>,
}

impl LayerPlan {
    pub fn weight_name(&self) -> Option<String> {
        let suffix = match self.spec {
            LayerSpec::Conv { .. } => "kernel",
            LayerSpec::Dense { .. } => "weight",
            _ => return None,
        };
        self.name.as_ref().map(|n| format!("{n}.{suffix}"))
    }

    pub fn bias_name(&self) -> Option<String> {
        self.name.as_ref().map(|n| format!("{n}.bias"))
    }

    /// `(weight shape, bias shape)` for parameter-bearing layers.
    pub fn param_shapes(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        match self.spec {
            LayerSpec::Conv { filters, kernel, .. } => {
                Some((vec![filters, self.input[0], kernel, kernel], vec![filters]))
            }
            LayerSpec::Dense { units } => Some((vec![self.input[0], units], vec![units])),
            _ => None,
        }
    }

    /// Fan-in and fan-out used by weight initialization.
    pub fn fans(&self) -> Option<(usize, usize)> {
        match self.spec {
            LayerSpec::Conv { filters, kernel, .. } => {
                Some((self.input[0] * kernel * kernel, filters * kernel * kernel))
            }
            LayerSpec::Dense { units } => Some((self.input[0], units)),
            _ => None,
        }
    }
}

impl ModelConfig {
    /// Propagates shapes through the layer list. Fails on the first layer
    /// whose input does not fit, before anything is allocated.
    pub fn plan(&self) -> Result<Vec<LayerPlan>> {
        let InputShape {
            channels,
            height,
            width,
        } = self.input;
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Geometry(format!("empty input shape {:?}", self.input)));
        }
        if self.num_classes < 2 {
            return Err(Error::Argument(format!(
                "need at least 2 classes, got {}",
                self.num_classes
            )));
        }
        let mut shape = vec![channels, height, width];
        let (mut block, mut conv_in_block, mut dense_idx) = (1usize, 0usize, 0usize);
        let mut plans = Vec::with_capacity(self.layers.len());
        for (i, spec) in self.layers.iter().enumerate() {
            let at = |msg: String| Error::Geometry(format!("layer {i} ({spec}): {msg}"));
            let (output, name) = match *spec {
                LayerSpec::Conv {
                    filters,
                    kernel,
                    stride,
                    padding,
                } => {
                    if shape.len() != 3 {
                        return Err(at(format!("expects [C,H,W] input, got {shape:?}")));
                    }
                    if filters == 0 {
                        return Err(at("zero filters".into()));
                    }
                    let oh = conv_output_len(shape[1], kernel, stride, padding).map_err(|e| at(e.to_string()))?;
                    let ow = conv_output_len(shape[2], kernel, stride, padding).map_err(|e| at(e.to_string()))?;
                    conv_in_block += 1;
                    (vec![filters, oh, ow], Some(format!("conv{block}_{conv_in_block}")))
                }
                LayerSpec::MaxPool(p) => {
                    if shape.len() != 3 {
                        return Err(at(format!("expects [C,H,W] input, got {shape:?}")));
                    }
                    let oh = p.output_len(shape[1], p.window.0).map_err(|e| at(e.to_string()))?;
                    let ow = p.output_len(shape[2], p.window.1).map_err(|e| at(e.to_string()))?;
                    if conv_in_block > 0 {
                        block += 1;
                        conv_in_block = 0;
                    }
                    (vec![shape[0], oh, ow], None)
                }
                LayerSpec::Relu => (shape.clone(), None),
                LayerSpec::Dropout { rate } => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(Error::Argument(format!(
                            "layer {i}: dropout rate {rate} outside [0, 1)"
                        )));
                    }
                    (shape.clone(), None)
                }
                LayerSpec::Flatten => (vec![shape.iter().product()], None),
                LayerSpec::Dense { units } => {
                    if shape.len() != 1 {
                        return Err(at(format!("expects a flat input, got {shape:?}")));
                    }
                    if units == 0 {
                        return Err(at("zero units".into()));
                    }
                    dense_idx += 1;
                    (vec![units], Some(format!("fc{dense_idx}")))
                }
            };
            plans.push(LayerPlan {
                spec: *spec,
                input: std::mem::replace(&mut shape, output.clone()),
                output,
                name,
            });
        }
        match self.layers.last() {
            Some(LayerSpec::Dense { units }) if *units == self.num_classes => Ok(plans),
            _ => Err(Error::Geometry(format!(
                "model `{}` must end in a dense layer of width {}",
                self.name, self.num_classes
            ))),
        }
    }

    /// `(name, shape)` of every parameter tensor in store order.
    pub fn param_shapes(&self) -> Result<Vec<(String, Vec<usize>)>> {
        let mut out = Vec::new();
        for p in self.plan()? {
            if let (Some((w, b)), Some(wn), Some(bn)) = (p.param_shapes(), p.weight_name(), p.bias_name()) {
                out.push((wn, w));
                out.push((bn, b));
            }
        }
        Ok(out)
    }

    pub fn param_count(&self) -> Result<usize> {
        Ok(self
            .param_shapes()?
            .iter()
            .map(|(_, s)| s.iter().product::<usize>())
            .sum())
    }

    pub fn output_shape(&self, batch: usize) -> Result<Vec<usize>> {
        let plans = self.plan()?;
        let last = plans.last().expect("plan() guarantees a final dense layer");
        let mut s = vec![batch];
        s.extend(&last.output);
        Ok(s)
    }

    /// `;`-separated layer list, parseable by [`ModelConfig::parse_layers`].
    pub fn layers_string(&self) -> String {
        self.layers.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(";")
    }

    pub fn parse_layers(s: &str) -> Result<Vec<LayerSpec>> {
        s.split(';').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelConfig {
        ModelConfig {
            name: "tiny".into(),
            input: InputShape::square(1, 8),
            num_classes: 2,
            layers: vec![
                LayerSpec::conv3x3(4),
                LayerSpec::Relu,
                LayerSpec::MaxPool(PoolSpec::HALVE),
                LayerSpec::conv3x3(4),
                LayerSpec::conv3x3(4),
                LayerSpec::MaxPool(PoolSpec::HALVE),
                LayerSpec::Flatten,
                LayerSpec::Dense { units: 5 },
                LayerSpec::Dropout { rate: 0.5 },
                LayerSpec::Dense { units: 2 },
            ],
        }
    }

    #[test]
    fn names_follow_blocks() {
        let names: Vec<String> = tiny().param_shapes().unwrap().into_iter().map(|(n, _)| n).collect();
        assert_eq!(
            names,
            [
                "conv1_1.kernel",
                "conv1_1.bias",
                "conv2_1.kernel",
                "conv2_1.bias",
                "conv2_2.kernel",
                "conv2_2.bias",
                "fc1.weight",
                "fc1.bias",
                "fc2.weight",
                "fc2.bias"
            ]
        );
    }

    #[test]
    fn shapes_chain() {
        let plans = tiny().plan().unwrap();
        for w in plans.windows(2) {
            assert_eq!(w[0].output, w[1].input);
        }
        assert_eq!(plans[6].output, vec![4 * 2 * 2]);
        assert_eq!(tiny().output_shape(3).unwrap(), vec![3, 2]);
    }

    #[test]
    fn rejects_bad_geometry() {
        let mut c = tiny();
        c.input = InputShape::square(1, 6); // 6 -> 3 -> indivisible second pool
        assert!(matches!(c.plan(), Err(Error::Geometry(_))));

        let mut c = tiny();
        c.layers.pop();
        assert!(c.plan().is_err());

        let mut c = tiny();
        c.layers.insert(0, LayerSpec::Dense { units: 3 });
        assert!(c.plan().is_err());

        let mut c = tiny();
        c.layers[8] = LayerSpec::Dropout { rate: 1.0 };
        assert!(matches!(c.plan(), Err(Error::Argument(_))));
    }

    #[test]
    fn layer_string_round_trip() {
        let c = tiny();
        assert_eq!(ModelConfig::parse_layers(&c.layers_string()).unwrap(), c.layers);
        assert!("conv(1,2)".parse::<LayerSpec>().is_err());
        assert!("pool".parse::<LayerSpec>().is_err());
    }
}

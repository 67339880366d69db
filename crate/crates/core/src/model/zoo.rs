//! VGG19, a desk-scale VGG-mini, and the MLP baseline.

use std::fmt;
use std::str::FromStr;

use super::{InputShape, LayerSpec, Model, ModelConfig};
use crate::error::{Error, Result};
use crate::nn::PoolSpec;
use crate::tensor::Element;

pub const VGG19_INPUT_HW: usize = 224;
pub const VGG19_DROPOUT: f64 = 0.5;
pub const VGG_MINI_DROPOUT: f64 = 0.25;

/// (filters, convs) per VGG19 block; a 2×2/2 max-pool closes each block.
const VGG19_BLOCKS: [(usize, usize); 5] = [(64, 2), (128, 2), (256, 4), (512, 4), (512, 4)];
const VGG19_HEAD: usize = 4096;
const VGG_MINI_WIDTHS: [usize; 3] = [8, 16, 32];
const VGG_MINI_HEAD: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Vgg19,
    VggMini,
    Mlp,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Vgg19 => "vgg19",
            ModelKind::VggMini => "vgg-mini",
            ModelKind::Mlp => "mlp",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vgg19" => Ok(ModelKind::Vgg19),
            "vgg-mini" => Ok(ModelKind::VggMini),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::Argument(format!(
                "unknown model `{other}` (expected vgg19, vgg-mini or mlp)"
            ))),
        }
    }
}

fn check_classes(num_classes: usize) -> Result<()> {
    if num_classes < 2 {
        return Err(Error::Argument(format!("need at least 2 classes, got {num_classes}")));
    }
    Ok(())
}

fn conv_blocks(blocks: &[(usize, usize)]) -> Vec<LayerSpec> {
    let mut layers = Vec::new();
    for &(filters, convs) in blocks {
        for _ in 0..convs {
            layers.push(LayerSpec::conv3x3(filters));
            layers.push(LayerSpec::Relu);
        }
        layers.push(LayerSpec::MaxPool(PoolSpec::HALVE));
    }
    layers
}

/// Standard 19-weight-layer VGG on 224×224 input.
pub fn vgg19_config(num_classes: usize, in_channels: usize) -> Result<ModelConfig> {
    check_classes(num_classes)?;
    if in_channels != 1 && in_channels != 3 {
        return Err(Error::Argument(format!(
            "VGG19 supports 1 or 3 input channels, got {in_channels}"
        )));
    }
    let mut layers = conv_blocks(&VGG19_BLOCKS);
    layers.push(LayerSpec::Flatten);
    for _ in 0..2 {
        layers.push(LayerSpec::Dense { units: VGG19_HEAD });
        layers.push(LayerSpec::Relu);
        layers.push(LayerSpec::Dropout { rate: VGG19_DROPOUT });
    }
    layers.push(LayerSpec::Dense { units: num_classes });
    Ok(ModelConfig {
        name: ModelKind::Vgg19.to_string(),
        input: InputShape::square(in_channels, VGG19_INPUT_HW),
        num_classes,
        layers,
    })
}

/// Three single-conv blocks of widths 8/16/32, then a 64-unit dense head.
pub fn vgg_mini_config(num_classes: usize, in_channels: usize, input_hw: usize) -> Result<ModelConfig> {
    check_classes(num_classes)?;
    let pools = VGG_MINI_WIDTHS.len() as u32;
    if input_hw == 0 || !input_hw.is_multiple_of(2usize.pow(pools)) {
        return Err(Error::Geometry(format!(
            "VGG-mini input size {input_hw} must be a positive multiple of {}",
            2usize.pow(pools)
        )));
    }
    if in_channels == 0 {
        return Err(Error::Argument("in_channels must be positive".into()));
    }
    let blocks: Vec<(usize, usize)> = VGG_MINI_WIDTHS.iter().map(|&w| (w, 1)).collect();
    let mut layers = conv_blocks(&blocks);
    layers.extend([
        LayerSpec::Flatten,
        LayerSpec::Dense { units: VGG_MINI_HEAD },
        LayerSpec::Relu,
        LayerSpec::Dropout { rate: VGG_MINI_DROPOUT },
        LayerSpec::Dense { units: num_classes },
    ]);
    Ok(ModelConfig {
        name: ModelKind::VggMini.to_string(),
        input: InputShape::square(in_channels, input_hw),
        num_classes,
        layers,
    })
}

/// Flatten, then `dense + ReLU` per hidden width, then the class layer.
pub fn mlp_config(num_classes: usize, input: InputShape, hidden_widths: &[usize]) -> Result<ModelConfig> {
    check_classes(num_classes)?;
    if hidden_widths.contains(&0) {
        return Err(Error::Argument(format!(
            "hidden widths must be positive: {hidden_widths:?}"
        )));
    }
    let mut layers = vec![LayerSpec::Flatten];
    for &units in hidden_widths {
        layers.push(LayerSpec::Dense { units });
        layers.push(LayerSpec::Relu);
    }
    layers.push(LayerSpec::Dense { units: num_classes });
    Ok(ModelConfig {
        name: ModelKind::Mlp.to_string(),
        input,
        num_classes,
        layers,
    })
}

pub fn build_vgg19<T: Element>(num_classes: usize, in_channels: usize) -> Result<Model<T>> {
    Model::new(vgg19_config(num_classes, in_channels)?)
}

pub fn build_vgg_mini<T: Element>(num_classes: usize, in_channels: usize, input_hw: usize) -> Result<Model<T>> {
    Model::new(vgg_mini_config(num_classes, in_channels, input_hw)?)
}

pub fn build_mlp<T: Element>(num_classes: usize, input: InputShape, hidden_widths: &[usize]) -> Result<Model<T>> {
    Model::new(mlp_config(num_classes, input, hidden_widths)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vgg19_layer_table() {
        let cfg = vgg19_config(2, 1).unwrap();
        let plans = cfg.plan().unwrap();
        let convs = plans
            .iter()
            .filter(|p| matches!(p.spec, LayerSpec::Conv { .. }))
            .count();
        let dense = plans
            .iter()
            .filter(|p| matches!(p.spec, LayerSpec::Dense { .. }))
            .count();
        let pools = plans.iter().filter(|p| matches!(p.spec, LayerSpec::MaxPool(_))).count();
        assert_eq!((convs, dense, pools), (16, 3, 5));
        let flat = plans.iter().find(|p| p.spec == LayerSpec::Flatten).unwrap();
        assert_eq!(flat.input, vec![512, 7, 7]);
        assert_eq!(cfg.output_shape(2).unwrap(), vec![2, 2]);
        assert!(vgg19_config(2, 2).is_err());
        assert!(vgg19_config(1, 3).is_err());
    }

    #[test]
    fn vgg_mini_geometry() {
        let cfg = vgg_mini_config(2, 1, 32).unwrap();
        let flat = cfg
            .plan()
            .unwrap()
            .into_iter()
            .find(|p| p.spec == LayerSpec::Flatten)
            .unwrap();
        assert_eq!(flat.input, vec![32, 4, 4]);
        assert!(cfg.param_count().unwrap() <= 100_000);
        assert!(matches!(vgg_mini_config(2, 1, 20), Err(Error::Geometry(_))));
    }

    #[test]
    fn degenerate_mlp() {
        let cfg = mlp_config(3, InputShape::new(1, 1, 16), &[]).unwrap();
        assert_eq!(cfg.layers, vec![LayerSpec::Flatten, LayerSpec::Dense { units: 3 }]);
        assert_eq!(cfg.param_count().unwrap(), 16 * 3 + 3);
        assert!(mlp_config(2, InputShape::new(1, 1, 4), &[0]).is_err());
    }

    #[test]
    fn kind_parsing() {
        for k in [ModelKind::Vgg19, ModelKind::VggMini, ModelKind::Mlp] {
            assert_eq!(k.to_string().parse::<ModelKind>().unwrap(), k);
        }
        assert!("resnet50".parse::<ModelKind>().is_err());
    }
}

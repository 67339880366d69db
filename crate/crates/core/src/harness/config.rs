use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::data::{fit_square, synth_dataset};
use crate::data::{DatasetManifest, LabeledImages};
use crate::error::{Error, Result};
use crate::model::{
    mlp_config, vgg19_config, vgg_mini_config, InitScheme, InputShape, ModelConfig, ModelKind, VGG19_INPUT_HW,
};
use crate::optim::{Algorithm, Hyperparams, LrSchedule, DEFAULT_BASE_LR};

pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const DEFAULT_EPOCHS: usize = 100;
pub const DEFAULT_FRACTIONS: [f64; 3] = [0.70, 0.15, 0.15];
pub const DEFAULT_INPUT_HW: usize = 32;
pub const DEFAULT_MLP_HIDDEN: [usize; 1] = [64];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        })
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            _ => Err(Error::Argument(format!(
                "unknown precision `{s}` (expected f32 or f64)"
            ))),
        }
    }
}

/// Seeded synthetic data: `2·n_per_class` images of side `hw`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_per_class: usize,
    pub hw: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Synth(SynthSpec),
    Manifest(PathBuf),
}

impl DataSource {
    /// Loads every sample, fitted to `side×side`.
    pub fn load(&self, side: usize) -> Result<LabeledImages> {
        match self {
            DataSource::Synth(s) => {
                let mut set = synth_dataset(s.seed, s.n_per_class, s.hw)?;
                if s.hw != side {
                    set.images = set.images.iter().map(|i| fit_square(i, side)).collect::<Result<_>>()?;
                }
                Ok(set)
            }
            DataSource::Manifest(path) => DatasetManifest::read(path)?.load(side),
        }
    }
}

/// One training run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub optimizer: Algorithm,
    pub base_lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub precision: Precision,
    pub data: DataSource,
    /// Where the loss curve, checkpoints and reports go; `None` keeps everything in memory.
    pub out_dir: Option<PathBuf>,
    pub deterministic: bool,
    pub hyper: Hyperparams,
    pub init: InitScheme,
    /// Input side for vgg-mini and mlp (vgg19 always uses 224).
    pub input_hw: usize,
    pub fractions: [f64; 3],
    pub mlp_hidden: Vec<usize>,
    /// Save a checkpoint every this many epochs; 0 saves only the final one.
    pub checkpoint_every: usize,
    pub resume_from: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(data: DataSource) -> Self {
        Self {
            model: ModelKind::VggMini,
            optimizer: Algorithm::AdamW,
            base_lr: DEFAULT_BASE_LR,
            batch_size: DEFAULT_BATCH_SIZE,
            epochs: DEFAULT_EPOCHS,
            seed: 0,
            precision: Precision::F32,
            data,
            out_dir: None,
            deterministic: true,
            hyper: Hyperparams::default(),
            init: InitScheme::HeNormal,
            input_hw: DEFAULT_INPUT_HW,
            fractions: DEFAULT_FRACTIONS,
            mlp_hidden: DEFAULT_MLP_HIDDEN.to_vec(),
            checkpoint_every: 0,
            resume_from: None,
        }
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule::new(self.base_lr)
    }

    pub fn input_side(&self) -> usize {
        match self.model {
            ModelKind::Vgg19 => VGG19_INPUT_HW,
            _ => self.input_hw,
        }
    }

    pub fn model_config(&self, num_classes: usize) -> Result<ModelConfig> {
        match self.model {
            ModelKind::Vgg19 => vgg19_config(num_classes, 1),
            ModelKind::VggMini => vgg_mini_config(num_classes, 1, self.input_hw),
            ModelKind::Mlp => mlp_config(num_classes, InputShape::square(1, self.input_hw), &self.mlp_hidden),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.base_lr.is_finite() && self.base_lr > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.base_lr
            )));
        }
        self.hyper.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

//! Orchestration behind the command-line tool: training runs, evaluation of
//! saved checkpoints, the optimizer ablation, the gradient-check suite and
//! synthetic dataset export.

mod config;
mod train;

use std::fmt::Write as _;
use std::path::Path;

use crate::data::synth::{synth_generate, CLASS_NAMES};
use crate::data::{write_pgm, Checkpoint, Dataset, DatasetManifest, ManifestEntry, NormStats};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalReport};
use crate::model::{build_vgg_mini, check_model_gradients, kink_margin, InitScheme, Model};
use crate::nn::gradcheck::{gradcheck, GradCheckReport, LayerProbe, FD_STEP};
use crate::nn::{one_hot, PoolSpec};
use crate::optim::Algorithm;
use crate::rng::{stream, Rng};
use crate::tensor::Tensor;

pub use config::{
    DataSource, Precision, RunConfig, SynthSpec, DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_FRACTIONS,
    DEFAULT_INPUT_HW, DEFAULT_MLP_HIDDEN,
};
pub use train::{
    loss_curve_csv, mean_loss, prepare_data, run_train, train, EpochRecord, RunSummary, Splits, TrainOutcome,
    FINAL_CHECKPOINT, LOSS_CURVE_FILE, LOSS_CURVE_HEADER, REPORT_KV, REPORT_TEXT,
};

/// Evaluates a saved checkpoint on every image of a manifest, using the
/// normalization statistics stored with the checkpoint.
pub fn eval_checkpoint(
    checkpoint: impl AsRef<Path>,
    manifest: impl AsRef<Path>,
    batch_size: usize,
) -> Result<EvalReport> {
    let ckpt = Checkpoint::<f32>::load(checkpoint)?;
    let meta_f64 = |k: &str| -> Result<f64> {
        ckpt.meta
            .get(k)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Config(format!("checkpoint lacks `meta.{k}`")))
    };
    let stats = NormStats::new(meta_f64("norm.mean")?, meta_f64("norm.std")?);
    let manifest = DatasetManifest::read(manifest)?;
    let mut images = manifest.load(ckpt.model.config().input.height)?;

    // Map manifest labels onto the checkpoint's class order.
    if let Some(classes) = ckpt.meta.get("classes") {
        let trained: Vec<String> = classes.split(',').map(str::to_owned).collect();
        let mut labels = Vec::with_capacity(images.len());
        for &l in &images.labels {
            let name = &images.classes[l];
            let idx = trained.iter().position(|c| c == name).ok_or_else(|| {
                Error::Config(format!("label `{name}` was not among the trained classes {trained:?}"))
            })?;
            labels.push(idx);
        }
        images.labels = labels;
        images.classes = trained;
    }
    if images.classes.len() != ckpt.model.num_classes() {
        return Err(Error::Config(format!(
            "manifest has {} classes, model predicts {}",
            images.classes.len(),
            ckpt.model.num_classes()
        )));
    }
    let data = Dataset::<f32>::from_images(&images, &stats)?;
    evaluate(&ckpt.model, &data, batch_size)
}

/// One row of the optimizer ablation.
#[derive(Clone, Debug)]
pub struct AblationRow {
    pub algorithm: Algorithm,
    pub result: std::result::Result<RunSummary, String>,
}

#[derive(Clone, Debug)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn row(&self, algorithm: Algorithm) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm)
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<10} {:>8} {:>8} {:>8} {:>8} {:>12}\n",
            "Model", "ACC", "AUC", "F1", "Recall", "TrainLoss"
        );
        for row in &self.rows {
            let name = row.algorithm.label();
            match &row.result {
                Ok(s) => {
                    let loss = s.final_train_loss().map_or_else(|| "n/a".into(), |l| format!("{l:.6}"));
                    match &s.test_report {
                        Some(r) => {
                            let auc = r.auc.map_or_else(|| "n/a".into(), |a| format!("{a:.4}"));
                            let _ = writeln!(
                                out,
                                "{name:<10} {:>8.4} {auc:>8} {:>8.4} {:>8.4} {loss:>12}",
                                r.accuracy,
                                r.positive_f1(),
                                r.positive_recall()
                            );
                        }
                        None => {
                            let _ = writeln!(out, "{name:<10} {:>8} {:>8} {:>8} {:>8} {loss:>12}", "-", "-", "-", "-");
                        }
                    }
                }
                Err(e) => {
                    let _ = writeln!(out, "{name:<10} FAILED: {e}");
                }
            }
        }
        out
    }
}

/// Trains one run per optimizer, in the ablation table's row order, with the
/// same seed, data split, initialization and batch order. Runs execute on
/// separate threads; a failing run is recorded in its row.
pub fn ablate(base: &RunConfig) -> AblationTable {
    let configs: Vec<RunConfig> = Algorithm::ALL
        .into_iter()
        .map(|a| {
            let mut cfg = base.clone();
            cfg.optimizer = a;
            cfg.resume_from = None;
            cfg.out_dir = base.out_dir.as_ref().map(|d| d.join(a.name()));
            cfg
        })
        .collect();
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|cfg| s.spawn(move || run_train(cfg))).collect();
        handles
            .into_iter()
            .map(|h| match h.join() {
                Ok(r) => r.map_err(|e| e.to_string()),
                Err(_) => Err("training thread panicked".to_string()),
            })
            .collect()
    });
    AblationTable {
        rows: Algorithm::ALL
            .into_iter()
            .zip(results)
            .map(|(algorithm, result)| AblationRow { algorithm, result })
            .collect(),
    }
}

/// Layer probes and the input shapes they are checked on.
pub fn standard_probes() -> Vec<(LayerProbe, Vec<usize>)> {
    let conv = |stride, padding| LayerProbe::Conv2d {
        filters: 3,
        kernel: (3, 3),
        stride,
        padding,
    };
    vec![
        (conv(1, 0), vec![2, 2, 5, 5]),
        (conv(1, 1), vec![2, 2, 5, 5]),
        (conv(2, 0), vec![2, 2, 7, 7]),
        (conv(2, 1), vec![2, 2, 5, 5]),
        (LayerProbe::MaxPool2d(PoolSpec::HALVE), vec![2, 3, 4, 6]),
        (LayerProbe::Relu, vec![3, 7]),
        (LayerProbe::Dense { units: 3 }, vec![4, 5]),
        (LayerProbe::Dropout { rate: 0.5 }, vec![3, 4]),
        (LayerProbe::SoftmaxCrossEntropy, vec![4, 3]),
        (LayerProbe::Stack { filters: 2, classes: 3 }, vec![2, 1, 4, 4]),
    ]
}

/// Smallest acceptable [`kink_margin`] for a whole-model probe point.
pub const KINK_MARGIN: f64 = 10.0 * FD_STEP;

/// A randomly initialized 8×8 VGG-mini and a batch of two inputs at which the
/// network is differentiable with margin [`KINK_MARGIN`]. Points closer to a
/// ReLU kink or pooling tie are redrawn from the same stream.
pub fn smooth_vgg_mini_probe(seed: u64) -> Result<(Model<f64>, Tensor<f64>)> {
    const ATTEMPTS: usize = 1000;
    let mut rng = Rng::derive(seed, stream::PROBE, 1000);
    let mut model = build_vgg_mini::<f64>(2, 1, 8)?;
    for _ in 0..ATTEMPTS {
        model.init_params(&mut rng, InitScheme::HeNormal)?;
        let x = Tensor::rng_uniform(&mut rng, &[2, 1, 8, 8], -1.0, 1.0)?;
        if kink_margin(&model, &x)? >= KINK_MARGIN {
            return Ok((model, x));
        }
    }
    Err(Error::State(format!(
        "no differentiable probe point in {ATTEMPTS} draws"
    )))
}

/// Every standard probe plus a whole 8×8 VGG-mini, once per seed in `seeds`.
pub fn gradcheck_suite(seeds: std::ops::Range<u64>, tolerance: f64) -> Result<Vec<GradCheckReport>> {
    let mut reports = Vec::new();
    for seed in seeds {
        for (i, (probe, shape)) in standard_probes().into_iter().enumerate() {
            let mut rng = Rng::derive(seed, stream::PROBE, i as u64);
            let mut r = gradcheck(&probe, &shape, &mut rng, tolerance)?;
            r.label = format!("{} [seed {seed}]", r.label);
            reports.push(r);
        }
        let (model, x) = smooth_vgg_mini_probe(seed)?;
        let y = one_hot(&[0, 1], 2)?;
        let mut r = check_model_gradients(&model, &x, &y, tolerance)?;
        r.label = format!("{} [seed {seed}]", r.label);
        reports.push(r);
    }
    Ok(reports)
}

/// Writes a synthetic dataset as `images/<class>_<index>.pgm` plus
/// `manifest.tsv`, and returns the manifest.
pub fn write_synth(spec: &SynthSpec, out_dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    let out_dir = out_dir.as_ref();
    let images_dir = out_dir.join("images");
    std::fs::create_dir_all(&images_dir).map_err(|e| Error::io(&images_dir, e))?;
    let samples = synth_generate(&mut Rng::new(spec.seed), spec.n_per_class, spec.hw)?;
    let mut entries = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let label = CLASS_NAMES[s.label];
        let rel = format!("images/{label}_{i:05}.pgm");
        write_pgm(out_dir.join(&rel), &s.image)?;
        entries.push(ManifestEntry {
            path: rel,
            label: label.to_owned(),
        });
    }
    let manifest = DatasetManifest::new(out_dir, entries)?;
    manifest.write(out_dir.join("manifest.tsv"))?;
    Ok(manifest)
}

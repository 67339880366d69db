use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::data::{Checkpoint, Dataset, LabeledImages, NormStats};
use crate::error::{Error, Result};
use crate::harness::config::{Precision, RunConfig};
use crate::metrics::{evaluate, EvalReport};
use crate::model::{Mode, Model};
use crate::nn::softmax_cross_entropy;
use crate::optim::OptimizerState;
use crate::rng::{stream, Rng};
use crate::tensor::Element;

pub const LOSS_CURVE_HEADER: &str = "epoch,train_loss,val_loss,lr";
pub const LOSS_CURVE_FILE: &str = "loss_curve.csv";
pub const FINAL_CHECKPOINT: &str = "final.cvfg";
pub const REPORT_TEXT: &str = "report.txt";
pub const REPORT_KV: &str = "report.kv";

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean of the batch losses, train mode.
    pub train_loss: f64,
    /// Mean per-sample loss over the validation split in eval mode; NaN when there is none.
    pub val_loss: f64,
    pub lr: f64,
    /// Zero for epochs restored from a checkpoint.
    pub seconds: f64,
}

/// Renders records as `loss_curve.csv`. Floats use the shortest exact form.
pub fn loss_curve_csv(records: &[EpochRecord]) -> String {
    let mut out = format!("{LOSS_CURVE_HEADER}\n");
    for r in records {
        let _ = writeln!(out, "{},{:?},{:?},{:?}", r.epoch, r.train_loss, r.val_loss, r.lr);
    }
    out
}

/// The three splits of a run plus the statistics they were normalized with.
#[derive(Clone, Debug)]
pub struct Splits<T: Element> {
    pub train: Dataset<T>,
    pub val: Option<Dataset<T>>,
    pub test: Option<Dataset<T>>,
    pub stats: NormStats,
    pub classes: Vec<String>,
}

/// Loads, splits (stratified, seeded) and normalizes the run's data.
pub fn prepare_data<T: Element>(cfg: &RunConfig) -> Result<Splits<T>> {
    let all = cfg.data.load(cfg.input_side())?;
    if all.is_empty() {
        return Err(Error::Config("dataset is empty".into()));
    }
    if all.classes.len() < 2 {
        return Err(Error::Config(format!(
            "need at least 2 classes, found {:?}",
            all.classes
        )));
    }
    let [train, val, test] = all.split(cfg.fractions, &mut Rng::derive(cfg.seed, stream::SPLIT, 0))?;
    let stats = train.norm_stats()?;
    let build = |part: &LabeledImages| -> Result<Option<Dataset<T>>> {
        if part.is_empty() {
            Ok(None)
        } else {
            Dataset::from_images(part, &stats).map(Some)
        }
    };
    Ok(Splits {
        train: Dataset::from_images(&train, &stats)?,
        val: build(&val)?,
        test: build(&test)?,
        stats,
        classes: all.classes.clone(),
    })
}

/// Mean per-sample cross-entropy of an eval-mode model over `data`.
pub fn mean_loss<T: Element>(model: &Model<T>, data: &Dataset<T>, batch_size: usize) -> Result<f64> {
    let mut total = 0.0;
    for batch in data.batches(batch_size, None)? {
        let logits = model.logits(&batch.x)?;
        let (loss, _) = softmax_cross_entropy(&logits, &batch.y_onehot)?;
        total += loss.as_f64() * batch.labels.len() as f64;
    }
    Ok(total / data.len() as f64)
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T: Element> {
    pub model: Model<T>,
    pub state: OptimizerState<T>,
    pub records: Vec<EpochRecord>,
    /// Loss of the very first minibatch of epoch 0 (before any update).
    pub first_batch_loss: Option<f64>,
    pub train_report: EvalReport,
    pub test_report: Option<EvalReport>,
    pub stats: NormStats,
    pub classes: Vec<String>,
}

impl<T: Element> TrainOutcome<T> {
    pub fn final_train_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.train_loss)
    }
}

/// Precision-independent view of a finished run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub records: Vec<EpochRecord>,
    pub first_batch_loss: Option<f64>,
    pub train_report: EvalReport,
    pub test_report: Option<EvalReport>,
}

impl RunSummary {
    pub fn final_train_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.train_loss)
    }
}

impl<T: Element> From<TrainOutcome<T>> for RunSummary {
    fn from(o: TrainOutcome<T>) -> Self {
        Self {
            records: o.records,
            first_batch_loss: o.first_batch_loss,
            train_report: o.train_report,
            test_report: o.test_report,
        }
    }
}

/// Runs [`train`] at the configured precision.
pub fn run_train(cfg: &RunConfig) -> Result<RunSummary> {
    match cfg.precision {
        Precision::F32 => train::<f32>(cfg).map(Into::into),
        Precision::F64 => train::<f64>(cfg).map(Into::into),
    }
}

fn history_meta(records: &[EpochRecord]) -> Vec<(String, String)> {
    records
        .iter()
        .map(|r| {
            (
                format!("history.{}", r.epoch),
                format!("{:?},{:?},{:?}", r.train_loss, r.val_loss, r.lr),
            )
        })
        .collect()
}

fn history_from_meta(ckpt_meta: &indexmap::IndexMap<String, String>, epochs: usize) -> Result<Vec<EpochRecord>> {
    (0..epochs)
        .map(|e| {
            let raw = ckpt_meta
                .get(&format!("history.{e}"))
                .ok_or_else(|| Error::Config(format!("checkpoint has no loss history for epoch {e}")))?;
            let v: Vec<f64> = raw
                .split(',')
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Config(format!("bad history entry for epoch {e}")))?;
            let [train_loss, val_loss, lr] = v[..] else {
                return Err(Error::Config(format!("bad history entry for epoch {e}")));
            };
            Ok(EpochRecord {
                epoch: e,
                train_loss,
                val_loss,
                lr,
                seconds: 0.0,
            })
        })
        .collect()
}

fn checkpoint_for<T: Element>(
    cfg: &RunConfig,
    model: &Model<T>,
    state: &OptimizerState<T>,
    records: &[EpochRecord],
    splits: &Splits<T>,
) -> Checkpoint<T> {
    let mut c = Checkpoint::new(model.clone(), state.clone(), records.len());
    c.meta.insert("seed".into(), cfg.seed.to_string());
    c.meta.insert("norm.mean".into(), format!("{:?}", splits.stats.mean));
    c.meta.insert("norm.std".into(), format!("{:?}", splits.stats.std));
    c.meta.insert("classes".into(), splits.classes.join(","));
    c.meta.extend(history_meta(records));
    c
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Full training run: seeded split, init, per-epoch shuffled minibatch
/// updates under the step-decay schedule, validation loss each epoch, then
/// reports on the train and test splits.
///
/// Every epoch draws its shuffle and dropout streams from `(seed, epoch)`,
/// so a run resumed from an epoch-`e` checkpoint continues exactly as the
/// uninterrupted run would.
pub fn train<T: Element>(cfg: &RunConfig) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    let splits = prepare_data::<T>(cfg)?;
    let config = cfg.model_config(splits.classes.len())?;

    let (mut model, mut state, mut records) = match &cfg.resume_from {
        Some(path) => {
            let ckpt = Checkpoint::<T>::load(path)?;
            if ckpt.model.config() != &config {
                return Err(Error::Config(
                    "checkpoint model does not match the run configuration".into(),
                ));
            }
            if ckpt.state.algorithm() != cfg.optimizer || ckpt.state.hyperparams() != &cfg.hyper {
                return Err(Error::Config(
                    "checkpoint optimizer does not match the run configuration".into(),
                ));
            }
            if ckpt.meta.get("seed").map(String::as_str) != Some(cfg.seed.to_string().as_str()) {
                return Err(Error::Config(
                    "checkpoint was written by a run with a different seed".into(),
                ));
            }
            if ckpt.epoch > cfg.epochs {
                return Err(Error::Config(format!(
                    "checkpoint is at epoch {} but the run stops at {}",
                    ckpt.epoch, cfg.epochs
                )));
            }
            let records = history_from_meta(&ckpt.meta, ckpt.epoch)?;
            (ckpt.model, ckpt.state, records)
        }
        None => {
            let mut model = Model::<T>::new(config)?;
            model.init_params(&mut Rng::derive(cfg.seed, stream::INIT, 0), cfg.init)?;
            let state = OptimizerState::new(cfg.optimizer, cfg.hyper.clone(), model.params())?;
            (model, state, Vec::new())
        }
    };

    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let schedule = cfg.schedule();
    let mut first_batch_loss = None;
    for epoch in records.len()..cfg.epochs {
        let started = Instant::now();
        let lr = schedule.lr_at(epoch);
        model.set_mode(Mode::Train);
        let mut shuffle = Rng::derive(cfg.seed, stream::SHUFFLE, epoch as u64);
        let mut dropout = Rng::derive(cfg.seed, stream::DROPOUT, epoch as u64);
        let mut loss_sum = 0.0;
        let mut n_batches = 0usize;
        for (b, batch) in splits.train.batches(cfg.batch_size, Some(&mut shuffle))?.enumerate() {
            let (loss, grads) = model.loss_and_grads(&batch.x, &batch.y_onehot, &mut dropout)?;
            let loss = loss.as_f64();
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            if epoch == 0 && b == 0 {
                first_batch_loss = Some(loss);
            }
            state.step(model.params_mut(), &grads, lr)?;
            loss_sum += loss;
            n_batches += 1;
        }
        model.set_mode(Mode::Eval);
        let val_loss = match &splits.val {
            Some(v) => mean_loss(&model, v, cfg.batch_size)?,
            None => f64::NAN,
        };
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / n_batches as f64,
            val_loss,
            lr,
            seconds: started.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {epoch}: train_loss {:.5} val_loss {:.5} lr {:.6} ({:.1}s)",
            record.train_loss,
            record.val_loss,
            lr,
            record.seconds
        );
        records.push(record);

        if let Some(dir) = &cfg.out_dir {
            if cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 {
                checkpoint_for(cfg, &model, &state, &records, &splits)
                    .save(dir.join(format!("epoch_{:03}.cvfg", epoch + 1)))?;
            }
        }
    }

    model.set_mode(Mode::Eval);
    let train_report = evaluate(&model, &splits.train, cfg.batch_size)?;
    let test_report = match &splits.test {
        Some(t) => Some(evaluate(&model, t, cfg.batch_size)?),
        None => None,
    };

    if let Some(dir) = &cfg.out_dir {
        write_file(&dir.join(LOSS_CURVE_FILE), loss_curve_csv(&records))?;
        checkpoint_for(cfg, &model, &state, &records, &splits).save(dir.join(FINAL_CHECKPOINT))?;
        if let Some(r) = &test_report {
            write_file(&dir.join(REPORT_TEXT), format!("{r}\n"))?;
            write_file(&dir.join(REPORT_KV), r.to_kv())?;
        }
    }

    Ok(TrainOutcome {
        model,
        state,
        records,
        first_batch_loss,
        train_report,
        test_report,
        stats: splits.stats,
        classes: splits.classes,
    })
}

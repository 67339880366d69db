//! Image ingestion, preprocessing, datasets and checkpoints.

pub mod checkpoint;
pub mod dataset;
pub mod manifest;
pub mod pgm;
pub mod synth;
pub mod transform;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use dataset::{batches, split_indices, Batch, Batches, Dataset, LabeledImages};
pub use manifest::{DatasetManifest, ManifestEntry, SplitTag, POSITIVE_LABEL};
pub use pgm::{load_pgm, read_pgm, save_pgm, write_pgm, Image};
pub use synth::{synth_dataset, synth_generate, SynthSample};
pub use transform::{center_crop, fit_square, normalize, resize_bilinear, NormStats};

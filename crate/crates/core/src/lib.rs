//! A small convolutional network toolkit written against plain `Vec`s:
//! conv/pool/dense layers with hand-written backward passes, VGG-style
//! models, five optimizers, classification metrics and a PGM image pipeline
//! with a seeded synthetic dataset.
//!
//! ```no_run
//! use convforge::harness::{train, DataSource, RunConfig, SynthSpec};
//!
//! let mut cfg = RunConfig::new(DataSource::Synth(SynthSpec { seed: 42, n_per_class: 128, hw: 32 }));
//! cfg.seed = 42;
//! cfg.epochs = 10;
//! let outcome = train::<f32>(&cfg)?;
//! println!("{}", outcome.test_report.unwrap());
//! # Ok::<(), convforge::Error>(())
//! ```
//!
//! See `examples/` for one runnable program per component.

pub mod data;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod optim;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use rng::Rng;
pub use tensor::{Element, Tensor};

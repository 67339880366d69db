//! Trains VGG-mini with AdamW on the seeded synthetic set (512 train / 128
//! val / 128 test at 32×32) and prints the loss curve and test report.
//!
//! ```text
//! cargo run --release --example train_synthetic -- [epochs] [out_dir]
//! ```

use convforge::harness::{train, DataSource, RunConfig, SynthSpec};
use convforge::model::ModelKind;
use convforge::optim::Algorithm;

fn main() -> convforge::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let epochs = args
        .next()
        .map_or(50, |a| a.parse().expect("epochs must be an integer"));

    let mut cfg = RunConfig::new(DataSource::Synth(SynthSpec {
        seed: 42,
        n_per_class: 384,
        hw: 32,
    }));
    cfg.model = ModelKind::VggMini;
    cfg.optimizer = Algorithm::AdamW;
    cfg.seed = 42;
    cfg.epochs = epochs;
    cfg.fractions = [4.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
    cfg.out_dir = args.next().map(Into::into);

    let outcome = train::<f32>(&cfg)?;
    println!("epoch  train_loss  val_loss  lr");
    for r in &outcome.records {
        println!(
            "{:>5}  {:>10.5}  {:>8.5}  {:.6}",
            r.epoch, r.train_loss, r.val_loss, r.lr
        );
    }
    println!("\ntrain accuracy {:.4}", outcome.train_report.accuracy);
    if let Some(report) = &outcome.test_report {
        println!("{report}");
    }
    Ok(())
}

//! Trains on one synthetic set, saves the final checkpoint, then scores a
//! second, independently seeded set written to disk as PGM files.
//!
//! ```text
//! cargo run --release --example eval_manifest
//! ```

use convforge::harness::{eval_checkpoint, train, write_synth, DataSource, RunConfig, SynthSpec, FINAL_CHECKPOINT};
use convforge::metrics::EvalReport;

fn main() -> convforge::Result<()> {
    let dir = std::env::temp_dir().join("convforge-eval");
    let mut cfg = RunConfig::new(DataSource::Synth(SynthSpec {
        seed: 1,
        n_per_class: 128,
        hw: 32,
    }));
    cfg.seed = 1;
    cfg.epochs = 15;
    cfg.out_dir = Some(dir.join("run"));
    let outcome = train::<f32>(&cfg)?;
    println!(
        "trained {} epochs, final train loss {:.4}",
        cfg.epochs,
        outcome.final_train_loss().unwrap_or(f64::NAN)
    );

    let holdout = write_synth(
        &SynthSpec {
            seed: 99,
            n_per_class: 100,
            hw: 32,
        },
        dir.join("holdout"),
    )?;
    println!(
        "scoring {} held-out images from {}",
        holdout.len(),
        holdout.root().display()
    );
    let report = eval_checkpoint(
        dir.join("run").join(FINAL_CHECKPOINT),
        dir.join("holdout").join("manifest.tsv"),
        64,
    )?;
    println!("\n{}\n{}", EvalReport::table_header(), report.table_row());
    println!("confusion {:?}", report.confusion);
    Ok(())
}

//! Trains for a few epochs with periodic checkpoints, resumes a second run
//! from the midpoint and shows that both finish with identical bytes.
//!
//! ```text
//! cargo run --release --example checkpoint_resume
//! ```

use convforge::data::Checkpoint;
use convforge::harness::{train, DataSource, RunConfig, SynthSpec, FINAL_CHECKPOINT, LOSS_CURVE_FILE};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("convforge-resume");
    let _ = std::fs::remove_dir_all(&dir);

    let mut cfg = RunConfig::new(DataSource::Synth(SynthSpec {
        seed: 3,
        n_per_class: 64,
        hw: 16,
    }));
    cfg.input_hw = 16;
    cfg.seed = 11;
    cfg.epochs = 8;
    cfg.checkpoint_every = 4;
    cfg.out_dir = Some(dir.join("full"));
    let full = train::<f32>(&cfg)?;

    let midpoint = dir.join("full").join("epoch_004.cvfg");
    let ckpt = Checkpoint::<f32>::load(&midpoint)?;
    println!(
        "{}: epoch {}, {} after {} steps, {} stored loss rows",
        midpoint.display(),
        ckpt.epoch,
        ckpt.state.algorithm(),
        ckpt.state.step_count(),
        ckpt.meta.keys().filter(|k| k.starts_with("history.")).count()
    );

    cfg.out_dir = Some(dir.join("resumed"));
    cfg.resume_from = Some(midpoint);
    let resumed = train::<f32>(&cfg)?;

    for file in [LOSS_CURVE_FILE, FINAL_CHECKPOINT] {
        let a = std::fs::read(dir.join("full").join(file))?;
        let b = std::fs::read(dir.join("resumed").join(file))?;
        println!("{file}: {} bytes, identical: {}", a.len(), a == b);
    }
    println!(
        "final train loss {:?} vs {:?}",
        full.final_train_loss(),
        resumed.final_train_loss()
    );
    Ok(())
}

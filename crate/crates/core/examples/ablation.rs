//! Trains VGG-mini once per optimizer (same seed, split, init and batch
//! order) and prints the comparison table.
//!
//! ```text
//! cargo run --release --example ablation -- [epochs] [per_class]
//! ```

use convforge::harness::{ablate, DataSource, RunConfig, SynthSpec};

fn main() {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<usize>().expect("integer argument"));
    let epochs = args.next().unwrap_or(10);
    let per_class = args.next().unwrap_or(128);

    let mut cfg = RunConfig::new(DataSource::Synth(SynthSpec {
        seed: 42,
        n_per_class: per_class,
        hw: 32,
    }));
    cfg.seed = 42;
    cfg.epochs = epochs;
    let table = ablate(&cfg);
    print!("{}", table.render());

    for row in &table.rows {
        if let Ok(s) = &row.result {
            let curve: Vec<String> = s.records.iter().map(|r| format!("{:.3}", r.train_loss)).collect();
            println!("{:<9} {}", row.algorithm.label(), curve.join(" "));
        }
    }
}

//! Central finite-difference check of every layer's backward pass and of a
//! whole 8×8 VGG-mini, in f64.
//!
//! ```text
//! cargo run --release --example gradcheck -- [seeds]
//! ```

use convforge::harness::{gradcheck_suite, smooth_vgg_mini_probe};
use convforge::model::kink_margin;
use convforge::nn::gradcheck::{DEFAULT_TOLERANCE, FD_STEP};

fn main() -> convforge::Result<()> {
    let seeds: u64 = std::env::args()
        .nth(1)
        .map_or(3, |s| s.parse().expect("seeds must be an integer"));

    let (model, x) = smooth_vgg_mini_probe(0)?;
    println!(
        "probe point for seed 0: kink margin {:.3e} (step {FD_STEP:.0e}), {} parameters",
        kink_margin(&model, &x)?,
        model.params().numel()
    );

    let reports = gradcheck_suite(0..seeds, DEFAULT_TOLERANCE)?;
    for r in reports.iter().take(11) {
        print!("{r}");
    }
    let worst = reports.iter().map(|r| r.max_rel_error()).fold(0.0, f64::max);
    let failed = reports.iter().filter(|r| !r.passed()).count();
    println!(
        "\n{} reports over {seeds} seeds, {failed} failed, worst relative error {worst:.2e}",
        reports.len()
    );
    Ok(())
}

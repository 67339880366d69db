//! The five update rules side by side on an ill-conditioned quadratic, plus
//! the step-decay learning-rate schedule.
//!
//! ```text
//! cargo run --example optimizers
//! ```

use convforge::model::ParamStore;
use convforge::optim::{Algorithm, Hyperparams, LrSchedule, OptimizerState};
use convforge::Tensor;

// f(w) = ½ Σ c_i w_i² with curvatures spanning two orders of magnitude
const CURVATURE: [f64; 4] = [0.05, 0.5, 1.0, 5.0];

fn loss_and_grad(p: &ParamStore<f64>) -> convforge::Result<(f64, ParamStore<f64>)> {
    let w = p.get("w")?.data();
    let loss = w.iter().zip(CURVATURE).map(|(x, c)| 0.5 * c * x * x).sum();
    let mut g = ParamStore::new();
    g.insert(
        "w",
        Tensor::from_data(&[4], w.iter().zip(CURVATURE).map(|(x, c)| c * x).collect())?,
    )?;
    Ok((loss, g))
}

fn main() -> convforge::Result<()> {
    println!(
        "{:<10} {:>12} {:>12} {:>12}",
        "optimizer", "step 10", "step 100", "step 500"
    );
    for alg in Algorithm::ALL {
        let mut p = ParamStore::new();
        p.insert("w", Tensor::full(&[4], 1.0)?)?;
        let mut state = OptimizerState::new(alg, Hyperparams::default(), &p)?;
        // AdaDelta is scale-free; the others get a step size suited to this problem
        let lr = match alg {
            Algorithm::AdaDelta => 1.0,
            Algorithm::Sgd => 0.02,
            _ => 0.05,
        };
        let mut row = Vec::new();
        for step in 1..=500 {
            let (_, g) = loss_and_grad(&p)?;
            state.step(&mut p, &g, lr)?;
            if [10, 100, 500].contains(&step) {
                row.push(loss_and_grad(&p)?.0);
            }
        }
        println!(
            "{:<10} {:>12.3e} {:>12.3e} {:>12.3e}",
            alg.label(),
            row[0],
            row[1],
            row[2]
        );
    }

    let schedule = LrSchedule::new(0.001);
    println!("\nlearning rate by epoch (x0.9 every 20):");
    for e in (0..=100).step_by(20) {
        println!("  epoch {e:>3}: {:?}", schedule.lr_at(e));
    }
    Ok(())
}

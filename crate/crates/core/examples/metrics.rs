//! Confusion matrix, precision/recall/F1 and midrank ROC-AUC on a small
//! scored set, rendered as a report row and as key-value text.
//!
//! ```text
//! cargo run --example metrics
//! ```

use convforge::metrics::{roc_auc, EvalReport};

fn main() -> convforge::Result<()> {
    // (probability of class 1, true label); note the tied scores at 0.6 and 0.3
    let scored = [
        (0.95, 1),
        (0.85, 1),
        (0.80, 0),
        (0.70, 1),
        (0.60, 1),
        (0.60, 0),
        (0.55, 1),
        (0.40, 0),
        (0.30, 1),
        (0.30, 0),
        (0.20, 0),
        (0.05, 0),
    ];
    let scores: Vec<f64> = scored.iter().map(|s| s.0).collect();
    let labels: Vec<usize> = scored.iter().map(|s| s.1).collect();
    println!("AUC {:.6}", roc_auc(&scores, &labels)?);

    let probs: Vec<Vec<f64>> = scores.iter().map(|&p| vec![1.0 - p, p]).collect();
    let report = EvalReport::from_probabilities("example", &probs, &labels, 1)?;
    println!("\n{report}");
    println!("\nconfusion (rows = truth, cols = prediction):");
    for row in &report.confusion {
        println!("  {row:?}");
    }
    println!(
        "precision {:.4}  recall {:.4}  f1 {:.4}",
        report.positive_precision(),
        report.positive_recall(),
        report.positive_f1()
    );

    let kv = report.to_kv();
    println!("\n{kv}");
    assert_eq!(EvalReport::from_kv(&kv)?, report);
    Ok(())
}

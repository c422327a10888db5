//! The uncertainty metrics on hand-made prediction samples: agreement,
//! disagreement between confident samples, and agreement on a coin flip.

use ptm::model::PredictionSamples;
use ptm::uncertainty::{self, UncertaintyReport};

fn show(name: &str, probs: Vec<Vec<f64>>) -> ptm::Result<()> {
    let r = UncertaintyReport::from_samples(&PredictionSamples::from_probs(probs)?)?;
    println!(
        "{name:<22} mean {:.3?}  entropy {:.3}  MI {:.3}  std {:.3}",
        r.mean_probs, r.entropy_bits, r.mutual_information_bits, r.std_per_class[1]
    );
    Ok(())
}

fn main() -> ptm::Result<()> {
    show("confident, agreeing", vec![vec![0.05, 0.95]; 10])?;
    let split = (0..10).map(|i| if i % 2 == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] }).collect();
    show("confident, split", split)?;
    show("unsure, agreeing", vec![vec![0.5, 0.5]; 10])?;

    // Calibration of a small batch.
    let confidences = [0.95, 0.9, 0.85, 0.6, 0.55, 0.99, 0.7, 0.65];
    let correct = [true, true, false, true, false, true, true, false];
    let report = uncertainty::ece(&confidences, &correct, 10)?;
    println!("\nECE {:.4} over {} predictions", report.ece, report.total());
    for (i, b) in report.bins.iter().enumerate().filter(|(_, b)| b.count > 0) {
        println!(
            "  bin {:>2} (<= {:.1}): {} predictions, accuracy {:.2}, confidence {:.2}",
            i + 1,
            b.upper,
            b.count,
            b.accuracy,
            b.confidence
        );
    }
    Ok(())
}

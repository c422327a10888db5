//! Multiclass PTM on Iris: accuracy, expected calibration error, the
//! reliability table, and entropy split by correct and incorrect
//! predictions. Takes the same settings flags as `ptm iris`.
//!
//! cargo run --release --example iris_calibration -- --seed 7 --bins 10

use clap::Parser;
use ptm::cli::Overrides;
use ptm::experiment::{self, Experiment};

#[derive(Parser)]
struct Args {
    #[command(flatten)]
    settings: Overrides,
}

fn main() -> ptm::Result<()> {
    let config = Args::parse().settings.resolve(Experiment::Iris)?;
    let (_, summary, _) = experiment::run_iris(&config)?;
    let e = &summary.eval;
    println!(
        "seed {}: {} train / {} test rows, accuracy {:.3}, ECE {:.4}",
        summary.seed, summary.train_rows, summary.test_rows, e.accuracy, e.ece
    );
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3}"));
    println!(
        "entropy correct {}  incorrect {}   MI correct {}  incorrect {}",
        show(e.mean_entropy_correct),
        show(e.mean_entropy_incorrect),
        show(e.mean_mi_correct),
        show(e.mean_mi_incorrect)
    );
    println!("  bin upper  count  accuracy  confidence");
    for b in e.reliability.iter().filter(|b| b.count > 0) {
        println!(
            "  {:>9.2}  {:>5}  {:>8.3}  {:>10.3}",
            b.upper, b.count, b.accuracy, b.confidence
        );
    }
    Ok(())
}

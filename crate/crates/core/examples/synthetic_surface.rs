//! Trains on two Gaussian clusters and compares predictive entropy and
//! class-1 spread in the cluster cores, the band between them, and outside
//! the training box. Takes the same settings flags as `ptm train`.
//!
//! cargo run --release --example synthetic_surface -- --seed 3 --states 20

use clap::Parser;
use ptm::cli::Overrides;
use ptm::experiment::{self, Experiment};

#[derive(Parser)]
struct Args {
    #[command(flatten)]
    settings: Overrides,
}

fn main() -> ptm::Result<()> {
    let config = Args::parse().settings.resolve(Experiment::Synthetic2d)?;
    let (_, summary, _) = experiment::run_synthetic(&config)?;
    println!("seed {}  train acc {:.3}", summary.seed, summary.train_accuracy.unwrap_or(f64::NAN));
    for (name, r) in [("core", summary.core), ("band", summary.band), ("outside", summary.outside)] {
        println!(
            "{name:>8}: {:>6} points  entropy {:.3}  std {:.4}",
            r.points, r.mean_entropy, r.mean_std
        );
    }
    println!("entropy ratio outside/core {:.2}", summary.entropy_ratio());
    Ok(())
}

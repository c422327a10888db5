//! Learns XOR with four clauses and prints each clause's include
//! probabilities, plus majority-vote predictions on the truth table.
//! Defaults to 30% label noise; pass `--noise 0` for the clean problem.
//!
//! cargo run --release --example xor_ssp -- --noise 0 --seed 3

use clap::Parser;
use ptm::cli::Overrides;
use ptm::data;
use ptm::experiment::{self, Experiment, StoredMachine};
use ptm::model::literal_name;

#[derive(Parser)]
struct Args {
    #[command(flatten)]
    settings: Overrides,
}

fn main() -> ptm::Result<()> {
    let config = Args::parse().settings.resolve(Experiment::XorSsp)?;
    let prepared = experiment::prepare_data(&config)?;
    let (model, history) = experiment::train_model(&config, &prepared)?;
    let last = history.epochs.last().expect("at least one epoch");
    println!(
        "seed {}, noise {}, {} epochs: train accuracy {:.3}",
        config.seed,
        config.noise,
        config.epochs,
        last.train_accuracy.unwrap_or(f64::NAN)
    );

    if let StoredMachine::Ptm(machine) = &model.machine {
        let o = machine.config.features;
        for (j, clause) in machine.banks[0].clauses.iter().enumerate() {
            let sign = if j % 2 == 0 { '+' } else { '-' };
            let cells: Vec<String> = (0..2 * o)
                .map(|k| format!("{:>4} {:.3}", literal_name(k, o), clause.include_probability(k)))
                .collect();
            println!("c{} ({sign})  {}", j + 1, cells.join("  "));
        }
    }

    let truth = data::xor_truth_table();
    let reports = model.machine.reports(&truth.features, config.samples, config.seed)?;
    for ((x, y), r) in truth.features.iter().zip(&truth.labels).zip(&reports) {
        println!(
            "x = ({}, {})  y = {y}  predicted {}  p(1) {:.3}  entropy {:.3}",
            u8::from(x[0]),
            u8::from(x[1]),
            r.predicted_class(),
            r.mean_probs[1],
            r.entropy_bits
        );
    }
    Ok(())
}

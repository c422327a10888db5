//! Trains a classic Tsetlin Machine and a PTM on the same noise-free XOR
//! data. The classic machine answers identically on every query; the PTM's
//! answers vary with its state distributions.
//!
//! cargo run --release --example classic_baseline

use ptm::data;
use ptm::model::{ClassicTm, MachineConfig, Ptm};
use ptm::rng::{purpose, stream};
use ptm::training::{self, TrainingConfig};
use ptm::uncertainty::UncertaintyReport;

fn main() -> ptm::Result<()> {
    let seed = 11;
    let train = data::gen_noisy_xor(1000, 0.0, seed)?;
    let truth = data::xor_truth_table();
    let config = MachineConfig::new(4, 2, 3.9, 100, 2);
    let training = TrainingConfig::new(200, seed);

    let mut classic = ClassicTm::new(config.clone(), 2, &mut stream(seed, purpose::INIT))?;
    training::train_classic(&mut classic, &train, &training, Some(&truth))?;
    let mut ptm = Ptm::new(config, 2)?;
    training::train(&mut ptm, &train, &training, Some(&truth))?;

    let mut rng = stream(seed, purpose::EVAL);
    for (x, y) in truth.features.iter().zip(&truth.labels) {
        let c = UncertaintyReport::from_samples(&classic.predict_distribution(x, 100, &mut rng)?)?;
        let p = UncertaintyReport::from_samples(&ptm.predict_distribution(x, 100, &mut rng)?)?;
        println!(
            "x = {:?}  y = {y}  classic: class {} std {:.3}  |  ptm: class {} p(1) {:.3} std {:.3}",
            x.iter().map(|b| u8::from(*b)).collect::<Vec<_>>(),
            c.predicted_class(),
            c.std_per_class[1],
            p.predicted_class(),
            p.mean_probs[1],
            p.std_per_class[1]
        );
    }
    Ok(())
}

//! Saves a trained model, reloads it, and checks that a fixed evaluation
//! seed gives the same predictions from both copies.

use ptm::experiment::{self, Experiment, ExperimentConfig, ModelFile};

fn main() -> ptm::Result<()> {
    let config = ExperimentConfig {
        epochs: 20,
        train_size: 400,
        ..ExperimentConfig::defaults(Experiment::Synthetic2d)
    };
    let prepared = experiment::prepare_data(&config)?;
    let (model, _) = experiment::train_model(&config, &prepared)?;

    let path = std::env::temp_dir().join("ptm-example-model.json");
    model.save(&path)?;
    let loaded = ModelFile::load(&path)?;
    println!(
        "wrote {} ({} bytes), dataset digest {}",
        path.display(),
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
        &loaded.provenance.dataset_digest[..12]
    );

    let points = vec![vec![-1.5, -1.5], vec![0.0, 0.0], vec![1.5, 1.5], vec![9.0, -9.0]];
    let inputs = loaded.encode(&points)?;
    let before = model.machine.reports(&inputs, 50, 7)?;
    let after = loaded.machine.reports(&inputs, 50, 7)?;
    assert_eq!(before, after);
    for (p, r) in points.iter().zip(&after) {
        println!("{p:?}: p(1) {:.3}  entropy {:.3}", r.mean_probs[1], r.entropy_bits);
    }
    Ok(())
}

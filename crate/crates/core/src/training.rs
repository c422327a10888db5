//! The learning loop: stochastic clause activation against the vote
//! threshold, Type I / Type II routing by label and polarity, and the
//! per-literal updates for both probabilistic and classic clause banks.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::automata::{FeedbackCase, FeedbackType, TpmKind, TransitionSet};
use crate::data::Dataset;
use crate::error::{PtmError, Result};
use crate::model::{literals, vote_sum, Clause, ClassicBank, ClauseBank, Machine, MachineConfig, Mode, Polarity, ProbabilisticBank};
use crate::rng::{purpose, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub shuffle: bool,
    pub seed: u64,
    /// Record single-pass train (and held-out) accuracy after each epoch.
    pub record_accuracy: bool,
}

impl TrainingConfig {
    pub fn new(epochs: usize, seed: u64) -> Self {
        Self {
            epochs,
            shuffle: true,
            seed,
            record_accuracy: false,
        }
    }
}

/// Which feedback a clause is eligible for on a sample with label `y`.
pub fn feedback_type(y: bool, polarity: Polarity) -> FeedbackType {
    match (y, polarity) {
        (true, Polarity::Positive) | (false, Polarity::Negative) => FeedbackType::TypeI,
        (true, Polarity::Negative) | (false, Polarity::Positive) => FeedbackType::TypeII,
    }
}

/// Feedback routed to one clause in one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedbackDecision {
    /// 1-based clause index.
    pub clause: usize,
    pub feedback: Option<FeedbackType>,
}

/// Probability that a clause receives its eligible feedback. With
/// `u = clamp(v, -T, T)`: `(T - u) / 2T` for `y = 1`, `(T + u) / 2T` for
/// `y = 0`, regardless of polarity.
pub fn activation_probability(v: i64, threshold: u32, y: bool, _polarity: Polarity) -> f64 {
    let t = i64::from(threshold);
    let u = v.clamp(-t, t);
    let numerator = if y { t - u } else { t + u };
    numerator as f64 / (2 * t) as f64
}

/// Draws whether 0-based clause `j` is activated for this step and, if so,
/// which feedback it gets.
pub fn route<R: Rng + ?Sized>(j: usize, v: i64, threshold: u32, target: bool, rng: &mut R) -> FeedbackDecision {
    let polarity = Polarity::of_slot(j);
    let p = activation_probability(v, threshold, target, polarity);
    FeedbackDecision {
        clause: j + 1,
        feedback: (rng.gen::<f64>() < p).then(|| feedback_type(target, polarity)),
    }
}

/// Type I on a probabilistic clause. `literals` is `(x, ¬x)`.
pub fn type_i_update(clause: &mut Clause, output: bool, literals: &[bool], tpms: &TransitionSet) -> Result<()> {
    for (k, lit) in literals.iter().enumerate() {
        let kind = match (output, lit) {
            (true, true) => TpmKind::Tpm1,
            (true, false) => TpmKind::Tpm2,
            (false, _) => TpmKind::Tpm3,
        };
        clause.apply(k, tpms.get(kind))?;
    }
    Ok(())
}

/// Type II on a probabilistic clause: only false literals of a firing
/// clause move, toward inclusion.
pub fn type_ii_update(clause: &mut Clause, output: bool, literals: &[bool], tpms: &TransitionSet) -> Result<()> {
    if !output {
        return Ok(());
    }
    let tpm4 = tpms.get(TpmKind::Tpm4);
    for (k, lit) in literals.iter().enumerate() {
        if !lit {
            clause.apply(k, tpm4)?;
        }
    }
    Ok(())
}

/// A clause bank that can receive feedback.
pub trait Learner: ClauseBank {
    /// Per-machine state built once before training (transition matrices
    /// for probabilistic banks, the specificity for classic ones).
    type Context;

    fn context(config: &MachineConfig) -> Result<Self::Context>;

    /// Applies `feedback` to 0-based clause `j`.
    fn feedback<R: Rng + ?Sized>(
        &mut self,
        j: usize,
        feedback: FeedbackType,
        output: bool,
        literals: &[bool],
        ctx: &Self::Context,
        rng: &mut R,
    ) -> Result<()>;
}

impl Learner for ProbabilisticBank {
    type Context = TransitionSet;

    fn context(config: &MachineConfig) -> Result<TransitionSet> {
        TransitionSet::new(config.specificity, config.states)
    }

    fn feedback<R: Rng + ?Sized>(
        &mut self,
        j: usize,
        feedback: FeedbackType,
        output: bool,
        literals: &[bool],
        ctx: &TransitionSet,
        _rng: &mut R,
    ) -> Result<()> {
        let clause = &mut self.clauses[j];
        match feedback {
            FeedbackType::TypeI => type_i_update(clause, output, literals, ctx),
            FeedbackType::TypeII => type_ii_update(clause, output, literals, ctx),
        }
    }
}

impl Learner for ClassicBank {
    type Context = f64;

    fn context(config: &MachineConfig) -> Result<f64> {
        Ok(config.specificity)
    }

    fn feedback<R: Rng + ?Sized>(
        &mut self,
        j: usize,
        feedback: FeedbackType,
        output: bool,
        literals: &[bool],
        s: &f64,
        rng: &mut R,
    ) -> Result<()> {
        for (ta, lit) in self.clauses[j].iter_mut().zip(literals) {
            let case = FeedbackCase::new(feedback, output, *lit);
            // identity columns draw nothing
            if case.tpm_kind().is_some() {
                *ta = ta.transition(case, *s, rng)?;
            }
        }
        Ok(())
    }
}

/// Counters for one pass over the data.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EpochStats {
    pub samples: usize,
    /// Clauses that received feedback.
    pub updates: usize,
    /// Mean absolute vote over trained (sample, class machine) pairs.
    pub mean_abs_vote: f64,
}

/// One learning step of a single class machine toward `target`.
/// Returns `(clauses updated, vote sum)`.
pub fn learn_step<B: Learner, R: Rng + ?Sized>(
    bank: &mut B,
    config: &MachineConfig,
    ctx: &B::Context,
    literals: &[bool],
    target: bool,
    rng: &mut R,
) -> Result<(usize, i64)> {
    let outputs = bank.clause_outputs(literals, Mode::Train, rng);
    let v = vote_sum(&outputs);
    let mut updates = 0;
    for (j, output) in outputs.iter().enumerate() {
        if let Some(feedback) = route(j, v, config.threshold, target, rng).feedback {
            bank.feedback(j, feedback, *output, literals, ctx, rng)?;
            updates += 1;
        }
    }
    Ok((updates, v))
}

fn check_dataset<B: ClauseBank>(machine: &Machine<B>, data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Ok(());
    }
    if data.feature_count() != machine.config.features {
        return Err(PtmError::input(format!(
            "dataset has {} features, machine expects {}",
            data.feature_count(),
            machine.config.features
        )));
    }
    if let Some(i) = data.labels.iter().position(|y| *y >= machine.classes) {
        return Err(PtmError::input(format!(
            "label {} at row {i} outside 0..{}",
            data.labels[i], machine.classes
        )));
    }
    Ok(())
}

/// One pass over `data`. Two-class machines train their single bank with
/// target `y`; multiclass machines train bank `y` toward 1 and one other
/// bank, drawn uniformly, toward 0.
pub fn fit_epoch<B: Learner, R: Rng + ?Sized>(
    machine: &mut Machine<B>,
    data: &Dataset,
    shuffle: bool,
    rng: &mut R,
) -> Result<EpochStats> {
    check_dataset(machine, data)?;
    let ctx = B::context(&machine.config)?;
    fit_epoch_with(machine, data, shuffle, &ctx, rng)
}

fn fit_epoch_with<B: Learner, R: Rng + ?Sized>(
    machine: &mut Machine<B>,
    data: &Dataset,
    shuffle: bool,
    ctx: &B::Context,
    rng: &mut R,
) -> Result<EpochStats> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    if shuffle {
        order.shuffle(rng);
    }
    let mut stats = EpochStats::default();
    let mut vote_total = 0u64;
    let mut vote_count = 0u64;
    let classes = machine.classes;
    let config = &machine.config;
    for i in order {
        let lits = literals(&data.features[i]);
        let y = data.labels[i];
        let mut step = |bank: &mut B, target: bool, rng: &mut R| -> Result<()> {
            let (updates, v) = learn_step(bank, config, ctx, &lits, target, rng)?;
            stats.updates += updates;
            vote_total += v.unsigned_abs();
            vote_count += 1;
            Ok(())
        };
        if classes == 2 {
            step(&mut machine.banks[0], y == 1, rng)?;
        } else {
            step(&mut machine.banks[y], true, rng)?;
            let mut other = rng.gen_range(0..classes - 1);
            if other >= y {
                other += 1;
            }
            step(&mut machine.banks[other], false, rng)?;
        }
        stats.samples += 1;
    }
    if vote_count > 0 {
        stats.mean_abs_vote = vote_total as f64 / vote_count as f64;
    }
    Ok(stats)
}

/// Fraction of rows whose single sampled prediction matches the label.
pub fn accuracy<B: ClauseBank, R: Rng + ?Sized>(machine: &Machine<B>, data: &Dataset, rng: &mut R) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (x, y) in data.features.iter().zip(&data.labels) {
        if machine.predict_once(x, rng)?.class == *y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub updates: usize,
    pub mean_abs_vote: f64,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
}

/// Runs `config.epochs` epochs. Epoch `e` draws from sub-stream `e` of
/// `config.seed`, so the trajectory depends only on the seed and the data.
pub fn train<B: Learner>(
    machine: &mut Machine<B>,
    data: &Dataset,
    config: &TrainingConfig,
    held_out: Option<&Dataset>,
) -> Result<TrainingHistory> {
    if config.epochs == 0 {
        return Err(PtmError::param("epochs must be >= 1"));
    }
    check_dataset(machine, data)?;
    if let Some(test) = held_out {
        check_dataset(machine, test)?;
    }
    let ctx = B::context(&machine.config)?;
    let mut history = TrainingHistory::default();
    for epoch in 0..config.epochs {
        let mut rng = stream(config.seed, purpose::TRAIN_EPOCH + epoch as u64);
        let stats = fit_epoch_with(machine, data, config.shuffle, &ctx, &mut rng)?;
        let (train_accuracy, test_accuracy) = if config.record_accuracy {
            let mut monitor = stream(config.seed, purpose::MONITOR + epoch as u64);
            let train_acc = accuracy(machine, data, &mut monitor)?;
            let test_acc = held_out.map(|t| accuracy(machine, t, &mut monitor)).transpose()?;
            (Some(train_acc), test_acc)
        } else {
            (None, None)
        };
        history.epochs.push(EpochRecord {
            epoch: epoch + 1,
            updates: stats.updates,
            mean_abs_vote: stats.mean_abs_vote,
            train_accuracy,
            test_accuracy,
        });
    }
    Ok(history)
}

/// The classic baseline runs the same loop with point-state automata.
pub fn train_classic(
    machine: &mut Machine<ClassicBank>,
    data: &Dataset,
    config: &TrainingConfig,
    held_out: Option<&Dataset>,
) -> Result<TrainingHistory> {
    train(machine, data, config, held_out)
}

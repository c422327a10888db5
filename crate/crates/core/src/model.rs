//! Clause and machine structure, sampled clause evaluation, voting and
//! repeated-sample prediction.
//!
//! A [`Machine`] is generic over its clause bank: [`ProbabilisticBank`]
//! holds one [`StateProbabilityVector`] per literal and samples automaton
//! actions on every evaluation, [`ClassicBank`] holds one point state per
//! literal and is deterministic at inference time.
//!
//! Clause `j` is 1-based in documentation and output files; odd clauses
//! vote for the positive class, even clauses against it. In code, clause
//! slot `i` (0-based) has positive polarity iff `i` is even.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::automata::{ClassicAutomaton, StateProbabilityVector, TransitionMatrix};
use crate::error::{PtmError, Result};

/// Hyperparameters shared by every clause bank of a machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineConfig {
    /// Clauses per class machine (`m`), even.
    pub clauses: usize,
    /// Vote threshold target (`T`).
    pub threshold: u32,
    /// Specificity (`s >= 1`).
    pub specificity: f64,
    /// States per action (`N`).
    pub states: usize,
    /// Boolean input features (`o`); each clause has `2o` literals.
    pub features: usize,
    #[serde(default)]
    pub probability_map: ProbabilityMap,
}

impl MachineConfig {
    pub fn new(clauses: usize, threshold: u32, specificity: f64, states: usize, features: usize) -> Self {
        Self {
            clauses,
            threshold,
            specificity,
            states,
            features,
            probability_map: ProbabilityMap::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.clauses == 0 || self.clauses % 2 != 0 {
            return Err(PtmError::param(format!(
                "clause count m must be a positive even number, got {}",
                self.clauses
            )));
        }
        if self.threshold == 0 {
            return Err(PtmError::param("threshold T must be >= 1"));
        }
        if !(self.specificity >= 1.0) || !self.specificity.is_finite() {
            return Err(PtmError::param(format!(
                "specificity s must be >= 1, got {}",
                self.specificity
            )));
        }
        if self.states == 0 {
            return Err(PtmError::param("states per action N must be >= 1"));
        }
        if self.features == 0 {
            return Err(PtmError::param("feature count o must be >= 1"));
        }
        Ok(())
    }

    pub fn literal_count(&self) -> usize {
        2 * self.features
    }
}

/// How one sampled vote vector becomes a per-class probability vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProbabilityMap {
    /// `(clamp(v_c, -T, T) + T) / 2T`, normalized across classes.
    #[default]
    ClampedVotes,
    /// All mass on the predicted class.
    OneHot,
}

/// Training evaluation treats an empty clause as satisfied, inference
/// treats it as silent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    /// Polarity of 0-based clause slot `i` (1-based clause `i + 1`).
    pub fn of_slot(i: usize) -> Self {
        if i % 2 == 0 {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }
}

/// `(x_1..x_o, ¬x_1..¬x_o)`.
pub fn literals(input: &[bool]) -> Vec<bool> {
    input
        .iter()
        .copied()
        .chain(input.iter().map(|x| !x))
        .collect()
}

/// Literal name used in reports: `x3` or `¬x3` for 0-based literal `k`.
pub fn literal_name(k: usize, features: usize) -> String {
    if k < features {
        format!("x{}", k + 1)
    } else {
        format!("¬x{}", k - features + 1)
    }
}

/// Include sets drawn for one clause evaluation, with the resulting output.
/// Feature indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClauseSample {
    pub included: Vec<usize>,
    pub negated: Vec<usize>,
    pub output: bool,
}

/// Conjunction of the included literals for a fixed include set.
pub fn conjunction(included: &[usize], negated: &[usize], input: &[bool], mode: Mode) -> bool {
    if included.is_empty() && negated.is_empty() {
        return mode == Mode::Train;
    }
    included.iter().all(|&k| input[k - 1]) && negated.iter().all(|&k| !input[k - 1])
}

/// Signed vote of a clause-output vector: positive clauses minus negative.
pub fn vote_sum(outputs: &[bool]) -> i64 {
    outputs
        .iter()
        .enumerate()
        .filter(|(_, out)| **out)
        .map(|(i, _)| match Polarity::of_slot(i) {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        })
        .sum()
}

/// One probabilistic clause: a state distribution per literal plus a cache
/// of the include probabilities the sampler draws from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClause", into = "RawClause")]
pub struct Clause {
    spvs: Vec<StateProbabilityVector>,
    include: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawClause {
    spvs: Vec<StateProbabilityVector>,
}

impl TryFrom<RawClause> for Clause {
    type Error = PtmError;

    fn try_from(raw: RawClause) -> Result<Self> {
        Clause::from_spvs(raw.spvs)
    }
}

impl From<Clause> for RawClause {
    fn from(clause: Clause) -> Self {
        RawClause { spvs: clause.spvs }
    }
}

impl Clause {
    pub fn new(features: usize, states: usize) -> Result<Self> {
        let spv = StateProbabilityVector::new(states)?;
        Clause::from_spvs(vec![spv; 2 * features])
    }

    /// Builds a clause from explicit vectors (`2o` of them, equal `N`).
    pub fn from_spvs(spvs: Vec<StateProbabilityVector>) -> Result<Self> {
        if spvs.is_empty() || spvs.len() % 2 != 0 {
            return Err(PtmError::param(format!(
                "a clause needs 2o state vectors, got {}",
                spvs.len()
            )));
        }
        let n = spvs[0].states_per_action();
        if spvs.iter().any(|s| s.states_per_action() != n) {
            return Err(PtmError::param("state vectors in a clause disagree on N"));
        }
        let include = spvs.iter().map(|s| s.include_probability()).collect();
        Ok(Self { spvs, include })
    }

    pub fn features(&self) -> usize {
        self.spvs.len() / 2
    }

    pub fn spvs(&self) -> &[StateProbabilityVector] {
        &self.spvs
    }

    /// Include probability of 0-based literal `k`.
    pub fn include_probability(&self, k: usize) -> f64 {
        self.include[k]
    }

    /// Applies `tpm` to the distribution of 0-based literal `k`.
    pub fn apply(&mut self, k: usize, tpm: &TransitionMatrix) -> Result<()> {
        self.spvs[k].apply_in_place(tpm)?;
        self.include[k] = self.spvs[k].include_probability();
        Ok(())
    }

    /// Samples every literal's automaton once and evaluates the conjunction.
    ///
    /// A sampled state above `S_N` includes the literal; this is drawn as a
    /// Bernoulli trial on the include mass, which has the same law as
    /// sampling a full state and comparing it with `N`.
    pub fn evaluate<R: Rng + ?Sized>(&self, input: &[bool], rng: &mut R, mode: Mode) -> Result<ClauseSample> {
        let o = self.features();
        if input.len() != o {
            return Err(PtmError::input(format!(
                "input has {} features, clause expects {o}",
                input.len()
            )));
        }
        let mut sample = ClauseSample::default();
        for (k, p) in self.include.iter().enumerate() {
            if rng.gen::<f64>() < *p {
                if k < o {
                    sample.included.push(k + 1);
                } else {
                    sample.negated.push(k - o + 1);
                }
            }
        }
        sample.output = conjunction(&sample.included, &sample.negated, input, mode);
        Ok(sample)
    }

    /// Allocation-free variant of [`evaluate`](Self::evaluate) over the
    /// augmented literal vector. Consumes the same random draws.
    pub fn output<R: Rng + ?Sized>(&self, literals: &[bool], rng: &mut R, mode: Mode) -> bool {
        let mut any = false;
        let mut satisfied = true;
        for (p, lit) in self.include.iter().zip(literals) {
            if rng.gen::<f64>() < *p {
                any = true;
                satisfied &= *lit;
            }
        }
        if any {
            satisfied
        } else {
            mode == Mode::Train
        }
    }
}

/// Storage of the clauses of one class machine.
pub trait ClauseBank {
    fn clause_count(&self) -> usize;

    fn features(&self) -> usize;

    /// Output of 0-based clause `j` for the augmented literal vector.
    fn clause_output<R: Rng + ?Sized>(&self, j: usize, literals: &[bool], mode: Mode, rng: &mut R) -> bool;

    fn clause_outputs<R: Rng + ?Sized>(&self, literals: &[bool], mode: Mode, rng: &mut R) -> Vec<bool> {
        (0..self.clause_count())
            .map(|j| self.clause_output(j, literals, mode, rng))
            .collect()
    }

    /// Checks the bank against the machine configuration.
    fn check(&self, config: &MachineConfig) -> Result<()>;
}

/// Clause bank of a probabilistic machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilisticBank {
    pub clauses: Vec<Clause>,
}

impl ProbabilisticBank {
    pub fn new(config: &MachineConfig) -> Result<Self> {
        let clause = Clause::new(config.features, config.states)?;
        Ok(Self {
            clauses: vec![clause; config.clauses],
        })
    }
}

impl ClauseBank for ProbabilisticBank {
    fn clause_count(&self) -> usize {
        self.clauses.len()
    }

    fn features(&self) -> usize {
        self.clauses.first().map_or(0, Clause::features)
    }

    fn clause_output<R: Rng + ?Sized>(&self, j: usize, literals: &[bool], mode: Mode, rng: &mut R) -> bool {
        self.clauses[j].output(literals, rng, mode)
    }

    fn check(&self, config: &MachineConfig) -> Result<()> {
        if self.clauses.len() != config.clauses {
            return Err(PtmError::CorruptModel(format!(
                "bank has {} clauses, config says {}",
                self.clauses.len(),
                config.clauses
            )));
        }
        for (j, clause) in self.clauses.iter().enumerate() {
            if clause.features() != config.features
                || clause.spvs[0].states_per_action() != config.states
            {
                return Err(PtmError::CorruptModel(format!(
                    "clause {} does not match o = {}, N = {}",
                    j + 1,
                    config.features,
                    config.states
                )));
            }
        }
        Ok(())
    }
}

/// Clause bank of a classic machine: `clauses[j][k]` is the automaton of
/// literal `k` in clause `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicBank {
    pub clauses: Vec<Vec<ClassicAutomaton>>,
}

impl ClassicBank {
    /// Every automaton starts at `S_N` or `S_{N+1}` with equal probability.
    pub fn new<R: Rng + ?Sized>(config: &MachineConfig, rng: &mut R) -> Result<Self> {
        let n = config.states;
        let clauses = (0..config.clauses)
            .map(|_| {
                (0..config.literal_count())
                    .map(|_| ClassicAutomaton::new(if rng.gen::<bool>() { n + 1 } else { n }, n))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { clauses })
    }
}

impl ClauseBank for ClassicBank {
    fn clause_count(&self) -> usize {
        self.clauses.len()
    }

    fn features(&self) -> usize {
        self.clauses.first().map_or(0, |c| c.len() / 2)
    }

    fn clause_output<R: Rng + ?Sized>(&self, j: usize, literals: &[bool], mode: Mode, _rng: &mut R) -> bool {
        let mut any = false;
        let mut satisfied = true;
        for (ta, lit) in self.clauses[j].iter().zip(literals) {
            if ta.includes() {
                any = true;
                satisfied &= *lit;
            }
        }
        if any {
            satisfied
        } else {
            mode == Mode::Train
        }
    }

    fn check(&self, config: &MachineConfig) -> Result<()> {
        if self.clauses.len() != config.clauses {
            return Err(PtmError::CorruptModel(format!(
                "bank has {} clauses, config says {}",
                self.clauses.len(),
                config.clauses
            )));
        }
        let ok = self.clauses.iter().all(|c| {
            c.len() == config.literal_count()
                && c.iter().all(|ta| ta.states_per_action() == config.states)
        });
        if !ok {
            return Err(PtmError::CorruptModel(format!(
                "automata do not match o = {}, N = {}",
                config.features, config.states
            )));
        }
        Ok(())
    }
}

/// A (possibly multiclass) Tsetlin machine. Two-class problems use a single
/// bank whose vote decides between class 0 and class 1; `C > 2` classes use
/// one one-vs-rest bank per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Machine<B> {
    pub config: MachineConfig,
    pub classes: usize,
    pub banks: Vec<B>,
}

pub type Ptm = Machine<ProbabilisticBank>;
pub type ClassicTm = Machine<ClassicBank>;

fn bank_count(classes: usize) -> Result<usize> {
    match classes {
        0 | 1 => Err(PtmError::param(format!("need at least 2 classes, got {classes}"))),
        2 => Ok(1),
        c => Ok(c),
    }
}

impl Ptm {
    pub fn new(config: MachineConfig, classes: usize) -> Result<Self> {
        config.validate()?;
        let banks = (0..bank_count(classes)?)
            .map(|_| ProbabilisticBank::new(&config))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            classes,
            banks,
        })
    }
}

impl ClassicTm {
    pub fn new<R: Rng + ?Sized>(config: MachineConfig, classes: usize, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let banks = (0..bank_count(classes)?)
            .map(|_| ClassicBank::new(&config, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            classes,
            banks,
        })
    }
}

/// Outcome of one sampled forward pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    /// Raw per-class votes. A two-class machine with vote `v` reports
    /// `[-v, v]`.
    pub votes: Vec<i64>,
    pub class: usize,
}

/// `K` sampled forward passes for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSamples {
    pub probs: Vec<Vec<f64>>,
    pub votes: Vec<Vec<i64>>,
}

impl PredictionSamples {
    /// Wraps externally produced probability vectors (votes left empty).
    pub fn from_probs(probs: Vec<Vec<f64>>) -> Result<Self> {
        if probs.is_empty() {
            return Err(PtmError::input("prediction samples are empty"));
        }
        let classes = probs[0].len();
        for (i, p) in probs.iter().enumerate() {
            if p.len() != classes {
                return Err(PtmError::input(format!(
                    "sample {i} has {} classes, expected {classes}",
                    p.len()
                )));
            }
            let total: f64 = p.iter().sum();
            if p.iter().any(|x| !(*x >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                return Err(PtmError::input(format!("sample {i} is not a distribution")));
            }
        }
        Ok(Self {
            probs,
            votes: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.probs.first().map_or(0, Vec::len)
    }

    /// Class chosen by the most samples, lowest index on ties.
    pub fn majority_class(&self) -> usize {
        let mut counts = vec![0usize; self.classes()];
        for p in &self.probs {
            counts[argmax(p)] += 1;
        }
        argmax_usize(&counts)
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn argmax_usize(values: &[usize]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

impl<B: ClauseBank> Machine<B> {
    pub fn features(&self) -> usize {
        self.config.features
    }

    /// Validates structure after deserialization.
    pub fn check(&self) -> Result<()> {
        self.config
            .validate()
            .map_err(|e| PtmError::CorruptModel(e.to_string()))?;
        let expected = bank_count(self.classes).map_err(|e| PtmError::CorruptModel(e.to_string()))?;
        if self.banks.len() != expected {
            return Err(PtmError::CorruptModel(format!(
                "{} classes need {expected} banks, found {}",
                self.classes,
                self.banks.len()
            )));
        }
        self.banks.iter().try_for_each(|b| b.check(&self.config))
    }

    fn check_input(&self, input: &[bool]) -> Result<()> {
        if input.len() != self.config.features {
            return Err(PtmError::input(format!(
                "input has {} features, machine expects {}",
                input.len(),
                self.config.features
            )));
        }
        Ok(())
    }

    /// Raw votes for one pass, with every automaton resampled.
    pub fn votes<R: Rng + ?Sized>(&self, input: &[bool], rng: &mut R) -> Result<Vec<i64>> {
        self.check_input(input)?;
        let lits = literals(input);
        let raw: Vec<i64> = self
            .banks
            .iter()
            .map(|bank| vote_sum(&bank.clause_outputs(&lits, Mode::Infer, rng)))
            .collect();
        Ok(if self.classes == 2 {
            vec![-raw[0], raw[0]]
        } else {
            raw
        })
    }

    /// Two classes: class 1 iff `v >= 0`. More classes: argmax of the raw
    /// votes, lowest index on ties.
    pub fn decide(&self, votes: &[i64]) -> usize {
        if self.classes == 2 {
            usize::from(votes[1] >= 0)
        } else {
            let mut best = 0;
            for (c, v) in votes.iter().enumerate() {
                if *v > votes[best] {
                    best = c;
                }
            }
            best
        }
    }

    pub fn predict_once<R: Rng + ?Sized>(&self, input: &[bool], rng: &mut R) -> Result<Prediction> {
        let votes = self.votes(input, rng)?;
        let class = self.decide(&votes);
        Ok(Prediction { votes, class })
    }

    /// Per-class probability vector for one sampled vote vector.
    pub fn vote_probabilities(&self, votes: &[i64]) -> Vec<f64> {
        match self.config.probability_map {
            ProbabilityMap::OneHot => {
                let mut p = vec![0.0; self.classes];
                p[self.decide(votes)] = 1.0;
                p
            }
            ProbabilityMap::ClampedVotes => clamped_vote_probabilities(votes, self.config.threshold),
        }
    }

    /// `k` independent passes. Pass `i` draws from its own stream seeded by
    /// the `i`-th output of `rng`.
    pub fn predict_distribution<R: RngCore + ?Sized>(
        &self,
        input: &[bool],
        k: usize,
        rng: &mut R,
    ) -> Result<PredictionSamples> {
        if k == 0 {
            return Err(PtmError::param("sample count K must be >= 1"));
        }
        self.check_input(input)?;
        let mut probs = Vec::with_capacity(k);
        let mut votes = Vec::with_capacity(k);
        for _ in 0..k {
            let mut stream = ChaCha8Rng::seed_from_u64(rng.next_u64());
            let v = self.votes(input, &mut stream)?;
            probs.push(self.vote_probabilities(&v));
            votes.push(v);
        }
        Ok(PredictionSamples { probs, votes })
    }
}

/// `(clamp(v_c, -T, T) + T) / 2T` per class, normalized. All-zero scores
/// (every class at `-T`) give the uniform vector.
pub fn clamped_vote_probabilities(votes: &[i64], threshold: u32) -> Vec<f64> {
    let t = i64::from(threshold);
    let scores: Vec<f64> = votes
        .iter()
        .map(|v| (v.clamp(&-t, &t) + t) as f64 / (2 * t) as f64)
        .collect();
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        scores.iter().map(|s| s / total).collect()
    } else {
        vec![1.0 / votes.len() as f64; votes.len()]
    }
}

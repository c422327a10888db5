//! Tsetlin automata: state probability vectors, the banded transition
//! matrices that act on them, and the classic single-state automaton.
//!
//! States are numbered `1..=2N` in every public signature. States `1..=N`
//! select the *exclude* action and `N+1..=2N` select *include*. Internally
//! `probs[i]` holds the mass of state `i + 1`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PtmError, Result};

/// Mass below this is treated as zero after an update. These are subnormal
/// doubles, and keeping them makes long training runs an order of magnitude
/// slower without changing any observable probability.
const FLUSH_BELOW: f64 = f64::MIN_POSITIVE;

/// Tolerance used when validating a deserialized or user-supplied vector.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// The two actions of a Tsetlin automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Exclude,
    Include,
}

impl Action {
    fn of_state(state: usize, n: usize) -> Self {
        if state > n {
            Action::Include
        } else {
            Action::Exclude
        }
    }

    fn name(self) -> &'static str {
        match self {
            Action::Exclude => "exclude",
            Action::Include => "include",
        }
    }
}

/// Probability distribution over the `2N` states of one automaton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpv")]
pub struct StateProbabilityVector {
    probs: Vec<f64>,
    n: usize,
}

#[derive(Deserialize)]
struct RawSpv {
    probs: Vec<f64>,
    n: usize,
}

impl TryFrom<RawSpv> for StateProbabilityVector {
    type Error = PtmError;

    fn try_from(raw: RawSpv) -> Result<Self> {
        let spv = Self {
            probs: raw.probs,
            n: raw.n,
        };
        spv.validate()?;
        Ok(spv)
    }
}

impl StateProbabilityVector {
    /// Initial vector: half the mass on each side of the action boundary
    /// (`p(S_N) = p(S_{N+1}) = 0.5`).
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(PtmError::param("states per action N must be >= 1"));
        }
        let mut probs = vec![0.0; 2 * n];
        probs[n - 1] = 0.5;
        probs[n] = 0.5;
        Ok(Self { probs, n })
    }

    /// All mass on a single state (`1..=2N`).
    pub fn point_mass(n: usize, state: usize) -> Result<Self> {
        if n == 0 {
            return Err(PtmError::param("states per action N must be >= 1"));
        }
        if state == 0 || state > 2 * n {
            return Err(PtmError::param(format!(
                "state {state} outside 1..={}",
                2 * n
            )));
        }
        let mut probs = vec![0.0; 2 * n];
        probs[state - 1] = 1.0;
        Ok(Self { probs, n })
    }

    /// Wraps an explicit vector after checking it is a distribution of even
    /// length.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.len() % 2 != 0 {
            return Err(PtmError::param(format!(
                "state vector length {} is not a positive even number",
                probs.len()
            )));
        }
        let n = probs.len() / 2;
        let spv = Self { probs, n };
        spv.validate()?;
        Ok(spv)
    }

    /// Checks non-negativity and unit mass.
    pub fn validate(&self) -> Result<()> {
        if self.probs.len() != 2 * self.n || self.n == 0 {
            return Err(PtmError::param(format!(
                "state vector has length {} but N = {}",
                self.probs.len(),
                self.n
            )));
        }
        if let Some((i, p)) = self
            .probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(PtmError::param(format!(
                "state S{} has invalid probability {p}",
                i + 1
            )));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(PtmError::param(format!(
                "state probabilities sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn states_per_action(&self) -> usize {
        self.n
    }

    /// `probs()[i]` is the probability of state `S_{i+1}`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of state `S_state` (1-based).
    pub fn prob(&self, state: usize) -> f64 {
        self.probs[state - 1]
    }

    /// Total mass on the include half.
    pub fn include_probability(&self) -> f64 {
        self.probs[self.n..].iter().sum()
    }

    /// Expected state number under this distribution.
    pub fn mean_state(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    /// Draws one state (`1..=2N`) from the distribution.
    pub fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i + 1;
            }
        }
        // u landed in the rounding gap above the accumulated sum; return the
        // highest state that carries mass.
        self.probs
            .iter()
            .rposition(|p| *p > 0.0)
            .map_or(2 * self.n, |i| i + 1)
    }

    /// One feedback step: `result[i] = Σ_j M[i][j]·spv[j]`, followed by
    /// renormalization to unit mass.
    pub fn apply(&self, tpm: &TransitionMatrix) -> Result<Self> {
        let mut next = self.clone();
        next.apply_in_place(tpm)?;
        Ok(next)
    }

    /// In-place version of [`apply`](Self::apply) used by the training loop.
    pub fn apply_in_place(&mut self, tpm: &TransitionMatrix) -> Result<()> {
        if tpm.n != self.n {
            return Err(PtmError::param(format!(
                "transition matrix has 2N = {} but state vector has 2N = {}",
                2 * tpm.n,
                2 * self.n
            )));
        }
        let mut out = vec![0.0; self.probs.len()];
        tpm.propagate(&self.probs, &mut out);
        let total: f64 = out.iter().sum();
        for p in out.iter_mut() {
            *p /= total;
            if *p < FLUSH_BELOW {
                *p = 0.0;
            }
        }
        self.probs = out;
        Ok(())
    }
}

/// The four feedback-table columns that change state distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TpmKind {
    /// Type I, clause 1, literal 1: every state steps toward `S_2N` w.p. (s-1)/s.
    Tpm1,
    /// Type I, clause 1, literal 0: exclude states step toward `S_1` w.p. 1/s.
    Tpm2,
    /// Type I, clause 0: every state steps toward `S_1` w.p. 1/s.
    Tpm3,
    /// Type II, clause 1, literal 0: exclude states step toward include w.p. 1.
    Tpm4,
}

impl TpmKind {
    pub const ALL: [TpmKind; 4] = [TpmKind::Tpm1, TpmKind::Tpm2, TpmKind::Tpm3, TpmKind::Tpm4];
}

/// One column of a banded transition matrix: the mass that stays put and
/// the mass that moves to a neighbouring state.
#[derive(Debug, Clone, Copy, PartialEq)]
struct BandColumn {
    stay: f64,
    moved: f64,
    /// 0-based destination of `moved`; always the row above or below.
    target: usize,
}

/// Column-stochastic `2N × 2N` matrix with non-zeros only on the diagonal
/// and the first off-diagonals. Stored one column at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    kind: TpmKind,
    specificity: f64,
    n: usize,
    columns: Vec<BandColumn>,
}

impl TransitionMatrix {
    pub fn new(kind: TpmKind, specificity: f64, n: usize) -> Result<Self> {
        if !(specificity >= 1.0) || !specificity.is_finite() {
            return Err(PtmError::param(format!(
                "specificity s must be a finite real >= 1, got {specificity}"
            )));
        }
        if n == 0 {
            return Err(PtmError::param("states per action N must be >= 1"));
        }
        let low = 1.0 / specificity;
        let high = (specificity - 1.0) / specificity;
        let top = 2 * n - 1;

        let columns = (0..2 * n)
            .map(|j| {
                let exclude = j < n;
                // (probability of moving, 0-based destination)
                let (moved, target) = match kind {
                    TpmKind::Tpm1 if j < top => (high, j + 1),
                    TpmKind::Tpm2 if exclude && j > 0 => (low, j - 1),
                    TpmKind::Tpm3 if j > 0 => (low, j - 1),
                    TpmKind::Tpm4 if exclude => (1.0, j + 1),
                    _ => (0.0, j),
                };
                let stay = if moved == 0.0 {
                    1.0
                } else {
                    match kind {
                        TpmKind::Tpm1 => low,
                        TpmKind::Tpm2 | TpmKind::Tpm3 => high,
                        TpmKind::Tpm4 => 0.0,
                    }
                };
                BandColumn {
                    stay,
                    moved,
                    target,
                }
            })
            .collect();

        Ok(Self {
            kind,
            specificity,
            n,
            columns,
        })
    }

    pub fn kind(&self) -> TpmKind {
        self.kind
    }

    pub fn specificity(&self) -> f64 {
        self.specificity
    }

    pub fn states_per_action(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Entry `M[to][from]` with 1-based state numbers.
    pub fn entry(&self, to: usize, from: usize) -> f64 {
        let col = &self.columns[from - 1];
        let mut value = 0.0;
        if to - 1 == from - 1 {
            value += col.stay;
        }
        if col.moved != 0.0 && col.target == to - 1 {
            value += col.moved;
        }
        value
    }

    /// Dense row-major copy, `dense[to][from]` (0-based). For inspection
    /// and tests only.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let dim = self.dim();
        let mut dense = vec![vec![0.0; dim]; dim];
        for (j, col) in self.columns.iter().enumerate() {
            dense[j][j] += col.stay;
            if col.moved != 0.0 {
                dense[col.target][j] += col.moved;
            }
        }
        dense
    }

    /// `out += M · probs`, without renormalization. `out` must be zeroed.
    pub fn propagate(&self, probs: &[f64], out: &mut [f64]) {
        for (j, (col, p)) in self.columns.iter().zip(probs).enumerate() {
            if *p == 0.0 {
                continue;
            }
            out[j] += col.stay * p;
            if col.moved != 0.0 {
                out[col.target] += col.moved * p;
            }
        }
    }
}

/// The four matrices for one `(s, N)` pair, built once per machine.
#[derive(Debug, Clone)]
pub struct TransitionSet {
    matrices: [TransitionMatrix; 4],
}

impl TransitionSet {
    pub fn new(specificity: f64, n: usize) -> Result<Self> {
        Ok(Self {
            matrices: [
                TransitionMatrix::new(TpmKind::Tpm1, specificity, n)?,
                TransitionMatrix::new(TpmKind::Tpm2, specificity, n)?,
                TransitionMatrix::new(TpmKind::Tpm3, specificity, n)?,
                TransitionMatrix::new(TpmKind::Tpm4, specificity, n)?,
            ],
        })
    }

    pub fn get(&self, kind: TpmKind) -> &TransitionMatrix {
        match kind {
            TpmKind::Tpm1 => &self.matrices[0],
            TpmKind::Tpm2 => &self.matrices[1],
            TpmKind::Tpm3 => &self.matrices[2],
            TpmKind::Tpm4 => &self.matrices[3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeedbackType {
    TypeI,
    TypeII,
}

/// One column of the feedback table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeedbackCase {
    pub feedback: FeedbackType,
    pub clause_output: bool,
    pub literal: bool,
}

impl FeedbackCase {
    pub fn new(feedback: FeedbackType, clause_output: bool, literal: bool) -> Self {
        Self {
            feedback,
            clause_output,
            literal,
        }
    }

    /// All eight table columns in table order.
    pub fn all() -> [FeedbackCase; 8] {
        use FeedbackType::*;
        [
            Self::new(TypeI, true, true),
            Self::new(TypeI, true, false),
            Self::new(TypeI, false, true),
            Self::new(TypeI, false, false),
            Self::new(TypeII, true, true),
            Self::new(TypeII, true, false),
            Self::new(TypeII, false, true),
            Self::new(TypeII, false, false),
        ]
    }

    /// The matrix that realizes this column on a distribution, or `None`
    /// when the column leaves every state unchanged.
    pub fn tpm_kind(&self) -> Option<TpmKind> {
        match (self.feedback, self.clause_output, self.literal) {
            (FeedbackType::TypeI, true, true) => Some(TpmKind::Tpm1),
            (FeedbackType::TypeI, true, false) => Some(TpmKind::Tpm2),
            (FeedbackType::TypeI, false, _) => Some(TpmKind::Tpm3),
            (FeedbackType::TypeII, true, false) => Some(TpmKind::Tpm4),
            (FeedbackType::TypeII, _, _) => None,
        }
    }

    /// (reward, inaction, penalty) probabilities for a TA currently taking
    /// `action`, or `None` for the NA cells.
    pub fn probabilities(&self, action: Action, s: f64) -> Option<(f64, f64, f64)> {
        let low = 1.0 / s;
        let high = (s - 1.0) / s;
        use Action::*;
        use FeedbackType::*;
        match (self.feedback, self.clause_output, self.literal, action) {
            (TypeI, true, true, Include) => Some((high, low, 0.0)),
            (TypeI, true, true, Exclude) => Some((0.0, low, high)),
            (TypeI, true, false, Include) => None,
            (TypeI, true, false, Exclude) => Some((low, high, 0.0)),
            (TypeI, false, _, Include) => Some((0.0, high, low)),
            (TypeI, false, _, Exclude) => Some((low, high, 0.0)),
            (TypeII, true, true, _) => Some((0.0, 1.0, 0.0)),
            (TypeII, true, false, Include) => None,
            (TypeII, true, false, Exclude) => Some((0.0, 0.0, 1.0)),
            (TypeII, false, _, _) => Some((0.0, 1.0, 0.0)),
        }
    }
}

impl fmt::Display for FeedbackCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.feedback {
            FeedbackType::TypeI => "I",
            FeedbackType::TypeII => "II",
        };
        write!(
            f,
            "Type {kind} (clause={}, literal={})",
            u8::from(self.clause_output),
            u8::from(self.literal)
        )
    }
}

/// A classic Tsetlin automaton holding a single state in `1..=2N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawAutomaton")]
pub struct ClassicAutomaton {
    state: usize,
    n: usize,
}

#[derive(Deserialize)]
struct RawAutomaton {
    state: usize,
    n: usize,
}

impl TryFrom<RawAutomaton> for ClassicAutomaton {
    type Error = PtmError;

    fn try_from(raw: RawAutomaton) -> Result<Self> {
        Self::new(raw.state, raw.n)
    }
}

impl ClassicAutomaton {
    pub fn new(state: usize, n: usize) -> Result<Self> {
        if n == 0 || state == 0 || state > 2 * n {
            return Err(PtmError::param(format!(
                "state {state} outside 1..={} (N = {n})",
                2 * n
            )));
        }
        Ok(Self { state, n })
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn states_per_action(&self) -> usize {
        self.n
    }

    pub fn action(&self) -> Action {
        Action::of_state(self.state, self.n)
    }

    pub fn includes(&self) -> bool {
        self.state > self.n
    }

    fn rewarded(&self) -> usize {
        match self.action() {
            Action::Include => (self.state + 1).min(2 * self.n),
            Action::Exclude => (self.state - 1).max(1),
        }
    }

    fn penalized(&self) -> usize {
        match self.action() {
            Action::Include => self.state - 1,
            Action::Exclude => self.state + 1,
        }
    }

    /// Exact one-step distribution under `case`: `(next_state, probability)`
    /// pairs, zero-probability outcomes omitted, coinciding outcomes merged.
    pub fn transition_distribution(&self, case: FeedbackCase, s: f64) -> Result<Vec<(usize, f64)>> {
        let (reward, inaction, penalty) =
            case.probabilities(self.action(), s)
                .ok_or_else(|| PtmError::InvalidCase {
                    case: case.to_string(),
                    action: self.action().name(),
                })?;
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(3);
        for (state, p) in [
            (self.rewarded(), reward),
            (self.state, inaction),
            (self.penalized(), penalty),
        ] {
            if p == 0.0 {
                continue;
            }
            match out.iter_mut().find(|(st, _)| *st == state) {
                Some(entry) => entry.1 += p,
                None => out.push((state, p)),
            }
        }
        out.sort_by_key(|(st, _)| *st);
        Ok(out)
    }

    /// One stochastic step under `case`. Reward at a boundary state is a
    /// self-loop.
    pub fn transition<R: Rng + ?Sized>(
        &self,
        case: FeedbackCase,
        s: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let (reward, inaction, _) =
            case.probabilities(self.action(), s)
                .ok_or_else(|| PtmError::InvalidCase {
                    case: case.to_string(),
                    action: self.action().name(),
                })?;
        let u: f64 = rng.gen();
        let state = if u < reward {
            self.rewarded()
        } else if u < reward + inaction {
            self.state
        } else {
            self.penalized()
        };
        Ok(Self { state, n: self.n })
    }
}

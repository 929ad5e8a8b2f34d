use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::MdpError;
use crate::scalar::Scalar;

/// Absolute tolerance on transition row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

fn check_labels(kind: &str, labels: &[String]) -> Result<(), MdpError> {
    if labels.is_empty() {
        return Err(MdpError::InvalidLabels(format!("{kind} set is empty")));
    }
    let mut seen = HashSet::new();
    for label in labels {
        if label.is_empty() {
            return Err(MdpError::InvalidLabels(format!("empty {kind} label")));
        }
        if !seen.insert(label.as_str()) {
            return Err(MdpError::InvalidLabels(format!(
                "duplicate {kind} label {label:?}"
            )));
        }
    }
    Ok(())
}

/// Ordered, uniquely labelled set of states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    pub fn new<I, S>(labels: I) -> Result<Self, MdpError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        check_labels("state", &labels)?;
        Ok(Self { labels })
    }

    /// States labelled `s0`, `s1`, ...
    pub fn numbered(size: usize) -> Result<Self, MdpError> {
        Self::new((0..size).map(|i| format!("s{i}")))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Ordered set of actions. Order matters: ties go to the earliest action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSet {
    labels: Vec<String>,
}

impl ActionSet {
    pub fn new<I, S>(labels: I) -> Result<Self, MdpError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        check_labels("action", &labels)?;
        Ok(Self { labels })
    }

    pub fn numbered(size: usize) -> Result<Self, MdpError> {
        Self::new((0..size).map(|i| format!("a{i}")))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Decision epochs `start..end`; `end` is terminal only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Horizon {
    start: u32,
    end: u32,
}

impl Horizon {
    pub fn new(start: u32, end: u32) -> Result<Self, MdpError> {
        if start >= end {
            return Err(MdpError::InvalidHorizon { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn end(&self) -> u32 {
        self.end
    }

    /// Number of decision epochs.
    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn decision_epochs(&self) -> std::ops::Range<u32> {
        self.start..self.end
    }

    pub fn contains_decision(&self, epoch: u32) -> bool {
        (self.start..self.end).contains(&epoch)
    }

    /// Offset of `epoch` from the start, if it lies in `start..=end`.
    pub fn offset(&self, epoch: u32) -> Option<usize> {
        (self.start..=self.end)
            .contains(&epoch)
            .then(|| (epoch - self.start) as usize)
    }
}

/// Dense square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<T> {
    size: usize,
    data: Vec<T>,
}

impl<T: Scalar> TransitionMatrix<T> {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            data: vec![T::zero(); size * size],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size);
        for i in 0..size {
            m.set(i, i, T::one());
        }
        m
    }

    /// Builds a matrix from rows; fails if the rows are not square.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, MdpError> {
        let size = rows.len();
        let mut data = Vec::with_capacity(size * size);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != size {
                return Err(MdpError::Shape(format!(
                    "row {i} has {} entries, expected {size}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Ok(Self { size, data })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, from: usize, to: usize) -> &T {
        &self.data[from * self.size + to]
    }

    pub fn set(&mut self, from: usize, to: usize, value: T) {
        self.data[from * self.size + to] = value;
    }

    pub fn row(&self, from: usize) -> &[T] {
        &self.data[from * self.size..(from + 1) * self.size]
    }

    pub fn row_mut(&mut self, from: usize) -> &mut [T] {
        &mut self.data[from * self.size..(from + 1) * self.size]
    }

    /// `Σ_j p_ij · values[j]`.
    pub fn expect(&self, from: usize, values: &[T]) -> T {
        self.row(from)
            .iter()
            .zip(values)
            .fold(T::zero(), |acc, (p, v)| acc + p.clone() * v.clone())
    }
}

/// A single invariant violation with its coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessViolation {
    MissingEpoch {
        epoch: u32,
    },
    MissingTransition {
        epoch: u32,
        action: usize,
    },
    MissingReward {
        epoch: u32,
        action: usize,
    },
    MatrixShape {
        epoch: u32,
        action: usize,
        expected: usize,
        found: usize,
    },
    RewardShape {
        epoch: u32,
        action: usize,
        expected: usize,
        found: usize,
    },
    TerminalShape {
        expected: usize,
        found: usize,
    },
    NonFiniteProbability {
        epoch: u32,
        action: usize,
        from: usize,
        to: usize,
    },
    NegativeProbability {
        epoch: u32,
        action: usize,
        from: usize,
        to: usize,
        value: f64,
    },
    ProbabilityAboveOne {
        epoch: u32,
        action: usize,
        from: usize,
        to: usize,
        value: f64,
    },
    RowSum {
        epoch: u32,
        action: usize,
        state: usize,
        sum: f64,
    },
    NonFiniteReward {
        epoch: u32,
        action: usize,
        state: usize,
    },
    NonFiniteTerminalReward {
        state: usize,
    },
}

impl fmt::Display for ProcessViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ProcessViolation::*;
        match self {
            MissingEpoch { epoch } => write!(f, "epoch {epoch}: no transitions or rewards"),
            MissingTransition { epoch, action } => {
                write!(f, "(k={epoch}, u={action}): missing transition matrix")
            }
            MissingReward { epoch, action } => {
                write!(f, "(k={epoch}, u={action}): missing rewards")
            }
            MatrixShape {
                epoch,
                action,
                expected,
                found,
            } => write!(
                f,
                "(k={epoch}, u={action}): matrix is {found}x{found}, expected {expected}x{expected}"
            ),
            RewardShape {
                epoch,
                action,
                expected,
                found,
            } => write!(
                f,
                "(k={epoch}, u={action}): {found} rewards, expected {expected}"
            ),
            TerminalShape { expected, found } => {
                write!(f, "{found} terminal rewards, expected {expected}")
            }
            NonFiniteProbability {
                epoch,
                action,
                from,
                to,
            } => write!(
                f,
                "(k={epoch}, u={action}, i={from}): p[{from}->{to}] is not finite"
            ),
            NegativeProbability {
                epoch,
                action,
                from,
                to,
                value,
            } => write!(
                f,
                "(k={epoch}, u={action}, i={from}): p[{from}->{to}] = {value} is negative"
            ),
            ProbabilityAboveOne {
                epoch,
                action,
                from,
                to,
                value,
            } => write!(
                f,
                "(k={epoch}, u={action}, i={from}): p[{from}->{to}] = {value} exceeds 1"
            ),
            RowSum {
                epoch,
                action,
                state,
                sum,
            } => write!(f, "(k={epoch}, u={action}, i={state}): row sums to {sum}"),
            NonFiniteReward {
                epoch,
                action,
                state,
            } => write!(
                f,
                "(k={epoch}, u={action}, i={state}): reward is not finite"
            ),
            NonFiniteTerminalReward { state } => {
                write!(f, "terminal reward of state {state} is not finite")
            }
        }
    }
}

/// Every invariant a process violates. Empty iff the process is valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProcessReport {
    pub violations: Vec<ProcessViolation>,
}

impl ProcessReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ProcessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "process is valid");
        }
        write!(f, "{} violation(s)", self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

/// A finite-horizon, time-inhomogeneous decision process.
///
/// Transitions and rewards are indexed by `[epoch offset][action]`; the
/// reward vector is indexed by state. Construction does not validate; use
/// [`validate_process`] or let the solver do it.
#[derive(Debug, Clone)]
pub struct DecisionProcess<T> {
    states: StateSpace,
    actions: ActionSet,
    horizon: Horizon,
    transitions: Vec<Vec<TransitionMatrix<T>>>,
    rewards: Vec<Vec<Vec<T>>>,
    terminal: Vec<T>,
}

impl<T: Scalar> DecisionProcess<T> {
    pub fn from_parts(
        states: StateSpace,
        actions: ActionSet,
        horizon: Horizon,
        transitions: Vec<Vec<TransitionMatrix<T>>>,
        rewards: Vec<Vec<Vec<T>>>,
        terminal: Vec<T>,
    ) -> Self {
        Self {
            states,
            actions,
            horizon,
            transitions,
            rewards,
            terminal,
        }
    }

    /// Builds every `(epoch, action)` entry from closures.
    pub fn from_fn<P, R>(
        states: StateSpace,
        actions: ActionSet,
        horizon: Horizon,
        mut transition: P,
        mut reward: R,
        terminal: Vec<T>,
    ) -> Self
    where
        P: FnMut(u32, usize) -> TransitionMatrix<T>,
        R: FnMut(u32, usize, usize) -> T,
    {
        let n = states.len();
        let mut transitions = Vec::with_capacity(horizon.len());
        let mut rewards = Vec::with_capacity(horizon.len());
        for k in horizon.decision_epochs() {
            transitions.push((0..actions.len()).map(|u| transition(k, u)).collect());
            rewards.push(
                (0..actions.len())
                    .map(|u| (0..n).map(|i| reward(k, u, i)).collect())
                    .collect(),
            );
        }
        Self::from_parts(states, actions, horizon, transitions, rewards, terminal)
    }

    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    pub fn actions(&self) -> &ActionSet {
        &self.actions
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn transition(&self, epoch: u32, action: usize) -> Option<&TransitionMatrix<T>> {
        let k = self.decision_offset(epoch)?;
        self.transitions.get(k)?.get(action)
    }

    pub fn transition_mut(
        &mut self,
        epoch: u32,
        action: usize,
    ) -> Option<&mut TransitionMatrix<T>> {
        let k = self.decision_offset(epoch)?;
        self.transitions.get_mut(k)?.get_mut(action)
    }

    /// Per-state rewards for `(epoch, action)`.
    pub fn rewards(&self, epoch: u32, action: usize) -> Option<&[T]> {
        let k = self.decision_offset(epoch)?;
        self.rewards.get(k)?.get(action).map(Vec::as_slice)
    }

    pub fn rewards_mut(&mut self, epoch: u32, action: usize) -> Option<&mut Vec<T>> {
        let k = self.decision_offset(epoch)?;
        self.rewards.get_mut(k)?.get_mut(action)
    }

    pub fn terminal_rewards(&self) -> &[T] {
        &self.terminal
    }

    fn decision_offset(&self, epoch: u32) -> Option<usize> {
        self.horizon
            .contains_decision(epoch)
            .then(|| (epoch - self.horizon.start()) as usize)
    }
}

/// Lists every violated invariant of `process`.
pub fn validate_process<T: Scalar>(process: &DecisionProcess<T>) -> ProcessReport {
    let n = process.states.len();
    let tol = T::lift(ROW_SUM_TOLERANCE);
    let one = T::one();
    let mut out = Vec::new();

    for k in process.horizon.decision_epochs() {
        let offset = (k - process.horizon.start()) as usize;
        let mats = process.transitions.get(offset);
        let rews = process.rewards.get(offset);
        if mats.is_none() && rews.is_none() {
            out.push(ProcessViolation::MissingEpoch { epoch: k });
            continue;
        }
        for u in 0..process.actions.len() {
            match mats.and_then(|m| m.get(u)) {
                None => out.push(ProcessViolation::MissingTransition {
                    epoch: k,
                    action: u,
                }),
                Some(m) if m.size() != n => out.push(ProcessViolation::MatrixShape {
                    epoch: k,
                    action: u,
                    expected: n,
                    found: m.size(),
                }),
                Some(m) => check_rows(k, u, m, &tol, &one, &mut out),
            }
            match rews.and_then(|r| r.get(u)) {
                None => out.push(ProcessViolation::MissingReward {
                    epoch: k,
                    action: u,
                }),
                Some(r) if r.len() != n => out.push(ProcessViolation::RewardShape {
                    epoch: k,
                    action: u,
                    expected: n,
                    found: r.len(),
                }),
                Some(r) => {
                    for (i, value) in r.iter().enumerate() {
                        if !value.is_finite_value() {
                            out.push(ProcessViolation::NonFiniteReward {
                                epoch: k,
                                action: u,
                                state: i,
                            });
                        }
                    }
                }
            }
        }
    }

    if process.terminal.len() != n {
        out.push(ProcessViolation::TerminalShape {
            expected: n,
            found: process.terminal.len(),
        });
    } else {
        for (i, value) in process.terminal.iter().enumerate() {
            if !value.is_finite_value() {
                out.push(ProcessViolation::NonFiniteTerminalReward { state: i });
            }
        }
    }

    ProcessReport { violations: out }
}

fn check_rows<T: Scalar>(
    epoch: u32,
    action: usize,
    matrix: &TransitionMatrix<T>,
    tol: &T,
    one: &T,
    out: &mut Vec<ProcessViolation>,
) {
    for from in 0..matrix.size() {
        let mut sum = T::zero();
        let mut finite = true;
        for (to, p) in matrix.row(from).iter().enumerate() {
            if !p.is_finite_value() {
                finite = false;
                out.push(ProcessViolation::NonFiniteProbability {
                    epoch,
                    action,
                    from,
                    to,
                });
                continue;
            }
            if p.is_negative() {
                out.push(ProcessViolation::NegativeProbability {
                    epoch,
                    action,
                    from,
                    to,
                    value: p.to_f64_lossy(),
                });
            } else if p > one {
                out.push(ProcessViolation::ProbabilityAboveOne {
                    epoch,
                    action,
                    from,
                    to,
                    value: p.to_f64_lossy(),
                });
            }
            sum = sum + p.clone();
        }
        if finite && (sum.clone() - one.clone()).abs() > *tol {
            out.push(ProcessViolation::RowSum {
                epoch,
                action,
                state: from,
                sum: sum.to_f64_lossy(),
            });
        }
    }
}

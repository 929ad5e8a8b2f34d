use super::{Horizon, MdpError};
use crate::scalar::Scalar;

/// Deterministic Markov policy: one action index per `(epoch, state)`.
///
/// Entries start out unset so partially specified policies (e.g. read from a
/// file) can be represented and rejected with the full list of gaps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    horizon: Horizon,
    num_states: usize,
    rule: Vec<Option<usize>>,
}

impl Policy {
    /// A policy with no entries set.
    pub fn empty(horizon: Horizon, num_states: usize) -> Self {
        Self {
            horizon,
            num_states,
            rule: vec![None; horizon.len() * num_states],
        }
    }

    pub fn from_fn(
        horizon: Horizon,
        num_states: usize,
        mut f: impl FnMut(u32, usize) -> usize,
    ) -> Self {
        let mut rule = Vec::with_capacity(horizon.len() * num_states);
        for k in horizon.decision_epochs() {
            rule.extend((0..num_states).map(|i| Some(f(k, i))));
        }
        Self {
            horizon,
            num_states,
            rule,
        }
    }

    /// Same action map at every epoch.
    pub fn stationary(horizon: Horizon, actions: &[usize]) -> Self {
        Self::from_fn(horizon, actions.len(), |_, i| actions[i])
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    fn index(&self, epoch: u32, state: usize) -> Option<usize> {
        (self.horizon.contains_decision(epoch) && state < self.num_states)
            .then(|| (epoch - self.horizon.start()) as usize * self.num_states + state)
    }

    pub fn get(&self, epoch: u32, state: usize) -> Option<usize> {
        self.index(epoch, state).and_then(|ix| self.rule[ix])
    }

    /// Panics if `(epoch, state)` is outside the policy's domain.
    pub fn set(&mut self, epoch: u32, state: usize, action: usize) {
        let ix = self
            .index(epoch, state)
            .unwrap_or_else(|| panic!("({epoch}, {state}) outside policy domain"));
        self.rule[ix] = Some(action);
    }

    /// Unset `(epoch, state)` entries in epoch-major order.
    pub fn missing_entries(&self) -> Vec<(u32, usize)> {
        self.horizon
            .decision_epochs()
            .flat_map(|k| (0..self.num_states).map(move |i| (k, i)))
            .filter(|&(k, i)| self.get(k, i).is_none())
            .collect()
    }

    pub fn is_total(&self) -> bool {
        self.rule.iter().all(Option::is_some)
    }

    /// Checks totality and that every action index is below `num_actions`.
    pub fn check_against(
        &self,
        horizon: Horizon,
        num_states: usize,
        num_actions: usize,
    ) -> Result<(), MdpError> {
        if self.horizon != horizon || self.num_states != num_states {
            return Err(MdpError::PolicyMismatch(format!(
                "policy covers epochs {}..{} over {} states, process has {}..{} over {}",
                self.horizon.start(),
                self.horizon.end(),
                self.num_states,
                horizon.start(),
                horizon.end(),
                num_states
            )));
        }
        let missing = self.missing_entries();
        if !missing.is_empty() {
            return Err(MdpError::IncompletePolicy(missing));
        }
        for k in horizon.decision_epochs() {
            for i in 0..num_states {
                let action = self.get(k, i).expect("checked total");
                if action >= num_actions {
                    return Err(MdpError::UnknownAction {
                        epoch: k,
                        state: i,
                        action,
                        available: num_actions,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Expected remaining reward per `(epoch, state)` for epochs `start..=end`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction<T> {
    horizon: Horizon,
    num_states: usize,
    values: Vec<T>,
}

impl<T: Scalar> ValueFunction<T> {
    /// Initialised to zero everywhere.
    pub(crate) fn zeros(horizon: Horizon, num_states: usize) -> Self {
        Self {
            horizon,
            num_states,
            values: vec![T::zero(); (horizon.len() + 1) * num_states],
        }
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Values of all states at `epoch`. Panics outside `start..=end`.
    pub fn at(&self, epoch: u32) -> &[T] {
        let k = self
            .horizon
            .offset(epoch)
            .unwrap_or_else(|| panic!("epoch {epoch} outside value function"));
        &self.values[k * self.num_states..(k + 1) * self.num_states]
    }

    pub(crate) fn at_mut(&mut self, epoch: u32) -> &mut [T] {
        let k = self.horizon.offset(epoch).expect("epoch in range");
        &mut self.values[k * self.num_states..(k + 1) * self.num_states]
    }

    pub fn get(&self, epoch: u32, state: usize) -> &T {
        &self.at(epoch)[state]
    }

    /// All entries, epoch-major.
    pub fn iter(&self) -> impl Iterator<Item = (u32, usize, &T)> + '_ {
        let n = self.num_states;
        let start = self.horizon.start();
        self.values
            .iter()
            .enumerate()
            .map(move |(ix, v)| (start + (ix / n) as u32, ix % n, v))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> ValueFunction<U> {
        ValueFunction {
            horizon: self.horizon,
            num_states: self.num_states,
            values: self.values.iter().map(f).collect(),
        }
    }
}

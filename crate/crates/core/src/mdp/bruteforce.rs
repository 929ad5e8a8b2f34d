//! Exhaustive policy enumeration, used as a test oracle for the solver.

use super::{evaluate_policy, validate_process, DecisionProcess, MdpError, Policy, ValueFunction};
use crate::scalar::Scalar;

/// Upper bound on the number of deterministic Markov policies enumerated.
pub const MAX_ENUMERATED_POLICIES: u64 = 1 << 24;

/// Evaluates every deterministic Markov policy and keeps one maximising the
/// sum of start-epoch values over all states.
///
/// Because an optimal Markov policy is optimal from every state at once,
/// maximising the sum recovers the optimal value at each state.
pub fn enumerate_optimal_bruteforce<T: Scalar>(
    process: &DecisionProcess<T>,
) -> Result<(Policy, ValueFunction<T>), MdpError> {
    let report = validate_process(process);
    if !report.is_valid() {
        return Err(MdpError::InvalidProcess(report));
    }
    let horizon = process.horizon();
    let n = process.states().len();
    let num_actions = process.actions().len() as u64;
    let slots = n * horizon.len();

    let log2_policies = slots as f64 * (num_actions as f64).log2();
    let total = (0..slots).try_fold(1u64, |acc, _| {
        acc.checked_mul(num_actions)
            .filter(|&t| t <= MAX_ENUMERATED_POLICIES)
    });
    let Some(total) = total else {
        return Err(MdpError::TooLargeToEnumerate { log2_policies });
    };

    let mut best: Option<(T, Policy, ValueFunction<T>)> = None;
    for code in 0..total {
        // Mixed-radix decode: slot s takes digit (code / A^s) mod A.
        let mut rest = code;
        let policy = Policy::from_fn(horizon, n, |_, _| {
            let digit = rest % num_actions;
            rest /= num_actions;
            digit as usize
        });
        let values = evaluate_policy(process, &policy)?;
        let score = values
            .at(horizon.start())
            .iter()
            .fold(T::zero(), |acc, v| acc + v.clone());
        match &best {
            Some((b, _, _)) if score <= *b => {}
            _ => best = Some((score, policy, values)),
        }
    }
    let (_, policy, values) = best.expect("at least one policy");
    Ok((policy, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{ActionSet, Horizon, StateSpace, TransitionMatrix};

    #[test]
    fn picks_rewarding_action() {
        let p = DecisionProcess::<f64>::from_fn(
            StateSpace::numbered(1).unwrap(),
            ActionSet::new(["A", "B"]).unwrap(),
            Horizon::new(0, 1).unwrap(),
            |_, _| TransitionMatrix::identity(1),
            |_, u, _| if u == 0 { 1.0 } else { 0.0 },
            vec![0.0],
        );
        let (policy, values) = enumerate_optimal_bruteforce(&p).unwrap();
        assert_eq!(policy.get(0, 0), Some(0));
        assert_eq!(*values.get(0, 0), 1.0);
    }

    #[test]
    fn zero_reward_values_vanish() {
        let p = DecisionProcess::<f64>::from_fn(
            StateSpace::numbered(2).unwrap(),
            ActionSet::numbered(2).unwrap(),
            Horizon::new(0, 2).unwrap(),
            |_, _| TransitionMatrix::identity(2),
            |_, _, _| 0.0,
            vec![0.0, 0.0],
        );
        let (policy, values) = enumerate_optimal_bruteforce(&p).unwrap();
        assert!(values.iter().all(|(_, _, v)| *v == 0.0));
        // First enumerated policy (all zeros) is kept on ties.
        assert_eq!(policy.get(1, 1), Some(0));
    }

    #[test]
    fn refuses_large_instances() {
        let p = DecisionProcess::<f64>::from_fn(
            StateSpace::numbered(5).unwrap(),
            ActionSet::numbered(2).unwrap(),
            Horizon::new(0, 5).unwrap(),
            |_, _| TransitionMatrix::identity(5),
            |_, _, _| 0.0,
            vec![0.0; 5],
        );
        assert!(matches!(
            enumerate_optimal_bruteforce(&p),
            Err(MdpError::TooLargeToEnumerate { .. })
        ));
    }
}

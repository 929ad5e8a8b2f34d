use super::{validate_process, DecisionProcess, MdpError, Policy, ValueFunction};
use crate::scalar::Scalar;

fn ensure_valid<T: Scalar>(process: &DecisionProcess<T>) -> Result<(), MdpError> {
    let report = validate_process(process);
    if report.is_valid() {
        Ok(())
    } else {
        Err(MdpError::InvalidProcess(report))
    }
}

/// Exact backward induction.
///
/// Returns the optimal value at every `(epoch, state)` and a policy attaining
/// it. When several actions attain the maximum exactly, the one listed first
/// in the action set wins.
pub fn solve_backward_induction<T: Scalar>(
    process: &DecisionProcess<T>,
) -> Result<(Policy, ValueFunction<T>), MdpError> {
    ensure_valid(process)?;
    let horizon = process.horizon();
    let n = process.states().len();
    let num_actions = process.actions().len();

    let mut values = ValueFunction::zeros(horizon, n);
    values
        .at_mut(horizon.end())
        .clone_from_slice(process.terminal_rewards());
    let mut policy = Policy::empty(horizon, n);

    for k in horizon.decision_epochs().rev() {
        let next = values.at(k + 1).to_vec();
        let current = values.at_mut(k);
        for (i, slot) in current.iter_mut().enumerate() {
            let mut best: Option<(usize, T)> = None;
            for u in 0..num_actions {
                let q = q_value(process, k, u, i, &next);
                match &best {
                    Some((_, b)) if q <= *b => {}
                    _ => best = Some((u, q)),
                }
            }
            let (u, q) = best.expect("at least one action");
            *slot = q;
            policy.set(k, i, u);
        }
    }
    Ok((policy, values))
}

/// `r(i,u,k) + Σ_j p_ij(u,k) · next[j]`.
fn q_value<T: Scalar>(
    process: &DecisionProcess<T>,
    epoch: u32,
    action: usize,
    state: usize,
    next: &[T],
) -> T {
    let reward = process.rewards(epoch, action).expect("validated")[state].clone();
    let matrix = process.transition(epoch, action).expect("validated");
    reward + matrix.expect(state, next)
}

/// Exact expected total reward of a fixed policy from every `(epoch, state)`.
pub fn evaluate_policy<T: Scalar>(
    process: &DecisionProcess<T>,
    policy: &Policy,
) -> Result<ValueFunction<T>, MdpError> {
    ensure_valid(process)?;
    let horizon = process.horizon();
    let n = process.states().len();
    policy.check_against(horizon, n, process.actions().len())?;

    let mut values = ValueFunction::zeros(horizon, n);
    values
        .at_mut(horizon.end())
        .clone_from_slice(process.terminal_rewards());
    for k in horizon.decision_epochs().rev() {
        let next = values.at(k + 1).to_vec();
        let current = values.at_mut(k);
        for (i, slot) in current.iter_mut().enumerate() {
            let u = policy.get(k, i).expect("checked total");
            *slot = q_value(process, k, u, i, &next);
        }
    }
    Ok(values)
}

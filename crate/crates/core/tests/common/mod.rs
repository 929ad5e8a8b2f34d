#![allow(dead_code)]

use aaa_mdp::mdp::{ActionSet, DecisionProcess, Horizon, StateSpace, TransitionMatrix};
use aaa_mdp::model::DiameterBin;
use aaa_mdp::params::ParameterSet;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Uniform entries, row-normalised.
pub fn random_stochastic(rng: &mut ChaCha8Rng, n: usize) -> TransitionMatrix<f64> {
    let rows = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|p| p / sum).collect()
        })
        .collect();
    TransitionMatrix::from_rows(rows).unwrap()
}

/// Up to `max_states` states, `actions` actions, horizon of length up to
/// `max_len`, rewards and terminal values in [0, 1].
pub fn random_process(
    rng: &mut ChaCha8Rng,
    max_states: usize,
    actions: usize,
    max_len: u32,
) -> DecisionProcess<f64> {
    let n = rng.gen_range(1..=max_states);
    let len = rng.gen_range(1..=max_len);
    let start = rng.gen_range(0..10);
    let horizon = Horizon::new(start, start + len).unwrap();
    let terminal = (0..n).map(|_| rng.gen()).collect();
    let transitions: Vec<Vec<_>> = horizon
        .decision_epochs()
        .map(|_| (0..actions).map(|_| random_stochastic(rng, n)).collect())
        .collect();
    let rewards: Vec<Vec<Vec<f64>>> = horizon
        .decision_epochs()
        .map(|_| {
            (0..actions)
                .map(|_| (0..n).map(|_| rng.gen()).collect())
                .collect()
        })
        .collect();
    DecisionProcess::from_parts(
        StateSpace::numbered(n).unwrap(),
        ActionSet::numbered(actions).unwrap(),
        horizon,
        transitions,
        rewards,
        terminal,
    )
}

/// Same process restricted to the epochs `from..=end`.
pub fn tail_process(process: &DecisionProcess<f64>, from: u32) -> DecisionProcess<f64> {
    let horizon = Horizon::new(from, process.horizon().end()).unwrap();
    DecisionProcess::from_fn(
        process.states().clone(),
        process.actions().clone(),
        horizon,
        |k, u| process.transition(k, u).unwrap().clone(),
        |k, u, i| process.rewards(k, u).unwrap()[i],
        process.terminal_rewards().to_vec(),
    )
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    // Hit the boundary values now and then.
    match rng.gen_range(0..20) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.gen(),
    }
}

/// A valid parameter set with every value drawn at random and no
/// monotonicity assumptions. Growth never shrinks and may jump several bins.
pub fn random_parameters(rng: &mut ChaCha8Rng) -> ParameterSet {
    let mut p = ParameterSet::illustrative();
    p.reach_hospital_prob = unit(rng);
    for rho in p.rupture_prob.values_mut() {
        *rho = unit(rng);
    }
    let bins: Vec<DiameterBin> = DiameterBin::all().collect();
    for (i, from) in bins.iter().enumerate() {
        let weights: Vec<f64> = (i..bins.len())
            .map(|j| {
                if j == i || rng.gen_bool(0.5) {
                    rng.gen::<f64>() + 1e-6
                } else {
                    0.0
                }
            })
            .collect();
        let sum: f64 = weights.iter().sum();
        let row = p.growth.get_mut(from).unwrap();
        row.clear();
        for (j, w) in weights.into_iter().enumerate() {
            if w > 0.0 {
                row.insert(bins[i + j], w / sum);
            }
        }
    }
    for c in p.qaly_weight.values_mut() {
        *c = 1.5 * rng.gen::<f64>();
    }
    for family in [
        &mut p.background_mortality,
        &mut p.elective_mortality,
        &mut p.emergency_mortality,
    ] {
        for v in family.values_mut() {
            *v = unit(rng);
        }
    }
    p
}

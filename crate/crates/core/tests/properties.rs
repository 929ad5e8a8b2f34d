mod common;

use aaa_mdp::analysis::{policy_grid, qaly_gain_map, sensitivity_ratio, solve_parameters};
use aaa_mdp::mdp::{evaluate_policy, solve_backward_induction, validate_process, Policy};
use aaa_mdp::model::{
    build_process, build_transition_surgery, build_transition_surveillance, clinical_policy_55,
    reward, AaaState, EventComposition, ModelOptions, TerminalReward, DEAD, NO_AAA, NUM_STATES,
};
use aaa_mdp::params::{ParameterFamily, PerturbationSpec};
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn options() -> impl Strategy<Value = ModelOptions> {
    (
        prop_oneof![Just(TerminalReward::Qaly), Just(TerminalReward::Zero)],
        prop_oneof![
            Just(EventComposition::BackgroundFirst),
            Just(EventComposition::RuptureFirst)
        ],
    )
        .prop_map(|(terminal, composition)| ModelOptions {
            terminal,
            composition,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimal_dominates_every_policy(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let process = common::random_process(&mut rng, 5, 3, 6);
        let (_, v_star) = solve_backward_induction(&process).unwrap();
        let n = process.states().len();
        for _ in 0..8 {
            let policy = Policy::from_fn(process.horizon(), n, |_, _| rng.gen_range(0..3));
            let v = evaluate_policy(&process, &policy).unwrap();
            for ((k, i, a), (_, _, b)) in v_star.iter().zip(v.iter()) {
                prop_assert!(*a >= b - 1e-12, "V*({k},{i}) = {a} < {b}");
            }
        }
    }

    #[test]
    fn values_are_bounded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let process = common::random_process(&mut rng, 5, 3, 6);
        let (_, v_star) = solve_backward_induction(&process).unwrap();
        let horizon = process.horizon();
        let max_terminal = process.terminal_rewards().iter().cloned().fold(f64::MIN, f64::max);
        for (k, i, v) in v_star.iter() {
            let bound: f64 = (k..horizon.end())
                .map(|t| {
                    (0..process.actions().len())
                        .flat_map(|u| process.rewards(t, u).unwrap().iter().copied())
                        .fold(f64::MIN, f64::max)
                })
                .sum::<f64>()
                + max_terminal;
            prop_assert!(*v >= 0.0, "V*({k},{i}) = {v}");
            prop_assert!(*v <= bound + 1e-12, "V*({k},{i}) = {v} > {bound}");
        }
    }

    #[test]
    fn solving_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let process = common::random_process(&mut rng, 5, 3, 6);
        let (p1, v1) = solve_backward_induction(&process).unwrap();
        let (p2, v2) = solve_backward_induction(&process).unwrap();
        prop_assert_eq!(p1, p2);
        let bits = |v: &aaa_mdp::Values| v.iter().map(|(_, _, x)| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&v1), bits(&v2));
    }

    #[test]
    fn model_rows_are_stochastic(seed in any::<u64>(), opts in options()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = common::random_parameters(&mut rng);
        let process = build_process::<f64>(&params, &opts).unwrap();
        let report = validate_process(&process);
        prop_assert!(report.is_valid(), "{}", report);
        for age in params.start_age..params.max_age {
            for m in [
                build_transition_surveillance::<f64>(&params, age, &opts).unwrap(),
                build_transition_surgery::<f64>(&params, age, &opts).unwrap(),
            ] {
                prop_assert_eq!(m.row(DEAD)[DEAD], 1.0);
                for i in 0..NUM_STATES {
                    let sum: f64 = m.row(i).iter().sum();
                    prop_assert!((sum - 1.0).abs() <= 1e-9, "age {age}, row {i}: {sum}");
                }
            }
        }
    }

    #[test]
    fn alive_rewards_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = common::random_parameters(&mut rng);
        for age in params.start_age..=params.max_age {
            let alive: Vec<f64> = AaaState::all()
                .filter(|s| s.is_alive())
                .map(|s| reward(s, age, &params).unwrap())
                .collect();
            prop_assert!(alive.iter().all(|r| *r == params.qaly_weight[&age]));
            prop_assert_eq!(reward(AaaState::Dead, age, &params).unwrap(), 0.0);
        }
    }

    #[test]
    fn no_aaa_dominates_and_dead_is_zero(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = common::random_parameters(&mut rng);
        let (_, v) = solve_parameters(&params, &ModelOptions::default()).unwrap();
        for k in params.start_age..=params.max_age {
            prop_assert_eq!(*v.get(k, DEAD), 0.0);
            for d in 2..NUM_STATES {
                prop_assert!(v.get(k, NO_AAA) + 1e-12 >= *v.get(k, d), "age {k}, state {d}");
            }
        }
    }

    #[test]
    fn gain_over_any_policy_is_non_negative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = common::random_parameters(&mut rng);
        let opts = ModelOptions::default();
        let process = build_process::<f64>(&params, &opts).unwrap();
        let (_, v_star) = solve_backward_induction(&process).unwrap();
        let random = Policy::from_fn(process.horizon(), NUM_STATES, |_, _| rng.gen_range(0..2));
        for policy in [random, clinical_policy_55(process.horizon())] {
            let v = evaluate_policy(&process, &policy).unwrap();
            let gain = qaly_gain_map(&v_star, &v).unwrap();
            prop_assert_eq!(gain.shape(), (55, 12));
            prop_assert!(gain.cells.iter().flatten().all(|g| *g >= -1e-9));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    // Floating point can put a diameter state an ulp above no-AAA, so the
    // unrounded claim is checked in rational arithmetic.
    #[test]
    fn no_aaa_dominates_exactly(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = common::random_parameters(&mut rng);
        let process = build_process::<BigRational>(&params, &ModelOptions::default()).unwrap();
        let (_, v) = solve_backward_induction(&process).unwrap();
        for k in params.start_age..=params.max_age {
            prop_assert!(v.get(k, DEAD).is_zero());
            for d in 2..NUM_STATES {
                prop_assert!(v.get(k, NO_AAA) >= v.get(k, d), "age {k}, state {d}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn ratio_cells_are_fractions(seed in any::<u64>(), width in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = common::random_parameters(&mut rng);
        let spec = PerturbationSpec::new(20, seed).with_width(ParameterFamily::RuptureProb, width);
        let grid = sensitivity_ratio(&params, &spec, &ModelOptions::default()).unwrap();
        prop_assert_eq!(grid.shape(), (55, 12));
        prop_assert!(grid.cells.iter().flatten().all(|c| (0.0..=1.0).contains(c) && (c * 20.0).fract() == 0.0));
    }

    #[test]
    fn zero_width_ratio_is_the_policy(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = common::random_parameters(&mut rng);
        let opts = ModelOptions::default();
        let (policy, _) = solve_parameters(&params, &opts).unwrap();
        let spec = PerturbationSpec::new(4, seed).with_width(ParameterFamily::Growth, 0.0);
        let ratio = sensitivity_ratio(&params, &spec, &opts).unwrap();
        prop_assert_eq!(ratio.cells, policy_grid(&policy).unwrap().cells);
    }
}

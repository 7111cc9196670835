mod common;

use drra::engine::{Engine, EngineState, RunOptions};
use drra::model::{
    synthetic_dispatch, synthetic_multi_resource, validate_instance, BarrierSpec, ProblemInstance,
};
use drra::network::{UpdateSetSource, VotingSelector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(family: u8, n: usize, seed: u64, c: f64) -> ProblemInstance<f64> {
    match family {
        0 => synthetic_dispatch(n, seed, BarrierSpec::log(c)).unwrap(),
        1 => synthetic_multi_resource(n, seed, BarrierSpec::log(c)).unwrap(),
        _ => common::budget_instance(n, seed, c),
    }
}

fn hood_slack_ok(inst: &ProblemInstance<f64>, state: &EngineState<f64>) -> bool {
    inst.nodes
        .iter()
        .zip(&state.x)
        .zip(&state.y)
        .all(|((node, x), y)| (&y.y_in - &node.a_in * x).iter().all(|s| *s >= -1e-10))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn iterates_stay_feasible_and_descend(
        family in 0u8..3,
        n in 3usize..9,
        seed in 0u64..10_000,
        c in prop_oneof![Just(1e-2), Just(1e-4), Just(1e-6)],
    ) {
        let inst = instance(family, n, seed, c);
        prop_assert!(validate_instance(&inst).is_valid());
        let engine = Engine::new(&inst);
        let mut state = engine.init_x(engine.init_even_split().unwrap()).unwrap();
        let mut selector = VotingSelector::new(ChaCha8Rng::seed_from_u64(seed));
        let mut prev = state.sum_phi();
        for _ in 0..40 {
            let update = selector.next_set(&inst.graph);
            let rec = engine.step(&mut state, &update).unwrap();
            let report = engine.audit_feasibility(&state);
            prop_assert!(report.all_passed(), "k = {}\n{report}", rec.k);
            prop_assert!(rec.sum_phi <= prev + 1e-8, "sum_phi rose from {prev} to {}", rec.sum_phi);
            prop_assert!((rec.sum_big_f - rec.sum_phi).abs() <= 1e-8);
            prop_assert!(hood_slack_ok(&inst, &state));
            for &leader in update.leaders() {
                let hood = inst.graph.closed_neighborhood(leader).unwrap();
                for &j in &hood[1..] {
                    let gap = (&state.u[j] - &state.u[hood[0]]).amax();
                    prop_assert!(gap <= 1e-6, "multipliers of {j} and {} differ by {gap:e}", hood[0]);
                }
                prop_assert!(engine.residual(&state, leader).unwrap() <= 1e-8);
            }
            prev = rec.sum_phi;
        }
    }

    #[test]
    fn neighborhood_shares_are_conserved(
        family in 0u8..3,
        n in 3usize..9,
        seed in 0u64..10_000,
        leader_pick in 0usize..100,
    ) {
        let inst = instance(family, n, seed, 1e-3);
        let engine = Engine::new(&inst);
        let mut state = engine.init_x(engine.init_even_split().unwrap()).unwrap();
        let leader = leader_pick % n;
        let hood = inst.graph.closed_neighborhood(leader).unwrap();
        let sum = |s: &EngineState<f64>| {
            hood.iter().fold(s.y[hood[0]].stacked() * 0.0, |a, &j| a + s.y[j].stacked())
        };
        let before = sum(&state);
        engine
            .step(&mut state, &drra::network::UpdateSet::new(vec![leader]))
            .unwrap();
        prop_assert!((sum(&state) - &before).amax() <= 1e-12 * (1.0 + before.amax()));
    }
}

#[test]
fn identical_seeds_give_identical_traces() {
    let inst = common::budget_instance(7, 11, 1e-4);
    let opts = RunOptions {
        max_iters: 60,
        seed: 3,
        residual_every: 20,
        ..RunOptions::default()
    };
    let a = drra::engine::run(&inst, &opts).unwrap();
    let b = drra::engine::run(&inst, &opts).unwrap();
    assert_eq!(a.state, b.state);
    let strip = |t: &drra::engine::Trace<f64>| {
        t.records
            .iter()
            .map(|r| {
                (
                    r.k,
                    r.update_set.clone(),
                    r.sum_phi.to_bits(),
                    r.sum_f.to_bits(),
                )
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
}

use drra::model::{
    barrier_eval, barrier_objective, synthetic_dispatch, synthetic_multi_resource, BarrierKind,
    BarrierSpec, ProblemInstance,
};
use nalgebra::{DVector, SymmetricEigen};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = BarrierKind> {
    prop_oneof![Just(BarrierKind::Log), Just(BarrierKind::Inverse)]
}

fn family(multi: bool, seed: u64, barrier: BarrierSpec<f64>) -> ProblemInstance<f64> {
    if multi {
        synthetic_multi_resource(6, seed, barrier).unwrap()
    } else {
        synthetic_dispatch(6, seed, barrier).unwrap()
    }
}

/// Maps `t` in `[0, 1]^d` to a point with every local constraint at most
/// `-margin`, by bisection toward the node's interior point.
fn interior_point(inst: &ProblemInstance<f64>, i: usize, t: &[f64]) -> DVector<f64> {
    let node = &inst.nodes[i];
    let d = node.dim();
    let center = match d {
        1 => DVector::from_element(1, 2.5),
        _ => DVector::from_fn(2, |k, _| {
            node.local_constraints[k]
                .as_coordinate_bound()
                .map_or(1.0, |(_, _, lb)| lb + 1.0)
        }),
    };
    let target = DVector::from_fn(d, |k, _| -6.0 + 12.0 * t[k]);
    let ok = |x: &DVector<f64>| node.local_constraints.iter().all(|g| g.eval(x) <= -1e-2);
    let mut lam = 1.0;
    loop {
        let x = &center + (&target - &center) * lam;
        if ok(&x) {
            return x;
        }
        lam *= 0.5;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn barrier_increases_toward_boundary(g1 in -1e3..-1e-9f64, frac in 0.01..0.99f64, kind in kind()) {
        let g2 = g1 * frac;
        prop_assert!(barrier_eval(g2, kind).unwrap() > barrier_eval(g1, kind).unwrap());
    }

    #[test]
    fn composite_gradient_matches_central_differences(
        multi in any::<bool>(),
        seed in 0u64..1000,
        node in 0usize..6,
        t in prop::collection::vec(0.0..1.0f64, 2),
        c in prop_oneof![Just(1e-1), Just(1e-3), Just(1e-6)],
        kind in kind(),
    ) {
        let inst = family(multi, seed, BarrierSpec::new(kind, c).unwrap());
        let x = interior_point(&inst, node, &t);
        let f = barrier_objective(&inst.nodes[node], inst.barrier);
        let grad = f.gradient(&x).unwrap();
        let mut fd = DVector::zeros(x.len());
        for k in 0..x.len() {
            let h = 1e-6 * (1.0 + x[k].abs());
            let mut xp = x.clone();
            xp[k] += h;
            let mut xm = x.clone();
            xm[k] -= h;
            fd[k] = (f.value(&xp).unwrap() - f.value(&xm).unwrap()) / (2.0 * h);
        }
        let err = (&fd - &grad).norm() / grad.norm().max(1.0);
        prop_assert!(err <= 1e-6, "relative error {err:e} at {x:?}");
    }

    #[test]
    fn composite_hessian_is_psd(
        multi in any::<bool>(),
        seed in 0u64..1000,
        node in 0usize..6,
        t in prop::collection::vec(0.0..1.0f64, 2),
        kind in kind(),
    ) {
        let inst = family(multi, seed, BarrierSpec::new(kind, 1e-2).unwrap());
        let x = interior_point(&inst, node, &t);
        let h = barrier_objective(&inst.nodes[node], inst.barrier).hessian(&x).unwrap();
        let min = SymmetricEigen::new(h.clone()).eigenvalues.min();
        prop_assert!(min >= -1e-9 * h.trace().abs());
    }
}

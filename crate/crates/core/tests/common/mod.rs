//! Shared fixtures for the integration tests: random small programs with a
//! brute-force grid minimizer, and KKT checks.

#![allow(dead_code)]

use drra::localsolve::{ConstrainedProgram, SubproblemResult};
use drra::model::{BarrierKind, BarrierSpec, NodeProblem, SmoothConvexFn};
use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use rand::Rng;

pub const GRID_STEP: f64 = 1e-3;

/// A one-node program: node, barrier and coupling right-hand sides.
pub struct SmallProgram {
    pub node: NodeProblem<f64>,
    pub barrier: BarrierSpec<f64>,
    pub rhs_in: DVector<f64>,
    pub rhs_eq: DVector<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl SmallProgram {
    pub fn program(&self) -> ConstrainedProgram<'_, f64> {
        ConstrainedProgram::new(
            vec![&self.node],
            self.barrier,
            self.rhs_in.clone(),
            self.rhs_eq.clone(),
        )
        .unwrap()
    }

    /// Composite value, or `None` outside the open domain or the coupling
    /// rows (equalities are imposed by the caller's parametrization).
    pub fn value(&self, x: &DVector<f64>) -> Option<f64> {
        let s = &self.rhs_in - &self.node.a_in * x;
        if s.iter().any(|v| *v < 0.0) {
            return None;
        }
        let mut v = self.node.objective.eval(x);
        for g in &self.node.local_constraints {
            let gv = g.eval(x);
            if gv >= 0.0 {
                return None;
            }
            v += self.barrier.c
                * match self.barrier.kind {
                    BarrierKind::Log => -(-gv).ln(),
                    BarrierKind::Inverse => -1.0 / gv,
                };
        }
        Some(v)
    }
}

fn random_psd<R: Rng>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.5..1.5));
    &b * b.transpose() + DMatrix::identity(d, d) * rng.random_range(0.0..0.5)
}

fn boxed(d: usize, lo: f64, hi: f64) -> Vec<SmoothConvexFn<f64>> {
    (0..d)
        .flat_map(|k| {
            [
                SmoothConvexFn::upper_bound(d, k, hi),
                SmoothConvexFn::lower_bound(d, k, lo),
            ]
        })
        .collect()
}

fn random_barrier<R: Rng>(rng: &mut R) -> BarrierSpec<f64> {
    let c = [1e-1, 1e-2, 1e-3][rng.random_range(0..3)];
    if rng.random_bool(0.5) {
        BarrierSpec::log(c)
    } else {
        BarrierSpec::inverse(c)
    }
}

/// Kind 0: 1-d with one coupling inequality. Kind 1: 2-d with one coupling
/// equality. Kind 2: 2-d with one coupling inequality and an extra disc
/// constraint.
pub fn random_program<R: Rng>(rng: &mut R, kind: usize) -> SmallProgram {
    let lo = rng.random_range(-1.0..0.0);
    let hi = rng.random_range(0.5..1.0);
    let barrier = random_barrier(rng);
    match kind {
        0 => {
            let f = SmoothConvexFn::quadratic(
                dmatrix![rng.random_range(0.1..4.0)],
                dvector![rng.random_range(-3.0..3.0)],
                0.0,
            )
            .unwrap();
            let r = rng.random_range(lo + 0.2..hi);
            SmallProgram {
                node: NodeProblem::new(f, boxed(1, lo, hi), dmatrix![1.0], DMatrix::zeros(0, 1))
                    .unwrap(),
                barrier,
                rhs_in: dvector![r],
                rhs_eq: DVector::zeros(0),
                lo,
                hi,
            }
        }
        1 => {
            let f = SmoothConvexFn::quadratic(
                random_psd(rng, 2),
                DVector::from_fn(2, |_, _| rng.random_range(-2.0..2.0)),
                0.0,
            )
            .unwrap();
            let w = rng.random_range(-1.0..1.0);
            // The line x1 + w x2 = e passes through the box center region.
            let mid = 0.5 * (lo + hi);
            let e = mid + w * mid + rng.random_range(-0.1..0.1);
            SmallProgram {
                node: NodeProblem::new(f, boxed(2, lo, hi), DMatrix::zeros(0, 2), dmatrix![1.0, w])
                    .unwrap(),
                barrier,
                rhs_in: DVector::zeros(0),
                rhs_eq: dvector![e],
                lo,
                hi,
            }
        }
        _ => {
            let f = SmoothConvexFn::quadratic(
                random_psd(rng, 2),
                DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0)),
                0.0,
            )
            .unwrap();
            let a = dmatrix![rng.random_range(0.2..1.0), rng.random_range(-1.0..1.0)];
            let mid = 0.5 * (lo + hi);
            let r = a[(0, 0)] * mid + a[(0, 1)] * mid + rng.random_range(0.0..0.3);
            let mut cons = boxed(2, lo, hi);
            let center = dvector![mid, mid];
            let rad = 0.5 * (hi - lo) * rng.random_range(0.9..1.3);
            cons.push(
                SmoothConvexFn::quadratic(
                    DMatrix::identity(2, 2) * 2.0,
                    -&center * 2.0,
                    center.norm_squared() - rad * rad,
                )
                .unwrap(),
            );
            SmallProgram {
                node: NodeProblem::new(f, cons, a, DMatrix::zeros(0, 2)).unwrap(),
                barrier,
                rhs_in: dvector![r],
                rhs_eq: DVector::zeros(0),
                lo,
                hi,
            }
        }
    }
}

/// Minimum of `value` over a 1-d interval on a grid of step `GRID_STEP`,
/// refined tenfold around the best point until the step is below 1e-9.
/// Exact up to the final step for convex `value` on an interval domain.
fn grid_1d(lo: f64, hi: f64, mut value: impl FnMut(f64) -> Option<f64>) -> Option<f64> {
    let (mut a, mut b, mut h) = (lo, hi, GRID_STEP);
    let mut best: Option<(f64, f64)> = None;
    while h > 1e-9 {
        let n = ((b - a) / h).ceil() as usize;
        for i in 0..=n {
            let t = (a + i as f64 * h).min(b);
            if let Some(v) = value(t) {
                if best.is_none_or(|(_, bv)| v < bv) {
                    best = Some((t, v));
                }
            }
        }
        let (t, _) = best?;
        a = (t - h).max(lo);
        b = (t + h).min(hi);
        h /= 10.0;
    }
    best.map(|(_, v)| v)
}

/// Nested 1-d grids: the inner search minimizes over `t1` for each `t0`,
/// and the partial minimum is again convex in `t0`.
fn grid_2d(lo: f64, hi: f64, value: impl Fn(f64, f64) -> Option<f64>) -> Option<f64> {
    grid_1d(lo, hi, |t0| grid_1d(lo, hi, |t1| value(t0, t1)))
}

/// Brute-force minimum of the composite objective over the program.
pub fn grid_minimum(p: &SmallProgram) -> Option<f64> {
    match p.node.dim() {
        1 => grid_1d(p.lo, p.hi, |t| p.value(&dvector![t])),
        _ if p.node.m_eq() == 1 => {
            let w = p.node.a_eq[(0, 1)];
            let e = p.rhs_eq[0];
            grid_1d(p.lo, p.hi, |t| p.value(&dvector![e - w * t, t]))
        }
        _ => grid_2d(p.lo, p.hi, |s, t| p.value(&dvector![s, t])),
    }
}

/// Checks the converged-solve invariants: interiority, nonnegative
/// inequality multipliers, stationarity and complementary slackness.
pub fn kkt_violations(
    program: &ConstrainedProgram<'_, f64>,
    r: &SubproblemResult<f64>,
    gap_tol: f64,
) -> Vec<String> {
    let mut out = Vec::new();
    if !program.locally_interior(&r.x_star) {
        out.push("minimizer is not strictly interior".to_string());
    }
    let m_in = program.m_in();
    let u_in = r.multiplier.rows(0, m_in);
    if let Some(u) = u_in.iter().find(|u| **u < -1e-10) {
        out.push(format!("negative inequality multiplier {u:e}"));
    }
    let g = program.objective_gradient(&r.x_star).unwrap();
    let stat = (&g + program.stacked_coupling().transpose() * &r.multiplier).norm();
    if stat > 1e-8 * (1.0 + g.norm()) {
        out.push(format!(
            "stationarity residual {stat:e} (grad norm {:e})",
            g.norm()
        ));
    }
    let s = program.slacks(&r.x_star);
    for (j, (u, s)) in u_in.iter().zip(s.iter()).enumerate() {
        if (u * s).abs() > gap_tol {
            out.push(format!("complementarity of row {j}: {:e}", u * s));
        }
    }
    out
}

/// Two-resource nodes on `[0, 4]^2` pulled toward random targets, with a
/// shared budget `sum (x1 + x2) <= 3n` and balance `sum (x1 - x2) = 0`.
pub fn budget_instance(n: usize, seed: u64, c: f64) -> drra::model::ProblemInstance<f64> {
    use drra::model::{CouplingSpec, ProblemInstance};
    use drra::network::Graph;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let graph = Graph::random_connected(n, n.div_ceil(4), &mut rng);
    let nodes = (0..n)
        .map(|_| {
            let q = random_psd(&mut rng, 2);
            let target = DVector::from_fn(2, |_, _| rng.random_range(0.5..4.5));
            let f = SmoothConvexFn::quadratic(q.clone(), -(&q * &target), 0.0).unwrap();
            NodeProblem::new(
                f,
                boxed(2, 0.0, 4.0),
                dmatrix![1.0, 1.0],
                dmatrix![1.0, -1.0],
            )
            .unwrap()
        })
        .collect();
    ProblemInstance {
        nodes,
        coupling: CouplingSpec {
            b_in: dvector![3.0 * n as f64],
            b_eq: dvector![0.0],
        },
        graph,
        barrier: BarrierSpec::log(c),
        assume_compact: false,
        family: None,
    }
}

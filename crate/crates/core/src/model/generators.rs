//! Instance generators for the single-resource dispatch family and the
//! two-resource (renewable/coal) family.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    BarrierSpec, CouplingSpec, Family, NodeProblem, ProblemInstance, Role, SmoothConvexFn,
};
use crate::error::{Error, Result};
use crate::network::Graph;
use crate::scalar::{lit, Scalar};

/// Per-node cost `a x^2 + b x + c` on `[lower, upper]` with total output
/// `demand`.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchParams<T: Scalar> {
    pub costs: Vec<(T, T, T)>,
    pub bounds: Vec<(T, T)>,
    pub demand: T,
}

pub fn gen_economic_dispatch<T: Scalar>(
    params: &DispatchParams<T>,
    graph: Graph,
    barrier: BarrierSpec<T>,
) -> Result<ProblemInstance<T>> {
    let n = params.costs.len();
    if n == 0 {
        return Err(Error::Generator("dispatch needs at least one node".into()));
    }
    if params.bounds.len() != n || graph.n() != n {
        return Err(Error::Generator(format!(
            "{n} cost triples, {} bounds and a graph on {} nodes",
            params.bounds.len(),
            graph.n()
        )));
    }
    let mut lo_sum = T::zero();
    let mut hi_sum = T::zero();
    let mut nodes = Vec::with_capacity(n);
    for (i, (&(a, b, c), &(lo, hi))) in params.costs.iter().zip(&params.bounds).enumerate() {
        if !(a > T::zero()) {
            return Err(Error::Generator(format!(
                "node {i}: quadratic cost {a} must be positive"
            )));
        }
        if !(lo < hi) {
            return Err(Error::Generator(format!(
                "node {i}: empty box [{lo}, {hi}]"
            )));
        }
        lo_sum += lo;
        hi_sum += hi;
        let f = SmoothConvexFn::quadratic(
            DMatrix::from_element(1, 1, lit::<T>(2.0) * a),
            DVector::from_element(1, b),
            c,
        )?;
        nodes.push(NodeProblem::box_1d(f, lo, hi, 0, 1));
    }
    let demand = params.demand;
    if !(lo_sum < demand && demand < hi_sum) {
        return Err(Error::Generator(format!(
            "demand {demand} must lie strictly between total lower bound {lo_sum} and total capacity {hi_sum}"
        )));
    }
    Ok(ProblemInstance {
        nodes,
        coupling: CouplingSpec {
            b_in: DVector::zeros(0),
            b_eq: DVector::from_element(1, demand),
        },
        graph,
        barrier,
        assume_compact: false,
        family: Some(Family::Dispatch {
            lower: params.bounds.iter().map(|b| b.0).collect(),
        }),
    })
}

/// Disutility `alpha (x_renew + x_coal - demand)^2 + beta x_coal^2` with
/// role-dependent lower bounds and capacity `cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiResourceParams<T: Scalar> {
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
    pub demand: Vec<T>,
    pub roles: Vec<Role>,
    pub caps: Vec<T>,
}

/// Lower bound of a node's `(renew, coal)` consumption by role.
pub fn role_lower_bound<T: Scalar>(role: Role, cap: T) -> DVector<T> {
    match role {
        Role::RenewableGen => DVector::from_vec(vec![-cap, T::zero()]),
        Role::CoalGen => DVector::from_vec(vec![T::zero(), -cap]),
        Role::Consumer => DVector::zeros(2),
    }
}

pub fn gen_multi_resource<T: Scalar>(
    params: &MultiResourceParams<T>,
    graph: Graph,
    barrier: BarrierSpec<T>,
) -> Result<ProblemInstance<T>> {
    let n = params.roles.len();
    let lens = [
        params.alpha.len(),
        params.beta.len(),
        params.demand.len(),
        params.caps.len(),
        graph.n(),
    ];
    if n == 0 || lens.iter().any(|&l| l != n) {
        return Err(Error::Generator(format!(
            "inconsistent multi-resource parameter lengths: roles {n}, others {lens:?}"
        )));
    }
    if !params.roles.contains(&Role::RenewableGen) || !params.roles.contains(&Role::CoalGen) {
        return Err(Error::Generator(
            "at least one renewable and one coal generator are required".into(),
        ));
    }
    let two = lit::<T>(2.0);
    let mut nodes = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n);
    for i in 0..n {
        let (alpha, beta, demand, cap) = (
            params.alpha[i],
            params.beta[i],
            params.demand[i],
            params.caps[i],
        );
        if !(alpha > T::zero() && beta > T::zero()) {
            return Err(Error::Generator(format!(
                "node {i}: alpha and beta must be positive"
            )));
        }
        if !(cap > T::zero()) {
            return Err(Error::Generator(format!(
                "node {i}: capacity must be positive"
            )));
        }
        // 0.5 x'Qx + q'x + r expansion of the disutility
        let q_mat = DMatrix::from_row_slice(
            2,
            2,
            &[two * alpha, two * alpha, two * alpha, two * (alpha + beta)],
        );
        let q_vec = DVector::from_element(2, -two * alpha * demand);
        let f = SmoothConvexFn::quadratic(q_mat, q_vec, alpha * demand * demand)?;
        let lb = role_lower_bound(params.roles[i], cap);
        let constraints = (0..2)
            .map(|k| SmoothConvexFn::lower_bound(2, k, lb[k]))
            .collect();
        nodes.push(NodeProblem::new(
            f,
            constraints,
            DMatrix::zeros(0, 2),
            DMatrix::identity(2, 2),
        )?);
        lower.push(lb);
    }
    Ok(ProblemInstance {
        nodes,
        coupling: CouplingSpec {
            b_in: DVector::zeros(0),
            b_eq: DVector::zeros(2),
        },
        graph,
        barrier,
        assume_compact: false,
        family: Some(Family::MultiResource {
            lower,
            roles: params.roles.clone(),
        }),
    })
}

fn uniform<T: Scalar, R: Rng>(rng: &mut R, lo: f64, hi: f64) -> T {
    lit(rng.random_range(lo..hi))
}

/// Random connected graph with `ceil(n/4)` extra edges.
fn synthetic_graph<R: Rng>(n: usize, rng: &mut R) -> Graph {
    Graph::random_connected(n, n.div_ceil(4), rng)
}

/// Dispatch instance with costs `a in [0.5, 2]`, `b in [0, 1]`, boxes
/// `[0, 5]` and demand half of the total capacity on a random graph.
pub fn synthetic_dispatch<T: Scalar>(
    n: usize,
    seed: u64,
    barrier: BarrierSpec<T>,
) -> Result<ProblemInstance<T>> {
    if n == 0 {
        return Err(Error::Generator("n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = synthetic_graph(n, &mut rng);
    dispatch_params(n, &mut rng).and_then(|p| gen_economic_dispatch(&p, graph, barrier))
}

/// As [`synthetic_dispatch`] on a caller-supplied graph.
pub fn synthetic_dispatch_on<T: Scalar>(
    graph: Graph,
    seed: u64,
    barrier: BarrierSpec<T>,
) -> Result<ProblemInstance<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dispatch_params(graph.n(), &mut rng).and_then(|p| gen_economic_dispatch(&p, graph, barrier))
}

fn dispatch_params<T: Scalar, R: Rng>(n: usize, rng: &mut R) -> Result<DispatchParams<T>> {
    if n == 0 {
        return Err(Error::Generator("n must be positive".into()));
    }
    let costs: Vec<_> = (0..n)
        .map(|_| (uniform(rng, 0.5, 2.0), uniform(rng, 0.0, 1.0), T::zero()))
        .collect();
    let bounds = vec![(T::zero(), lit::<T>(5.0)); n];
    let demand = lit::<T>(0.5 * 5.0 * n as f64);
    Ok(DispatchParams {
        costs,
        bounds,
        demand,
    })
}

/// Two-resource instance with `alpha, beta in [0.5, 2]`, demand in
/// `[0, 2]`, capacities 5 and random roles that include both generator
/// kinds, on a random graph.
pub fn synthetic_multi_resource<T: Scalar>(
    n: usize,
    seed: u64,
    barrier: BarrierSpec<T>,
) -> Result<ProblemInstance<T>> {
    if n < 2 {
        return Err(Error::Generator(
            "multi-resource needs at least two nodes".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = synthetic_graph(n, &mut rng);
    multi_params(n, &mut rng).and_then(|p| gen_multi_resource(&p, graph, barrier))
}

pub fn synthetic_multi_resource_on<T: Scalar>(
    graph: Graph,
    seed: u64,
    barrier: BarrierSpec<T>,
) -> Result<ProblemInstance<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    multi_params(graph.n(), &mut rng).and_then(|p| gen_multi_resource(&p, graph, barrier))
}

fn multi_params<T: Scalar, R: Rng>(n: usize, rng: &mut R) -> Result<MultiResourceParams<T>> {
    if n < 2 {
        return Err(Error::Generator(
            "multi-resource needs at least two nodes".into(),
        ));
    }
    let mut roles: Vec<Role> = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                if rng.random_bool(0.5) {
                    Role::RenewableGen
                } else {
                    Role::CoalGen
                }
            } else {
                Role::Consumer
            }
        })
        .collect();
    if !roles.contains(&Role::RenewableGen) {
        let i = roles.iter().position(|r| *r != Role::CoalGen).unwrap_or(0);
        roles[i] = Role::RenewableGen;
    }
    if !roles.contains(&Role::CoalGen) {
        let i = roles
            .iter()
            .position(|r| *r != Role::RenewableGen)
            .unwrap_or(usize::from(roles.len() > 1));
        roles[i] = Role::CoalGen;
    }
    Ok(MultiResourceParams {
        alpha: (0..n).map(|_| uniform(rng, 0.5, 2.0)).collect(),
        beta: (0..n).map(|_| uniform(rng, 0.5, 2.0)).collect(),
        demand: (0..n).map(|_| uniform(rng, 0.0, 2.0)).collect(),
        roles,
        caps: vec![lit(5.0); n],
    })
}

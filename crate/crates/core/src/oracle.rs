//! Centralized reference computations used to score the distributed runs.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::localsolve::{primal_value, solve, ConstrainedProgram, SolveStatus, SolverSettings};
use crate::model::{BarrierSpec, NodeProblem, ProblemInstance, RhsShare};
use crate::scalar::{lit, Scalar};

/// Barrier weights of the vanishing-barrier schedule for the original
/// problem, largest first.
pub const ORIGINAL_SCHEDULE: [f64; 3] = [1e-4, 1e-6, 1e-8];

/// Default finite-difference step factor: `h = FD_STEP * (1 + ||y||)`.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// Barrier-transformed problem.
    Barrier,
    /// Original problem, approximated by a vanishing barrier.
    Original,
}

/// One point of the vanishing-barrier schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomotopyPoint<T: Scalar> {
    pub c: T,
    /// `sum_i f_i(x*(c))`
    pub sum_f: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution<T: Scalar> {
    pub x_star: Vec<DVector<T>>,
    /// `F*` for [`ProblemKind::Barrier`], `f*` for [`ProblemKind::Original`].
    pub value: T,
    pub problem_kind: ProblemKind,
    /// Multiplier of the stacked coupling rows.
    pub multiplier: DVector<T>,
    pub kkt_residual: T,
    /// Schedule values of the original-problem homotopy (empty otherwise).
    pub homotopy: Vec<HomotopyPoint<T>>,
    /// Whether `sum_f` was non-increasing along the schedule.
    pub homotopy_monotone: bool,
}

/// `(x, value, multiplier, kkt_residual)` of a centralized solve.
type Centralized<T> = (Vec<DVector<T>>, T, DVector<T>, T);

fn centralized<T: Scalar>(
    inst: &ProblemInstance<T>,
    barrier: BarrierSpec<T>,
    warm: Option<&[DVector<T>]>,
    settings: &SolverSettings<T>,
) -> Result<Centralized<T>> {
    let program = ConstrainedProgram::new(
        inst.nodes.iter().collect(),
        barrier,
        inst.coupling.b_in.clone(),
        inst.coupling.b_eq.clone(),
    )?;
    let warm = warm.map(|w| program.stack(w)).transpose()?;
    let r = solve(&program, warm.as_ref(), settings)?;
    match r.status {
        SolveStatus::Converged => Ok((
            program.split(&r.x_star),
            r.value,
            r.multiplier,
            r.kkt_residual,
        )),
        SolveStatus::Infeasible => Err(Error::Infeasible(
            "the coupled problem has no strictly feasible point".into(),
        )),
        SolveStatus::MaxIters => Err(Error::Solver(format!(
            "centralized solve did not converge in {} Newton steps",
            r.newton_iters
        ))),
    }
}

/// Minimizes `sum_i F_i(x_i)` over the coupled constraints with barrier
/// weight `c` (the instance's barrier kind is kept).
pub fn solve_centralized_barrier<T: Scalar>(
    inst: &ProblemInstance<T>,
    c: T,
) -> Result<OracleSolution<T>> {
    solve_centralized_barrier_with(inst, c, &SolverSettings::default())
}

pub fn solve_centralized_barrier_with<T: Scalar>(
    inst: &ProblemInstance<T>,
    c: T,
    settings: &SolverSettings<T>,
) -> Result<OracleSolution<T>> {
    let barrier = inst.barrier.with_weight(c)?;
    let (x_star, value, multiplier, kkt_residual) = centralized(inst, barrier, None, settings)?;
    Ok(OracleSolution {
        x_star,
        value,
        problem_kind: ProblemKind::Barrier,
        multiplier,
        kkt_residual,
        homotopy: Vec::new(),
        homotopy_monotone: true,
    })
}

/// `f*` from barrier solves along [`ORIGINAL_SCHEDULE`], each warm-started
/// at the previous minimizer.
pub fn solve_centralized_original<T: Scalar>(
    inst: &ProblemInstance<T>,
) -> Result<OracleSolution<T>> {
    let settings = SolverSettings::default();
    let mut warm: Option<Vec<DVector<T>>> = None;
    let mut homotopy = Vec::with_capacity(ORIGINAL_SCHEDULE.len());
    let mut last = None;
    for c in ORIGINAL_SCHEDULE {
        let c = lit::<T>(c);
        let barrier = inst.barrier.with_weight(c)?;
        let (x, _, u, kkt) = centralized(inst, barrier, warm.as_deref(), &settings)?;
        let sum_f = sum_objective(inst, &x);
        homotopy.push(HomotopyPoint { c, sum_f });
        warm = Some(x.clone());
        last = Some((x, sum_f, u, kkt));
    }
    let (x_star, value, multiplier, kkt_residual) = last.expect("non-empty schedule");
    let homotopy_monotone = homotopy.windows(2).all(|w| w[1].sum_f <= w[0].sum_f);
    Ok(OracleSolution {
        x_star,
        value,
        problem_kind: ProblemKind::Original,
        multiplier,
        kkt_residual,
        homotopy,
        homotopy_monotone,
    })
}

/// `sum_i f_i(x_i)`
pub fn sum_objective<T: Scalar>(inst: &ProblemInstance<T>, x: &[DVector<T>]) -> T {
    inst.nodes
        .iter()
        .zip(x)
        .fold(T::zero(), |a, (node, xi)| a + node.objective.eval(xi))
}

/// Shares under which every `x_i*` is feasible: `y_i = A_i x_i*` plus an
/// even split of the remaining inequality slack.
pub fn optimal_shares<T: Scalar>(
    inst: &ProblemInstance<T>,
    sol: &OracleSolution<T>,
) -> Vec<RhsShare<T>> {
    let n = inst.n();
    let mut slack = inst.coupling.b_in.clone();
    for (node, x) in inst.nodes.iter().zip(&sol.x_star) {
        slack -= &node.a_in * x;
    }
    slack *= T::one() / lit::<T>(n as f64);
    let mut shares: Vec<RhsShare<T>> = inst
        .nodes
        .iter()
        .zip(&sol.x_star)
        .map(|(node, x)| RhsShare::new(&node.a_in * x + &slack, &node.a_eq * x))
        .collect();
    // The equality residual of the oracle point is spread the same way.
    let mut eq_residual = inst.coupling.b_eq.clone();
    for y in &shares {
        eq_residual -= &y.y_eq;
    }
    eq_residual *= T::one() / lit::<T>(n as f64);
    for y in &mut shares {
        y.y_eq += &eq_residual;
    }
    shares
}

/// Central differences of `phi` along each stacked share coordinate.
/// `h = None` uses `FD_STEP * (1 + ||y||)`.
pub fn phi_grad_fd<T: Scalar>(
    node: &NodeProblem<T>,
    barrier: BarrierSpec<T>,
    y: &RhsShare<T>,
    h: Option<T>,
) -> Result<DVector<T>> {
    let settings = SolverSettings::default();
    let base = y.stacked();
    let h = h.unwrap_or_else(|| lit::<T>(FD_STEP) * (T::one() + base.norm()));
    let m_in = y.y_in.len();
    let center = primal_value(node, barrier, y, None, &settings)?;
    let warm = center.is_converged().then_some(center.x_star);
    let eval = |v: DVector<T>| -> Result<T> {
        let share = RhsShare::from_stacked(&v, m_in);
        let r = primal_value(node, barrier, &share, warm.as_ref(), &settings)?;
        match r.status {
            SolveStatus::Converged => Ok(r.value),
            SolveStatus::Infeasible => Err(Error::FiniteDifference(format!(
                "perturbed share is infeasible at step {h:e}; use a smaller step"
            ))),
            SolveStatus::MaxIters => Err(Error::FiniteDifference(format!(
                "perturbed subproblem did not converge at step {h:e}"
            ))),
        }
    };
    let two_h = h + h;
    let mut grad = DVector::zeros(base.len());
    for k in 0..base.len() {
        let mut plus = base.clone();
        plus[k] += h;
        let mut minus = base.clone();
        minus[k] -= h;
        grad[k] = (eval(plus)? - eval(minus)?) / two_h;
    }
    Ok(grad)
}

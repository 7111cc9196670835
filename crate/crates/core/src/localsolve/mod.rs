//! Path-following Newton solver for the linearly coupled barrier programs:
//! node primal-function evaluation and the multi-node neighborhood problem.
//!
//! Local constraints enter through the barrier of each node's composite
//! objective, whose weight is lowered from `mu0` to `c` alongside `mu`.
//! Coupling inequalities get an auxiliary barrier `-mu sum log s` with `mu`
//! driven to zero, and coupling equalities are kept exact by stepping in
//! their null space. Only the final stage, at weight `c`, defines the result.

mod merit;
mod newton;
mod program;

use nalgebra::{DMatrix, DVector};

pub use program::ConstrainedProgram;

use crate::error::{Error, Result};
use crate::model::{BarrierSpec, NodeProblem, RhsShare};
use crate::scalar::{infinity, lit, tol, Scalar};
use merit::{PathMerit, PhaseOneMerit};
use newton::{center, EqualityFrame, Merit};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings<T: Scalar> {
    /// Initial weight of the coupling-inequality barrier and of the local
    /// barrier homotopy.
    pub mu0: T,
    pub mu_shrink: T,
    /// Backtracking factor of the Armijo line search.
    pub backtrack: T,
    /// Sufficient-decrease coefficient of the Armijo test.
    pub armijo: T,
    pub fraction_to_boundary: T,
    /// Newton-decrement tolerance of each centering stage.
    pub kkt_tol: T,
    /// Stop once `m_in * mu <= gap_tol`.
    pub gap_tol: T,
    /// Newton budget per stage.
    pub max_newton: usize,
    /// Phase I declares infeasibility when its minimized `t >= -phase1_tol`.
    pub phase1_tol: T,
    /// Keep the per-stage merit history in the result.
    pub record_trace: bool,
}

impl<T: Scalar> Default for SolverSettings<T> {
    fn default() -> Self {
        Self {
            mu0: T::one(),
            mu_shrink: lit(0.2),
            backtrack: lit(0.5),
            armijo: lit(1e-4),
            fraction_to_boundary: lit(0.99),
            kkt_tol: tol(1e-9, 10.0),
            gap_tol: tol(1e-10, 10.0),
            max_newton: 200,
            phase1_tol: tol(1e-9, 100.0),
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    Infeasible,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct SubproblemResult<T: Scalar> {
    /// Minimizer, strictly interior to every local constraint.
    pub x_star: DVector<T>,
    /// Optimal value of the summed composite objectives; `+inf` when
    /// infeasible.
    pub value: T,
    /// `(u_in, u_eq)` with `u_in >= 0`.
    pub multiplier: DVector<T>,
    /// `||grad F(x*) + A' u*||_2`
    pub kkt_residual: T,
    pub newton_iters: usize,
    pub status: SolveStatus,
    /// Final coupling-barrier weight.
    pub mu: T,
    /// Merit values per stage, filled when `record_trace` is set.
    pub merit_trace: Vec<Vec<T>>,
}

impl<T: Scalar> SubproblemResult<T> {
    pub fn is_converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    fn failed(dim: usize, m: usize, status: SolveStatus, iters: usize) -> Self {
        Self {
            x_star: DVector::zeros(dim),
            value: infinity(),
            multiplier: DVector::zeros(m),
            kkt_residual: infinity(),
            newton_iters: iters,
            status,
            mu: T::zero(),
            merit_trace: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseOneOutcome<T: Scalar> {
    Feasible(DVector<T>),
    /// Minimized infeasibility `t` did not go below `-phase1_tol`.
    Infeasible {
        min_t: T,
    },
}

/// Finds a point strictly interior to the local constraints, satisfying
/// the equalities and the coupling inequalities with positive slack.
pub fn phase1<T: Scalar>(
    program: &ConstrainedProgram<'_, T>,
    settings: &SolverSettings<T>,
) -> Result<PhaseOneOutcome<T>> {
    let frame = EqualityFrame::new(program.a_eq())?;
    phase1_from(program, &frame, &DVector::zeros(program.dim()), settings)
}

fn phase1_from<T: Scalar>(
    program: &ConstrainedProgram<'_, T>,
    frame: &EqualityFrame<T>,
    start: &DVector<T>,
    settings: &SolverSettings<T>,
) -> Result<PhaseOneOutcome<T>> {
    let n = program.dim();
    let x0 = frame.project(start, program.rhs_eq());
    if program.is_strictly_feasible(&x0) && program.has_slack_margin(&x0) {
        return Ok(PhaseOneOutcome::Feasible(x0));
    }
    let mut worst = T::zero();
    for (off, f) in program.objectives() {
        let xb = x0.rows(off, f.dim());
        for g in &f.node.local_constraints {
            worst = worst.max(g.eval(&xb));
        }
    }
    for s in program.slacks(&x0).iter() {
        worst = worst.max(-*s);
    }
    let mut z = DVector::zeros(n + 1);
    z.rows_mut(0, n).copy_from(&x0);
    z[n] = worst + T::one();

    let mut basis = nalgebra::DMatrix::zeros(n + 1, frame.z.ncols() + 1);
    basis
        .view_mut((0, 0), (n, frame.z.ncols()))
        .copy_from(&frame.z);
    basis[(n, frame.z.ncols())] = T::one();

    let terms = program
        .blocks()
        .iter()
        .map(|b| b.local_constraints.len())
        .sum::<usize>()
        + program.m_in()
        + 1;
    let mut mu = T::one();
    loop {
        let merit = PhaseOneMerit {
            program,
            anchor: x0.clone(),
            mu,
        };
        let stats = center(&merit, &mut z, &basis, settings, false);
        if !stats.converged {
            return Err(Error::Solver(format!(
                "phase I centering failed at mu = {mu:e} after {} Newton steps",
                stats.iters
            )));
        }
        let t = z[n];
        let x = frame.project(&z.rows(0, n).into_owned(), program.rhs_eq());
        let feasible = t < T::zero() && program.is_strictly_feasible(&x);
        if feasible && program.has_slack_margin(&x) {
            return Ok(PhaseOneOutcome::Feasible(x));
        }
        if lit::<T>(terms as f64) * mu <= settings.gap_tol {
            if t >= -settings.phase1_tol {
                return Ok(PhaseOneOutcome::Infeasible { min_t: t });
            }
            if feasible {
                return Ok(PhaseOneOutcome::Feasible(x));
            }
            return Err(Error::Solver(format!(
                "phase I reached t = {t:e} without a strictly feasible point"
            )));
        }
        mu *= settings.mu_shrink;
    }
}

/// Solves `program` by primal path following. `warm` is used when it is
/// strictly feasible after projection onto the equality rows; otherwise the
/// start comes from phase I.
pub fn solve<T: Scalar>(
    program: &ConstrainedProgram<'_, T>,
    warm: Option<&DVector<T>>,
    settings: &SolverSettings<T>,
) -> Result<SubproblemResult<T>> {
    let frame = EqualityFrame::new(program.a_eq())?;
    let m = program.m_in() + program.m_eq();
    let mut x = match warm {
        Some(w) if w.len() == program.dim() => {
            let p = frame.project(w, program.rhs_eq());
            if program.is_strictly_feasible(&p) && program.has_slack_margin(&p) {
                Some(p)
            } else {
                None
            }
        }
        Some(w) => {
            return Err(Error::Dimension(format!(
                "warm start of length {} for program of dimension {}",
                w.len(),
                program.dim()
            )))
        }
        None => None,
    };
    let target = program.barrier();
    if x.is_none() {
        let seed = warm
            .cloned()
            .unwrap_or_else(|| DVector::zeros(program.dim()));
        match phase1_from(program, &frame, &seed, settings)? {
            PhaseOneOutcome::Feasible(p) => x = Some(p),
            PhaseOneOutcome::Infeasible { .. } => {
                return Ok(SubproblemResult::failed(
                    program.dim(),
                    m,
                    SolveStatus::Infeasible,
                    0,
                ))
            }
        }
    }
    let mut x = x.expect("start point");
    // The local barrier weight follows `mu` down from `mu0` to `c`.
    let mut weight = target.c.max(settings.mu0);

    let mut iters = 0;
    let mut trace = Vec::new();
    let mut mu = if program.m_in() > 0 {
        settings.mu0
    } else {
        T::zero()
    };
    let m_in = lit::<T>(program.m_in() as f64);
    loop {
        let merit = PathMerit {
            program,
            barrier: BarrierSpec {
                kind: target.kind,
                c: weight,
            },
            mu,
            pinned: &[],
        };
        let stats = center(&merit, &mut x, &frame.z, settings, settings.record_trace);
        iters += stats.iters;
        if settings.record_trace {
            trace.push(stats.merits);
        }
        if !stats.converged {
            let mut failed =
                SubproblemResult::failed(program.dim(), m, SolveStatus::MaxIters, iters);
            failed.x_star = x;
            failed.merit_trace = trace;
            return Ok(failed);
        }
        let mu_done = program.m_in() == 0 || m_in * mu <= settings.gap_tol;
        if mu_done && weight <= target.c {
            break;
        }
        if !mu_done {
            mu *= settings.mu_shrink;
        }
        weight = target.c.max(weight * settings.mu_shrink);
    }

    if let Some((p, n)) = polish_on_face(program, &x, mu, settings) {
        x = p;
        iters += n;
    }

    let projected = frame.project(&x, program.rhs_eq());
    if program.is_strictly_feasible(&projected)
        || program.m_in() == 0 && program.locally_interior(&projected)
    {
        x = projected;
    }

    let grad = program.objective_gradient(&x)?;
    let multiplier = coupling_multiplier(program, &frame, &x, &grad, mu);
    let resid = &grad + program.stacked_coupling().transpose() * &multiplier;
    Ok(SubproblemResult {
        value: program.objective_value(&x)?,
        x_star: x,
        multiplier,
        kkt_residual: resid.norm(),
        newton_iters: iters,
        status: SolveStatus::Converged,
        mu,
        merit_trace: trace,
    })
}

/// Holds the coupling rows with slack at most `sqrt(mu)` at their bound and
/// recenters on that face, which removes the `O(mu)` offset of the central
/// path from the active rows. `None` when the face is rank deficient or its
/// projection leaves the domain.
fn polish_on_face<T: Scalar>(
    program: &ConstrainedProgram<'_, T>,
    x: &DVector<T>,
    mu: T,
    settings: &SolverSettings<T>,
) -> Option<(DVector<T>, usize)> {
    let (m_in, m_eq) = (program.m_in(), program.m_eq());
    let threshold = mu.sqrt();
    let pinned: Vec<bool> = program.slacks(x).iter().map(|s| *s <= threshold).collect();
    let active: Vec<usize> = (0..m_in).filter(|&j| pinned[j]).collect();
    if active.is_empty() {
        return None;
    }
    let mut rows = DMatrix::zeros(active.len() + m_eq, program.dim());
    let mut rhs = DVector::zeros(active.len() + m_eq);
    for (r, &j) in active.iter().enumerate() {
        rows.row_mut(r).copy_from(&program.a_in().row(j));
        rhs[r] = program.rhs_in()[j];
    }
    rows.rows_mut(active.len(), m_eq).copy_from(program.a_eq());
    rhs.rows_mut(active.len(), m_eq).copy_from(program.rhs_eq());
    let frame = EqualityFrame::new(&rows).ok()?;
    let mut p = frame.project(x, &rhs);
    let merit = PathMerit {
        program,
        barrier: program.barrier(),
        mu,
        pinned: &pinned,
    };
    merit.value(&p)?;
    let stats = center(&merit, &mut p, &frame.z, settings, false);
    stats.converged.then_some((p, stats.iters))
}

/// Multiplier `u = (u_in, u_eq)` of the coupling rows at a central point.
///
/// At a `mu`-center `grad F + A_in' (mu / s) + A_eq' u_eq = 0`. Rows with
/// slack above `sqrt(mu)` read `mu / s` directly. The nearly active rows and
/// the equality rows are solved from `A' u = -grad F - A_inactive' (mu / s)`
/// in the least-squares sense, which avoids the cancellation in
/// `s = rhs - A_in x`. Without full rank every inequality row reads `mu / s`.
fn coupling_multiplier<T: Scalar>(
    program: &ConstrainedProgram<'_, T>,
    frame: &EqualityFrame<T>,
    x: &DVector<T>,
    grad: &DVector<T>,
    mu: T,
) -> DVector<T> {
    let (m_in, m_eq) = (program.m_in(), program.m_eq());
    let slacks = program.slacks(x);
    let central = slacks.map(|s| mu / s);
    let mut u = DVector::zeros(m_in + m_eq);
    u.rows_mut(0, m_in).copy_from(&central);

    let threshold = mu.sqrt();
    let active: Vec<usize> = (0..m_in).filter(|&j| slacks[j] <= threshold).collect();
    if !active.is_empty() {
        let mut rows = DMatrix::zeros(active.len() + m_eq, program.dim());
        let mut inactive = central.clone();
        for (r, &j) in active.iter().enumerate() {
            rows.row_mut(r).copy_from(&program.a_in().row(j));
            inactive[j] = T::zero();
        }
        rows.rows_mut(active.len(), m_eq).copy_from(program.a_eq());
        if let Ok(f) = EqualityFrame::new(&rows) {
            let v = f.multiplier(&(grad + program.a_in().transpose() * &inactive));
            for (r, &j) in active.iter().enumerate() {
                u[j] = v[r];
            }
            u.rows_mut(m_in, m_eq)
                .copy_from(&v.rows(active.len(), m_eq));
            return u;
        }
    }
    let w = grad + program.a_in().transpose() * &central;
    u.rows_mut(m_in, m_eq).copy_from(&frame.multiplier(&w));
    u
}

/// Evaluates the primal function `phi(y)` of one node: the minimum of its
/// composite objective subject to `A_in x <= y_in`, `A_eq x = y_eq`.
pub fn primal_value<T: Scalar>(
    node: &NodeProblem<T>,
    barrier: BarrierSpec<T>,
    y: &RhsShare<T>,
    warm: Option<&DVector<T>>,
    settings: &SolverSettings<T>,
) -> Result<SubproblemResult<T>> {
    let program = ConstrainedProgram::single(node, barrier, y)?;
    solve(&program, warm, settings)
}

/// Joint minimizers of a closed neighborhood and the shared multiplier of
/// its summed coupling rows.
#[derive(Debug, Clone)]
pub struct NeighborhoodSolution<T: Scalar> {
    pub xs: Vec<DVector<T>>,
    pub multiplier: DVector<T>,
    pub value: T,
    pub result: SubproblemResult<T>,
}

/// Solves the neighborhood reallocation problem over `nodes` with the
/// summed right-hand sides. Infeasibility or a non-converged solve is an
/// error: a valid engine state always admits its current iterates.
pub fn solve_neighborhood<T: Scalar>(
    nodes: &[&NodeProblem<T>],
    barrier: BarrierSpec<T>,
    rhs_in_sum: &DVector<T>,
    rhs_eq_sum: &DVector<T>,
    warm: Option<&[DVector<T>]>,
    settings: &SolverSettings<T>,
) -> Result<NeighborhoodSolution<T>> {
    let program = ConstrainedProgram::new(
        nodes.to_vec(),
        barrier,
        rhs_in_sum.clone(),
        rhs_eq_sum.clone(),
    )?;
    let warm = warm.map(|w| program.stack(w)).transpose()?;
    let result = solve(&program, warm.as_ref(), settings)?;
    match result.status {
        SolveStatus::Converged => {}
        SolveStatus::Infeasible => {
            return Err(Error::Infeasible(format!(
                "neighborhood of {} nodes has no strictly feasible point",
                nodes.len()
            )))
        }
        SolveStatus::MaxIters => {
            return Err(Error::Solver(format!(
                "neighborhood solve did not converge in {} Newton steps",
                result.newton_iters
            )))
        }
    }
    Ok(NeighborhoodSolution {
        xs: program.split(&result.x_star),
        multiplier: result.multiplier.clone(),
        value: result.value,
        result,
    })
}

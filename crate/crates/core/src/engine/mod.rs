//! The reallocation state machine: initial shares, leader updates of
//! allocations and shares, feasibility audits and neighborhood residuals.

mod audit;
mod init;
mod run;

use std::time::Instant;

use nalgebra::DVector;

pub use crate::model::RhsShare;
pub use audit::{AuditCheck, AuditReport};
pub use init::slater_point;
pub use run::{run, run_with_source, InitStrategy, RunOptions, StopReason, StopRule, Trace};

use crate::error::{Error, Result};
use crate::localsolve::{primal_value, solve_neighborhood, SolverSettings};
use crate::model::{barrier_objective, NodeProblem, ProblemInstance};
use crate::network::{verify_nonconflict, UpdateSet};
use crate::scalar::{lit, Scalar};

/// Conservation is re-normalized after this many iterations.
pub const RENORMALIZE_EVERY: usize = 1000;

/// Residuals in `[-RESIDUAL_CLAMP, 0)` are reported as zero.
pub const RESIDUAL_CLAMP: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct EngineState<T: Scalar> {
    pub k: usize,
    pub x: Vec<DVector<T>>,
    pub y: Vec<RhsShare<T>>,
    /// Cached `phi_i(y_i)`.
    pub phi: Vec<T>,
    /// Cached multipliers `u_i*(y_i)`.
    pub u: Vec<DVector<T>>,
}

impl<T: Scalar> EngineState<T> {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// `(sum_i y_in, sum_i y_eq)`
    pub fn share_sums(&self) -> (DVector<T>, DVector<T>) {
        let m_in = self.y.first().map_or(0, |y| y.y_in.len());
        let m_eq = self.y.first().map_or(0, |y| y.y_eq.len());
        self.y
            .iter()
            .fold((DVector::zeros(m_in), DVector::zeros(m_eq)), |(a, b), y| {
                (a + &y.y_in, b + &y.y_eq)
            })
    }

    pub fn sum_phi(&self) -> T {
        self.phi.iter().fold(T::zero(), |a, b| a + *b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T: Scalar> {
    pub k: usize,
    pub update_set: UpdateSet,
    /// `sum_i f_i(x_i)`
    pub sum_f: T,
    /// `sum_i F_i(x_i)`
    pub sum_big_f: T,
    /// `sum_i phi_i(y_i)`
    pub sum_phi: T,
    /// `max(0, sum_i A_in x_i - b_in)` in the infinity norm.
    pub feas_in_err: T,
    /// `||sum_i A_eq x_i - b_eq||_2`
    pub feas_eq_err: T,
    pub residual_sum: Option<T>,
    pub wallclock_ms: f64,
}

/// Runs the reallocation iterations on one validated instance.
#[derive(Debug, Clone)]
pub struct Engine<'a, T: Scalar> {
    inst: &'a ProblemInstance<T>,
    settings: SolverSettings<T>,
}

impl<'a, T: Scalar> Engine<'a, T> {
    pub fn new(inst: &'a ProblemInstance<T>) -> Self {
        Self {
            inst,
            settings: SolverSettings::default(),
        }
    }

    pub fn with_settings(inst: &'a ProblemInstance<T>, settings: SolverSettings<T>) -> Self {
        Self { inst, settings }
    }

    pub fn instance(&self) -> &'a ProblemInstance<T> {
        self.inst
    }

    pub fn settings(&self) -> &SolverSettings<T> {
        &self.settings
    }

    /// Solves every node subproblem at `y0` and caches values and
    /// multipliers.
    pub fn init_x(&self, y0: Vec<RhsShare<T>>) -> Result<EngineState<T>> {
        let inst = self.inst;
        if y0.len() != inst.n() {
            return Err(Error::Init(format!(
                "{} shares for {} nodes",
                y0.len(),
                inst.n()
            )));
        }
        let mut x = Vec::with_capacity(inst.n());
        let mut phi = Vec::with_capacity(inst.n());
        let mut u = Vec::with_capacity(inst.n());
        for (i, (node, y)) in inst.nodes.iter().zip(&y0).enumerate() {
            let r = primal_value(node, inst.barrier, y, None, &self.settings)?;
            if !r.is_converged() {
                return Err(Error::Init(format!(
                    "node {i} subproblem at its initial share is {:?}",
                    r.status
                )));
            }
            phi.push(r.value);
            u.push(r.multiplier);
            x.push(r.x_star);
        }
        Ok(EngineState {
            k: 0,
            x,
            y: y0,
            phi,
            u,
        })
    }

    /// One iteration: every leader re-solves its closed neighborhood and
    /// redistributes the shares; all other nodes keep their state.
    pub fn step(
        &self,
        state: &mut EngineState<T>,
        update: &UpdateSet,
    ) -> Result<IterationRecord<T>> {
        let started = Instant::now();
        if !verify_nonconflict(&self.inst.graph, update) {
            return Err(Error::Solver(format!(
                "update set {:?} has overlapping closed neighborhoods",
                update.leaders()
            )));
        }
        for &leader in update.leaders() {
            if let Err(e) = self.update_neighborhood(state, leader) {
                return Err(Error::StepFailed {
                    k: state.k,
                    leader,
                    source: Box::new(e),
                    dump: format!("{state:?}"),
                });
            }
        }
        state.k += 1;
        if state.k.is_multiple_of(RENORMALIZE_EVERY) {
            self.renormalize(state);
        }
        let mut rec = self.record(state, update.clone());
        rec.wallclock_ms = started.elapsed().as_secs_f64() * 1e3;
        Ok(rec)
    }

    fn update_neighborhood(&self, state: &mut EngineState<T>, leader: usize) -> Result<()> {
        let inst = self.inst;
        let members = inst.graph.closed_neighborhood(leader)?;
        let nodes: Vec<&NodeProblem<T>> = members.iter().map(|&j| &inst.nodes[j]).collect();
        let mut rhs_in = DVector::zeros(inst.m_in());
        let mut rhs_eq = DVector::zeros(inst.m_eq());
        for &j in &members {
            rhs_in += &state.y[j].y_in;
            rhs_eq += &state.y[j].y_eq;
        }
        let warm: Vec<DVector<T>> = members.iter().map(|&j| state.x[j].clone()).collect();
        let sol = solve_neighborhood(
            &nodes,
            inst.barrier,
            &rhs_in,
            &rhs_eq,
            Some(&warm),
            &self.settings,
        )?;

        // Shared slack of the neighborhood, split evenly. For equality rows
        // it is the rounding residual, which keeps the share sum exact.
        let mut slack_in = rhs_in;
        let mut slack_eq = rhs_eq;
        for (node, x) in nodes.iter().zip(&sol.xs) {
            slack_in -= &node.a_in * x;
            slack_eq -= &node.a_eq * x;
        }
        let share = T::one() / lit::<T>(members.len() as f64);
        slack_in *= share;
        slack_eq *= share;

        for ((&j, node), x) in members.iter().zip(&nodes).zip(sol.xs) {
            let y = RhsShare::new(&node.a_in * &x + &slack_in, &node.a_eq * &x + &slack_eq);
            let r = primal_value(node, inst.barrier, &y, Some(&x), &self.settings)?;
            if !r.is_converged() {
                return Err(Error::Solver(format!(
                    "node {j} subproblem at its new share is {:?}",
                    r.status
                )));
            }
            state.phi[j] = r.value;
            state.u[j] = r.multiplier;
            state.x[j] = x;
            state.y[j] = y;
        }
        Ok(())
    }

    /// Distributes `b - sum_i y_i` evenly over all nodes.
    pub fn renormalize(&self, state: &mut EngineState<T>) {
        let (sum_in, sum_eq) = state.share_sums();
        let share = T::one() / lit::<T>(state.n() as f64);
        let d_in = (&self.inst.coupling.b_in - sum_in) * share;
        let d_eq = (&self.inst.coupling.b_eq - sum_eq) * share;
        for y in &mut state.y {
            y.y_in += &d_in;
            y.y_eq += &d_eq;
        }
    }

    /// Metrics of the current state (without residual or timing).
    pub fn record(&self, state: &EngineState<T>, update_set: UpdateSet) -> IterationRecord<T> {
        let inst = self.inst;
        let mut sum_f = T::zero();
        let mut sum_big_f = T::zero();
        let mut a_in_x = DVector::zeros(inst.m_in());
        let mut a_eq_x = DVector::zeros(inst.m_eq());
        for (node, x) in inst.nodes.iter().zip(&state.x) {
            sum_f += node.objective.eval(x);
            sum_big_f += barrier_objective(node, inst.barrier)
                .value(x)
                .unwrap_or_else(|_| crate::scalar::infinity());
            a_in_x += &node.a_in * x;
            a_eq_x += &node.a_eq * x;
        }
        let feas_in_err = (a_in_x - &inst.coupling.b_in)
            .iter()
            .fold(T::zero(), |a, v| a.max(*v));
        let feas_eq_err = (a_eq_x - &inst.coupling.b_eq).norm();
        IterationRecord {
            k: state.k,
            update_set,
            sum_f,
            sum_big_f,
            sum_phi: state.sum_phi(),
            feas_in_err,
            feas_eq_err,
            residual_sum: None,
            wallclock_ms: 0.0,
        }
    }

    /// Improvement available from re-solving the closed neighborhood of
    /// `i`: cached `sum phi_j` minus the neighborhood optimum.
    pub fn residual(&self, state: &EngineState<T>, i: usize) -> Result<T> {
        let inst = self.inst;
        let members = inst.graph.closed_neighborhood(i)?;
        let nodes: Vec<&NodeProblem<T>> = members.iter().map(|&j| &inst.nodes[j]).collect();
        let mut rhs_in = DVector::zeros(inst.m_in());
        let mut rhs_eq = DVector::zeros(inst.m_eq());
        let mut cached = T::zero();
        for &j in &members {
            rhs_in += &state.y[j].y_in;
            rhs_eq += &state.y[j].y_eq;
            cached += state.phi[j];
        }
        let warm: Vec<DVector<T>> = members.iter().map(|&j| state.x[j].clone()).collect();
        let sol = solve_neighborhood(
            &nodes,
            inst.barrier,
            &rhs_in,
            &rhs_eq,
            Some(&warm),
            &self.settings,
        )?;
        let r = cached - sol.value;
        let clamp = lit::<T>(RESIDUAL_CLAMP) * (T::one() + cached.abs());
        if r >= T::zero() {
            Ok(r)
        } else if r >= -clamp {
            Ok(T::zero())
        } else {
            Err(Error::Solver(format!(
                "negative neighborhood residual {r:e} at node {i}: cached values are inconsistent"
            )))
        }
    }

    pub fn residuals(&self, state: &EngineState<T>) -> Result<Vec<T>> {
        (0..state.n()).map(|i| self.residual(state, i)).collect()
    }

    pub fn audit_feasibility(&self, state: &EngineState<T>) -> AuditReport {
        audit::audit(self.inst, state)
    }
}

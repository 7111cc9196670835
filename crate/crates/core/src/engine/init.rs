use nalgebra::DVector;

use super::Engine;
use crate::error::{Error, Result};
use crate::localsolve::{phase1, ConstrainedProgram, PhaseOneOutcome};
use crate::model::{Family, ProblemInstance, RhsShare};
use crate::scalar::{lit, Scalar};

/// Coupling residual allowed for an explicit starting point.
const POINT_COUPLING_TOL: f64 = 1e-8;

/// Multi-resource initial shares are this multiple of the centered lower
/// bounds.
const MULTI_RESOURCE_SCALE: f64 = 0.01;

/// A point strictly interior to every local constraint that satisfies the
/// coupling rows, found by phase I on the centralized program.
pub fn slater_point<T: Scalar>(
    inst: &ProblemInstance<T>,
    settings: &crate::localsolve::SolverSettings<T>,
) -> Result<Vec<DVector<T>>> {
    let program = ConstrainedProgram::new(
        inst.nodes.iter().collect(),
        inst.barrier,
        inst.coupling.b_in.clone(),
        inst.coupling.b_eq.clone(),
    )?;
    match phase1(&program, settings)? {
        PhaseOneOutcome::Feasible(x) => Ok(program.split(&x)),
        PhaseOneOutcome::Infeasible { min_t } => Err(Error::Infeasible(format!(
            "no strictly feasible point (phase I stopped at t = {min_t:e})"
        ))),
    }
}

impl<T: Scalar> Engine<'_, T> {
    /// Even split of `b`, shifted by the generator's lower bounds when the
    /// instance carries family metadata.
    pub fn init_even_split(&self) -> Result<Vec<RhsShare<T>>> {
        let inst = self.inst;
        let n = inst.n();
        if n == 0 {
            return Err(Error::Init("instance has no nodes".into()));
        }
        let inv_n = T::one() / lit::<T>(n as f64);
        let y_in = &inst.coupling.b_in * inv_n;
        let even_eq = &inst.coupling.b_eq * inv_n;

        let eq_shares: Vec<DVector<T>> = match &inst.family {
            Some(Family::Dispatch { lower }) => {
                if lower.len() != n || inst.m_eq() != 1 {
                    return Err(Error::Init(
                        "dispatch metadata does not match the instance".into(),
                    ));
                }
                let total = lower.iter().fold(T::zero(), |a, b| a + *b);
                let shift = (inst.coupling.b_eq[0] - total) * inv_n;
                lower
                    .iter()
                    .map(|l| DVector::from_element(1, *l + shift))
                    .collect()
            }
            Some(Family::MultiResource { lower, .. }) => {
                if lower.len() != n || lower.iter().any(|l| l.len() != inst.m_eq()) {
                    return Err(Error::Init(
                        "multi-resource metadata does not match the instance".into(),
                    ));
                }
                let mean = lower.iter().fold(DVector::zeros(inst.m_eq()), |a, l| a + l) * inv_n;
                let scale = lit::<T>(MULTI_RESOURCE_SCALE);
                lower.iter().map(|l| (l - &mean) * scale).collect()
            }
            None => vec![even_eq; n],
        };
        let mut shares: Vec<RhsShare<T>> = eq_shares
            .into_iter()
            .map(|e| RhsShare::new(y_in.clone(), e))
            .collect();
        absorb_rounding(inst, &mut shares);

        for (i, (node, y)) in inst.nodes.iter().zip(&shares).enumerate() {
            let program = ConstrainedProgram::single(node, inst.barrier, y)?;
            if !matches!(
                phase1(&program, &self.settings)?,
                PhaseOneOutcome::Feasible(_)
            ) {
                return Err(Error::Init(format!(
                    "even split leaves node {i} without a strictly feasible allocation; \
                     start from a feasible point or supply explicit shares"
                )));
            }
        }
        Ok(shares)
    }

    /// Shares `y_i = A_eq x_i` of a strictly feasible point. Only available
    /// without coupling inequalities.
    pub fn init_from_point(&self, x: &[DVector<T>]) -> Result<Vec<RhsShare<T>>> {
        let inst = self.inst;
        if inst.m_in() > 0 {
            return Err(Error::Init(
                "starting from a point requires an instance without coupling inequalities".into(),
            ));
        }
        if x.len() != inst.n() {
            return Err(Error::Init(format!(
                "{} point blocks for {} nodes",
                x.len(),
                inst.n()
            )));
        }
        let mut total = DVector::zeros(inst.m_eq());
        let mut shares = Vec::with_capacity(x.len());
        for (i, (node, xi)) in inst.nodes.iter().zip(x).enumerate() {
            if xi.len() != node.dim() {
                return Err(Error::Init(format!(
                    "point block {i} has length {} but node dimension is {}",
                    xi.len(),
                    node.dim()
                )));
            }
            if let Some(g) = node
                .local_constraints
                .iter()
                .map(|g| g.eval(xi))
                .find(|g| *g >= T::zero())
            {
                return Err(Error::Init(format!(
                    "point block {i} is not strictly interior (g = {g:e})"
                )));
            }
            let y = &node.a_eq * xi;
            total += &y;
            shares.push(RhsShare::new(DVector::zeros(0), y));
        }
        let violation = (total - &inst.coupling.b_eq).amax();
        if violation > lit::<T>(POINT_COUPLING_TOL) {
            return Err(Error::Init(format!(
                "point violates the coupling equalities by {violation:e}"
            )));
        }
        absorb_rounding(inst, &mut shares);
        Ok(shares)
    }
}

/// Spreads `b - sum_i y_i` evenly so that the shares sum to `b` to rounding.
fn absorb_rounding<T: Scalar>(inst: &ProblemInstance<T>, shares: &mut [RhsShare<T>]) {
    let inv_n = T::one() / lit::<T>(shares.len() as f64);
    let mut sum_in = inst.coupling.b_in.clone();
    let mut sum_eq = inst.coupling.b_eq.clone();
    for y in shares.iter() {
        sum_in -= &y.y_in;
        sum_eq -= &y.y_eq;
    }
    sum_in *= inv_n;
    sum_eq *= inv_n;
    for y in shares.iter_mut() {
        y.y_in += &sum_in;
        y.y_eq += &sum_eq;
    }
}

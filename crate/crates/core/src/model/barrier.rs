//! Barrier functions and the barrier-transformed node objective
//! `F(x) = f(x) + c * sum_j B(g_j(x))`.

use nalgebra::{DMatrix, DVector, Dyn, Storage, Vector};
use serde::{Deserialize, Serialize};

use super::{NodeProblem, SmoothConvexFn};
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BarrierKind {
    /// `B(g) = -log(-g)`
    Log,
    /// `B(g) = -1/g`
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSpec<T: Scalar> {
    pub kind: BarrierKind,
    pub c: T,
}

impl<T: Scalar> BarrierSpec<T> {
    pub fn new(kind: BarrierKind, c: T) -> Result<Self> {
        if !(c > T::zero()) {
            return Err(Error::InvalidInstance(format!(
                "barrier weight must be positive, got {c}"
            )));
        }
        Ok(Self { kind, c })
    }

    pub fn log(c: T) -> Self {
        Self::new(BarrierKind::Log, c).expect("positive barrier weight")
    }

    pub fn inverse(c: T) -> Self {
        Self::new(BarrierKind::Inverse, c).expect("positive barrier weight")
    }

    pub fn with_weight(self, c: T) -> Result<Self> {
        Self::new(self.kind, c)
    }
}

/// Unweighted barrier value `B(g)` for `g < 0`.
pub fn barrier_eval<T: Scalar>(g: T, kind: BarrierKind) -> Result<T> {
    if !(g < T::zero()) {
        return Err(Error::DomainViolation { value: to_f64(g) });
    }
    Ok(match kind {
        BarrierKind::Log => -(-g).ln(),
        BarrierKind::Inverse => -T::one() / g,
    })
}

/// `(B(g), B'(g), B''(g))`.
pub fn barrier_derivatives<T: Scalar>(g: T, kind: BarrierKind) -> Result<(T, T, T)> {
    let value = barrier_eval(g, kind)?;
    Ok(match kind {
        BarrierKind::Log => {
            let inv = T::one() / g;
            (value, -inv, inv * inv)
        }
        BarrierKind::Inverse => {
            let inv = T::one() / g;
            (value, inv * inv, lit::<T>(-2.0) * inv * inv * inv)
        }
    })
}

/// Barrier-transformed objective of one node.
#[derive(Debug, Clone, Copy)]
pub struct CompositeObjective<'a, T: Scalar> {
    pub node: &'a NodeProblem<T>,
    pub barrier: BarrierSpec<T>,
}

/// Builds the composite objective `F_i` for `node`.
pub fn barrier_objective<T: Scalar>(
    node: &NodeProblem<T>,
    barrier: BarrierSpec<T>,
) -> CompositeObjective<'_, T> {
    CompositeObjective { node, barrier }
}

impl<'a, T: Scalar> CompositeObjective<'a, T> {
    pub fn dim(&self) -> usize {
        self.node.dim()
    }

    /// True when every local constraint is strictly negative at `x`.
    pub fn is_interior<S: Storage<T, Dyn>>(&self, x: &Vector<T, Dyn, S>) -> bool {
        self.node
            .local_constraints
            .iter()
            .all(|g| g.eval(x) < T::zero())
    }

    pub fn value<S: Storage<T, Dyn>>(&self, x: &Vector<T, Dyn, S>) -> Result<T> {
        let mut total = self.node.objective.eval(x);
        for g in &self.node.local_constraints {
            total += self.barrier.c * barrier_eval(g.eval(x), self.barrier.kind)?;
        }
        Ok(total)
    }

    pub fn gradient<S: Storage<T, Dyn>>(&self, x: &Vector<T, Dyn, S>) -> Result<DVector<T>> {
        let mut grad = self.node.objective.gradient(x);
        for g in &self.node.local_constraints {
            let (_, d1, _) = barrier_derivatives(g.eval(x), self.barrier.kind)?;
            grad += g.gradient(x) * (self.barrier.c * d1);
        }
        Ok(grad)
    }

    pub fn hessian<S: Storage<T, Dyn>>(&self, x: &Vector<T, Dyn, S>) -> Result<DMatrix<T>> {
        let mut hess = DMatrix::zeros(self.dim(), self.dim());
        self.add_derivatives(x, None, &mut hess)?;
        Ok(hess)
    }

    /// Adds the gradient (when `grad` is given) and the Hessian of `F` at
    /// `x` into the provided buffers.
    pub(crate) fn add_derivatives<S: Storage<T, Dyn>>(
        &self,
        x: &Vector<T, Dyn, S>,
        mut grad: Option<&mut DVector<T>>,
        hess: &mut DMatrix<T>,
    ) -> Result<()> {
        let obj = &self.node.objective;
        if let Some(gr) = grad.as_deref_mut() {
            *gr += obj.gradient(x);
        }
        obj.add_hessian_to(hess, T::one());
        let c = self.barrier.c;
        for g in &self.node.local_constraints {
            let (_, d1, d2) = barrier_derivatives(g.eval(x), self.barrier.kind)?;
            let dg = g.gradient(x);
            if let Some(gr) = grad.as_deref_mut() {
                *gr += &dg * (c * d1);
            }
            hess.ger(c * d2, &dg, &dg, T::one());
            g.add_hessian_to(hess, c * d1);
        }
        Ok(())
    }

    /// Largest step along `d` before some local constraint reaches zero.
    pub fn boundary_step<S1, S2>(&self, x: &Vector<T, Dyn, S1>, d: &Vector<T, Dyn, S2>) -> T
    where
        S1: Storage<T, Dyn>,
        S2: Storage<T, Dyn>,
    {
        self.node
            .local_constraints
            .iter()
            .map(|g: &SmoothConvexFn<T>| g.boundary_step(x, d))
            .fold(crate::scalar::infinity(), |a, b| a.min(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn barrier_values() {
        assert_eq!(barrier_eval(-1.0, BarrierKind::Log).unwrap(), 0.0);
        assert_eq!(barrier_eval(-1.0, BarrierKind::Inverse).unwrap(), 1.0);
        let v = barrier_eval(-(-1.0f64).exp(), BarrierKind::Log).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn barrier_rejects_boundary() {
        for kind in [BarrierKind::Log, BarrierKind::Inverse] {
            assert!(matches!(
                barrier_eval(0.0, kind),
                Err(Error::DomainViolation { .. })
            ));
            assert!(barrier_eval(0.5, kind).is_err());
        }
    }

    #[test]
    fn weight_must_be_positive() {
        assert!(BarrierSpec::new(BarrierKind::Log, -1.0).is_err());
        assert!(BarrierSpec::new(BarrierKind::Log, 0.0).is_err());
    }

    fn box_node() -> NodeProblem<f64> {
        NodeProblem::box_1d(
            SmoothConvexFn::quadratic(nalgebra::dmatrix![2.0], dvector![0.0], 0.0).unwrap(),
            -1.0,
            1.0,
            0,
            0,
        )
    }

    #[test]
    fn composite_values_on_box() {
        let node = box_node();
        let f = barrier_objective(&node, BarrierSpec::log(0.1));
        assert!(f.value(&dvector![0.0]).unwrap().abs() < 1e-15);
        assert!(f.gradient(&dvector![0.0]).unwrap()[0].abs() < 1e-15);
        let expected = 0.25 + 0.1 * (-(0.5f64).ln() - (1.5f64).ln());
        assert!((f.value(&dvector![0.5]).unwrap() - expected).abs() < 1e-14);
        assert!(f.value(&dvector![1.0]).is_err());
    }

    #[test]
    fn inverse_composite_derivatives_match_scalar_formula() {
        let node = box_node();
        let f = barrier_objective(&node, BarrierSpec::inverse(0.2));
        let x = 0.3f64;
        // F = x^2 + 0.2 * (1/(1-x) + 1/(1+x))
        let grad = 2.0 * x + 0.2 * (1.0 / (1.0 - x).powi(2) - 1.0 / (1.0 + x).powi(2));
        let hess = 2.0 + 0.2 * (2.0 / (1.0 - x).powi(3) + 2.0 / (1.0 + x).powi(3));
        assert!((f.gradient(&dvector![x]).unwrap()[0] - grad).abs() < 1e-13);
        assert!((f.hessian(&dvector![x]).unwrap()[(0, 0)] - hess).abs() < 1e-12);
    }
}

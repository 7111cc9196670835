use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{barrier_objective, BarrierSpec, CompositeObjective, NodeProblem, RhsShare};
use crate::scalar::{epsilon, Scalar};

/// Block-separable barrier program
///
/// ```text
/// minimize   sum_b F_b(x_b)
/// subject to A_in x <= rhs_in,  A_eq x = rhs_eq,  g_bj(x_b) < 0
/// ```
///
/// where each block is one node and the coupling matrices are the
/// horizontal concatenation of the node blocks.
#[derive(Debug, Clone)]
pub struct ConstrainedProgram<'a, T: Scalar> {
    blocks: Vec<&'a NodeProblem<T>>,
    offsets: Vec<usize>,
    barrier: BarrierSpec<T>,
    a_in: DMatrix<T>,
    rhs_in: DVector<T>,
    a_eq: DMatrix<T>,
    rhs_eq: DVector<T>,
    dim: usize,
}

impl<'a, T: Scalar> ConstrainedProgram<'a, T> {
    pub fn new(
        blocks: Vec<&'a NodeProblem<T>>,
        barrier: BarrierSpec<T>,
        rhs_in: DVector<T>,
        rhs_eq: DVector<T>,
    ) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Dimension("program needs at least one block".into()));
        }
        let (m_in, m_eq) = (rhs_in.len(), rhs_eq.len());
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut dim = 0;
        for (b, node) in blocks.iter().enumerate() {
            if node.m_in() != m_in || node.m_eq() != m_eq {
                return Err(Error::Dimension(format!(
                    "block {b} has ({}, {}) coupling rows but rhs has ({m_in}, {m_eq})",
                    node.m_in(),
                    node.m_eq()
                )));
            }
            offsets.push(dim);
            dim += node.dim();
        }
        let mut a_in = DMatrix::zeros(m_in, dim);
        let mut a_eq = DMatrix::zeros(m_eq, dim);
        for (node, &off) in blocks.iter().zip(&offsets) {
            a_in.columns_mut(off, node.dim()).copy_from(&node.a_in);
            a_eq.columns_mut(off, node.dim()).copy_from(&node.a_eq);
        }
        Ok(Self {
            blocks,
            offsets,
            barrier,
            a_in,
            rhs_in,
            a_eq,
            rhs_eq,
            dim,
        })
    }

    /// Node subproblem with right-hand side `y`.
    pub fn single(
        node: &'a NodeProblem<T>,
        barrier: BarrierSpec<T>,
        y: &RhsShare<T>,
    ) -> Result<Self> {
        Self::new(vec![node], barrier, y.y_in.clone(), y.y_eq.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn m_in(&self) -> usize {
        self.rhs_in.len()
    }

    pub fn m_eq(&self) -> usize {
        self.rhs_eq.len()
    }

    pub fn blocks(&self) -> &[&'a NodeProblem<T>] {
        &self.blocks
    }

    pub fn barrier(&self) -> BarrierSpec<T> {
        self.barrier
    }

    pub fn a_in(&self) -> &DMatrix<T> {
        &self.a_in
    }

    pub fn a_eq(&self) -> &DMatrix<T> {
        &self.a_eq
    }

    pub fn rhs_in(&self) -> &DVector<T> {
        &self.rhs_in
    }

    pub fn rhs_eq(&self) -> &DVector<T> {
        &self.rhs_eq
    }

    /// `(offset, objective)` per block.
    pub fn objectives(&self) -> impl Iterator<Item = (usize, CompositeObjective<'a, T>)> + '_ {
        self.objectives_with(self.barrier)
    }

    /// Block objectives under a different barrier weight.
    pub(crate) fn objectives_with(
        &self,
        barrier: BarrierSpec<T>,
    ) -> impl Iterator<Item = (usize, CompositeObjective<'a, T>)> + '_ {
        self.blocks
            .iter()
            .zip(&self.offsets)
            .map(move |(node, &off)| (off, barrier_objective(*node, barrier)))
    }

    /// Splits a stacked vector into per-block vectors.
    pub fn split(&self, x: &DVector<T>) -> Vec<DVector<T>> {
        self.blocks
            .iter()
            .zip(&self.offsets)
            .map(|(node, &off)| x.rows(off, node.dim()).into_owned())
            .collect()
    }

    pub fn stack(&self, parts: &[DVector<T>]) -> Result<DVector<T>> {
        if parts.len() != self.blocks.len() {
            return Err(Error::Dimension(format!(
                "expected {} block vectors, got {}",
                self.blocks.len(),
                parts.len()
            )));
        }
        let mut x = DVector::zeros(self.dim);
        for ((node, &off), p) in self.blocks.iter().zip(&self.offsets).zip(parts) {
            if p.len() != node.dim() {
                return Err(Error::Dimension(format!(
                    "block vector of length {} for node of dimension {}",
                    p.len(),
                    node.dim()
                )));
            }
            x.rows_mut(off, node.dim()).copy_from(p);
        }
        Ok(x)
    }

    /// `[A_in; A_eq]`
    pub fn stacked_coupling(&self) -> DMatrix<T> {
        let (m_in, m_eq) = (self.m_in(), self.m_eq());
        let mut a = DMatrix::zeros(m_in + m_eq, self.dim);
        a.rows_mut(0, m_in).copy_from(&self.a_in);
        a.rows_mut(m_in, m_eq).copy_from(&self.a_eq);
        a
    }

    /// `rhs_in - A_in x`
    pub fn slacks(&self, x: &DVector<T>) -> DVector<T> {
        &self.rhs_in - &self.a_in * x
    }

    /// Sum of the composite objectives, or an error outside the domain.
    pub fn objective_value(&self, x: &DVector<T>) -> Result<T> {
        let mut total = T::zero();
        for (off, f) in self.objectives() {
            total += f.value(&x.rows(off, f.dim()))?;
        }
        Ok(total)
    }

    /// Gradient of the summed composite objective.
    pub fn objective_gradient(&self, x: &DVector<T>) -> Result<DVector<T>> {
        let mut grad = DVector::zeros(self.dim);
        for (off, f) in self.objectives() {
            let g = f.gradient(&x.rows(off, f.dim()))?;
            grad.rows_mut(off, f.dim()).copy_from(&g);
        }
        Ok(grad)
    }

    pub fn locally_interior(&self, x: &DVector<T>) -> bool {
        self.objectives()
            .all(|(off, f)| f.is_interior(&x.rows(off, f.dim())))
    }

    /// Strict local interiority and strictly positive coupling slacks.
    pub fn is_strictly_feasible(&self, x: &DVector<T>) -> bool {
        self.locally_interior(x) && self.slacks(x).iter().all(|s| *s > T::zero())
    }

    /// Every coupling slack exceeds `sqrt(eps)` relative to the magnitudes
    /// it is computed from, so barrier values at `x` carry signal.
    pub fn has_slack_margin(&self, x: &DVector<T>) -> bool {
        let scale = self.a_in.abs() * x.abs() + self.rhs_in.abs();
        let margin = epsilon::<T>().sqrt();
        self.slacks(x)
            .iter()
            .zip(scale.iter())
            .all(|(s, m)| *s > margin * (T::one() + *m))
    }

    /// Max equality violation `||A_eq x - rhs_eq||_inf`.
    pub fn equality_violation(&self, x: &DVector<T>) -> T {
        (&self.a_eq * x - &self.rhs_eq).amax()
    }
}

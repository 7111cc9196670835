use nalgebra::{DMatrix, DVector};

use super::{BarrierSpec, SmoothConvexFn};
use crate::error::{Error, Result};
use crate::network::Graph;
use crate::scalar::Scalar;

/// One agent's local problem: objective, local constraints `g_j(x) <= 0`
/// and its columns of the coupling rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeProblem<T: Scalar> {
    pub objective: SmoothConvexFn<T>,
    pub local_constraints: Vec<SmoothConvexFn<T>>,
    /// `m_in x d`
    pub a_in: DMatrix<T>,
    /// `m_eq x d`
    pub a_eq: DMatrix<T>,
}

impl<T: Scalar> NodeProblem<T> {
    pub fn new(
        objective: SmoothConvexFn<T>,
        local_constraints: Vec<SmoothConvexFn<T>>,
        a_in: DMatrix<T>,
        a_eq: DMatrix<T>,
    ) -> Result<Self> {
        let d = objective.dim();
        if d == 0 {
            return Err(Error::Dimension("node dimension must be positive".into()));
        }
        if let Some((j, g)) = local_constraints
            .iter()
            .enumerate()
            .find(|(_, g)| g.dim() != d)
        {
            return Err(Error::Dimension(format!(
                "local constraint {j} has dimension {} but objective has {d}",
                g.dim()
            )));
        }
        if a_in.ncols() != d || a_eq.ncols() != d {
            return Err(Error::Dimension(format!(
                "coupling columns ({}, {}) do not match node dimension {d}",
                a_in.ncols(),
                a_eq.ncols()
            )));
        }
        Ok(Self {
            objective,
            local_constraints,
            a_in,
            a_eq,
        })
    }

    /// Scalar node with box `[lower, upper]` whose coupling coefficient is 1
    /// in every one of `m_in` inequality and `m_eq` equality rows.
    pub fn box_1d(
        objective: SmoothConvexFn<T>,
        lower: T,
        upper: T,
        m_in: usize,
        m_eq: usize,
    ) -> Self {
        Self::new(
            objective,
            vec![
                SmoothConvexFn::upper_bound(1, 0, upper),
                SmoothConvexFn::lower_bound(1, 0, lower),
            ],
            DMatrix::from_element(m_in, 1, T::one()),
            DMatrix::from_element(m_eq, 1, T::one()),
        )
        .expect("consistent scalar node")
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn m_in(&self) -> usize {
        self.a_in.nrows()
    }

    pub fn m_eq(&self) -> usize {
        self.a_eq.nrows()
    }

    /// Stacked `[A_in; A_eq]`.
    pub fn stacked_coupling(&self) -> DMatrix<T> {
        let (m_in, m_eq, d) = (self.m_in(), self.m_eq(), self.dim());
        let mut a = DMatrix::zeros(m_in + m_eq, d);
        a.rows_mut(0, m_in).copy_from(&self.a_in);
        a.rows_mut(m_in, m_eq).copy_from(&self.a_eq);
        a
    }
}

/// Right-hand side of the coupling rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpec<T: Scalar> {
    pub b_in: DVector<T>,
    pub b_eq: DVector<T>,
}

impl<T: Scalar> CouplingSpec<T> {
    pub fn m_in(&self) -> usize {
        self.b_in.len()
    }

    pub fn m_eq(&self) -> usize {
        self.b_eq.len()
    }
}

/// Node roles of the multi-resource family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    RenewableGen,
    CoalGen,
    Consumer,
}

/// Generator metadata retained so that the tagged initial shares can be
/// reconstructed.
#[derive(Debug, Clone, PartialEq)]
pub enum Family<T: Scalar> {
    /// Per-node lower bounds of the dispatch boxes.
    Dispatch { lower: Vec<T> },
    /// Per-node lower-bound vectors of the two-resource nodes.
    MultiResource {
        lower: Vec<DVector<T>>,
        roles: Vec<Role>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance<T: Scalar> {
    pub nodes: Vec<NodeProblem<T>>,
    pub coupling: CouplingSpec<T>,
    pub graph: Graph,
    pub barrier: BarrierSpec<T>,
    /// User assertion that the feasible set is bounded, consulted only when
    /// the structure does not certify it.
    pub assume_compact: bool,
    pub family: Option<Family<T>>,
}

impl<T: Scalar> ProblemInstance<T> {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn m_in(&self) -> usize {
        self.coupling.m_in()
    }

    pub fn m_eq(&self) -> usize {
        self.coupling.m_eq()
    }

    pub fn with_barrier(&self, barrier: BarrierSpec<T>) -> Self {
        Self {
            barrier,
            ..self.clone()
        }
    }

    /// Checks that every node's coupling block matches the coupling vector
    /// sizes and the graph has one vertex per node.
    pub fn check_dimensions(&self) -> Result<()> {
        let (m_in, m_eq) = (self.m_in(), self.m_eq());
        if m_in + m_eq == 0 {
            return Err(Error::Dimension(
                "at least one coupling row is required".into(),
            ));
        }
        if self.graph.n() != self.n() {
            return Err(Error::Dimension(format!(
                "graph has {} vertices but instance has {} nodes",
                self.graph.n(),
                self.n()
            )));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.m_in() != m_in || node.m_eq() != m_eq {
                return Err(Error::Dimension(format!(
                    "node {i} has ({}, {}) coupling rows, expected ({m_in}, {m_eq})",
                    node.m_in(),
                    node.m_eq()
                )));
            }
        }
        Ok(())
    }
}

use nalgebra::DVector;

use crate::scalar::Scalar;

/// A node's allocation of the coupling right-hand side, `y_i = (y_in, y_eq)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsShare<T: Scalar> {
    pub y_in: DVector<T>,
    pub y_eq: DVector<T>,
}

impl<T: Scalar> RhsShare<T> {
    pub fn new(y_in: DVector<T>, y_eq: DVector<T>) -> Self {
        Self { y_in, y_eq }
    }

    pub fn equality(y_eq: DVector<T>) -> Self {
        Self {
            y_in: DVector::zeros(0),
            y_eq,
        }
    }

    /// `[y_in; y_eq]`
    pub fn stacked(&self) -> DVector<T> {
        let mut v = DVector::zeros(self.y_in.len() + self.y_eq.len());
        v.rows_mut(0, self.y_in.len()).copy_from(&self.y_in);
        v.rows_mut(self.y_in.len(), self.y_eq.len())
            .copy_from(&self.y_eq);
        v
    }

    pub fn from_stacked(v: &DVector<T>, m_in: usize) -> Self {
        Self {
            y_in: v.rows(0, m_in).into_owned(),
            y_eq: v.rows(m_in, v.len() - m_in).into_owned(),
        }
    }
}

//! Quadratic and affine convex functions used for node objectives and
//! local constraints.

use nalgebra::{DMatrix, DVector, Dyn, Storage, Vector};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// A smooth convex function on `R^d`.
///
/// `Quadratic` evaluates `0.5 x'Qx + q'x + r`; `Affine` evaluates `a'x + beta`.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothConvexFn<T: Scalar> {
    Quadratic {
        q_mat: DMatrix<T>,
        q_vec: DVector<T>,
        r: T,
    },
    Affine {
        a: DVector<T>,
        beta: T,
    },
}

/// Symmetric PSD check tolerance, relative to the largest absolute entry.
const PSD_TOL: f64 = 1e-10;

impl<T: Scalar> SmoothConvexFn<T> {
    /// Builds a quadratic, rejecting a non-symmetric or indefinite `Q`.
    pub fn quadratic(q_mat: DMatrix<T>, q_vec: DVector<T>, r: T) -> Result<Self> {
        let d = q_vec.len();
        if q_mat.nrows() != d || q_mat.ncols() != d {
            return Err(Error::Dimension(format!(
                "quadratic term is {}x{} but linear term has length {d}",
                q_mat.nrows(),
                q_mat.ncols()
            )));
        }
        let scale = q_mat.amax().max(T::one());
        let tol = lit::<T>(PSD_TOL) * scale;
        for i in 0..d {
            for j in 0..i {
                if (q_mat[(i, j)] - q_mat[(j, i)]).abs() > tol {
                    return Err(Error::InvalidInstance(format!(
                        "quadratic term not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        if d > 0 {
            let sym = (&q_mat + q_mat.transpose()) * lit::<T>(0.5);
            let min_eig = sym.symmetric_eigenvalues().min();
            if min_eig < -tol {
                return Err(Error::InvalidInstance(format!(
                    "quadratic term not positive semidefinite (min eigenvalue {min_eig:e})"
                )));
            }
        }
        Ok(Self::Quadratic { q_mat, q_vec, r })
    }

    pub fn affine(a: DVector<T>, beta: T) -> Self {
        Self::Affine { a, beta }
    }

    /// `x[k] - upper <= 0` on `R^dim`.
    pub fn upper_bound(dim: usize, k: usize, upper: T) -> Self {
        let mut a = DVector::zeros(dim);
        a[k] = T::one();
        Self::Affine { a, beta: -upper }
    }

    /// `lower - x[k] <= 0` on `R^dim`.
    pub fn lower_bound(dim: usize, k: usize, lower: T) -> Self {
        let mut a = DVector::zeros(dim);
        a[k] = -T::one();
        Self::Affine { a, beta: lower }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Quadratic { q_vec, .. } => q_vec.len(),
            Self::Affine { a, .. } => a.len(),
        }
    }

    pub fn eval<S: Storage<T, Dyn>>(&self, x: &Vector<T, Dyn, S>) -> T {
        match self {
            Self::Quadratic { q_mat, q_vec, r } => {
                let qx = q_mat * x;
                lit::<T>(0.5) * x.dot(&qx) + q_vec.dot(x) + *r
            }
            Self::Affine { a, beta } => a.dot(x) + *beta,
        }
    }

    pub fn gradient<S: Storage<T, Dyn>>(&self, x: &Vector<T, Dyn, S>) -> DVector<T> {
        match self {
            Self::Quadratic { q_mat, q_vec, .. } => q_mat * x + q_vec,
            Self::Affine { a, .. } => a.clone(),
        }
    }

    pub fn hessian(&self) -> DMatrix<T> {
        match self {
            Self::Quadratic { q_mat, .. } => q_mat.clone(),
            Self::Affine { a, .. } => DMatrix::zeros(a.len(), a.len()),
        }
    }

    /// Accumulates `weight * hessian` into `out` without allocating.
    pub(crate) fn add_hessian_to(&self, out: &mut DMatrix<T>, weight: T) {
        if let Self::Quadratic { q_mat, .. } = self {
            *out += q_mat * weight;
        }
    }

    /// If this is a single-coordinate affine bound, returns
    /// `(coordinate, is_upper, bound)`.
    pub fn as_coordinate_bound(&self) -> Option<(usize, bool, T)> {
        let Self::Affine { a, beta } = self else {
            return None;
        };
        let mut nz = a.iter().enumerate().filter(|(_, v)| **v != T::zero());
        let (k, &coef) = nz.next()?;
        if nz.next().is_some() {
            return None;
        }
        // coef * x_k + beta <= 0
        let bound = -*beta / coef;
        Some((k, coef > T::zero(), bound))
    }

    /// Largest `alpha > 0` with `g(x + alpha d) < 0` for every smaller step,
    /// given `g(x) < 0`. Infinite when the ray never reaches the boundary.
    pub fn boundary_step<S1, S2>(&self, x: &Vector<T, Dyn, S1>, d: &Vector<T, Dyn, S2>) -> T
    where
        S1: Storage<T, Dyn>,
        S2: Storage<T, Dyn>,
    {
        let g0 = self.eval(x);
        let g1 = self.gradient(x).dot(d);
        let g2 = match self {
            Self::Quadratic { q_mat, .. } => lit::<T>(0.5) * d.dot(&(q_mat * d)),
            Self::Affine { .. } => T::zero(),
        };
        positive_root(g0, g1, g2)
    }
}

/// Smallest positive root of `g0 + g1 a + g2 a^2` for `g0 < 0`, `g2 >= 0`.
pub(crate) fn positive_root<T: Scalar>(g0: T, g1: T, g2: T) -> T {
    let zero = T::zero();
    if g0 >= zero {
        return zero;
    }
    if g2 <= zero {
        return if g1 > zero {
            -g0 / g1
        } else {
            crate::scalar::infinity()
        };
    }
    let disc = g1 * g1 - lit::<T>(4.0) * g2 * g0;
    // Denominator is strictly positive because g0 < 0.
    lit::<T>(-2.0) * g0 / (g1 + disc.sqrt())
}

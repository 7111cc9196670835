//! Equality-constrained damped Newton centering on the null space of the
//! equality rows.

use nalgebra::{DMatrix, DVector};

use super::SolverSettings;
use crate::error::{Error, Result};
use crate::scalar::{epsilon, lit, Scalar};

/// Orthogonal decomposition of an equality system `A x = r` with `A`
/// of full row rank: `A' = Q1 R`, null space basis `Z`.
#[derive(Debug, Clone)]
pub(crate) struct EqualityFrame<T: Scalar> {
    a: DMatrix<T>,
    q1: DMatrix<T>,
    r: DMatrix<T>,
    pub(crate) z: DMatrix<T>,
}

impl<T: Scalar> EqualityFrame<T> {
    pub(crate) fn new(a: &DMatrix<T>) -> Result<Self> {
        let (m, n) = a.shape();
        if m == 0 {
            return Ok(Self {
                a: a.clone(),
                q1: DMatrix::zeros(n, 0),
                r: DMatrix::zeros(0, 0),
                z: DMatrix::identity(n, n),
            });
        }
        if m > n {
            return Err(Error::Dimension(format!(
                "{m} equality rows exceed {n} variables"
            )));
        }
        let qr = a.transpose().qr();
        let mut q_full_t = DMatrix::<T>::identity(n, n);
        qr.q_tr_mul(&mut q_full_t);
        let q_full = q_full_t.transpose();
        let r = qr.r();
        let diag_max = r.diagonal().amax();
        let rank_tol = lit::<T>(1e-12) * diag_max.max(T::one());
        if let Some(k) = (0..m).find(|&k| r[(k, k)].abs() <= rank_tol) {
            return Err(Error::Dimension(format!(
                "equality rows are rank deficient (pivot {k})"
            )));
        }
        Ok(Self {
            a: a.clone(),
            q1: q_full.columns(0, m).into_owned(),
            r,
            z: q_full.columns(m, n - m).into_owned(),
        })
    }

    /// Minimum-norm correction moving `x` onto `A x = rhs`.
    pub(crate) fn project(&self, x: &DVector<T>, rhs: &DVector<T>) -> DVector<T> {
        if self.r.nrows() == 0 {
            return x.clone();
        }
        let resid = rhs - &self.a * x;
        let w = self
            .r
            .tr_solve_upper_triangular(&resid)
            .expect("nonsingular triangular factor");
        x + &self.q1 * w
    }

    /// Least-squares solution of `A' u = -w`.
    pub(crate) fn multiplier(&self, w: &DVector<T>) -> DVector<T> {
        if self.r.nrows() == 0 {
            return DVector::zeros(0);
        }
        let rhs = -(self.q1.transpose() * w);
        self.r
            .solve_upper_triangular(&rhs)
            .expect("nonsingular triangular factor")
    }
}

/// Smooth function with an open convex domain, minimized by [`center`].
pub(crate) trait Merit<T: Scalar> {
    /// `None` outside the domain.
    fn value(&self, x: &DVector<T>) -> Option<T>;
    fn grad_hess(&self, x: &DVector<T>) -> Option<(DVector<T>, DMatrix<T>)>;
    /// Largest step along `d` that stays in the closure of the domain.
    fn boundary_step(&self, x: &DVector<T>, d: &DVector<T>) -> T;
}

#[derive(Debug, Clone)]
pub(crate) struct CenterStats<T: Scalar> {
    pub iters: usize,
    pub converged: bool,
    /// Merit value at the start and after every accepted step.
    pub merits: Vec<T>,
}

const MAX_BACKTRACKS: usize = 60;

/// Minimizes `merit` over `x + range(z)` starting from the strictly
/// feasible `x`, which is updated in place.
pub(crate) fn center<T: Scalar, M: Merit<T>>(
    merit: &M,
    x: &mut DVector<T>,
    z: &DMatrix<T>,
    settings: &SolverSettings<T>,
    record: bool,
) -> CenterStats<T> {
    let mut merits = Vec::new();
    let mut v = match merit.value(x) {
        Some(v) => v,
        None => {
            return CenterStats {
                iters: 0,
                converged: false,
                merits,
            }
        }
    };
    if record {
        merits.push(v);
    }
    let half = lit::<T>(0.5);
    let eps = epsilon::<T>();
    let newton_tol = settings.kkt_tol * settings.kkt_tol;

    if z.ncols() == 0 {
        return CenterStats {
            iters: 0,
            converged: true,
            merits,
        };
    }
    let mut stalled_dec: Option<T> = None;
    for it in 0..settings.max_newton {
        let Some((g, h)) = merit.grad_hess(x) else {
            break;
        };
        let gr = z.transpose() * &g;
        let mut hr = z.transpose() * &h * z;
        hr = (&hr + hr.transpose()) * half;
        let Some(p) = solve_spd(&hr, &(-&gr)) else {
            break;
        };
        let mut decrement_sq = -gr.dot(&p);
        if decrement_sq < T::zero() {
            decrement_sq = T::zero();
        }
        let scale = T::one().max(v.abs());
        let small_gradient = gr.norm() <= settings.kkt_tol * (T::one() + g.norm());
        if decrement_sq * half <= newton_tol * scale && small_gradient {
            return CenterStats {
                iters: it,
                converged: true,
                merits,
            };
        }
        let d = z * &p;
        let alpha0 = T::one().min(settings.fraction_to_boundary * merit.boundary_step(x, &d));
        let mut alpha = alpha0;
        let noise = lit::<T>(10.0) * eps * scale;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = &*x + &d * alpha;
            if let Some(vt) = merit.value(&trial) {
                if vt <= v - settings.armijo * alpha * decrement_sq + noise {
                    accepted = Some((trial, vt));
                    break;
                }
            }
            alpha *= settings.backtrack;
        }
        let floor = lit::<T>(1e3) * eps * scale;
        if accepted.as_ref().is_none_or(|(_, vt)| v - *vt <= noise) {
            if decrement_sq * half <= floor {
                if let Some((trial, vt)) = accepted {
                    *x = trial;
                    if record {
                        merits.push(vt);
                    }
                }
                return CenterStats {
                    iters: it + 1,
                    converged: true,
                    merits,
                };
            }
            // The merit value no longer resolves the predicted decrease. Take
            // the full step if the slope along `d` shrinks there, and stop
            // once the decrement no longer contracts.
            let full = &*x + &d * alpha0;
            let slope = merit
                .grad_hess(&full)
                .map(|(gf, _)| (z.transpose() * gf).dot(&p).abs());
            match (slope, merit.value(&full)) {
                (Some(sl), Some(vf)) if sl <= decrement_sq => {
                    let stalled = stalled_dec.is_some_and(|prev| decrement_sq >= prev * lit(0.25));
                    *x = full;
                    v = vf;
                    if record {
                        merits.push(v);
                    }
                    if stalled {
                        return CenterStats {
                            iters: it + 1,
                            converged: true,
                            merits,
                        };
                    }
                    stalled_dec = Some(decrement_sq);
                    continue;
                }
                _ if accepted.is_some() => {}
                _ => {
                    return CenterStats {
                        iters: it + 1,
                        converged: false,
                        merits,
                    }
                }
            }
        }
        let (trial, vt) = accepted.expect("accepted step");
        stalled_dec = None;
        *x = trial;
        v = vt;
        if record {
            merits.push(v);
        }
    }
    CenterStats {
        iters: settings.max_newton,
        converged: false,
        merits,
    }
}

/// Solves `H p = b` for symmetric positive (semi)definite `H`, adding a
/// growing diagonal shift when the Cholesky factorization fails.
pub(crate) fn solve_spd<T: Scalar>(h: &DMatrix<T>, b: &DVector<T>) -> Option<DVector<T>> {
    if let Some(ch) = h.clone().cholesky() {
        return Some(ch.solve(b));
    }
    let n = h.nrows();
    let base = h.diagonal().amax().max(T::one());
    let mut shift = lit::<T>(1e-12) * base;
    for _ in 0..12 {
        let shifted = h + DMatrix::identity(n, n) * shift;
        if let Some(ch) = shifted.cholesky() {
            return Some(ch.solve(b));
        }
        shift *= lit::<T>(100.0);
    }
    None
}

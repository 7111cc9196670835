//! Merit functions minimized by the centering loop.

use nalgebra::{DMatrix, DVector};

use super::newton::Merit;
use super::program::ConstrainedProgram;
use crate::model::{positive_root, BarrierSpec};
use crate::scalar::{infinity, lit, Scalar};

/// `sum_b F_b(x_b) - mu * sum_k log(rhs_in - A_in x)_k`, with the local
/// barriers of `F_b` weighted by `barrier`. Rows flagged in `pinned` are
/// held as equalities by the caller and left out of the sum.
pub(crate) struct PathMerit<'p, 'a, T: Scalar> {
    pub program: &'p ConstrainedProgram<'a, T>,
    pub barrier: BarrierSpec<T>,
    pub mu: T,
    pub pinned: &'p [bool],
}

impl<T: Scalar> PathMerit<'_, '_, T> {
    fn free(&self, k: usize) -> bool {
        !self.pinned.get(k).copied().unwrap_or(false)
    }
}

impl<T: Scalar> Merit<T> for PathMerit<'_, '_, T> {
    fn value(&self, x: &DVector<T>) -> Option<T> {
        let mut v = T::zero();
        for (off, f) in self.program.objectives_with(self.barrier) {
            v += f.value(&x.rows(off, f.dim())).ok()?;
        }
        if self.program.m_in() > 0 {
            for (k, s) in self.program.slacks(x).iter().enumerate() {
                if !self.free(k) {
                    continue;
                }
                if !(*s > T::zero()) {
                    return None;
                }
                v -= self.mu * s.ln();
            }
        }
        v.is_finite().then_some(v)
    }

    fn grad_hess(&self, x: &DVector<T>) -> Option<(DVector<T>, DMatrix<T>)> {
        let n = self.program.dim();
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        for (off, f) in self.program.objectives_with(self.barrier) {
            let d = f.dim();
            let xb = x.rows(off, d);
            let mut gb = DVector::zeros(d);
            let mut hb = DMatrix::zeros(d, d);
            f.add_derivatives(&xb, Some(&mut gb), &mut hb).ok()?;
            g.rows_mut(off, d).copy_from(&gb);
            h.view_mut((off, off), (d, d)).copy_from(&hb);
        }
        if self.program.m_in() > 0 {
            let a = self.program.a_in();
            let s = self.program.slacks(x);
            for (k, sk) in s.iter().enumerate() {
                if !self.free(k) {
                    continue;
                }
                if !(*sk > T::zero()) {
                    return None;
                }
                let row = a.row(k).transpose();
                let inv = T::one() / *sk;
                g += &row * (self.mu * inv);
                h.ger(self.mu * inv * inv, &row, &row, T::one());
            }
        }
        Some((g, h))
    }

    fn boundary_step(&self, x: &DVector<T>, d: &DVector<T>) -> T {
        let mut step = infinity::<T>();
        for (off, f) in self.program.objectives() {
            step = step.min(f.boundary_step(&x.rows(off, f.dim()), &d.rows(off, f.dim())));
        }
        if self.program.m_in() > 0 {
            let s = self.program.slacks(x);
            let ad = self.program.a_in() * d;
            for (k, (sk, adk)) in s.iter().zip(ad.iter()).enumerate() {
                if self.free(k) && *adk > T::zero() {
                    step = step.min(*sk / *adk);
                }
            }
        }
        step
    }
}

/// Phase-I merit over `z = (x, t)`:
///
/// ```text
/// t + mu/2 |x - x0|^2 - mu [ sum log(t - g_j(x)) + sum log(rhs_in + t - A_in x) + log(t + 1) ]
/// ```
pub(crate) struct PhaseOneMerit<'p, 'a, T: Scalar> {
    pub program: &'p ConstrainedProgram<'a, T>,
    pub anchor: DVector<T>,
    pub mu: T,
}

impl<T: Scalar> PhaseOneMerit<'_, '_, T> {
    /// Every slack of the augmented constraint system at `z`.
    fn slacks(&self, z: &DVector<T>) -> Vec<T> {
        let n = self.program.dim();
        let x = z.rows(0, n).into_owned();
        let t = z[n];
        let mut out = Vec::new();
        for (off, f) in self.program.objectives() {
            let xb = x.rows(off, f.dim());
            out.extend(f.node.local_constraints.iter().map(|g| t - g.eval(&xb)));
        }
        out.extend(self.program.slacks(&x).iter().map(|s| *s + t));
        out.push(t + T::one());
        out
    }
}

impl<T: Scalar> Merit<T> for PhaseOneMerit<'_, '_, T> {
    fn value(&self, z: &DVector<T>) -> Option<T> {
        let n = self.program.dim();
        let t = z[n];
        let dx = z.rows(0, n) - &self.anchor;
        let mut v = t + lit::<T>(0.5) * self.mu * dx.norm_squared();
        for s in self.slacks(z) {
            if !(s > T::zero()) {
                return None;
            }
            v -= self.mu * s.ln();
        }
        v.is_finite().then_some(v)
    }

    fn grad_hess(&self, z: &DVector<T>) -> Option<(DVector<T>, DMatrix<T>)> {
        let n = self.program.dim();
        let mu = self.mu;
        let t = z[n];
        let mut g = DVector::zeros(n + 1);
        let mut h = DMatrix::zeros(n + 1, n + 1);
        g[n] = T::one();
        let dx = z.rows(0, n) - &self.anchor;
        g.rows_mut(0, n).axpy(mu, &dx, T::one());
        for i in 0..n {
            h[(i, i)] += mu;
        }
        // -mu log(s) with s affine-or-concave in z: grad -mu ds/s,
        // hess mu (ds ds'/s^2 - d2s/s).
        let mut add_term = |ds: &DVector<T>, s: T, curv: Option<(usize, &DMatrix<T>)>| {
            let inv = T::one() / s;
            g.axpy(-mu * inv, ds, T::one());
            h.ger(mu * inv * inv, ds, ds, T::one());
            if let Some((off, q)) = curv {
                let d = q.nrows();
                let mut blk = h.view_mut((off, off), (d, d));
                blk += q * (mu * inv);
            }
        };
        for (off, f) in self.program.objectives() {
            let d = f.dim();
            let xb = z.rows(off, d);
            for gj in &f.node.local_constraints {
                let s = t - gj.eval(&xb);
                if !(s > T::zero()) {
                    return None;
                }
                let mut ds = DVector::zeros(n + 1);
                ds.rows_mut(off, d).copy_from(&(-gj.gradient(&xb)));
                ds[n] = T::one();
                let q = gj.hessian();
                add_term(&ds, s, Some((off, &q)));
            }
        }
        if self.program.m_in() > 0 {
            let x = z.rows(0, n).into_owned();
            let sl = self.program.slacks(&x);
            for (k, sk) in sl.iter().enumerate() {
                let s = *sk + t;
                if !(s > T::zero()) {
                    return None;
                }
                let mut ds = DVector::zeros(n + 1);
                ds.rows_mut(0, n)
                    .copy_from(&(-self.program.a_in().row(k).transpose()));
                ds[n] = T::one();
                add_term(&ds, s, None);
            }
        }
        let s = t + T::one();
        if !(s > T::zero()) {
            return None;
        }
        let mut ds = DVector::zeros(n + 1);
        ds[n] = T::one();
        add_term(&ds, s, None);
        Some((g, h))
    }

    fn boundary_step(&self, z: &DVector<T>, dz: &DVector<T>) -> T {
        let n = self.program.dim();
        let t = z[n];
        let dt = dz[n];
        let mut step = infinity::<T>();
        for (off, f) in self.program.objectives() {
            let d = f.dim();
            let xb = z.rows(off, d);
            let db = dz.rows(off, d);
            for gj in &f.node.local_constraints {
                // g(x + a dx) - t - a dt <= 0
                let g0 = gj.eval(&xb) - t;
                let g1 = gj.gradient(&xb).dot(&db) - dt;
                let g2 = lit::<T>(0.5) * db.dot(&(gj.hessian() * db));
                step = step.min(positive_root(g0, g1, g2));
            }
        }
        if self.program.m_in() > 0 {
            let x = z.rows(0, n).into_owned();
            let dx = dz.rows(0, n).into_owned();
            let sl = self.program.slacks(&x);
            let ad = self.program.a_in() * dx;
            for (sk, adk) in sl.iter().zip(ad.iter()) {
                let rate = *adk - dt;
                if rate > T::zero() {
                    step = step.min((*sk + t) / rate);
                }
            }
        }
        if dt < T::zero() {
            step = step.min((t + T::one()) / -dt);
        }
        step
    }
}

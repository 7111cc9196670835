use std::fmt;

use nalgebra::DVector;

use super::EngineState;
use crate::model::{barrier_objective, ProblemInstance};
use crate::scalar::{infinity, to_f64, Scalar};

const COUPLING_TOL: f64 = 1e-8;
const CONSERVATION_TOL: f64 = 1e-10;
const SHARE_TOL: f64 = 1e-9;
const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AuditCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Measured violation (or largest constraint value for interiority).
    pub magnitude: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<18} {}  {:.3e} (tol {:.0e})",
                c.name,
                if c.passed { "ok  " } else { "FAIL" },
                c.magnitude,
                c.tolerance
            )?;
        }
        Ok(())
    }
}

fn check(name: &'static str, magnitude: f64, tolerance: f64) -> AuditCheck {
    AuditCheck {
        name,
        passed: magnitude <= tolerance,
        magnitude,
        tolerance,
    }
}

pub(super) fn audit<T: Scalar>(inst: &ProblemInstance<T>, state: &EngineState<T>) -> AuditReport {
    let mut a_in_x = DVector::zeros(inst.m_in());
    let mut a_eq_x = DVector::zeros(inst.m_eq());
    let mut worst_g = f64::NEG_INFINITY;
    let mut share_err = 0.0_f64;
    let mut consistency = 0.0_f64;
    for ((node, x), (y, phi)) in inst
        .nodes
        .iter()
        .zip(&state.x)
        .zip(state.y.iter().zip(&state.phi))
    {
        let ax_in = &node.a_in * x;
        let ax_eq = &node.a_eq * x;
        for g in &node.local_constraints {
            worst_g = worst_g.max(to_f64(g.eval(x)));
        }
        for (a, b) in ax_in.iter().zip(y.y_in.iter()) {
            share_err = share_err.max(to_f64(*a - *b));
        }
        share_err = share_err.max(to_f64((&ax_eq - &y.y_eq).amax()));
        let big_f = barrier_objective(node, inst.barrier)
            .value(x)
            .unwrap_or_else(|_| infinity());
        let rel = to_f64((big_f - *phi).abs() / (T::one() + phi.abs()));
        consistency = consistency.max(if rel.is_nan() { f64::INFINITY } else { rel });
        a_in_x += ax_in;
        a_eq_x += ax_eq;
    }
    let coupling_in = (a_in_x - &inst.coupling.b_in)
        .iter()
        .fold(0.0_f64, |a, v| a.max(to_f64(*v)));
    let coupling_eq = to_f64((a_eq_x - &inst.coupling.b_eq).norm());
    let (sum_in, sum_eq) = state.share_sums();
    let conservation = to_f64(
        (sum_in - &inst.coupling.b_in)
            .amax()
            .max((sum_eq - &inst.coupling.b_eq).amax()),
    );

    AuditReport {
        checks: vec![
            check("coupling_in", coupling_in, COUPLING_TOL),
            check("coupling_eq", coupling_eq, COUPLING_TOL),
            AuditCheck {
                name: "interiority",
                passed: worst_g < 0.0,
                magnitude: worst_g,
                tolerance: 0.0,
            },
            check("conservation", conservation, CONSERVATION_TOL),
            check("share_feasibility", share_err, SHARE_TOL),
            check("phi_consistency", consistency, CONSISTENCY_TOL),
        ],
    }
}

use std::fmt;

use nalgebra::DVector;

use super::ProblemInstance;
use crate::localsolve::{phase1, ConstrainedProgram, PhaseOneOutcome, SolverSettings};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Not certified from structure; accepted on the instance's say-so.
    Asserted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }

    fn push(&mut self, name: &'static str, status: CheckStatus, detail: impl Into<String>) {
        self.checks.push(Check {
            name,
            status,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = match c.status {
                CheckStatus::Pass => "PASS",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Asserted => "ASSERTED",
            };
            writeln!(f, "{tag:8} {:12} {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Relative singular-value threshold of the rank test.
const RANK_TOL: f64 = 1e-9;

/// Runs the structural checks and a phase-I Slater certification.
pub fn validate_instance<T: Scalar>(inst: &ProblemInstance<T>) -> ValidationReport {
    let mut report = ValidationReport::default();

    let dims_ok = match inst.check_dimensions() {
        Ok(()) => {
            report.push(
                "dimensions",
                CheckStatus::Pass,
                format!(
                    "n = {}, m_in = {}, m_eq = {}",
                    inst.n(),
                    inst.m_in(),
                    inst.m_eq()
                ),
            );
            true
        }
        Err(e) => {
            report.push("dimensions", CheckStatus::Fail, e.to_string());
            false
        }
    };

    let mut rank_failures = Vec::new();
    for (i, node) in inst.nodes.iter().enumerate() {
        let a = node.stacked_coupling();
        let m = a.nrows();
        let rank = if m == 0 {
            0
        } else {
            let sv = a.clone().singular_values();
            let top = sv.max();
            sv.iter()
                .filter(|s| **s > lit::<T>(RANK_TOL) * top && **s > T::zero())
                .count()
        };
        if rank < m {
            rank_failures.push(format!("node {i}: rank {rank} < {m}"));
        }
    }
    if rank_failures.is_empty() {
        report.push(
            "rank",
            CheckStatus::Pass,
            "every stacked coupling block has full row rank",
        );
    } else {
        report.push("rank", CheckStatus::Fail, rank_failures.join("; "));
    }

    if inst.graph.is_connected() {
        report.push(
            "connectivity",
            CheckStatus::Pass,
            format!("{} edges", inst.graph.edge_count()),
        );
    } else {
        report.push(
            "connectivity",
            CheckStatus::Fail,
            "communication graph is not connected",
        );
    }

    if certify_compactness(inst) {
        report.push(
            "compactness",
            CheckStatus::Pass,
            "feasible set bounded by box or sum-type rows",
        );
    } else if inst.assume_compact {
        report.push(
            "compactness",
            CheckStatus::Asserted,
            "not certified from structure; asserted by instance",
        );
    } else {
        report.push(
            "compactness",
            CheckStatus::Fail,
            "boundedness not certified; set assume_compact to assert it",
        );
    }

    if !dims_ok {
        report.push(
            "slater",
            CheckStatus::Fail,
            "skipped: inconsistent dimensions",
        );
        return report;
    }
    let program = match ConstrainedProgram::new(
        inst.nodes.iter().collect(),
        inst.barrier,
        inst.coupling.b_in.clone(),
        inst.coupling.b_eq.clone(),
    ) {
        Ok(p) => p,
        Err(e) => {
            report.push("slater", CheckStatus::Fail, e.to_string());
            return report;
        }
    };
    match phase1(&program, &SolverSettings::default()) {
        Ok(PhaseOneOutcome::Feasible(x)) => {
            let min_slack = program
                .slacks(&x)
                .iter()
                .copied()
                .fold(crate::scalar::infinity::<T>(), |a, b| a.min(b));
            report.push(
                "slater",
                CheckStatus::Pass,
                format!("strictly feasible point found (min coupling slack {min_slack:e})"),
            );
        }
        Ok(PhaseOneOutcome::Infeasible { min_t }) => report.push(
            "slater",
            CheckStatus::Fail,
            format!("no strictly feasible point (phase I t = {min_t:e})"),
        ),
        Err(e) => report.push("slater", CheckStatus::Fail, e.to_string()),
    }
    report
}

/// Certifies boundedness of the feasible set for two structural patterns:
/// every coordinate boxed by local constraints, or coordinates bounded on
/// one side locally and on the other by a coupling row whose remaining
/// variables are bounded in the matching direction (the `sum x <= b,
/// x >= 0` pattern). Quadratic local constraints with a definite Hessian
/// bound all coordinates of their node.
pub fn certify_compactness<T: Scalar>(inst: &ProblemInstance<T>) -> bool {
    if inst.check_dimensions().is_err() {
        return false;
    }
    let mut lower: Vec<Vec<bool>> = inst.nodes.iter().map(|n| vec![false; n.dim()]).collect();
    let mut upper = lower.clone();
    for (i, node) in inst.nodes.iter().enumerate() {
        for g in &node.local_constraints {
            if let Some((k, is_upper, _)) = g.as_coordinate_bound() {
                if is_upper {
                    upper[i][k] = true;
                } else {
                    lower[i][k] = true;
                }
            } else if let super::SmoothConvexFn::Quadratic { q_mat, .. } = g {
                if q_mat.clone().cholesky().is_some() {
                    lower[i].iter_mut().for_each(|b| *b = true);
                    upper[i].iter_mut().for_each(|b| *b = true);
                }
            }
        }
    }

    // (row coefficients per node, allowed orientations)
    let mut rows: Vec<(Vec<DVector<T>>, Vec<T>)> = Vec::new();
    for r in 0..inst.m_in() {
        let coefs = inst
            .nodes
            .iter()
            .map(|n| n.a_in.row(r).transpose())
            .collect();
        rows.push((coefs, vec![T::one()]));
    }
    for r in 0..inst.m_eq() {
        let coefs = inst
            .nodes
            .iter()
            .map(|n| n.a_eq.row(r).transpose())
            .collect();
        rows.push((coefs, vec![T::one(), -T::one()]));
    }

    loop {
        let mut changed = false;
        for (coefs, orientations) in &rows {
            for &sigma in orientations {
                let usable = coefs.iter().enumerate().all(|(i, c)| {
                    c.iter().enumerate().all(|(k, a)| {
                        let a = *a * sigma;
                        (a <= T::zero() || lower[i][k]) && (a >= T::zero() || upper[i][k])
                    })
                });
                if !usable {
                    continue;
                }
                for (i, c) in coefs.iter().enumerate() {
                    for (k, a) in c.iter().enumerate() {
                        let a = *a * sigma;
                        if a > T::zero() && !upper[i][k] {
                            upper[i][k] = true;
                            changed = true;
                        }
                        if a < T::zero() && !lower[i][k] {
                            lower[i][k] = true;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    lower
        .iter()
        .flatten()
        .chain(upper.iter().flatten())
        .all(|b| *b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        gen_economic_dispatch, BarrierSpec, CouplingSpec, DispatchParams, NodeProblem,
        SmoothConvexFn,
    };
    use crate::network::Graph;
    use nalgebra::{dmatrix, dvector};

    fn dispatch(n: usize, graph: Graph) -> ProblemInstance<f64> {
        gen_economic_dispatch(
            &DispatchParams {
                costs: (0..n).map(|i| (1.0 + i as f64, 0.5, 0.0)).collect(),
                bounds: vec![(0.0, 2.0); n],
                demand: n as f64,
            },
            graph,
            BarrierSpec::log(1e-4),
        )
        .unwrap()
    }

    #[test]
    fn generated_dispatch_passes() {
        let report = validate_instance(&dispatch(5, Graph::path(5)));
        assert!(report.is_valid(), "{report}");
        assert_eq!(report.get("compactness").unwrap().status, CheckStatus::Pass);
    }

    #[test]
    fn rank_deficient_node() {
        let f = SmoothConvexFn::quadratic(dmatrix![2.0], dvector![0.0], 0.0).unwrap();
        let node = NodeProblem::box_1d(f, 0.0, 2.0, 1, 1);
        let inst = ProblemInstance {
            nodes: vec![node.clone(), node],
            coupling: CouplingSpec {
                b_in: dvector![3.0],
                b_eq: dvector![2.0],
            },
            graph: Graph::path(2),
            barrier: BarrierSpec::log(1e-4),
            assume_compact: false,
            family: None,
        };
        let report = validate_instance(&inst);
        assert_eq!(report.get("rank").unwrap().status, CheckStatus::Fail);
        assert!(!report.is_valid());
    }

    #[test]
    fn disconnected_graph() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let report = validate_instance(&dispatch(4, g));
        assert_eq!(
            report.get("connectivity").unwrap().status,
            CheckStatus::Fail
        );
    }

    #[test]
    fn unbounded_instance_needs_assertion() {
        let f = SmoothConvexFn::quadratic(dmatrix![2.0], dvector![0.0], 0.0).unwrap();
        let node =
            NodeProblem::new(f, vec![], dmatrix![1.0], nalgebra::DMatrix::zeros(0, 1)).unwrap();
        let mut inst = ProblemInstance {
            nodes: vec![node.clone(), node],
            coupling: CouplingSpec {
                b_in: dvector![1.0],
                b_eq: nalgebra::DVector::zeros(0),
            },
            graph: Graph::path(2),
            barrier: BarrierSpec::log(1e-4),
            assume_compact: false,
            family: None,
        };
        assert_eq!(
            validate_instance(&inst).get("compactness").unwrap().status,
            CheckStatus::Fail
        );
        inst.assume_compact = true;
        let report = validate_instance(&inst);
        assert_eq!(
            report.get("compactness").unwrap().status,
            CheckStatus::Asserted
        );
        assert!(report.is_valid());
    }

    #[test]
    fn missing_interior_point() {
        // Both nodes must sit at x = 0 to meet the equality.
        let f = SmoothConvexFn::quadratic(dmatrix![2.0], dvector![0.0], 0.0).unwrap();
        let node = NodeProblem::box_1d(f, 0.0, 1.0, 0, 1);
        let inst = ProblemInstance {
            nodes: vec![node.clone(), node],
            coupling: CouplingSpec {
                b_in: nalgebra::DVector::zeros(0),
                b_eq: dvector![0.0],
            },
            graph: Graph::path(2),
            barrier: BarrierSpec::log(1e-4),
            assume_compact: false,
            family: None,
        };
        assert_eq!(
            validate_instance(&inst).get("slater").unwrap().status,
            CheckStatus::Fail
        );
    }
}

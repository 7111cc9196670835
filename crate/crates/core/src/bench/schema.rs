//! JSON instance files.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::model::{
    validate_instance, BarrierKind, BarrierSpec, CouplingSpec, Family, NodeProblem,
    ProblemInstance, Role, SmoothConvexFn,
};
use crate::network::Graph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub nodes: Vec<NodeFile>,
    pub coupling: CouplingFile,
    pub graph: GraphFile,
    pub barrier: BarrierFile,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub assume_compact: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeFile {
    pub objective: FunctionFile,
    #[serde(default)]
    pub constraints: Vec<FunctionFile>,
    #[serde(rename = "A_in", default)]
    pub a_in: Vec<Vec<f64>>,
    #[serde(rename = "A_eq", default)]
    pub a_eq: Vec<Vec<f64>>,
}

/// `quadratic`: `1/2 x'Qx + q'x + r`; `affine`: `a'x + beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum FunctionFile {
    Quadratic {
        #[serde(rename = "Q")]
        q_mat: Vec<Vec<f64>>,
        q: Vec<f64>,
        #[serde(default)]
        r: f64,
    },
    Affine {
        a: Vec<f64>,
        #[serde(default)]
        beta: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingFile {
    #[serde(default)]
    pub b_in: Vec<f64>,
    #[serde(default)]
    pub b_eq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierFile {
    pub kind: BarrierKind,
    pub c: f64,
}

/// Generator metadata, used to rebuild the family-specific initial shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorFile {
    Dispatch {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        lower: Vec<f64>,
    },
    MultiResource {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        lower: Vec<Vec<f64>>,
        roles: Vec<Role>,
    },
}

/// Optional run settings stored alongside an instance. Command-line flags
/// take precedence.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(default)]
    pub c: Option<Vec<f64>>,
    #[serde(default)]
    pub iters: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub init: Option<String>,
    #[serde(default)]
    pub stop: Option<String>,
    #[serde(default)]
    pub residual_every: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn schema(path: impl std::fmt::Display, msg: impl std::fmt::Display) -> BenchError {
    BenchError::Schema(format!("{path}: {msg}"))
}

fn matrix(rows: &[Vec<f64>], d: usize, path: &str) -> Result<DMatrix<f64>, BenchError> {
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
        return Err(schema(
            format!("{path}[{i}]"),
            format!("row has {} entries, expected {d}", r.len()),
        ));
    }
    Ok(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
}

fn function(spec: &FunctionFile, path: &str) -> Result<SmoothConvexFn<f64>, BenchError> {
    match spec {
        FunctionFile::Quadratic { q_mat, q, r } => {
            let d = q.len();
            if q_mat.len() != d {
                return Err(schema(
                    format!("{path}.Q"),
                    format!("{} rows for a {d}-vector q", q_mat.len()),
                ));
            }
            let qm = matrix(q_mat, d, &format!("{path}.Q"))?;
            SmoothConvexFn::quadratic(qm, DVector::from_vec(q.clone()), *r)
                .map_err(|e| schema(path, e))
        }
        FunctionFile::Affine { a, beta } => {
            Ok(SmoothConvexFn::affine(DVector::from_vec(a.clone()), *beta))
        }
    }
}

fn function_file(f: &SmoothConvexFn<f64>) -> FunctionFile {
    match f {
        SmoothConvexFn::Quadratic { q_mat, q_vec, r } => FunctionFile::Quadratic {
            q_mat: rows(q_mat),
            q: q_vec.as_slice().to_vec(),
            r: *r,
        },
        SmoothConvexFn::Affine { a, beta } => FunctionFile::Affine {
            a: a.as_slice().to_vec(),
            beta: *beta,
        },
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl InstanceFile {
    /// Builds the instance, reporting schema problems with their field path.
    pub fn to_instance(&self) -> Result<ProblemInstance<f64>, BenchError> {
        let barrier = BarrierSpec::new(self.barrier.kind, self.barrier.c)
            .map_err(|e| schema("barrier.c", e))?;
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (i, nf) in self.nodes.iter().enumerate() {
            let path = format!("nodes[{i}]");
            let objective = function(&nf.objective, &format!("{path}.objective"))?;
            let d = objective.dim();
            let constraints = nf
                .constraints
                .iter()
                .enumerate()
                .map(|(j, g)| function(g, &format!("{path}.constraints[{j}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let a_in = matrix(&nf.a_in, d, &format!("{path}.A_in"))?;
            let a_eq = matrix(&nf.a_eq, d, &format!("{path}.A_eq"))?;
            nodes.push(
                NodeProblem::new(objective, constraints, a_in, a_eq)
                    .map_err(|e| schema(&path, e))?,
            );
        }
        if self.graph.n != self.nodes.len() {
            return Err(schema(
                "graph.n",
                format!("{} vertices for {} nodes", self.graph.n, self.nodes.len()),
            ));
        }
        let edges: Vec<(usize, usize)> = self.graph.edges.iter().map(|e| (e[0], e[1])).collect();
        let graph =
            Graph::from_edges(self.graph.n, &edges).map_err(|e| schema("graph.edges", e))?;
        let family = self.generator.as_ref().map(|g| match g {
            GeneratorFile::Dispatch { lower, .. } => Family::Dispatch {
                lower: lower.clone(),
            },
            GeneratorFile::MultiResource { lower, roles, .. } => Family::MultiResource {
                lower: lower.iter().map(|l| DVector::from_vec(l.clone())).collect(),
                roles: roles.clone(),
            },
        });
        let inst = ProblemInstance {
            nodes,
            coupling: CouplingSpec {
                b_in: DVector::from_vec(self.coupling.b_in.clone()),
                b_eq: DVector::from_vec(self.coupling.b_eq.clone()),
            },
            graph,
            barrier,
            assume_compact: self.assume_compact,
            family,
        };
        inst.check_dimensions().map_err(|e| schema("nodes", e))?;
        Ok(inst)
    }

    pub fn from_instance(inst: &ProblemInstance<f64>, seed: Option<u64>) -> Self {
        let generator = inst.family.as_ref().map(|f| match f {
            Family::Dispatch { lower } => GeneratorFile::Dispatch {
                seed,
                lower: lower.clone(),
            },
            Family::MultiResource { lower, roles } => GeneratorFile::MultiResource {
                seed,
                lower: lower.iter().map(|l| l.as_slice().to_vec()).collect(),
                roles: roles.clone(),
            },
        });
        Self {
            nodes: inst
                .nodes
                .iter()
                .map(|n| NodeFile {
                    objective: function_file(&n.objective),
                    constraints: n.local_constraints.iter().map(function_file).collect(),
                    a_in: rows(&n.a_in),
                    a_eq: rows(&n.a_eq),
                })
                .collect(),
            coupling: CouplingFile {
                b_in: inst.coupling.b_in.as_slice().to_vec(),
                b_eq: inst.coupling.b_eq.as_slice().to_vec(),
            },
            graph: GraphFile {
                n: inst.graph.n(),
                edges: inst
                    .graph
                    .edges()
                    .into_iter()
                    .map(|(a, b)| [a, b])
                    .collect(),
            },
            barrier: BarrierFile {
                kind: inst.barrier.kind,
                c: inst.barrier.c,
            },
            assume_compact: inst.assume_compact,
            generator,
            run: None,
        }
    }
}

/// Parses and validates an instance file.
pub fn parse_instance(text: &str) -> Result<(InstanceFile, ProblemInstance<f64>), BenchError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => BenchError::Schema(e.to_string()),
            Category::Io | Category::Syntax | Category::Eof => BenchError::Parse(e.to_string()),
        }
    })?;
    let inst = file.to_instance()?;
    let report = validate_instance(&inst);
    if !report.is_valid() {
        return Err(BenchError::Schema(format!(
            "instance failed validation\n{report}"
        )));
    }
    Ok((file, inst))
}

//! Experiment harness: instance files, run configuration, CSV traces.

mod schema;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

pub use schema::{
    parse_instance, BarrierFile, CouplingFile, FunctionFile, GeneratorFile, GraphFile,
    InstanceFile, NodeFile, RunFile,
};

use crate::engine::{self, InitStrategy, RunOptions, StopReason, StopRule, Trace};
use crate::model::{
    synthetic_dispatch, synthetic_multi_resource, validate_instance, BarrierSpec, ProblemInstance,
};
use crate::oracle::{solve_centralized_barrier, solve_centralized_original, OracleSolution};

/// CSV columns of a run trace.
pub const CSV_HEADER: [&str; 10] = [
    "k",
    "sum_f",
    "sum_F",
    "sum_phi",
    "rel_obj_err",
    "feas_in_err",
    "feas_eq_err",
    "num_leaders",
    "residual_sum",
    "wallclock_ms",
];

/// Below this `|f*|` the relative error column holds the absolute error.
pub const REL_ERR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Schema(String),
    #[error("run failed: {0}")]
    Runtime(String),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_) => 2,
            Self::Schema(_) => 3,
            Self::Runtime(_) => 4,
        }
    }
}

impl From<crate::Error> for BenchError {
    fn from(e: crate::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> BenchError {
    BenchError::Runtime(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitChoice {
    Even,
    FromPoint,
}

impl std::str::FromStr for InitChoice {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "even" => Ok(Self::Even),
            "from-point" => Ok(Self::FromPoint),
            _ => Err(BenchError::Schema(format!(
                "init: expected `even` or `from-point`, got `{s}`"
            ))),
        }
    }
}

/// Parses `none`, `residual:TOL` or `plateau:WINDOW:TOL`.
pub fn parse_stop(s: &str) -> Result<StopRule, BenchError> {
    let bad = || BenchError::Schema(format!("stop: cannot parse `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["none"] => Ok(StopRule::None),
        ["residual", tol] => {
            let tol: f64 = tol.parse().map_err(|_| bad())?;
            if !(tol >= 0.0) {
                return Err(bad());
            }
            Ok(StopRule::Residual(tol))
        }
        ["plateau", window, tol] => Ok(StopRule::Plateau {
            window: window.parse().map_err(|_| bad())?,
            tol: tol.parse().map_err(|_| bad())?,
        }),
        _ => Err(bad()),
    }
}

/// Parses a comma-separated list of barrier weights.
pub fn parse_c_list(s: &str) -> Result<Vec<f64>, BenchError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| BenchError::Schema(format!("c: cannot parse `{t}`")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub c_values: Vec<f64>,
    pub max_iters: usize,
    pub seed: u64,
    pub init: InitChoice,
    pub stop: StopRule,
    pub residual_every: usize,
    /// Directory receiving one CSV per barrier weight.
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(c: f64) -> Self {
        Self {
            c_values: vec![c],
            max_iters: 1000,
            seed: 0,
            init: InitChoice::Even,
            stop: StopRule::None,
            residual_every: 0,
            out: PathBuf::from("out"),
        }
    }

    /// Defaults overridden by the `run` block of an instance file.
    pub fn from_file(file: &InstanceFile) -> Result<Self, BenchError> {
        let mut cfg = Self::new(file.barrier.c);
        if let Some(run) = &file.run {
            if let Some(c) = &run.c {
                cfg.c_values = c.clone();
            }
            if let Some(v) = run.iters {
                cfg.max_iters = v;
            }
            if let Some(v) = run.seed {
                cfg.seed = v;
            }
            if let Some(v) = &run.init {
                cfg.init = v.parse()?;
            }
            if let Some(v) = &run.stop {
                cfg.stop = parse_stop(v)?;
            }
            if let Some(v) = run.residual_every {
                cfg.residual_every = v;
            }
            if let Some(v) = &run.out {
                cfg.out = v.clone();
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.c_values.is_empty() {
            return Err(BenchError::Schema("c: list is empty".into()));
        }
        if let Some(c) = self.c_values.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(BenchError::Schema(format!(
                "c: {c} is not a positive weight"
            )));
        }
        if self.max_iters == 0 {
            return Err(BenchError::Schema("iters: must be at least 1".into()));
        }
        Ok(())
    }

    pub fn csv_path(&self, c: f64) -> PathBuf {
        self.out.join(format!("trace_c{c:e}.csv"))
    }
}

/// Reads an instance file with its run block.
pub fn load_config(path: &Path) -> Result<(RunConfig, ProblemInstance<f64>), BenchError> {
    let text = fs::read_to_string(path)
        .map_err(|e| BenchError::Parse(format!("{}: {e}", path.display())))?;
    let (file, inst) = parse_instance(&text)?;
    let cfg = RunConfig::from_file(&file)?;
    cfg.validate()?;
    Ok((cfg, inst))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub c: f64,
    pub csv: PathBuf,
    pub iterations: usize,
    pub stop: StopReason,
    pub f_star: f64,
    pub final_sum_f: f64,
    pub final_rel_obj_err: f64,
    pub max_feas_eq_err: f64,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "c={:e} iters={} stop={:?} f*={:.10e} sum_f={:.10e} rel_obj_err={:.3e} max_feas_eq_err={:.3e} csv={}",
            self.c,
            self.iterations,
            self.stop,
            self.f_star,
            self.final_sum_f,
            self.final_rel_obj_err,
            self.max_feas_eq_err,
            self.csv.display()
        )
    }
}

/// `(sum_f - f*) / |f*|`, or the absolute error when `f*` is near zero.
pub fn rel_obj_err(sum_f: f64, f_star: f64) -> f64 {
    if f_star.abs() > REL_ERR_FLOOR {
        (sum_f - f_star) / f_star.abs()
    } else {
        sum_f - f_star
    }
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes one trace as CSV.
pub fn write_trace_csv(path: &Path, trace: &Trace<f64>, f_star: f64) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| BenchError::Runtime(format!("{}: {e}", path.display())))?;
    let wrap = |e: csv::Error| BenchError::Runtime(format!("{}: {e}", path.display()));
    w.write_record(CSV_HEADER).map_err(wrap)?;
    for r in &trace.records {
        w.write_record([
            r.k.to_string(),
            float(r.sum_f),
            float(r.sum_big_f),
            float(r.sum_phi),
            float(rel_obj_err(r.sum_f, f_star)),
            float(r.feas_in_err),
            float(r.feas_eq_err),
            r.update_set.len().to_string(),
            r.residual_sum.map(float).unwrap_or_default(),
            format!("{:.6}", r.wallclock_ms),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Runs the engine once per barrier weight against a single `f*`.
pub fn run_experiment(
    inst: &ProblemInstance<f64>,
    cfg: &RunConfig,
) -> Result<Vec<RunSummary>, BenchError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out).map_err(|e| io_err(&cfg.out, e))?;
    let f_star = solve_centralized_original(inst)?.value;
    let mut summaries = Vec::with_capacity(cfg.c_values.len());
    for &c in &cfg.c_values {
        let barrier = inst
            .barrier
            .with_weight(c)
            .map_err(|e| BenchError::Schema(e.to_string()))?;
        let inst_c = inst.with_barrier(barrier);
        let opts = RunOptions {
            init: match cfg.init {
                InitChoice::Even => InitStrategy::EvenSplit,
                InitChoice::FromPoint => InitStrategy::FromPoint(None),
            },
            max_iters: cfg.max_iters,
            seed: cfg.seed,
            stop: cfg.stop,
            residual_every: cfg.residual_every,
        };
        let trace = engine::run(&inst_c, &opts)
            .map_err(|e| BenchError::Runtime(format!("c = {c:e}: {e}")))?;
        let csv = cfg.csv_path(c);
        write_trace_csv(&csv, &trace, f_star)?;
        let last = trace
            .records
            .last()
            .expect("trace holds the initial record");
        summaries.push(RunSummary {
            c,
            csv,
            iterations: last.k,
            stop: trace.stop,
            f_star,
            final_sum_f: last.sum_f,
            final_rel_obj_err: rel_obj_err(last.sum_f, f_star),
            max_feas_eq_err: trace
                .records
                .iter()
                .map(|r| r.feas_eq_err)
                .fold(0.0, f64::max),
        });
    }
    Ok(summaries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyChoice {
    Dispatch,
    MultiResource,
}

impl std::str::FromStr for FamilyChoice {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dispatch" => Ok(Self::Dispatch),
            "multi_resource" | "multi-resource" => Ok(Self::MultiResource),
            _ => Err(BenchError::Schema(format!(
                "family: expected `dispatch` or `multi_resource`, got `{s}`"
            ))),
        }
    }
}

/// Generates a synthetic instance, validates it and writes it as JSON.
pub fn gen_command(
    family: FamilyChoice,
    n: usize,
    seed: u64,
    barrier: BarrierSpec<f64>,
    out: &Path,
) -> Result<ProblemInstance<f64>, BenchError> {
    if n == 0 {
        return Err(BenchError::Schema("n: must be at least 1".into()));
    }
    let inst = match family {
        FamilyChoice::Dispatch => synthetic_dispatch(n, seed, barrier),
        FamilyChoice::MultiResource => synthetic_multi_resource(n, seed, barrier),
    }
    .map_err(|e| BenchError::Schema(e.to_string()))?;
    let report = validate_instance(&inst);
    if !report.is_valid() {
        return Err(BenchError::Schema(format!(
            "generated instance failed validation\n{report}"
        )));
    }
    let file = InstanceFile::from_instance(&inst, Some(seed));
    let text =
        serde_json::to_string_pretty(&file).map_err(|e| BenchError::Runtime(e.to_string()))?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(out, text + "\n").map_err(|e| io_err(out, e))?;
    Ok(inst)
}

/// Barrier optima for each weight and the original optimum.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub barrier: Vec<(f64, OracleSolution<f64>)>,
    pub original: OracleSolution<f64>,
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, sol) in &self.barrier {
            writeln!(
                f,
                "c={c:e} F*={:.16e} kkt={:.3e}",
                sol.value, sol.kkt_residual
            )?;
        }
        for p in &self.original.homotopy {
            writeln!(f, "homotopy c={:e} sum_f={:.16e}", p.c, p.sum_f)?;
        }
        write!(
            f,
            "f*={:.16e} monotone={}",
            self.original.value, self.original.homotopy_monotone
        )
    }
}

pub fn oracle_command(
    inst: &ProblemInstance<f64>,
    c_values: &[f64],
) -> Result<OracleReport, BenchError> {
    let barrier = c_values
        .iter()
        .map(|&c| Ok((c, solve_centralized_barrier(inst, c)?)))
        .collect::<Result<Vec<_>, crate::Error>>()?;
    Ok(OracleReport {
        barrier,
        original: solve_centralized_original(inst)?,
    })
}

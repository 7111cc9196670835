use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{init::slater_point, Engine, EngineState, IterationRecord};
use crate::error::Result;
use crate::model::{ProblemInstance, RhsShare};
use crate::network::{UpdateSet, UpdateSetSource, VotingSelector};
use crate::scalar::{lit, Scalar};

/// Residual cadence used by [`StopRule::Residual`] when none is requested.
pub const DEFAULT_RESIDUAL_EVERY: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy<T: Scalar> {
    EvenSplit,
    /// Shares of a strictly feasible point; `None` uses [`slater_point`].
    FromPoint(Option<Vec<DVector<T>>>),
    Shares(Vec<RhsShare<T>>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    None,
    /// Stop once every neighborhood residual is at most the tolerance.
    Residual(f64),
    /// Stop once `sum_phi` decreased by at most `tol * (1 + |sum_phi|)`
    /// over the last `window` iterations.
    Plateau {
        window: usize,
        tol: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions<T: Scalar> {
    pub init: InitStrategy<T>,
    pub max_iters: usize,
    pub seed: u64,
    pub stop: StopRule,
    /// Compute `residual_sum` every this many iterations; 0 disables it.
    pub residual_every: usize,
}

impl<T: Scalar> Default for RunOptions<T> {
    fn default() -> Self {
        Self {
            init: InitStrategy::EvenSplit,
            max_iters: 1000,
            seed: 0,
            stop: StopRule::None,
            residual_every: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    Residual,
    Plateau,
}

#[derive(Debug, Clone)]
pub struct Trace<T: Scalar> {
    /// One record per iterate, starting with the initial state at `k = 0`.
    pub records: Vec<IterationRecord<T>>,
    pub state: EngineState<T>,
    pub stop: StopReason,
}

/// Runs the engine with seeded voting-based selection.
pub fn run<T: Scalar>(inst: &ProblemInstance<T>, opts: &RunOptions<T>) -> Result<Trace<T>> {
    let engine = Engine::new(inst);
    let mut source = VotingSelector::new(ChaCha8Rng::seed_from_u64(opts.seed));
    run_with_source(&engine, opts, &mut source)
}

/// Runs the engine with update sets drawn from `source`.
pub fn run_with_source<T: Scalar, S: UpdateSetSource + ?Sized>(
    engine: &Engine<'_, T>,
    opts: &RunOptions<T>,
    source: &mut S,
) -> Result<Trace<T>> {
    let inst = engine.instance();
    let y0 = match &opts.init {
        InitStrategy::EvenSplit => engine.init_even_split()?,
        InitStrategy::FromPoint(Some(x)) => engine.init_from_point(x)?,
        InitStrategy::FromPoint(None) => {
            let x = slater_point(inst, engine.settings())?;
            engine.init_from_point(&x)?
        }
        InitStrategy::Shares(y) => y.clone(),
    };
    let mut state = engine.init_x(y0)?;

    let every = match (opts.stop, opts.residual_every) {
        (StopRule::Residual(_), 0) => DEFAULT_RESIDUAL_EVERY,
        (_, e) => e,
    };
    let mut records = Vec::with_capacity(opts.max_iters + 1);
    let mut rec = engine.record(&state, UpdateSet::default());
    let mut stop = StopReason::MaxIters;
    loop {
        if every > 0 && state.k % every == 0 {
            let r = engine.residuals(&state)?;
            rec.residual_sum = Some(r.iter().fold(T::zero(), |a, b| a + *b));
            if let StopRule::Residual(tol) = opts.stop {
                if r.iter().all(|ri| *ri <= lit::<T>(tol)) {
                    stop = StopReason::Residual;
                }
            }
        }
        if let StopRule::Plateau { window, tol } = opts.stop {
            if window > 0 && records.len() >= window {
                let before: &IterationRecord<T> = &records[records.len() - window];
                let drop = before.sum_phi - rec.sum_phi;
                if drop <= lit::<T>(tol) * (T::one() + rec.sum_phi.abs()) {
                    stop = StopReason::Plateau;
                }
            }
        }
        records.push(rec);
        if stop != StopReason::MaxIters || state.k >= opts.max_iters {
            break;
        }
        let update = source.next_set(&inst.graph);
        rec = engine.step(&mut state, &update)?;
    }
    Ok(Trace {
        records,
        state,
        stop,
    })
}

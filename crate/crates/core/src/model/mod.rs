//! Problem instances, barrier-transformed objectives, validation and the
//! two synthetic instance families.

mod barrier;
mod function;
mod generators;
mod instance;
mod share;
mod validate;

pub use barrier::{
    barrier_derivatives, barrier_eval, barrier_objective, BarrierKind, BarrierSpec,
    CompositeObjective,
};
pub(crate) use function::positive_root;
pub use function::SmoothConvexFn;
pub use generators::{
    gen_economic_dispatch, gen_multi_resource, synthetic_dispatch, synthetic_dispatch_on,
    synthetic_multi_resource, synthetic_multi_resource_on, DispatchParams, MultiResourceParams,
};
pub use instance::{CouplingSpec, Family, NodeProblem, ProblemInstance, Role};
pub use share::RhsShare;
pub use validate::{certify_compactness, validate_instance, Check, CheckStatus, ValidationReport};

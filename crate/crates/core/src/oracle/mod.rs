//! Exact references and verifiers.

mod dp;
mod eval;
mod verify;

pub use dp::{exact_successor_density, value_iteration, ExactF, ExactQ, OptimalPolicy};
pub use eval::{bias_estimate, evaluate_policy, nominal_path, rollout, BiasReport, EvalReport, Rollout};
pub use verify::{
    default_weight, standard_test_functions, verify_bias_ratio, verify_mixture_identity,
    BiasRatioParams, BiasRatioReport, BinKey, BinResult, Check, MixtureReport, Scope, WeightFn,
};

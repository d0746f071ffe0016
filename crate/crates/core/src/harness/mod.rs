//! Experiment configs, training runs, metrics files and the verification
//! suite.

mod config;
mod metrics;
mod suite;
mod train;

pub use config::{AgentSection, EnvKind, EnvSection, ExperimentConfig, OutputSection, TrainSection};
pub use metrics::{
    compare, format_sig6, read_metrics, write_metrics, MetricsRow, RunMetrics, COMPARE_HEADER,
    METRICS_HEADER,
};
pub use suite::{
    bias_ratio_checks, bundled_small_mdps, dense_density_check, dump_oracle, format_report,
    hazard_mdp, mixture_identity_checks, reference_policy, run_verification_suite,
    sampled_density_check, weight_property_checks, SuiteConfig, IDENTITY_ALPHAS,
};
pub use train::{run_training, train, TrainingRun};

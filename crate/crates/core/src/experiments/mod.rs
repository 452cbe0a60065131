//! Configuration, ensemble orchestration, functional tables, and the
//! exact-identity verification harness.

mod config;
mod ensemble;
mod norms;
mod verify;

pub use config::{random_function, ExperimentConfig, Experiment, FixtureMode, OperatorTemplate, SymbolSource, WeightSource, CONFIG_VERSION};
pub use ensemble::{
    apply_fixture, run_ensemble, run_search, EnvironmentStamp, ExperimentReport, Fixture, FixtureOutcome, ReportRow, Summary, CSV_HEADER,
    FIXTURE_TOLERANCE,
};
pub use norms::{run_norms, Functional, NormInput, NormsConfig, NORMS_HEADER};
pub use verify::{
    canonical_grids, replay, run_verify, Case, Failure, ReplayArtifact, Suite, SuiteReport, VerifyOptions, VerifyReport,
    EXHAUSTIVE_TRIPLES, STRATUM_SAMPLES,
};

//! Experiment commands and their report format.

mod experiments;
mod input;
mod report;

pub use experiments::{
    cmd_angle, cmd_bounds, cmd_freeze, cmd_regions, cmd_verify_main, AngleArgs, BoundsArgs,
    FreezeArgs, RegionsArgs, RunConfig, VerifyMainArgs, LIMIT_CHECK_T, MAX_T, S1_LIMIT_THRESHOLD,
    S2_LIMIT_THRESHOLD,
};
pub use input::{parse_generators, ConeInput};
pub use report::{derive_verdict, ExperimentReport, ResultRecord, Verdict};

//! Control-landscape analysis for the driven Landau-Zener two-level system.
//!
//! [`su2`] holds the exact dynamics, [`grape`] the gradient and the
//! steepest-ascent optimizer, [`probes`] the landscape statistics and
//! [`io`] random streams and file formats.

pub mod error;
pub mod grape;
pub mod io;
pub mod probes;
pub mod su2;

pub use error::{Error, Result};
pub use grape::{
    gradient, optimize, optimize_batch, value_and_gradient, OptimizationTrajectory, OptimizerConfig,
    Termination,
};
pub use io::{derive_stream, Job, RunManifest, SweepResult, SweepRow};
pub use probes::{
    DistanceStats, Experiment, LandscapeGrid, RStats, RunSummary, SeedRegion, SweepSpec, TrapStats,
};
pub use su2::{fidelity, objective_two_slot, ControlField, SystemParams, Unitary2};

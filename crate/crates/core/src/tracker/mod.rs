//! Minimum tracking around a closed loop: one (optionally regularized and
//! line-searched) Newton update per grid step, then classification of the
//! overlap between the first and last tracked states.

mod config;
mod objective;
mod run;
mod step;

pub use config::{AnsatzChoice, TrackerConfig};
pub use objective::{
    build_objective, circuit_derivatives, final_overlap, initial_orbitals, DenseObjective, Derivatives, LoopOverlap,
    Objective, OrbitalObjective, TrackPoint,
};
pub use run::{
    classify, full_optimize, run_loop, track, BerryPhaseResult, FailReason, Optimized, Outcome, Phase, TrackState,
};
pub use step::{newton_step, regularized_step, StepControl, StepReport};

//! Personalized sequencing of teaching materials as a contextual bandit.
//!
//! Students arrive one at a time with an observable context. A policy shows
//! materials one by one, observes a feedback after each, and decides when to
//! give the final exam; every shown material costs time. This crate provides
//!
//! - [`GroundTruthModel`]: simulated student populations, tabular or factored;
//! - [`policies`]: the best-first benchmark, the eTutor learner and the random
//!   and fixed baselines;
//! - [`oracle`]: exact best-first, best fixed and best adaptive values, gap
//!   quantities and the exploration-regret bound;
//! - [`harness`]: seeded Monte Carlo runs that measure regret.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix `f64`.

pub mod environment;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod oracle;
pub mod policies;
pub mod scalar;
pub mod sequences;
pub mod types;

pub use environment::{
    check_assumption1, generate_instance, Assumption1Report, Dims, FactoredTables, GenMode, GroundTruthModel,
    InstanceGenParams, NoiseSpec, ScoreNoise, ScoreTables, TabularTables,
};
pub use error::{Result, TutorError};
pub use policies::{
    bf_decide, derive_params, etutor_decide, etutor_update, fr_decide, rr_decide, EpisodeHistory, ETutorParams,
    ETutorState, ExplorationSchedule, PolicyDecision, Step, TutorPolicy,
};
pub use scalar::{min2, Real};
pub use sequences::{count_sequences, enumerate_sequences, remaining_materials};
pub use types::{Context, CostSchedule, EpisodeRecord, Feedback, FeedbackSequence, MaterialId, MaterialSequence};

pub type Model = GroundTruthModel<f64>;
pub type ModelF32 = GroundTruthModel<f32>;
pub type TutorState = ETutorState<f64>;
pub type TutorStateF32 = ETutorState<f32>;
pub type TutorParams = ETutorParams<f64>;
pub type Episode = EpisodeRecord<f64>;

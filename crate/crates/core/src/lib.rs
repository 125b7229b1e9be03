//! Gaussian process classification bandits.
//!
//! Given a finite grid of points whose unknown values are modelled jointly by a
//! Gaussian process, decide with probability at least `1 - delta` whether the
//! fraction of points with value at least `h + epsilon` reaches `w`, while
//! asking for as few noisy point evaluations as possible.
//!
//! The crate is organised bottom-up:
//!
//! - [`kernel`], [`grid`] and [`gp`]: exact GP posterior over a finite point set
//!   with one-row Cholesky growth, joint sampling and marginal-likelihood tuning.
//! - [`confidence`]: the `beta_t` schedule and nested per-point intervals.
//! - [`policy`]: arm selection policies and their rate-estimation variants.
//! - [`engine`]: the stopping loop itself, producing a [`engine::RunRecord`].
//! - [`tscb`]: the uncorrelated Thompson-sampling baseline.
//! - [`problems`]: grids, synthetic targets, grid-image ingestion, instance
//!   metrics and sample-complexity diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod confidence;
pub mod engine;
pub mod error;
pub mod gp;
pub mod grid;
pub mod kernel;
mod linalg;
pub mod policy;
pub mod problems;
pub mod rng;
pub mod tscb;

pub use confidence::{BetaMode, BetaSchedule, IntervalState, Label};
pub use engine::{
    run, run_batch, run_with, Answer, EmptyIntersectionMode, IntervalConflict, NoisyTable, Oracle,
    ProblemSpec, RunError, RunOptions, RunRecord, StopReason,
};
pub use error::{Error, Result};
pub use gp::{GpPosterior, PosteriorModel};
pub use grid::PointGrid;
pub use kernel::{KernelKind, KernelSpec};
pub use policy::{PolicyKind, PolicySpec};
pub use tscb::{run_tscb, TscbPrior, TscbState};

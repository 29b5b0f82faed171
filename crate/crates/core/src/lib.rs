//! Distributed online greedy coordination with intermediate bandit updates.
//!
//! Agents pick actions from local EXP3-style learners, broadcast them over a
//! delayed network and refine past reward estimates as neighbor actions
//! arrive. The crate also holds the submodular analysis tools, the
//! asynchronous reward model, the camera monitoring world and the
//! experiment harness.

pub mod asynchrony;
pub mod bandit;
pub mod envs;
pub mod error;
pub mod harness;
pub mod network;
pub mod rng;
pub mod submodular;

pub use asynchrony::{ClockModel, Deployment, DeploymentSchedule, TimeStampedReward};
pub use bandit::{Algorithm, LearnerState, PendingRound, RegretLedger};
pub use envs::{CameraConfig, CameraWorld, Environment, TabularInstance, TargetSystem};
pub use error::{Error, Result};
pub use harness::{run_monte_carlo, run_single, AggregateStats, ExperimentConfig, RunResult};
pub use network::{CommGraph, DelayModel, InFlightMessage, MessageBus};
pub use submodular::{Assignment, GroundElement, SetFunction};

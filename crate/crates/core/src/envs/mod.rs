//! Environments: the moving-target camera world, its smoothed time-stamped
//! variant, and explicit lookup tables.

mod camera;
mod smoothed;
mod tabular;
mod targets;
mod world;

pub use camera::{CameraConfig, CoverageMasks, Point};
pub use smoothed::SmoothedCoverage;
pub use tabular::{TabularInstance, MAX_TABLE_GROUND};
pub use targets::{TargetParams, TargetSystem};
pub use world::{coverage_set_function, pilot_cap, CameraWorld, CoverageFunction, DiscreteCoverage, PILOT_STEPS};

use crate::error::Result;
use crate::submodular::{canonical, GroundElement, SetFunction};

/// What the simulation loop needs from a world.
pub trait Environment {
    fn agent_count(&self) -> usize;

    fn action_count(&self, agent: usize) -> usize;

    /// Rewards must stay available for at least `rounds` rounds after their own.
    fn retain(&mut self, rounds: u64);

    /// Moves to round `round` (rounds start at 1); `times[i]` is agent `i`'s
    /// execution time for it.
    fn advance(&mut self, round: u64, times: &[f64]) -> Result<()>;

    /// Normalized reward of `action` for `agent` in round `round`, given the
    /// neighbors' actions in `context`.
    fn reward(&self, round: u64, agent: usize, action: usize, context: &[(usize, usize)]) -> f64;

    /// Objective of the current round's executed actions, in raw units.
    fn joint_value(&self, actions: &[usize], times: &[f64]) -> Result<f64>;

    /// Objective with every action executed at the latest of `times`.
    fn synchronous_value(&self, actions: &[usize], times: &[f64]) -> Result<f64> {
        let latest = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.joint_value(actions, &vec![latest; times.len()])
    }

    /// Largest value `joint_value` can take.
    fn value_ceiling(&self) -> f64;
}

/// A fixed set function played every round, with rewards `f(a_i | context) / B`.
#[derive(Clone, Debug)]
pub struct StationaryEnvironment<F> {
    f: F,
    action_counts: Vec<usize>,
    cap: f64,
    ceiling: f64,
}

impl<F: SetFunction> StationaryEnvironment<F> {
    pub fn new(f: F, action_counts: Vec<usize>, cap: f64) -> Result<Self> {
        if !(cap > 0.0) {
            return Err(crate::error::Error::InvalidArgument(format!(
                "normalization cap must be positive, got {cap}"
            )));
        }
        let all: Vec<_> = action_counts
            .iter()
            .enumerate()
            .flat_map(|(i, &n)| (0..n).map(move |a| GroundElement::new(i, a)))
            .collect();
        let ceiling = f.value(&all).unwrap_or_else(|_| f.upper_bound());
        Ok(Self {
            f,
            action_counts,
            cap,
            ceiling,
        })
    }

    pub fn function(&self) -> &F {
        &self.f
    }
}

impl<F: SetFunction> Environment for StationaryEnvironment<F> {
    fn agent_count(&self) -> usize {
        self.action_counts.len()
    }

    fn action_count(&self, agent: usize) -> usize {
        self.action_counts[agent]
    }

    fn retain(&mut self, _rounds: u64) {}

    fn advance(&mut self, _round: u64, _times: &[f64]) -> Result<()> {
        Ok(())
    }

    fn reward(&self, _round: u64, agent: usize, action: usize, context: &[(usize, usize)]) -> f64 {
        let others = canonical(context.iter().map(|&(j, a)| GroundElement::new(j, a)).collect());
        let mut with = others.clone();
        with.push(GroundElement::new(agent, action));
        let with = canonical(with);
        match (self.f.value(&with), self.f.value(&others)) {
            (Ok(a), Ok(b)) => (a - b) / self.cap,
            (Err(e), _) | (_, Err(e)) => {
                log::error!("reward evaluation failed: {e}");
                0.0
            }
        }
    }

    fn joint_value(&self, actions: &[usize], _times: &[f64]) -> Result<f64> {
        let set: Vec<_> = actions.iter().enumerate().map(|(i, &a)| GroundElement::new(i, a)).collect();
        self.f.value(&set)
    }

    fn value_ceiling(&self) -> f64 {
        self.ceiling
    }
}

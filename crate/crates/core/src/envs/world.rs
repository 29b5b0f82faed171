use std::cell::Cell;
use std::collections::{BTreeMap, VecDeque};

use super::camera::{CameraConfig, CoverageMasks, Point};
use super::targets::TargetSystem;
use super::Environment;
use crate::asynchrony::{async_global_reward, Deployment, Lipschitz, TimeStampedReward};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::submodular::{GroundElement, SetFunction};

/// Steps of the pilot rollout that sizes the reward normalization cap.
pub const PILOT_STEPS: u64 = 200;

/// Largest single-sector target count over the initial scene and
/// `steps` further steps of a copy of `targets`, rounded up and at least 1.
pub fn pilot_cap(cameras: &CameraConfig, targets: &TargetSystem, steps: u64, rng: &mut SimRng) -> f64 {
    let mut scene = targets.clone();
    let mut best = cameras.masks(scene.positions()).max_sector();
    for _ in 0..steps {
        scene.step(rng);
        best = best.max(cameras.masks(scene.positions()).max_sector());
    }
    (best as f64).ceil().max(1.0)
}

/// Normalized coverage `|∪ sectors| / B` of one frozen scene, over
/// `(camera, heading)` ground elements.
#[derive(Clone, Debug)]
pub struct CoverageFunction {
    masks: CoverageMasks,
    cameras: usize,
    headings: usize,
    cap: f64,
}

impl CoverageFunction {
    pub fn new(cameras: &CameraConfig, targets: &[Point], cap: f64) -> Result<Self> {
        if !(cap > 0.0) {
            return Err(Error::InvalidArgument(format!("normalization cap must be positive, got {cap}")));
        }
        Ok(Self {
            masks: cameras.masks(targets),
            cameras: cameras.camera_count(),
            headings: cameras.headings(),
            cap,
        })
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn masks(&self) -> &CoverageMasks {
        &self.masks
    }
}

impl SetFunction for CoverageFunction {
    fn value(&self, elements: &[GroundElement]) -> Result<f64> {
        let mut selected = Vec::with_capacity(elements.len());
        for e in elements {
            if e.agent >= self.cameras || e.action >= self.headings {
                return Err(Error::OutOfRange {
                    agent: e.agent,
                    action: e.action,
                });
            }
            selected.push((e.agent, e.action));
        }
        Ok(self.masks.union_count(&selected) as f64 / self.cap)
    }

    fn upper_bound(&self) -> f64 {
        let all: Vec<_> = (0..self.cameras)
            .flat_map(|c| (0..self.headings).map(move |h| (c, h)))
            .collect();
        self.masks.union_count(&all) as f64 / self.cap
    }
}

/// `coverage_set_function` of a camera layout over one target snapshot.
pub fn coverage_set_function(cameras: &CameraConfig, targets: &[Point], cap: f64) -> Result<CoverageFunction> {
    CoverageFunction::new(cameras, targets, cap)
}

#[derive(Clone, Debug)]
enum RoundView {
    Shared(CoverageMasks),
    PerAgent(Vec<CoverageMasks>),
}

impl RoundView {
    fn for_agent(&self, agent: usize) -> &CoverageMasks {
        match self {
            RoundView::Shared(m) => m,
            RoundView::PerAgent(v) => &v[agent],
        }
    }
}

/// The moving-target monitoring world: one camera per agent, headings as actions.
///
/// Target positions are kept at integer steps and interpolated linearly in
/// between, so rewards can be measured at skewed execution times. Each
/// agent's reward for a round is its normalized marginal coverage at its
/// own execution time, given the neighbors' headings.
pub struct CameraWorld {
    cameras: CameraConfig,
    targets: TargetSystem,
    rng: SimRng,
    cap: f64,
    frames: VecDeque<Vec<Point>>,
    first_frame: u64,
    views: BTreeMap<u64, RoundView>,
    current: u64,
    keep: u64,
    clamped: Cell<u64>,
}

impl CameraWorld {
    /// `targets` is the scene at step 0; `rng` drives all later target motion.
    pub fn new(cameras: CameraConfig, targets: TargetSystem, cap: f64, rng: SimRng) -> Result<Self> {
        if !(cap > 0.0) {
            return Err(Error::config("norm_cap", "must be positive"));
        }
        let frames = VecDeque::from([targets.positions().to_vec()]);
        Ok(Self {
            cameras,
            targets,
            rng,
            cap,
            frames,
            first_frame: 0,
            views: BTreeMap::new(),
            current: 0,
            keep: 1,
            clamped: Cell::new(0),
        })
    }

    pub fn cameras(&self) -> &CameraConfig {
        &self.cameras
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn target_count(&self) -> usize {
        self.targets.positions().len()
    }

    /// Rewards that exceeded 1 before clamping.
    pub fn clamped_rewards(&self) -> u64 {
        self.clamped.get()
    }

    /// Target positions at integer step `step`, if still buffered.
    pub fn frame(&self, step: u64) -> Option<&[Point]> {
        step.checked_sub(self.first_frame)
            .and_then(|k| self.frames.get(k as usize))
            .map(Vec::as_slice)
    }

    fn ensure_frame(&mut self, step: u64) {
        while self.first_frame + (self.frames.len() as u64) <= step {
            self.targets.step(&mut self.rng);
            self.frames.push_back(self.targets.positions().to_vec());
        }
    }

    /// Target positions at continuous time `time`, linear between steps.
    pub fn positions_at(&self, time: f64) -> Result<Vec<Point>> {
        let base = time.floor();
        let frac = time - base;
        let k = base as u64;
        let miss = || Error::InvalidArgument(format!("no target frames buffered around time {time}"));
        let a = self.frame(k).ok_or_else(miss)?;
        if frac == 0.0 {
            return Ok(a.to_vec());
        }
        let b = self.frame(k + 1).ok_or_else(miss)?;
        Ok(a.iter()
            .zip(b)
            .map(|(p, q)| [p[0] + frac * (q[0] - p[0]), p[1] + frac * (q[1] - p[1])])
            .collect())
    }

    /// Normalized coverage function of the scene at `time`.
    pub fn coverage_set_function_at(&self, time: f64) -> Result<CoverageFunction> {
        CoverageFunction::new(&self.cameras, &self.positions_at(time)?, self.cap)
    }

    /// Raw covered-target count of all cameras at their headings at `time`.
    pub fn covered_at(&self, headings: &[usize], time: f64) -> Result<usize> {
        Ok(self.cameras.covered_count(&self.positions_at(time)?, headings))
    }
}

/// Discrete coverage as a time-stamped reward: `F(τ, D)` counts targets at
/// their time-`τ` positions inside any deployed sector. Piecewise constant
/// in time, so it declares no Lipschitz constants.
pub struct DiscreteCoverage<'a>(pub &'a CameraWorld);

impl TimeStampedReward for DiscreteCoverage<'_> {
    fn evaluate(&self, time: f64, schedule: &[Deployment]) -> Result<f64> {
        if schedule.is_empty() {
            return Ok(0.0);
        }
        let positions = self.0.positions_at(time)?;
        let cams = &self.0.cameras;
        let covered = positions
            .iter()
            .filter(|&&p| schedule.iter().any(|d| cams.sees(d.agent, d.action, p)))
            .count();
        Ok(covered as f64)
    }

    fn lipschitz(&self) -> Option<Lipschitz> {
        None
    }
}

impl Environment for CameraWorld {
    fn agent_count(&self) -> usize {
        self.cameras.camera_count()
    }

    fn action_count(&self, _agent: usize) -> usize {
        self.cameras.headings()
    }

    fn retain(&mut self, rounds: u64) {
        self.keep = rounds.max(1);
    }

    fn advance(&mut self, round: u64, times: &[f64]) -> Result<()> {
        if round <= self.current {
            return Err(Error::InvalidArgument(format!(
                "world already at round {}, cannot advance to {round}",
                self.current
            )));
        }
        self.current = round;
        self.ensure_frame(round + 1);
        while self.first_frame + 1 < round {
            self.frames.pop_front();
            self.first_frame += 1;
        }
        let t = round as f64;
        let view = if times.iter().all(|&x| x == t) {
            RoundView::Shared(self.cameras.masks(self.frame(round).expect("buffered")))
        } else {
            let mut per_agent = Vec::with_capacity(times.len());
            for &tau in times {
                per_agent.push(self.cameras.masks(&self.positions_at(tau)?));
            }
            RoundView::PerAgent(per_agent)
        };
        self.views.insert(round, view);
        let oldest = round.saturating_sub(self.keep);
        while let Some((&r, _)) = self.views.first_key_value() {
            if r >= oldest {
                break;
            }
            self.views.pop_first();
        }
        Ok(())
    }

    fn reward(&self, round: u64, agent: usize, action: usize, context: &[(usize, usize)]) -> f64 {
        let Some(view) = self.views.get(&round) else {
            log::error!("reward requested for round {round}, which is no longer buffered");
            return 0.0;
        };
        let gain = view.for_agent(agent).gain((agent, action), context) as f64 / self.cap;
        if gain > 1.0 {
            self.clamped.set(self.clamped.get() + 1);
        }
        gain
    }

    fn joint_value(&self, actions: &[usize], times: &[f64]) -> Result<f64> {
        let t = self.current as f64;
        if times.iter().all(|&x| x == t) {
            if let Some(RoundView::Shared(m)) = self.views.get(&self.current) {
                let selected: Vec<_> = actions.iter().copied().enumerate().collect();
                return Ok(m.union_count(&selected) as f64);
            }
        }
        let schedule: Vec<_> = actions
            .iter()
            .zip(times)
            .enumerate()
            .map(|(i, (&a, &tau))| Deployment::new(i, a, tau))
            .collect();
        async_global_reward(&DiscreteCoverage(self), &schedule)
    }

    fn synchronous_value(&self, actions: &[usize], times: &[f64]) -> Result<f64> {
        let latest = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(self.covered_at(actions, latest)? as f64)
    }

    fn value_ceiling(&self) -> f64 {
        self.target_count() as f64
    }
}

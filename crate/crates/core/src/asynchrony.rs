//! Local execution clocks with bounded skew and time-stamped rewards.

use rand::Rng;

use crate::error::{Error, Result};

/// Per-agent execution times drawn uniformly within `ρ/2` of the global tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClockModel {
    rho: f64,
}

impl ClockModel {
    /// `rho` is in round units and must lie in `[0, 1)` so every agent's
    /// clock stays strictly increasing across rounds.
    pub fn new(rho: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidArgument(format!(
                "skew bound must lie in [0, 1), got {rho}"
            )));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `τ_i ~ U(t − ρ/2, t + ρ/2)` for each of `agents` agents.
    pub fn sample_execution_times<R: Rng + ?Sized>(&self, tick: u64, agents: usize, rng: &mut R) -> Vec<f64> {
        let t = tick as f64;
        if self.rho == 0.0 {
            return vec![t; agents];
        }
        let half = self.rho / 2.0;
        (0..agents).map(|_| rng.random_range(t - half..=t + half)).collect()
    }
}

/// One executed action with its physical execution time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Deployment {
    pub agent: usize,
    pub action: usize,
    pub time: f64,
}

impl Deployment {
    pub fn new(agent: usize, action: usize, time: f64) -> Self {
        Self { agent, action, time }
    }
}

/// Deployments of one round, sorted by time with ties broken by agent id.
#[derive(Clone, Debug, PartialEq)]
pub struct DeploymentSchedule {
    entries: Vec<Deployment>,
}

impl DeploymentSchedule {
    pub fn new(entries: &[Deployment]) -> Result<Self> {
        let mut entries = entries.to_vec();
        if let Some(bad) = entries.iter().find(|e| !e.time.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "agent {} has a non-finite execution time",
                bad.agent
            )));
        }
        entries.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.agent.cmp(&b.agent)));
        let mut agents: Vec<usize> = entries.iter().map(|e| e.agent).collect();
        agents.sort_unstable();
        if let Some(w) = agents.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateAgent { agent: w[0] });
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Deployment] {
        &self.entries
    }

    /// `D_k`: the first `k` deployments.
    pub fn prefix(&self, k: usize) -> &[Deployment] {
        &self.entries[..k]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Latest execution time, the reference for the synchronous counterpart.
    pub fn latest(&self) -> Option<f64> {
        self.entries.last().map(|e| e.time)
    }

    /// `max τ − min τ`
    pub fn spread(&self) -> f64 {
        match (self.entries.first(), self.entries.last()) {
            (Some(a), Some(b)) => b.time - a.time,
            _ => 0.0,
        }
    }
}

/// Lipschitz constants in evaluation time and in any single deployment time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lipschitz {
    pub evaluation: f64,
    pub deployment: f64,
}

/// Reward `F(τ, D)` of deployment schedule `D` measured at time `τ`.
pub trait TimeStampedReward {
    /// Must return 0 for an empty schedule.
    fn evaluate(&self, time: f64, schedule: &[Deployment]) -> Result<f64>;

    /// Declared constants, or `None` when the reward is not Lipschitz.
    fn lipschitz(&self) -> Option<Lipschitz>;
}

impl<F: TimeStampedReward + ?Sized> TimeStampedReward for &F {
    fn evaluate(&self, time: f64, schedule: &[Deployment]) -> Result<f64> {
        (**self).evaluate(time, schedule)
    }

    fn lipschitz(&self) -> Option<Lipschitz> {
        (**self).lipschitz()
    }
}

/// `Σ_k [F(τ_k, D_k) − F(τ_k, D_{k−1})]` over the time-sorted schedule.
///
/// Consecutive deployments sharing a timestamp are summed as one telescoped
/// difference, so an all-equal schedule returns `F(τ, D)` bit for bit.
pub fn async_global_reward<F: TimeStampedReward + ?Sized>(f: &F, entries: &[Deployment]) -> Result<f64> {
    let schedule = DeploymentSchedule::new(entries)?;
    let all = schedule.entries();
    let mut total = 0.0;
    let mut start = 0;
    while start < all.len() {
        let time = all[start].time;
        let end = start + all[start..].iter().take_while(|e| e.time == time).count();
        let after = f.evaluate(time, &all[..end])?;
        let before = if start == 0 { 0.0 } else { f.evaluate(time, &all[..start])? };
        total += after - before;
        start = end;
    }
    Ok(total)
}

/// `(2 L_e n + L_d n²) ρ`
pub fn asynchrony_gap_bound(evaluation: f64, deployment: f64, agents: usize, rho: f64) -> f64 {
    let n = agents as f64;
    (2.0 * evaluation * n + deployment * n * n) * rho
}

/// Largest finite-difference slopes seen by a probe set, against the declared constants.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzAudit {
    pub declared: Lipschitz,
    pub max_evaluation_slope: f64,
    pub max_deployment_slope: f64,
    pub probes: usize,
    pub holds: bool,
}

/// Central difference step for the audit.
pub const AUDIT_STEP: f64 = 1e-4;
/// Relative slack allowed above a declared constant.
pub const AUDIT_TOLERANCE: f64 = 0.05;

/// Probes `F` at every `(τ, schedule)` point with central differences in
/// `τ` and in each deployment time, and checks the declared constants.
pub fn audit_lipschitz<F: TimeStampedReward + ?Sized>(
    f: &F,
    probes: &[(f64, Vec<Deployment>)],
) -> Result<LipschitzAudit> {
    let declared = f.lipschitz().ok_or_else(|| {
        Error::InvalidArgument("reward declares no Lipschitz constants".into())
    })?;
    let h = AUDIT_STEP;
    let mut max_e = 0.0f64;
    let mut max_d = 0.0f64;
    let mut perturbed = Vec::new();
    for (time, schedule) in probes {
        let slope = (f.evaluate(time + h, schedule)? - f.evaluate(time - h, schedule)?).abs() / (2.0 * h);
        max_e = max_e.max(slope);
        for j in 0..schedule.len() {
            perturbed.clone_from(schedule);
            perturbed[j].time += h;
            let up = f.evaluate(*time, &perturbed)?;
            perturbed[j].time -= 2.0 * h;
            let down = f.evaluate(*time, &perturbed)?;
            max_d = max_d.max((up - down).abs() / (2.0 * h));
        }
    }
    let holds = max_e <= (1.0 + AUDIT_TOLERANCE) * declared.evaluation
        && max_d <= (1.0 + AUDIT_TOLERANCE) * declared.deployment;
    Ok(LipschitzAudit {
        declared,
        max_evaluation_slope: max_e,
        max_deployment_slope: max_d,
        probes: probes.len(),
        holds,
    })
}

/// Measured asynchrony gap for one round and, when the reward's constants
/// passed their audit, the bound it is checked against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapReport {
    pub asynchronous: f64,
    pub synchronous: f64,
    pub measured_gap: f64,
    pub bound: Option<f64>,
    pub holds: Option<bool>,
}

/// Compares the asynchronous reward with `F(τ̄, D_N)` at `τ̄ = max τ_i`.
///
/// The bound is only asserted when `audit` validated the declared constants;
/// otherwise the gap is reported alone.
pub fn verify_gap<F: TimeStampedReward + ?Sized>(
    f: &F,
    entries: &[Deployment],
    rho: f64,
    audit: Option<&LipschitzAudit>,
) -> Result<GapReport> {
    let schedule = DeploymentSchedule::new(entries)?;
    let asynchronous = async_global_reward(f, entries)?;
    let synchronous = match schedule.latest() {
        Some(t) => f.evaluate(t, schedule.entries())?,
        None => 0.0,
    };
    let measured_gap = (asynchronous - synchronous).abs();
    let bound = match audit {
        Some(a) if a.holds => Some(asynchrony_gap_bound(
            a.declared.evaluation,
            a.declared.deployment,
            entries.len(),
            rho,
        )),
        Some(a) => {
            log::warn!(
                "Lipschitz audit failed (slopes {:.4} / {:.4} vs declared {:.4} / {:.4}); gap bound not checked",
                a.max_evaluation_slope,
                a.max_deployment_slope,
                a.declared.evaluation,
                a.declared.deployment
            );
            None
        }
        None => None,
    };
    Ok(GapReport {
        asynchronous,
        synchronous,
        measured_gap,
        bound,
        holds: bound.map(|b| measured_gap <= b),
    })
}

/// Time-invariant reward built from a set function on `(agent, action)` pairs.
pub struct StaticReward<F>(pub F);

impl<F: crate::submodular::SetFunction> TimeStampedReward for StaticReward<F> {
    fn evaluate(&self, _time: f64, schedule: &[Deployment]) -> Result<f64> {
        let elements = crate::submodular::canonical(
            schedule
                .iter()
                .map(|d| crate::submodular::GroundElement::new(d.agent, d.action))
                .collect(),
        );
        self.0.value(&elements)
    }

    fn lipschitz(&self) -> Option<Lipschitz> {
        Some(Lipschitz {
            evaluation: 0.0,
            deployment: 0.0,
        })
    }
}

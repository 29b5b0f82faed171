use std::collections::BTreeMap;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::stats::AggregateStats;
use crate::asynchrony::ClockModel;
use crate::bandit::{cumulative_error, learning_rate, Algorithm, LearnerState};
use crate::envs::{pilot_cap, CameraWorld, Environment, TargetSystem, PILOT_STEPS};
use crate::error::{Error, Result};
use crate::network::{CommGraph, DelayModel, MessageBus};
use crate::rng::{stream, Stream};

/// Everything the tick loop needs besides the world itself.
#[derive(Clone, Debug)]
pub struct EngineSetup {
    pub algorithm: Algorithm,
    pub graph: CommGraph,
    pub delays: DelayModel,
    pub horizon: u64,
    /// Skew bound of the execution clocks.
    pub rho: f64,
    pub skew_delivery: bool,
    pub lr_scale: f64,
    pub default_action: usize,
}

/// Optional per-run recordings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Instrumentation {
    pub actions: bool,
    pub weights: bool,
    /// Per-agent `M_t` against the true rewards.
    pub estimation_error: bool,
    /// Per-agent retired-round traces.
    pub traces: bool,
    /// Per-round asynchronous vs synchronous objective.
    pub gaps: bool,
}

/// One retired round of one agent.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub round: u64,
    pub chosen_action: usize,
    pub p_chosen: f64,
    pub z0: f64,
    pub batches_applied: usize,
    pub retired_at: u64,
    pub max_error: Option<f64>,
}

/// Asynchronous objective of one round against its synchronous counterpart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapRow {
    pub round: u64,
    pub measured_gap: f64,
    /// Only set when the objective has audited Lipschitz constants.
    pub bound: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    /// Objective of the executed joint action, per round.
    pub coverage: Vec<f64>,
    pub max_staleness: u64,
    pub messages_sent: u64,
    pub messages_delivered: u64,
    pub clamped_rewards: u64,
    pub actions: Option<Vec<Vec<usize>>>,
    /// `weights[t][i]` are agent `i`'s log-weights after round `t + 1`.
    pub weights: Option<Vec<Vec<Vec<f64>>>>,
    /// `max_errors[i][t]` is agent `i`'s `M_t` after round `t + 1`.
    pub max_errors: Option<Vec<Vec<f64>>>,
    pub traces: Option<Vec<Vec<TraceRow>>>,
    pub gaps: Option<Vec<GapRow>>,
}

/// Runs `setup.horizon` rounds of the learners on `env` under `seed`.
///
/// Per tick: the world advances, agents draw actions at their (possibly
/// skewed) execution times, the executed joint objective is recorded,
/// actions are broadcast, due messages are delivered and every learner
/// folds its arrivals into its estimates and weights.
pub fn simulate<E: Environment>(env: &mut E, setup: &EngineSetup, seed: u64, instr: Instrumentation) -> Result<RunResult> {
    let n = env.agent_count();
    if setup.graph.agent_count() != n {
        return Err(Error::Shape(format!(
            "graph has {} agents, environment {n}",
            setup.graph.agent_count()
        )));
    }
    let clock = ClockModel::new(setup.rho)?;
    let delay_bound = setup.delays.bound();
    let staleness_bound = delay_bound + u64::from(setup.skew_delivery);
    env.retain(staleness_bound + 1);

    let mut learners = Vec::with_capacity(n);
    for i in 0..n {
        let actions = env.action_count(i);
        let eta = learning_rate(actions, delay_bound, setup.horizon, setup.lr_scale)?;
        let learner = LearnerState::new(
            setup.algorithm,
            actions,
            eta,
            staleness_bound,
            setup.graph.in_neighbors(i).iter().copied(),
        )?
        .with_default_action(setup.default_action.min(actions - 1))
        .with_recording(instr.traces);
        learners.push(learner);
    }
    let mut learner_rngs: Vec<_> = (0..n).map(|i| stream(seed, Stream::Learner(i))).collect();
    let mut delay_rng = stream(seed, Stream::Delays);
    let mut skew_rng = stream(seed, Stream::Skew);
    let mut bus = MessageBus::new(staleness_bound);

    let horizon = setup.horizon as usize;
    let mut result = RunResult {
        seed,
        coverage: Vec::with_capacity(horizon),
        actions: instr.actions.then(|| Vec::with_capacity(horizon)),
        weights: instr.weights.then(|| Vec::with_capacity(horizon)),
        max_errors: instr.estimation_error.then(|| vec![Vec::with_capacity(horizon); n]),
        traces: instr.traces.then(|| vec![Vec::new(); n]),
        gaps: instr.gaps.then(|| Vec::with_capacity(horizon)),
        ..RunResult::default()
    };
    let mut truth: Vec<BTreeMap<u64, f64>> = vec![BTreeMap::new(); n];
    let mut history: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    let mut per_round_errors: Vec<BTreeMap<u64, f64>> = vec![BTreeMap::new(); n];

    for t in 1..=setup.horizon {
        let times = clock.sample_execution_times(t, n, &mut skew_rng);
        env.advance(t, &times)?;
        let choices: Vec<(usize, f64)> = learners
            .iter()
            .zip(learner_rngs.iter_mut())
            .map(|(l, rng)| l.sample_action(rng))
            .collect();
        let actions: Vec<usize> = choices.iter().map(|c| c.0).collect();
        let value = env.joint_value(&actions, &times)?;
        result.coverage.push(value);
        if let Some(gaps) = result.gaps.as_mut() {
            let sync = env.synchronous_value(&actions, &times)?;
            gaps.push(GapRow {
                round: t,
                measured_gap: (value - sync).abs(),
                bound: None,
            });
        }

        for (i, &a) in actions.iter().enumerate() {
            bus.broadcast(&setup.graph, &setup.delays, i, t, a, times[i], &mut delay_rng)?;
        }
        let mut deliveries = if setup.skew_delivery {
            bus.deliver_with_clock(t, |r| times[r])?
        } else {
            bus.deliver(t)?
        };

        if instr.estimation_error {
            history.insert(t, actions.clone());
            for (i, l) in learners.iter().enumerate() {
                let ctx: Vec<_> = l.neighbors().iter().map(|&j| (j, actions[j])).collect();
                truth[i].insert(t, env.reward(t, i, actions[i], &ctx).clamp(0.0, 1.0));
            }
        }

        for (i, learner) in learners.iter_mut().enumerate() {
            let arrivals = deliveries.remove(&i).unwrap_or_default();
            let env_ref = &*env;
            learner.tick(t, choices[i], &arrivals, |s, own, ctx| env_ref.reward(s, i, own, ctx))?;
            learner.check_invariants(t)?;
            if instr.estimation_error {
                let m = cumulative_error(learner, &truth[i], t)?.max;
                result.max_errors.as_mut().expect("enabled")[i].push(m);
                per_round_errors[i].insert(t, m);
                let oldest = t.saturating_sub(staleness_bound + 1);
                truth[i].retain(|&s, _| s >= oldest);
            }
            if let Some(traces) = result.traces.as_mut() {
                for r in learner.take_retired() {
                    traces[i].push(TraceRow {
                        round: r.round,
                        chosen_action: r.chosen_action,
                        p_chosen: r.sample_prob,
                        z0: r.initial_estimate,
                        batches_applied: r.batches_applied,
                        retired_at: r.retired_at,
                        max_error: per_round_errors[i].get(&r.round).copied(),
                    });
                }
            }
        }
        if let Some(w) = result.weights.as_mut() {
            w.push(learners.iter().map(|l| l.log_weights().to_vec()).collect());
        }
        if let Some(a) = result.actions.as_mut() {
            a.push(actions);
        }
    }
    result.max_staleness = bus.max_staleness();
    result.messages_sent = bus.sent();
    result.messages_delivered = bus.delivered();
    Ok(result)
}

/// Builds the camera world of `config` for `seed`. The world draws only from
/// its own streams, so it is identical whichever algorithm runs in it.
pub fn build_world(config: &ExperimentConfig, seed: u64) -> Result<CameraWorld> {
    let cameras = config.cameras()?;
    let targets = TargetSystem::spawn(config.target_params(), &mut stream(seed, Stream::Scene))?;
    let cap = match config.norm_cap {
        Some(cap) => cap,
        None => pilot_cap(&cameras, &targets, PILOT_STEPS, &mut stream(seed, Stream::Pilot)),
    };
    CameraWorld::new(cameras, targets, cap, stream(seed, Stream::Targets))
}

pub fn engine_setup(config: &ExperimentConfig) -> Result<EngineSetup> {
    config.validate()?;
    Ok(EngineSetup {
        algorithm: config.algorithm()?,
        graph: config.graph()?,
        delays: config.delay_model()?,
        horizon: config.horizon,
        rho: config.effective_rho()?,
        skew_delivery: config.skew_delivery,
        lr_scale: config.lr_scale,
        default_action: config.default_estimate_action,
    })
}

/// One run of the camera experiment.
pub fn run_single(config: &ExperimentConfig, seed: u64) -> Result<RunResult> {
    run_single_with(config, seed, Instrumentation::default())
}

pub fn run_single_with(config: &ExperimentConfig, seed: u64, instr: Instrumentation) -> Result<RunResult> {
    let setup = engine_setup(config)?;
    let mut world = build_world(config, seed)?;
    let result = simulate(&mut world, &setup, seed, instr)?;
    if world.clamped_rewards() > 0 {
        log::warn!(
            "seed {seed}: {} rewards exceeded the normalization cap {} and were clamped",
            world.clamped_rewards(),
            world.cap()
        );
    }
    Ok(RunResult {
        clamped_rewards: world.clamped_rewards(),
        ..result
    })
}

#[derive(Clone, Debug)]
pub struct MonteCarlo {
    pub runs: Vec<RunResult>,
    pub stats: AggregateStats,
}

/// Runs seeds `seed, …, seed + runs − 1` in parallel and aggregates them in seed order.
pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<MonteCarlo> {
    run_monte_carlo_with(config, Instrumentation::default())
}

pub fn run_monte_carlo_with(config: &ExperimentConfig, instr: Instrumentation) -> Result<MonteCarlo> {
    config.validate()?;
    let runs: Vec<RunResult> = (0..config.runs as u64)
        .into_par_iter()
        .map(|k| run_single_with(config, config.seed + k, instr))
        .collect::<Result<_>>()?;
    let series: Vec<&[f64]> = runs.iter().map(|r| r.coverage.as_slice()).collect();
    let stats = AggregateStats::from_runs(&series, config.smoothing_window)?;
    Ok(MonteCarlo { runs, stats })
}

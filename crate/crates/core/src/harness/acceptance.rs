//! The acceptance criteria, each returning a measured value and a verdict.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};

use super::config::ExperimentConfig;
use super::sim::{run_monte_carlo, run_single_with, simulate, EngineSetup, Instrumentation};
use crate::asynchrony::{
    async_global_reward, audit_lipschitz, verify_gap, ClockModel, Deployment, TimeStampedReward,
};
use crate::bandit::{importance_weighted_estimate, l1_distance, softmax, Algorithm, LearnerState, RegretLedger};
use crate::envs::{
    CameraConfig, SmoothedCoverage, StationaryEnvironment, TabularInstance, TargetParams, TargetSystem,
};
use crate::error::Result;
use crate::network::{CommGraph, DelayModel, MessageBus};
use crate::rng::{stream, SimRng, Stream};
use crate::submodular::{
    brute_force_optimum, check_monotone_submodular, check_second_order_submodular, coin, curvature,
    Assignment, GroundElement, SetFunction, DEFAULT_ENUMERATION_CAP, DEFAULT_EXHAUSTIVE_CAP,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Below,
    AtMost,
    AtLeast,
    Equal,
}

impl Relation {
    fn holds(self, measured: f64, threshold: f64) -> bool {
        match self {
            Relation::Below => measured < threshold,
            Relation::AtMost => measured <= threshold,
            Relation::AtLeast => measured >= threshold,
            Relation::Equal => measured == threshold,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Below => "<",
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Equal => "==",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub measured: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    fn check(id: u8, name: &'static str, measured: f64, relation: Relation, threshold: f64, detail: String) -> Self {
        Self {
            id,
            name,
            measured,
            relation,
            threshold,
            passed: relation.holds(measured, threshold),
            detail,
        }
    }
}

fn number(x: f64) -> String {
    if x == 0.0 || (1e-3..1e6).contains(&x.abs()) {
        format!("{x:.6}")
    } else {
        format!("{x:.3e}")
    }
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] C{:<2} {:<34} measured {} {} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            number(self.measured),
            self.relation.symbol(),
            number(self.threshold)
        )?;
        if !self.detail.is_empty() {
            write!(f, "  ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AcceptanceReport {
    pub results: Vec<CriterionResult>,
}

impl AcceptanceReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> Vec<&CriterionResult> {
        self.results.iter().filter(|r| !r.passed).collect()
    }
}

impl fmt::Display for AcceptanceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            writeln!(f, "{r}")?;
        }
        let passed = self.results.iter().filter(|r| r.passed).count();
        write!(f, "{passed}/{} criteria passed", self.results.len())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcceptanceOptions {
    /// Criteria to run; all when empty.
    pub only: Vec<u8>,
    /// Multiplies the asynchrony gap bound before comparing (a corrupted
    /// bound must make the gap criterion fail).
    pub gap_bound_factor: f64,
    pub base_seed: u64,
}

impl Default for AcceptanceOptions {
    fn default() -> Self {
        Self {
            only: Vec::new(),
            gap_bound_factor: 1.0,
            base_seed: 1,
        }
    }
}

pub const CRITERIA: u8 = 13;

/// Runs the selected criteria in id order, printing each line through `on_result`.
pub fn run_acceptance(opts: &AcceptanceOptions, mut on_result: impl FnMut(&CriterionResult)) -> Result<AcceptanceReport> {
    let mut report = AcceptanceReport::default();
    for id in 1..=CRITERIA {
        if !opts.only.is_empty() && !opts.only.contains(&id) {
            continue;
        }
        let r = run_criterion(id, opts)?;
        on_result(&r);
        report.results.push(r);
    }
    Ok(report)
}

pub fn run_criterion(id: u8, opts: &AcceptanceOptions) -> Result<CriterionResult> {
    let seed = opts.base_seed;
    match id {
        1 => delay_parity(1, seed),
        2 => delay_parity(20, seed),
        3 => zero_delay_identity(seed),
        4 => telescoping(seed),
        5 => estimator_unbiasedness(seed),
        6 => softmax_lipschitz(seed),
        7 => regret_sublinearity(seed),
        8 => approximation_bound(seed),
        9 => coin_bound(seed),
        10 => synchronous_reduction(seed),
        11 => asynchrony_gap(seed, opts.gap_bound_factor),
        12 => structural_oracles(seed),
        13 => delay_statistics(seed),
        other => Err(crate::error::Error::InvalidArgument(format!("no criterion {other}"))),
    }
}

fn rng(seed: u64, salt: u64) -> SimRng {
    let mut r = SimRng::seed_from_u64(seed);
    r.set_stream(0xacce_0000 + salt);
    r
}

/// Mean running-average coverage over the last 500 rounds for both rules.
pub fn paired_tail_means(dbar: u64, seed: u64) -> Result<(f64, f64)> {
    let base = ExperimentConfig {
        dbar,
        seed,
        ..ExperimentConfig::default()
    };
    let iu = run_monte_carlo(&ExperimentConfig {
        algorithm: Algorithm::DogIu.name().into(),
        ..base.clone()
    })?;
    let dog = run_monte_carlo(&ExperimentConfig {
        algorithm: Algorithm::Dog.name().into(),
        ..base
    })?;
    Ok((iu.stats.tail_mean(500), dog.stats.tail_mean(500)))
}

fn delay_parity(dbar: u64, seed: u64) -> Result<CriterionResult> {
    let (iu, dog) = paired_tail_means(dbar, seed)?;
    let detail = format!("DOG-IU {iu:.3}, DOG {dog:.3} targets, 20 paired seeds");
    Ok(if dbar <= 1 {
        CriterionResult::check(1, "small-delay parity", (iu - dog).abs() / dog, Relation::Below, 0.05, detail)
    } else {
        CriterionResult::check(2, "large-delay advantage", (iu - dog) / dog, Relation::AtLeast, 0.10, detail)
    })
}

fn zero_delay_identity(seed: u64) -> Result<CriterionResult> {
    let config = ExperimentConfig {
        grid_rows: 2,
        grid_cols: 2,
        dbar: 0,
        horizon: 200,
        rho: 0.0,
        seed,
        ..ExperimentConfig::default()
    };
    let instr = Instrumentation {
        actions: true,
        weights: true,
        ..Instrumentation::default()
    };
    let run = |alg: Algorithm| {
        run_single_with(
            &ExperimentConfig {
                algorithm: alg.name().into(),
                ..config.clone()
            },
            seed,
            instr,
        )
    };
    let (iu, dog) = (run(Algorithm::DogIu)?, run(Algorithm::Dog)?);
    let (wa, wb) = (iu.weights.expect("recorded"), dog.weights.expect("recorded"));
    let (aa, ab) = (iu.actions.expect("recorded"), dog.actions.expect("recorded"));
    let mut mismatches = 0usize;
    for t in 0..wa.len() {
        if aa[t] != ab[t] {
            mismatches += 1;
        }
        for (x, y) in wa[t].iter().zip(&wb[t]) {
            mismatches += x.iter().zip(y).filter(|(p, q)| p.to_bits() != q.to_bits()).count();
        }
    }
    Ok(CriterionResult::check(
        3,
        "zero-delay algorithm identity",
        mismatches as f64,
        Relation::Equal,
        0.0,
        format!("{} rounds, 4 agents, weights compared bitwise", wa.len()),
    ))
}

fn telescoping(seed: u64) -> Result<CriterionResult> {
    let mut r = rng(seed, 4);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = r.random_range(2..=8);
        let batches = r.random_range(1..=6usize);
        let eta = r.random_range(0.001..0.5);
        let chosen = r.random_range(0..n);
        let p = r.random_range(0.05..=1.0);
        let z: Vec<f64> = (0..=batches).map(|_| r.random::<f64>()).collect();

        let mut staged = LearnerState::new(Algorithm::DogIu, n, eta, batches as u64 + 1, 1..=batches)?;
        staged.begin_round(1, chosen, p)?;
        staged.form_initial_estimate(|_, _, _| z[0])?;
        staged.end_tick(1)?;
        for k in 1..=batches {
            staged.ingest_batch(1, &[(k, 0)], |_, _, _| z[k])?;
            staged.end_tick(1 + k as u64)?;
        }
        let mut once = LearnerState::new(Algorithm::DogIu, n, eta, 0, [])?;
        once.begin_round(1, chosen, p)?;
        once.form_initial_estimate(|_, _, _| z[batches])?;
        once.end_tick(1)?;
        for (a, b) in staged.log_weights().iter().zip(once.log_weights()) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(CriterionResult::check(
        4,
        "telescoping of staged updates",
        worst,
        Relation::AtMost,
        1e-12,
        "1000 random (p, Z0..ZK) sequences, max log-weight difference".into(),
    ))
}

fn estimator_unbiasedness(seed: u64) -> Result<CriterionResult> {
    let mut r = rng(seed, 5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = r.random_range(1..=10);
        let logits: Vec<f64> = (0..n).map(|_| r.random_range(-4.0..4.0)).collect();
        let p = softmax(&logits);
        let reward: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        for b in 0..n {
            let mut expectation = 0.0;
            for a in 0..n {
                expectation += p[a] * importance_weighted_estimate(b, a, p[a], reward[a])?;
            }
            worst = worst.max((expectation - reward[b]).abs());
        }
    }
    Ok(CriterionResult::check(
        5,
        "estimator unbiasedness",
        worst,
        Relation::AtMost,
        1e-12,
        "exact expectation over the draw, 1000 random (p, r)".into(),
    ))
}

fn softmax_lipschitz(seed: u64) -> Result<CriterionResult> {
    let mut r = rng(seed, 6);
    let mut violations = 0usize;
    let mut worst_ratio = 0.0f64;
    for _ in 0..10_000 {
        let n = r.random_range(1..=16);
        let scale = [0.01, 1.0, 10.0][r.random_range(0..3)];
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-scale..scale)).collect();
        let y: Vec<f64> = (0..n).map(|_| r.random_range(-scale..scale)).collect();
        let lhs = l1_distance(&softmax(&x), &softmax(&y));
        let rhs = l1_distance(&x, &y);
        if rhs > 0.0 {
            worst_ratio = worst_ratio.max(lhs / rhs);
        }
        if lhs > 0.5 * rhs * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    Ok(CriterionResult::check(
        6,
        "softmax half-Lipschitz",
        violations as f64,
        Relation::Equal,
        0.0,
        format!("10000 pairs, dim <= 16, worst ratio {worst_ratio:.4}"),
    ))
}

/// Stationary reward with fixed gaps of 0.2 between consecutive actions,
/// shifted by how many of the two passive neighbors play action 1.
fn regret_table_reward(action: usize, context: &[(usize, usize)]) -> f64 {
    const BASE: [f64; 4] = [0.9, 0.7, 0.5, 0.3];
    BASE[action] - 0.1 * context.iter().filter(|&&(_, a)| a == 1).count() as f64
}

/// Average `Reg_T / T` of one learner with two passive, randomly acting
/// neighbors whose actions reach it over uniform delays.
pub fn regret_per_round(horizon: u64, seeds: u64, base_seed: u64, dbar: u64) -> Result<f64> {
    let graph = CommGraph::from_edges(3, &[(1, 0), (2, 0)])?;
    let delays = DelayModel::Uniform(dbar);
    let mut total = 0.0;
    for k in 0..seeds {
        let seed = base_seed + k;
        let eta = crate::bandit::learning_rate(4, dbar, horizon, 1.0)?;
        let mut learner = LearnerState::new(Algorithm::DogIu, 4, eta, dbar, [1, 2])?;
        let mut lrng = stream(seed, Stream::Learner(0));
        let mut world = stream(seed, Stream::Targets);
        let mut drng = stream(seed, Stream::Delays);
        let mut bus = MessageBus::new(dbar);
        let mut ledger = RegretLedger::new();
        let mut played: BTreeMap<u64, [usize; 3]> = BTreeMap::new();
        for t in 1..=horizon {
            let choice = learner.sample_action(&mut lrng);
            let joint = [choice.0, world.random_range(0..2), world.random_range(0..2)];
            played.insert(t, joint);
            for (i, &a) in joint.iter().enumerate() {
                bus.broadcast(&graph, &delays, i, t, a, t as f64, &mut drng)?;
            }
            let arrivals = bus.deliver(t)?.remove(&0).unwrap_or_default();
            learner.tick(t, choice, &arrivals, |_, own, ctx| regret_table_reward(own, ctx))?;
            let ctx = [(1, joint[1]), (2, joint[2])];
            let row: Vec<f64> = (0..4).map(|a| regret_table_reward(a, &ctx)).collect();
            ledger.record(choice.0, row[choice.0], Some(row), None);
        }
        total += ledger.static_regret().expect("full table")? / horizon as f64;
    }
    Ok(total / seeds as f64)
}

fn regret_sublinearity(seed: u64) -> Result<CriterionResult> {
    let horizons = [500u64, 2000, 8000];
    let values: Vec<f64> = horizons
        .iter()
        .map(|&t| regret_per_round(t, 20, seed, 5))
        .collect::<Result<_>>()?;
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let ratio = values[2] / values[0];
    let mut result = CriterionResult::check(
        7,
        "regret sublinearity",
        ratio,
        Relation::Below,
        0.5,
        format!(
            "Reg/T = {:.4}, {:.4}, {:.4} at T = 500, 2000, 8000; strictly decreasing: {decreasing}",
            values[0], values[1], values[2]
        ),
    );
    result.passed &= decreasing;
    Ok(result)
}

/// Weighted coverage over three agents with three actions each. Every
/// element covers one private unit item plus some of three shared items.
pub fn coordination_instance() -> Result<TabularInstance> {
    const SHARED: [f64; 3] = [4.0, 3.0, 2.0];
    let covers: [[&[usize]; 3]; 3] = [[&[0], &[1], &[2, 1]], [&[0], &[2], &[1]], [&[0, 2], &[1], &[]]];
    let ground: Vec<_> = (0..3).flat_map(|i| (0..3).map(move |a| GroundElement::new(i, a))).collect();
    TabularInstance::from_fn(ground, true, |set| {
        let mut shared = [false; 3];
        for e in set {
            for &s in covers[e.agent][e.action] {
                shared[s] = true;
            }
        }
        set.len() as f64 + shared.iter().zip(SHARED).filter(|(c, _)| **c).map(|(_, w)| w).sum::<f64>()
    })
}

struct CoordinationOutcome {
    optimum: f64,
    kappa: f64,
    average: f64,
    coin_sum: f64,
}

fn coordination_run(graph: CommGraph, seed: u64) -> Result<CoordinationOutcome> {
    let f = coordination_instance()?;
    let (_, optimum) = brute_force_optimum(&f, f.action_counts(), DEFAULT_ENUMERATION_CAP)?;
    let kappa = curvature(&f, f.ground())?.kappa;
    let cap = f
        .ground()
        .iter()
        .map(|&e| f.value(&[e]))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let horizon = 20_000u64;
    let setup = EngineSetup {
        algorithm: Algorithm::DogIu,
        graph: graph.clone(),
        delays: DelayModel::Uniform(2),
        horizon,
        rho: 0.0,
        skew_delivery: false,
        lr_scale: 1.0,
        default_action: 0,
    };
    let instr = Instrumentation {
        actions: true,
        ..Instrumentation::default()
    };
    let tail = (horizon * 3 / 4) as usize;
    let seeds = 20u64;
    let mut average = 0.0;
    let mut coin_sum = 0.0;
    for k in 0..seeds {
        let mut env = StationaryEnvironment::new(f.clone(), f.action_counts().to_vec(), cap)?;
        let run = simulate(&mut env, &setup, seed + k, instr)?;
        let window = &run.coverage[tail..];
        average += window.iter().sum::<f64>() / window.len() as f64;
        let actions = run.actions.expect("recorded");
        let mut coins = 0.0;
        for joint in &actions[tail..] {
            let a = Assignment::from_actions(joint);
            for i in 0..3 {
                let hood: Vec<usize> = graph.in_neighbors(i).iter().copied().collect();
                coins += coin(&f, i, &a, &hood)?;
            }
        }
        coin_sum += coins / (actions.len() - tail) as f64;
    }
    Ok(CoordinationOutcome {
        optimum,
        kappa,
        average: average / seeds as f64,
        coin_sum: coin_sum / seeds as f64,
    })
}

fn approximation_bound(seed: u64) -> Result<CriterionResult> {
    let o = coordination_run(CommGraph::complete(3), seed)?;
    let threshold = o.optimum / (1.0 + o.kappa) - 0.05 * o.optimum;
    Ok(CriterionResult::check(
        8,
        "approximation bound",
        o.average,
        Relation::AtLeast,
        threshold,
        format!("f(A*) = {}, curvature {:.4}, T = 20000, 20 seeds", o.optimum, o.kappa),
    ))
}

fn coin_bound(seed: u64) -> Result<CriterionResult> {
    let line = CommGraph::from_edges(3, &[(0, 1), (1, 0), (1, 2), (2, 1)])?;
    let o = coordination_run(line, seed)?;
    let threshold =
        o.optimum / (1.0 + o.kappa) - o.kappa / (1.0 + o.kappa) * o.coin_sum - 0.05 * o.optimum;
    Ok(CriterionResult::check(
        9,
        "coin-adjusted bound",
        o.average,
        Relation::AtLeast,
        threshold,
        format!(
            "f(A*) = {}, curvature {:.4}, summed mean coin {:.4}, line graph",
            o.optimum, o.kappa, o.coin_sum
        ),
    ))
}

fn random_smoothed(r: &mut SimRng, cameras: usize) -> Result<SmoothedCoverage> {
    let cols = cameras.min(4);
    let rows = cameras.div_ceil(cols);
    let mut positions = CameraConfig::grid(rows, cols, [20.0 * cols as f64, 20.0 * rows as f64], 8, 30f64.to_radians(), 15.0)?
        .positions()
        .to_vec();
    positions.truncate(cameras);
    let cams = CameraConfig::new(positions, 8, 30f64.to_radians(), 15.0)?;
    let params = TargetParams {
        count: r.random_range(1..=20),
        clusters: r.random_range(1..=4),
        speed: r.random_range(0.0..1.5),
        noise_sigma: 0.005,
        resample_period: 10,
        spread: 3.0,
        workspace: [20.0 * cols as f64, 20.0 * rows as f64],
    };
    let mut system = TargetSystem::spawn(params, r)?;
    let mut trajectory = vec![system.positions().to_vec()];
    for _ in 0..20 {
        system.step(r);
        trajectory.push(system.positions().to_vec());
    }
    let previous = (0..cameras).map(|_| r.random_range(0..8)).collect();
    let sharpness = r.random_range(0.2..2.0);
    let slew = r.random_range(0.25..1.0);
    let cap = r.random_range(1.0..10.0);
    SmoothedCoverage::new(cams, trajectory, previous, sharpness, slew, cap)
}

fn random_schedule(r: &mut SimRng, f: &SmoothedCoverage, clock: &ClockModel) -> (f64, Vec<Deployment>) {
    let n = f.cameras().camera_count();
    let t = r.random_range(1..(f.horizon() as u64));
    let times = clock.sample_execution_times(t, n, r);
    let d = times
        .iter()
        .enumerate()
        .map(|(i, &tau)| Deployment::new(i, r.random_range(0..8), tau))
        .collect();
    (t as f64, d)
}

fn synchronous_reduction(seed: u64) -> Result<CriterionResult> {
    let mut r = rng(seed, 10);
    let mut mismatches = 0usize;
    for _ in 0..1000 {
        let n = r.random_range(1..=8);
        let f = random_smoothed(&mut r, n)?;
        let tau = r.random_range(0.0..f.horizon());
        let d: Vec<_> = (0..n).map(|i| Deployment::new(i, r.random_range(0..8), tau)).collect();
        if async_global_reward(&f, &d)? != f.evaluate(tau, &d)? {
            mismatches += 1;
        }
    }
    Ok(CriterionResult::check(
        10,
        "synchronous reduction",
        mismatches as f64,
        Relation::Equal,
        0.0,
        "1000 random smoothed instances, exact equality".into(),
    ))
}

fn asynchrony_gap(seed: u64, factor: f64) -> Result<CriterionResult> {
    let mut r = rng(seed, 11);
    let mut violations = 0usize;
    let mut audits_failed = 0usize;
    let mut worst = 0.0f64;
    for n in [2usize, 4, 8] {
        for rho in [0.1, 0.3] {
            let clock = ClockModel::new(rho)?;
            let f = random_smoothed(&mut r, n)?;
            let probes: Vec<_> = (0..1000).map(|_| random_schedule(&mut r, &f, &clock)).collect();
            let audit = audit_lipschitz(&f, &probes)?;
            if !audit.holds {
                audits_failed += 1;
                continue;
            }
            for _ in 0..1000 {
                let (_, d) = random_schedule(&mut r, &f, &clock);
                let report = verify_gap(&f, &d, rho, Some(&audit))?;
                let bound = report.bound.expect("audited") * factor;
                if bound > 0.0 {
                    worst = worst.max(report.measured_gap / bound);
                }
                if report.measured_gap > bound {
                    violations += 1;
                }
            }
        }
    }
    let mut result = CriterionResult::check(
        11,
        "asynchrony gap bound",
        violations as f64,
        Relation::Equal,
        0.0,
        format!("6 settings x 1000 schedules, worst gap/bound {worst:.4}, failed audits {audits_failed}"),
    );
    result.passed &= audits_failed == 0;
    Ok(result)
}

/// Three agents, one action each, covering weighted items `{a:2, b, c, d, p}`:
/// agent 0 sees `{a, b, p}`, agent 1 `{a, c}`, agent 2 `{b, d}`.
pub const HAND_FIXTURE: &str = "\
-,-,- 0
0,-,- 4
-,0,- 3
-,-,0 2
0,0,- 5
0,-,0 5
-,0,0 5
0,0,0 6
";

fn structural_oracles(seed: u64) -> Result<CriterionResult> {
    let config = ExperimentConfig::default();
    let cameras = config.cameras()?;
    let targets = TargetSystem::spawn(config.target_params(), &mut stream(seed, Stream::Scene))?;
    let f = crate::envs::coverage_set_function(&cameras, targets.positions(), 1.0)?;
    let ground: Vec<_> = [5usize, 6, 9]
        .iter()
        .flat_map(|&c| (0..4).map(move |h| GroundElement::new(c, 2 * h)))
        .collect();
    let mono = check_monotone_submodular(&f, &ground, DEFAULT_EXHAUSTIVE_CAP)?;
    let second = check_second_order_submodular(&f, &ground, DEFAULT_EXHAUSTIVE_CAP)?;

    let table = TabularInstance::parse(HAND_FIXTURE)?;
    let a = Assignment::from_actions(&[0, 0, 0]);
    // leave-one-out ratios 1/4, 1/3, 1/2
    let mut err = (curvature(&table, table.ground())?.kappa - 0.75).abs();
    for (agent, hood, expected) in [(0usize, vec![1usize], 1.0), (1, vec![0], 0.0), (2, vec![], 1.0)] {
        err = err.max((coin(&table, agent, &a, &hood)? - expected).abs());
    }
    let mut result = CriterionResult::check(
        12,
        "structural oracles",
        err,
        Relation::AtMost,
        1e-12,
        format!(
            "3 cameras x 4 headings: submodular {}, 2nd-order {}; fixture curvature/coin max error",
            mono.holds, second.holds
        ),
    );
    result.passed &= mono.holds && second.holds;
    Ok(result)
}

fn delay_statistics(seed: u64) -> Result<CriterionResult> {
    let mut r = rng(seed, 13);
    let model = DelayModel::Uniform(10);
    let mut sum = 0u64;
    for t in 0..100_000u64 {
        sum += model.sample(0, 1, t, &mut r)?;
    }
    let deviation = (sum as f64 / 100_000.0 - 5.0).abs();
    let config = ExperimentConfig {
        dbar: 10,
        ..ExperimentConfig::default()
    };
    let run = run_single_with(&config, seed, Instrumentation::default())?;
    let mut result = CriterionResult::check(
        13,
        "delay statistics",
        deviation,
        Relation::Below,
        0.1,
        format!(
            "|mean - 5| over 1e5 draws; full run max staleness {} <= 10, {} of {} messages delivered",
            run.max_staleness, run.messages_delivered, run.messages_sent
        ),
    );
    result.passed &= run.max_staleness <= 10;
    Ok(result)
}

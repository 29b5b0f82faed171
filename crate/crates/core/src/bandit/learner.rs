use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::softmax::softmax;
use crate::error::{Error, Result};

/// Which update rule a learner follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    /// Update immediately from an estimated reward, correct as neighbor actions arrive.
    #[serde(rename = "dog-iu")]
    DogIu,
    /// Defer each round's single update until every neighbor action has arrived.
    #[serde(rename = "dog")]
    Dog,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::DogIu => "dog-iu",
            Algorithm::Dog => "dog",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dog-iu" => Ok(Algorithm::DogIu),
            "dog" => Ok(Algorithm::Dog),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm `{other}` (expected dog-iu or dog)"
            ))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `1 − 1(a = chosen) · (1 − x) / p`
pub fn importance_weighted_estimate(action: usize, chosen: usize, prob: f64, x: f64) -> Result<f64> {
    if !(prob > 0.0 && prob <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sampling probability must be in (0, 1], got {prob}"
        )));
    }
    Ok(estimate_unchecked(action, chosen, prob, x))
}

#[inline]
fn estimate_unchecked(action: usize, chosen: usize, prob: f64, x: f64) -> f64 {
    if action == chosen {
        1.0 - (1.0 - x) / prob
    } else {
        1.0
    }
}

/// One round whose reward is not yet fully known.
#[derive(Clone, Debug, PartialEq)]
pub struct PendingRound {
    pub round: u64,
    pub chosen_action: usize,
    pub sample_prob: f64,
    pub received: BTreeSet<usize>,
    pub missing: BTreeSet<usize>,
    pub known_actions: BTreeMap<usize, usize>,
    /// Current reward estimate; always `None` for the deferred baseline until complete.
    pub estimate: Option<f64>,
    /// Estimate already folded into the weights.
    pub applied: Option<f64>,
    /// First estimate formed for the round.
    pub initial_estimate: Option<f64>,
    pub batches_seen: usize,
}

impl PendingRound {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }
}

/// Summary of a round at retirement, for trace export.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub round: u64,
    pub chosen_action: usize,
    pub sample_prob: f64,
    pub initial_estimate: f64,
    pub final_reward: f64,
    pub batches_applied: usize,
    pub retired_at: u64,
}

/// Per-agent learner: log-domain weights plus the ledger of unresolved rounds.
#[derive(Clone, Debug)]
pub struct LearnerState {
    algorithm: Algorithm,
    log_weights: Vec<f64>,
    learning_rate: f64,
    delay_bound: u64,
    neighbors: BTreeSet<usize>,
    default_action: usize,
    pending: BTreeMap<u64, PendingRound>,
    last_known: BTreeMap<usize, (u64, usize)>,
    staged: Vec<f64>,
    current_round: Option<u64>,
    record: bool,
    retired: Vec<RoundRecord>,
}

impl LearnerState {
    pub fn new(
        algorithm: Algorithm,
        action_count: usize,
        learning_rate: f64,
        delay_bound: u64,
        neighbors: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        if action_count == 0 {
            return Err(Error::InvalidArgument("learner needs at least one action".into()));
        }
        if !(learning_rate >= 0.0) || !learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be finite and non-negative, got {learning_rate}"
            )));
        }
        Ok(Self {
            algorithm,
            log_weights: vec![0.0; action_count],
            learning_rate,
            delay_bound,
            neighbors: neighbors.into_iter().collect(),
            default_action: 0,
            pending: BTreeMap::new(),
            last_known: BTreeMap::new(),
            staged: vec![0.0; action_count],
            current_round: None,
            record: false,
            retired: Vec::new(),
        })
    }

    /// Action assumed for a neighbor before any of its actions has arrived.
    pub fn with_default_action(mut self, action: usize) -> Self {
        self.default_action = action;
        self
    }

    /// Keep a [`RoundRecord`] for every retired round.
    pub fn with_recording(mut self, record: bool) -> Self {
        self.record = record;
        self
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn action_count(&self) -> usize {
        self.log_weights.len()
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn delay_bound(&self) -> u64 {
        self.delay_bound
    }

    pub fn neighbors(&self) -> &BTreeSet<usize> {
        &self.neighbors
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn pending(&self) -> &BTreeMap<u64, PendingRound> {
        &self.pending
    }

    pub fn retired(&self) -> &[RoundRecord] {
        &self.retired
    }

    pub fn take_retired(&mut self) -> Vec<RoundRecord> {
        std::mem::take(&mut self.retired)
    }

    /// Current sampling distribution `softmax(log_weights)`.
    pub fn distribution(&self) -> Vec<f64> {
        softmax(&self.log_weights)
    }

    /// Draws an action and returns it with its exact probability mass.
    pub fn sample_action<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let p = self.distribution();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (a, &pa) in p.iter().enumerate() {
            acc += pa;
            if u < acc && pa > 0.0 {
                return (a, pa);
            }
        }
        // u landed in the rounding slack above the last partial sum
        let a = p.iter().rposition(|&x| x > 0.0).unwrap_or(0);
        (a, p[a])
    }

    /// Opens the ledger entry for round `round`, with all neighbors missing.
    pub fn begin_round(&mut self, round: u64, action: usize, prob: f64) -> Result<()> {
        if action >= self.action_count() {
            return Err(Error::OutOfRange { agent: 0, action });
        }
        if !(prob > 0.0 && prob <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "sampling probability must be in (0, 1], got {prob}"
            )));
        }
        if self.pending.contains_key(&round) || self.current_round.is_some_and(|r| round <= r) {
            return Err(Error::InvalidArgument(format!("round {round} already opened")));
        }
        self.pending.insert(
            round,
            PendingRound {
                round,
                chosen_action: action,
                sample_prob: prob,
                received: BTreeSet::new(),
                missing: self.neighbors.clone(),
                known_actions: BTreeMap::new(),
                estimate: None,
                applied: None,
                initial_estimate: None,
                batches_seen: 0,
            },
        );
        self.current_round = Some(round);
        Ok(())
    }

    /// Records `action` as the latest known action of `neighbor` if `round` is newer.
    fn remember(&mut self, neighbor: usize, round: u64, action: usize) {
        match self.last_known.get(&neighbor) {
            Some(&(r, _)) if r > round => {}
            _ => {
                self.last_known.insert(neighbor, (round, action));
            }
        }
    }

    fn guess(&self, neighbor: usize) -> usize {
        self.last_known
            .get(&neighbor)
            .map_or(self.default_action, |&(_, a)| a)
    }

    /// Received actions plus last-known guesses for the still-missing neighbors.
    fn context(&self, entry: &PendingRound) -> Vec<(usize, usize)> {
        self.neighbors
            .iter()
            .map(|&j| match entry.known_actions.get(&j) {
                Some(&a) => (j, a),
                None => (j, self.guess(j)),
            })
            .collect()
    }

    fn evaluate<R>(&self, entry: &PendingRound, reward: &mut R) -> f64
    where
        R: FnMut(u64, usize, &[(usize, usize)]) -> f64,
    {
        let ctx = self.context(entry);
        clamp_reward(reward(entry.round, entry.chosen_action, &ctx))
    }

    /// Folds newly arrived neighbor actions for round `round` into its ledger entry.
    ///
    /// The intermediate learner re-estimates the round immediately; the
    /// deferred learner evaluates it only once nothing is missing. Weight
    /// changes are staged and applied by [`LearnerState::end_tick`].
    pub fn ingest_batch<R>(&mut self, round: u64, arrivals: &[(usize, usize)], mut reward: R) -> Result<()>
    where
        R: FnMut(u64, usize, &[(usize, usize)]) -> f64,
    {
        if arrivals.is_empty() {
            return Ok(());
        }
        let entry = self.pending.get(&round).ok_or(Error::UnknownRound(round))?;
        for &(j, _) in arrivals {
            if entry.received.contains(&j) {
                return Err(Error::AlreadyReceived { neighbor: j, round });
            }
            if !entry.missing.contains(&j) {
                return Err(Error::NotANeighbor { neighbor: j, round });
            }
        }
        for &(j, a) in arrivals {
            self.remember(j, round, a);
        }
        let mut entry = self.pending.remove(&round).expect("checked above");
        for &(j, a) in arrivals {
            entry.missing.remove(&j);
            entry.received.insert(j);
            entry.known_actions.insert(j, a);
        }
        entry.batches_seen += 1;
        if self.algorithm == Algorithm::DogIu || entry.is_complete() {
            let z = self.evaluate(&entry, &mut reward);
            entry.estimate = Some(z);
            entry.initial_estimate.get_or_insert(z);
        }
        self.pending.insert(round, entry);
        Ok(())
    }

    /// Forms the estimate for the newest round if no batch produced one yet.
    ///
    /// With no neighbors the estimate is the exact reward, for both rules.
    pub fn form_initial_estimate<R>(&mut self, mut reward: R) -> Result<()>
    where
        R: FnMut(u64, usize, &[(usize, usize)]) -> f64,
    {
        let round = self
            .current_round
            .ok_or_else(|| Error::InvalidArgument("no round opened".into()))?;
        let Some(entry) = self.pending.get(&round) else {
            return Ok(());
        };
        if entry.estimate.is_some() {
            return Ok(());
        }
        if self.algorithm == Algorithm::Dog && !entry.is_complete() {
            return Ok(());
        }
        let z = self.evaluate(entry, &mut reward);
        let entry = self.pending.get_mut(&round).expect("present");
        entry.estimate = Some(z);
        entry.initial_estimate = Some(z);
        Ok(())
    }

    fn staged_round(&self, round: u64) -> Result<&PendingRound> {
        self.pending.get(&round).ok_or(Error::UnknownRound(round))
    }

    /// Stages `Δ_a = η · r̂_a(z0)` for the newest round.
    pub fn initial_update(&mut self, z0: f64) -> Result<Vec<f64>> {
        let round = self
            .current_round
            .ok_or_else(|| Error::InvalidArgument("no round opened".into()))?;
        self.stage_initial(round, z0)
    }

    fn stage_initial(&mut self, round: u64, z: f64) -> Result<Vec<f64>> {
        let entry = self.staged_round(round)?;
        let (chosen, p, eta) = (entry.chosen_action, entry.sample_prob, self.learning_rate);
        let delta: Vec<f64> = (0..self.action_count())
            .map(|a| eta * estimate_unchecked(a, chosen, p, z))
            .collect();
        for (s, d) in self.staged.iter_mut().zip(&delta) {
            *s += d;
        }
        let entry = self.pending.get_mut(&round).expect("present");
        entry.applied = Some(z);
        entry.estimate.get_or_insert(z);
        entry.initial_estimate.get_or_insert(z);
        Ok(delta)
    }

    /// Stages `Δ_a = η · [r̂_a(z_new) − r̂_a(z_prev)]` for past round `round`.
    pub fn correction_update(&mut self, round: u64, z_new: f64, z_prev: f64) -> Result<Vec<f64>> {
        let entry = self.staged_round(round)?;
        let (chosen, p, eta) = (entry.chosen_action, entry.sample_prob, self.learning_rate);
        let delta: Vec<f64> = (0..self.action_count())
            .map(|a| {
                eta * (estimate_unchecked(a, chosen, p, z_new)
                    - estimate_unchecked(a, chosen, p, z_prev))
            })
            .collect();
        for (s, d) in self.staged.iter_mut().zip(&delta) {
            *s += d;
        }
        let entry = self.pending.get_mut(&round).expect("present");
        entry.applied = Some(z_new);
        entry.estimate = Some(z_new);
        Ok(delta)
    }

    /// Stages the net change of every round whose estimate moved during this
    /// tick (ascending round order), applies the staged increments to the
    /// log-weights, re-centers them and retires completed rounds.
    pub fn end_tick(&mut self, tick: u64) -> Result<()> {
        let moved: Vec<(u64, f64, Option<f64>)> = self
            .pending
            .values()
            .filter_map(|e| match (e.estimate, e.applied) {
                (Some(z), None) => Some((e.round, z, None)),
                (Some(z), Some(prev)) if z != prev => Some((e.round, z, Some(prev))),
                _ => None,
            })
            .collect();
        for (round, z, prev) in moved {
            match prev {
                None => self.stage_initial(round, z)?,
                Some(prev) => self.correction_update(round, z, prev)?,
            };
        }
        for (w, s) in self.log_weights.iter_mut().zip(self.staged.iter_mut()) {
            *w += *s;
            *s = 0.0;
        }
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        for w in &mut self.log_weights {
            *w -= max;
        }
        let done: Vec<u64> = self
            .pending
            .values()
            .filter(|e| e.is_complete() && e.applied.is_some())
            .map(|e| e.round)
            .collect();
        for round in done {
            let e = self.pending.remove(&round).expect("present");
            if self.record {
                let final_reward = e.applied.unwrap_or(0.0);
                self.retired.push(RoundRecord {
                    round,
                    chosen_action: e.chosen_action,
                    sample_prob: e.sample_prob,
                    initial_estimate: e.initial_estimate.unwrap_or(final_reward),
                    final_reward,
                    batches_applied: e.batches_seen,
                    retired_at: tick,
                });
            }
        }
        Ok(())
    }

    /// One full round: open it with the drawn action, ingest this tick's
    /// batches in ascending round order, form the newest round's estimate and
    /// apply the tick's updates.
    pub fn tick<R>(
        &mut self,
        round: u64,
        choice: (usize, f64),
        arrivals: &BTreeMap<u64, Vec<(usize, usize)>>,
        mut reward: R,
    ) -> Result<()>
    where
        R: FnMut(u64, usize, &[(usize, usize)]) -> f64,
    {
        self.begin_round(round, choice.0, choice.1)?;
        for (&s, batch) in arrivals {
            for &(j, a) in batch {
                self.remember(j, s, a);
            }
        }
        for (&s, batch) in arrivals {
            self.ingest_batch(s, batch, &mut reward)?;
        }
        self.form_initial_estimate(&mut reward)?;
        self.end_tick(round)
    }

    /// Checks the learner's structural invariants at tick `tick`.
    pub fn check_invariants(&self, tick: u64) -> Result<()> {
        if self.log_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("non-finite log-weight".into()));
        }
        let total: f64 = self.distribution().iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("distribution sums to {total}")));
        }
        for e in self.pending.values() {
            if e.round + self.delay_bound < tick || e.round > tick {
                return Err(Error::InvalidArgument(format!(
                    "round {} pending at tick {tick} outside the delay window",
                    e.round
                )));
            }
            if !e.received.is_disjoint(&e.missing)
                || e.received.len() + e.missing.len() != self.neighbors.len()
            {
                return Err(Error::InvalidArgument(format!(
                    "round {} received/missing sets do not partition the neighborhood",
                    e.round
                )));
            }
        }
        Ok(())
    }
}

fn clamp_reward(z: f64) -> f64 {
    if z.is_nan() {
        log::warn!("reward model returned NaN; using 0");
        return 0.0;
    }
    z.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ETA: f64 = 0.1;

    fn learner(alg: Algorithm, n: usize, neighbors: &[usize]) -> LearnerState {
        LearnerState::new(alg, n, ETA, 5, neighbors.iter().copied()).unwrap()
    }

    fn const_reward(z: f64) -> impl FnMut(u64, usize, &[(usize, usize)]) -> f64 {
        move |_, _, _| z
    }

    #[test]
    fn estimator_values() {
        assert_eq!(importance_weighted_estimate(1, 0, 0.3, 0.2).unwrap(), 1.0);
        assert_eq!(importance_weighted_estimate(0, 0, 1.0, 0.6).unwrap(), 0.6);
        assert_eq!(importance_weighted_estimate(0, 0, 0.25, 0.0).unwrap(), -3.0);
        assert!(importance_weighted_estimate(0, 0, 0.0, 0.5).is_err());
    }

    #[test]
    fn sampling_uniform_and_saturated() {
        let l = learner(Algorithm::DogIu, 4, &[]);
        assert!(l.distribution().iter().all(|&p| p == 0.25));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (_, p) = l.sample_action(&mut rng);
        assert_eq!(p, 0.25);

        let mut l = learner(Algorithm::DogIu, 4, &[]);
        l.log_weights[2] = 20.0;
        assert!(l.distribution()[2] > 0.999);
        let hits = (0..1000)
            .filter(|_| l.sample_action(&mut rng).0 == 2)
            .count();
        assert!(hits >= 995);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let mut l = learner(Algorithm::DogIu, 5, &[]);
        l.log_weights = vec![0.1, -0.4, 0.9, 0.0, -2.0];
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20).map(|_| l.sample_action(&mut rng).0).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }

    #[test]
    fn initial_update_examples() {
        let mut l = learner(Algorithm::DogIu, 3, &[]);
        l.begin_round(1, 0, 0.5).unwrap();
        assert_eq!(l.initial_update(1.0).unwrap(), vec![ETA; 3]);

        let mut l = learner(Algorithm::DogIu, 3, &[]);
        l.begin_round(1, 0, 0.5).unwrap();
        assert_eq!(l.initial_update(0.0).unwrap(), vec![-ETA, ETA, ETA]);

        let mut l = LearnerState::new(Algorithm::DogIu, 3, 0.0, 0, []).unwrap();
        l.begin_round(1, 2, 0.5).unwrap();
        assert_eq!(l.initial_update(0.3).unwrap(), vec![0.0; 3]);

        let mut l = learner(Algorithm::DogIu, 3, &[]);
        assert!(l.initial_update(0.3).is_err());
    }

    #[test]
    fn correction_update_examples() {
        let mut l = learner(Algorithm::DogIu, 3, &[1]);
        l.begin_round(4, 1, 0.5).unwrap();
        l.initial_update(0.2).unwrap();
        assert_eq!(l.correction_update(4, 0.2, 0.2).unwrap(), vec![0.0; 3]);
        let d = l.correction_update(4, 0.7, 0.2).unwrap();
        assert_eq!(d[0], 0.0);
        assert_eq!(d[2], 0.0);
        assert!((d[1] - ETA).abs() < 1e-15);
        assert!(matches!(
            l.correction_update(3, 0.7, 0.2),
            Err(Error::UnknownRound(3))
        ));
    }

    #[test]
    fn staged_updates_telescope() {
        let mut staged = learner(Algorithm::DogIu, 4, &[1, 2, 3]);
        staged.begin_round(1, 2, 0.25).unwrap();
        let zs = [0.1, 0.45, 0.3, 0.9];
        staged.initial_update(zs[0]).unwrap();
        for w in zs.windows(2) {
            staged.correction_update(1, w[1], w[0]).unwrap();
        }
        staged.end_tick(1).unwrap();

        let mut one_shot = learner(Algorithm::DogIu, 4, &[1, 2, 3]);
        one_shot.begin_round(1, 2, 0.25).unwrap();
        one_shot.initial_update(zs[3]).unwrap();
        one_shot.end_tick(1).unwrap();
        for (a, b) in staged.log_weights().iter().zip(one_shot.log_weights()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_batch_is_a_no_op() {
        let mut l = learner(Algorithm::DogIu, 3, &[1, 2]);
        l.begin_round(1, 0, 0.5).unwrap();
        let before = l.pending.clone();
        l.ingest_batch(1, &[], const_reward(0.5)).unwrap();
        assert_eq!(before, l.pending);
    }

    #[test]
    fn ingest_validates_arrivals() {
        let mut l = learner(Algorithm::DogIu, 3, &[1, 2]);
        l.begin_round(1, 0, 0.5).unwrap();
        l.ingest_batch(1, &[(1, 0)], const_reward(0.5)).unwrap();
        assert!(matches!(
            l.ingest_batch(1, &[(1, 2)], const_reward(0.5)),
            Err(Error::AlreadyReceived { neighbor: 1, round: 1 })
        ));
        assert!(matches!(
            l.ingest_batch(1, &[(7, 2)], const_reward(0.5)),
            Err(Error::NotANeighbor { neighbor: 7, .. })
        ));
        assert!(matches!(
            l.ingest_batch(9, &[(2, 2)], const_reward(0.5)),
            Err(Error::UnknownRound(9))
        ));
    }

    /// Reward: 0.2 per neighbor playing the same action as the learner's
    /// chosen action, subtracted from 0.9.
    fn overlap_reward(_: u64, own: usize, ctx: &[(usize, usize)]) -> f64 {
        0.9 - 0.2 * ctx.iter().filter(|(_, a)| *a == own).count() as f64
    }

    #[test]
    fn final_batch_sets_true_reward_and_retires() {
        let mut l = learner(Algorithm::DogIu, 3, &[1, 2]).with_recording(true);
        let mut arrivals = BTreeMap::new();
        l.tick(1, (0, 0.5), &arrivals, overlap_reward).unwrap();
        // default guess is action 0 for both neighbors
        assert_eq!(l.pending[&1].estimate, Some(0.5));

        arrivals.insert(1, vec![(1, 2)]);
        l.tick(2, (1, 0.5), &arrivals, overlap_reward).unwrap();
        assert!((l.pending[&1].estimate.unwrap() - 0.7).abs() < 1e-12);

        arrivals.clear();
        arrivals.insert(1, vec![(2, 1)]);
        l.tick(3, (1, 0.5), &arrivals, overlap_reward).unwrap();
        assert!(!l.pending.contains_key(&1));
        let rec = &l.retired()[0];
        assert_eq!(rec.round, 1);
        assert!((rec.final_reward - 0.9).abs() < 1e-12);
        assert_eq!(rec.initial_estimate, 0.5);
        assert_eq!(rec.batches_applied, 2);
        assert_eq!(rec.retired_at, 3);
    }

    #[test]
    fn batches_for_two_rounds_in_one_tick_match_sequential_replay() {
        let setup = || {
            let mut l = learner(Algorithm::DogIu, 3, &[1]);
            let none = BTreeMap::new();
            l.tick(1, (0, 0.4), &none, overlap_reward).unwrap();
            l.tick(2, (2, 0.3), &none, overlap_reward).unwrap();
            l
        };
        let mut joint = setup();
        let mut both = BTreeMap::new();
        both.insert(1, vec![(1, 1)]);
        both.insert(2, vec![(1, 2)]);
        joint.tick(3, (1, 0.3), &both, overlap_reward).unwrap();

        let mut seq = setup();
        seq.ingest_batch(1, &[(1, 1)], overlap_reward).unwrap();
        seq.end_tick(3).unwrap();
        seq.ingest_batch(2, &[(1, 2)], overlap_reward).unwrap();
        seq.end_tick(3).unwrap();
        // the joint run also opened round 3; apply the same to the replay
        seq.begin_round(3, 1, 0.3).unwrap();
        seq.form_initial_estimate(overlap_reward).unwrap();
        seq.end_tick(3).unwrap();

        let pj = joint.distribution();
        let ps = seq.distribution();
        for (a, b) in pj.iter().zip(&ps) {
            assert!((a - b).abs() < 1e-12, "{pj:?} vs {ps:?}");
        }
    }

    #[test]
    fn deferred_learner_updates_once_when_complete() {
        let mut l = learner(Algorithm::Dog, 3, &[1]).with_recording(true);
        let none = BTreeMap::new();
        l.tick(1, (0, 1.0 / 3.0), &none, overlap_reward).unwrap();
        assert_eq!(l.log_weights(), &[0.0; 3]);
        l.tick(2, (0, 1.0 / 3.0), &none, overlap_reward).unwrap();
        l.tick(3, (0, 1.0 / 3.0), &none, overlap_reward).unwrap();
        assert_eq!(l.log_weights(), &[0.0; 3]);
        let mut a = BTreeMap::new();
        a.insert(1, vec![(1, 0)]);
        l.tick(4, (1, 1.0 / 3.0), &a, overlap_reward).unwrap();
        assert_eq!(l.retired()[0].retired_at, 4);
        // chosen 0, p = 1/3, reward 0.7: r̂_0 = 1 − 0.3 · 3 = 0.1, others 1
        let w = l.log_weights();
        assert!((w[1] - w[0] - ETA * 0.9).abs() < 1e-12);
        assert_eq!(w[1], w[2]);
    }

    #[test]
    fn zero_delay_runs_are_bit_identical() {
        let run = |alg| {
            let mut l = learner(alg, 4, &[1, 2]);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let mut trail = Vec::new();
            for t in 1..=50u64 {
                let choice = l.sample_action(&mut rng);
                let mut arrivals = BTreeMap::new();
                arrivals.insert(t, vec![(1, (t % 4) as usize), (2, (t % 3) as usize)]);
                l.tick(t, choice, &arrivals, overlap_reward).unwrap();
                trail.push((choice.0, l.log_weights().to_vec()));
            }
            trail
        };
        assert_eq!(run(Algorithm::DogIu), run(Algorithm::Dog));
    }

    #[test]
    fn out_of_order_arrivals_keep_latest_guess() {
        let mut l = learner(Algorithm::DogIu, 3, &[1]);
        let none = BTreeMap::new();
        l.tick(1, (0, 0.5), &none, overlap_reward).unwrap();
        l.tick(2, (0, 0.5), &none, overlap_reward).unwrap();
        let mut a = BTreeMap::new();
        a.insert(2, vec![(1, 2)]);
        l.tick(3, (0, 0.5), &a, overlap_reward).unwrap();
        let mut b = BTreeMap::new();
        b.insert(1, vec![(1, 1)]);
        l.tick(4, (0, 0.5), &b, overlap_reward).unwrap();
        // round-1 info is older than the round-2 info already held
        assert_eq!(l.guess(1), 2);
        l.check_invariants(4).unwrap();
    }
}

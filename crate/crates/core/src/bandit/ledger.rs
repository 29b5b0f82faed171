use std::collections::BTreeMap;

use super::learner::{importance_weighted_estimate, LearnerState};
use crate::error::{Error, Result};

/// Cumulative estimation error over the open delay window.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulativeError {
    /// `ε_a` for every action.
    pub per_action: Vec<f64>,
    /// `max_a |ε_a|`
    pub max: f64,
}

/// `ε_a = Σ_s [r̂_a,s(Z_s) − r̂_a,s(r_s)]` over the learner's unresolved rounds
/// in `{tick − d̄ + 1, …, tick}`, where `Z_s` is the current estimate and `r_s`
/// the true reward from `truth`.
///
/// Retired rounds carry their true reward and contribute nothing. Rounds
/// without an estimate (the deferred rule before completion) are skipped.
pub fn cumulative_error(
    state: &LearnerState,
    truth: &BTreeMap<u64, f64>,
    tick: u64,
) -> Result<CumulativeError> {
    let n = state.action_count();
    let mut per_action = vec![0.0; n];
    let lo = (tick + 1).saturating_sub(state.delay_bound());
    for (&s, entry) in state.pending().range(lo..=tick) {
        let Some(z) = entry.estimate else { continue };
        let r = *truth.get(&s).ok_or(Error::UnknownRound(s))?;
        for (a, eps) in per_action.iter_mut().enumerate() {
            *eps += importance_weighted_estimate(a, entry.chosen_action, entry.sample_prob, z)?
                - importance_weighted_estimate(a, entry.chosen_action, entry.sample_prob, r)?;
        }
    }
    let max = per_action.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    Ok(CumulativeError { per_action, max })
}

/// `max_a Σ_t table[t][a] − Σ_t table[t][plays[t]]`
pub fn static_regret(plays: &[usize], table: &[Vec<f64>]) -> Result<f64> {
    if plays.len() != table.len() {
        return Err(Error::Shape(format!(
            "{} plays but {} table rows",
            plays.len(),
            table.len()
        )));
    }
    let Some(width) = table.first().map(Vec::len) else {
        return Ok(0.0);
    };
    let mut totals = vec![0.0; width];
    let mut realized = 0.0;
    for (t, (row, &a)) in table.iter().zip(plays).enumerate() {
        if row.len() != width {
            return Err(Error::Shape(format!(
                "row {t} has {} entries, expected {width}",
                row.len()
            )));
        }
        if a >= width {
            return Err(Error::Shape(format!("play {a} at round {t} outside {width} actions")));
        }
        for (tot, v) in totals.iter_mut().zip(row) {
            *tot += v;
        }
        realized += row[a];
    }
    let best = totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(best - realized)
}

/// Per-round bookkeeping for one agent.
#[derive(Clone, Debug, Default)]
pub struct RegretLedger {
    plays: Vec<usize>,
    realized: Vec<f64>,
    table: Option<Vec<Vec<f64>>>,
    max_errors: Vec<f64>,
}

impl RegretLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one round. `per_action` holds every action's true reward for
    /// the round and is kept only while every round supplies it.
    pub fn record(&mut self, play: usize, realized: f64, per_action: Option<Vec<f64>>, max_error: Option<f64>) {
        let first = self.plays.is_empty();
        self.plays.push(play);
        self.realized.push(realized);
        match (per_action, &mut self.table) {
            (Some(row), Some(table)) => table.push(row),
            (Some(row), None) if first => self.table = Some(vec![row]),
            _ => self.table = None,
        }
        if let Some(m) = max_error {
            self.max_errors.push(m);
        }
    }

    pub fn len(&self) -> usize {
        self.plays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plays.is_empty()
    }

    pub fn realized(&self) -> &[f64] {
        &self.realized
    }

    pub fn max_errors(&self) -> &[f64] {
        &self.max_errors
    }

    pub fn static_regret(&self) -> Option<Result<f64>> {
        self.table
            .as_ref()
            .map(|table| static_regret(&self.plays, table))
    }

    /// Time-average of the recorded `M_t`.
    pub fn mean_max_error(&self) -> Option<f64> {
        if self.max_errors.is_empty() {
            None
        } else {
            Some(self.max_errors.iter().sum::<f64>() / self.max_errors.len() as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::Algorithm;

    #[test]
    fn regret_examples() {
        let table = vec![vec![0.2, 0.7], vec![0.1, 0.9], vec![0.5, 0.4]];
        assert!(static_regret(&[1, 1, 1], &table).unwrap().abs() < 1e-12);
        let flat = vec![vec![0.3, 0.3]; 3];
        assert_eq!(static_regret(&[0, 1, 0], &flat).unwrap(), 0.0);
        // best fixed: action 1 = 2.0; plays 0,1,0 earn 0.2 + 0.9 + 0.5 = 1.6
        let r = static_regret(&[0, 1, 0], &table).unwrap();
        assert!((r - 0.4).abs() < 1e-12);
        assert!(static_regret(&[0, 1], &table).is_err());
        assert!(static_regret(&[0, 1, 2], &table).is_err());
    }

    fn open(z: f64, chosen: usize, p: f64) -> LearnerState {
        let mut l = LearnerState::new(Algorithm::DogIu, 3, 0.1, 1, [1]).unwrap();
        l.begin_round(1, chosen, p).unwrap();
        l.form_initial_estimate(|_, _, _| z).unwrap();
        l.end_tick(1).unwrap();
        l
    }

    #[test]
    fn exact_estimates_have_no_error() {
        let l = open(0.6, 0, 0.5);
        let truth = BTreeMap::from([(1, 0.6)]);
        let e = cumulative_error(&l, &truth, 1).unwrap();
        assert_eq!(e.max, 0.0);
    }

    #[test]
    fn one_round_window_error() {
        let l = open(0.3, 0, 0.5);
        let truth = BTreeMap::from([(1, 0.8)]);
        let e = cumulative_error(&l, &truth, 1).unwrap();
        // r̂(0.3) − r̂(0.8) = (0.3 − 0.8) / 0.5
        assert!((e.per_action[0] + 1.0).abs() < 1e-12);
        assert_eq!(e.per_action[1], 0.0);
        assert_eq!(e.per_action[2], 0.0);
        assert!((e.max - 1.0).abs() < 1e-12);
        assert!(cumulative_error(&l, &BTreeMap::new(), 1).is_err());
    }

    #[test]
    fn ledger_tracks_regret_and_errors() {
        let mut ledger = RegretLedger::new();
        ledger.record(0, 0.2, Some(vec![0.2, 0.7]), Some(0.5));
        ledger.record(1, 0.9, Some(vec![0.1, 0.9]), Some(1.5));
        assert_eq!(ledger.len(), 2);
        assert!((ledger.static_regret().unwrap().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(ledger.mean_max_error(), Some(1.0));
        ledger.record(1, 0.9, None, None);
        assert!(ledger.static_regret().is_none());
    }
}

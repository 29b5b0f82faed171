use std::collections::BTreeMap;

use dogiu::bandit::importance_weighted_estimate;
use dogiu::harness::{running_average, AggregateStats};
use dogiu::network::{CommGraph, DelayModel, MessageBus};
use dogiu::rng::{stream, Stream};
use dogiu::submodular::{check_monotone_submodular, coin, curvature, GroundElement};
use dogiu::{Algorithm, Assignment, Deployment, DeploymentSchedule, LearnerState, SetFunction, TabularInstance};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Whatever order batches arrive in, once every round is resolved the
    /// weights are those of the final rewards applied once per round.
    #[test]
    fn resolved_weights_equal_final_rewards(
        seed in 0u64..10_000,
        dbar in 0u64..6,
        neighbors in 1usize..4,
        actions in 2usize..6,
        eta in 0.01f64..1.0,
        dog in any::<bool>(),
    ) {
        let n = neighbors + 1;
        let edges: Vec<_> = (1..n).map(|j| (j, 0)).collect();
        let graph = CommGraph::from_edges(n, &edges).unwrap();
        let delays = DelayModel::Uniform(dbar);
        let alg = if dog { Algorithm::Dog } else { Algorithm::DogIu };
        let mut learner = LearnerState::new(alg, actions, eta, dbar, 1..n).unwrap().with_recording(true);
        let mut bus = MessageBus::new(dbar);
        let mut lrng = stream(seed, Stream::Learner(0));
        let mut drng = stream(seed, Stream::Delays);
        let horizon = 30u64;
        let reward = |s: u64, own: usize, ctx: &[(usize, usize)]| {
            let hits = ctx.iter().filter(|&&(j, a)| (a + j + s as usize) % actions == own).count();
            (0.1 + 0.2 * hits as f64).min(1.0)
        };
        for t in 1..=horizon + dbar {
            if t <= horizon {
                let choice = learner.sample_action(&mut lrng);
                for j in 1..n {
                    bus.broadcast(&graph, &delays, j, t, (seed as usize + j * t as usize) % actions, t as f64, &mut drng).unwrap();
                }
                let arrivals = bus.deliver(t).unwrap().remove(&0).unwrap_or_default();
                learner.tick(t, choice, &arrivals, reward).unwrap();
            } else {
                let arrivals = bus.deliver(t).unwrap().remove(&0).unwrap_or_default();
                for (&s, batch) in &arrivals {
                    learner.ingest_batch(s, batch, reward).unwrap();
                }
                learner.end_tick(t).unwrap();
            }
            learner.check_invariants(t).unwrap();
        }
        prop_assert!(learner.pending().is_empty());
        let records = learner.retired();
        prop_assert_eq!(records.len() as u64, horizon);
        let mut w = vec![0.0; actions];
        for r in records {
            prop_assert!(r.retired_at <= r.round + dbar);
            for (a, wa) in w.iter_mut().enumerate() {
                *wa += eta * importance_weighted_estimate(a, r.chosen_action, r.sample_prob, r.final_reward).unwrap();
            }
        }
        let lw = learner.log_weights();
        for a in 1..actions {
            let got = lw[a] - lw[0];
            let want = w[a] - w[0];
            prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "{} vs {}", got, want);
        }
        let p = learner.distribution();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interval_brackets_the_mean(series in prop::collection::vec(prop::collection::vec(0.0f64..80.0, 12), 1..6), window in 1usize..20) {
        let refs: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
        let stats = AggregateStats::from_runs(&refs, window).unwrap();
        for row in &stats.rows {
            prop_assert!(row.ci_low <= row.mean && row.mean <= row.ci_high);
        }
        let means: Vec<f64> = stats.rows.iter().map(|r| r.mean).collect();
        for (t, avg) in running_average(&means, window).iter().enumerate() {
            let lo = t.saturating_sub(window - 1);
            let slice = &means[lo..=t];
            let min = slice.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = slice.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(*avg >= min - 1e-9 && *avg <= max + 1e-9);
        }
    }

    #[test]
    fn schedules_are_time_ordered(times in prop::collection::vec(-5.0f64..5.0, 1..10)) {
        let d: Vec<_> = times.iter().enumerate().map(|(i, &t)| Deployment::new(i, 0, t)).collect();
        let s = DeploymentSchedule::new(&d).unwrap();
        prop_assert_eq!(s.len(), d.len());
        for w in s.entries().windows(2) {
            prop_assert!(w[0].time < w[1].time || (w[0].time == w[1].time && w[0].agent < w[1].agent));
        }
    }

    #[test]
    fn grid_links_are_symmetric(rows in 1usize..6, cols in 1usize..6) {
        let g = CommGraph::grid4(rows, cols);
        for i in 0..rows * cols {
            prop_assert!(g.in_neighbors(i).len() <= 4);
            for &j in g.in_neighbors(i) {
                prop_assert!(g.has_edge(i, j) && g.has_edge(j, i));
            }
        }
    }

    /// Weighted coverage tables are monotone submodular, their curvature
    /// lies in [0, 1] and coins are never negative.
    #[test]
    fn coverage_tables_are_well_formed(
        covers in prop::collection::vec(prop::collection::vec(0usize..5, 0..4), 4),
        weights in prop::collection::vec(0.1f64..3.0, 5),
    ) {
        let ground: Vec<_> = (0..4).map(|k| GroundElement::new(k / 2, k % 2)).collect();
        let f = TabularInstance::from_fn(ground.clone(), true, |set| {
            let mut hit = [false; 5];
            for e in set {
                for &item in &covers[e.agent * 2 + e.action] {
                    hit[item] = true;
                }
            }
            hit.iter().zip(&weights).filter(|(h, _)| **h).map(|(_, w)| w).sum()
        }).unwrap();
        prop_assert!(check_monotone_submodular(&f, &ground, 12).unwrap().holds);
        let k = curvature(&f, &ground).unwrap().kappa;
        prop_assert!((0.0..=1.0).contains(&k));
        let a = Assignment::from_actions(&[0, 1]);
        for (agent, hood) in [(0usize, vec![]), (0, vec![1]), (1, vec![])] {
            let c = coin(&f, agent, &a, &hood).unwrap();
            prop_assert!(c >= -1e-12);
            prop_assert!(c <= f.value(&[a.get(agent).unwrap()]).unwrap() + 1e-12);
        }
    }
}

#[test]
fn neighbor_deliveries_group_by_round() {
    let graph = CommGraph::complete(3);
    let mut bus = MessageBus::new(0);
    let mut rng = stream(1, Stream::Delays);
    for i in 0..3 {
        bus.broadcast(&graph, &DelayModel::Constant(0), i, 1, i, 1.0, &mut rng).unwrap();
    }
    let d = bus.deliver(1).unwrap();
    let expect: BTreeMap<u64, Vec<(usize, usize)>> = BTreeMap::from([(1, vec![(0, 0), (2, 2)])]);
    assert_eq!(d[&1], expect);
}

//! Directed communication graph, per-link delays and the message bus.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::Rng;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Directed graph; `in_neighbors(i)` are the agents whose actions `i` receives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommGraph {
    in_neighbors: Vec<BTreeSet<usize>>,
    out_neighbors: Vec<BTreeSet<usize>>,
}

impl CommGraph {
    /// Builds a graph from `(sender, recipient)` edges.
    pub fn from_edges(agent_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut in_neighbors = vec![BTreeSet::new(); agent_count];
        let mut out_neighbors = vec![BTreeSet::new(); agent_count];
        for &(from, to) in edges {
            if from >= agent_count || to >= agent_count {
                return Err(Error::InvalidArgument(format!(
                    "edge {from}->{to} outside {agent_count} agents"
                )));
            }
            if from == to {
                return Err(Error::InvalidArgument(format!("self-loop on agent {from}")));
            }
            in_neighbors[to].insert(from);
            out_neighbors[from].insert(to);
        }
        Ok(Self {
            in_neighbors,
            out_neighbors,
        })
    }

    /// 4-neighbor lattice, agent `r * cols + c` at row `r`, column `c`, links both ways.
    pub fn grid4(rows: usize, cols: usize) -> Self {
        let idx = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((idx(r, c), idx(r, c + 1)));
                    edges.push((idx(r, c + 1), idx(r, c)));
                }
                if r + 1 < rows {
                    edges.push((idx(r, c), idx(r + 1, c)));
                    edges.push((idx(r + 1, c), idx(r, c)));
                }
            }
        }
        Self::from_edges(rows * cols, &edges).expect("lattice edges are valid")
    }

    pub fn complete(agent_count: usize) -> Self {
        let edges: Vec<_> = (0..agent_count)
            .flat_map(|i| (0..agent_count).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        Self::from_edges(agent_count, &edges).expect("complete graph edges are valid")
    }

    pub fn isolated(agent_count: usize) -> Self {
        Self::from_edges(agent_count, &[]).expect("no edges")
    }

    /// Parses `"0>1, 1>0, 2>1"` style edge lists.
    pub fn parse_edges(agent_count: usize, spec: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for token in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (a, b) = token
                .split_once('>')
                .ok_or_else(|| Error::InvalidArgument(format!("edge `{token}` is not `from>to`")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad agent id in edge `{token}`")))
            };
            edges.push((parse(a)?, parse(b)?));
        }
        Self::from_edges(agent_count, &edges)
    }

    pub fn agent_count(&self) -> usize {
        self.in_neighbors.len()
    }

    pub fn in_neighbors(&self, agent: usize) -> &BTreeSet<usize> {
        &self.in_neighbors[agent]
    }

    /// Agents that list `agent` as an in-neighbor.
    pub fn recipients(&self, agent: usize) -> &BTreeSet<usize> {
        &self.out_neighbors[agent]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.in_neighbors
            .get(to)
            .is_some_and(|s| s.contains(&from))
    }
}

/// How per-link, per-round delays are produced.
#[derive(Clone, Debug, PartialEq)]
pub enum DelayModel {
    Constant(u64),
    /// Uniform on `{0, …, max}`.
    Uniform(u64),
    /// Explicit `(sender, recipient, round) → delay` table.
    Trace {
        bound: u64,
        table: HashMap<(usize, usize, u64), u64>,
    },
}

#[derive(Deserialize)]
struct TraceRow {
    sender: usize,
    recipient: usize,
    round: u64,
    delay: u64,
}

impl DelayModel {
    pub fn trace(rows: impl IntoIterator<Item = ((usize, usize, u64), u64)>) -> Self {
        let table: HashMap<_, _> = rows.into_iter().collect();
        let bound = table.values().copied().max().unwrap_or(0);
        DelayModel::Trace { bound, table }
    }

    /// Reads a CSV trace with header `sender,recipient,round,delay`.
    pub fn load_trace(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let mut rows = Vec::new();
        for (line, row) in reader.deserialize::<TraceRow>().enumerate() {
            let row = row.map_err(|e| Error::Parse {
                line: line + 2,
                message: e.to_string(),
            })?;
            rows.push(((row.sender, row.recipient, row.round), row.delay));
        }
        Ok(Self::trace(rows))
    }

    /// Largest delay the model can produce.
    pub fn bound(&self) -> u64 {
        match self {
            DelayModel::Constant(d) | DelayModel::Uniform(d) => *d,
            DelayModel::Trace { bound, .. } => *bound,
        }
    }

    /// Delay for the message `sender → recipient` carrying round `round`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        sender: usize,
        recipient: usize,
        round: u64,
        rng: &mut R,
    ) -> Result<u64> {
        match self {
            DelayModel::Constant(d) => Ok(*d),
            DelayModel::Uniform(0) => Ok(0),
            DelayModel::Uniform(max) => Ok(rng.random_range(0..=*max)),
            DelayModel::Trace { table, .. } => {
                table
                    .get(&(sender, recipient, round))
                    .copied()
                    .ok_or(Error::TraceMiss {
                        sender,
                        recipient,
                        round,
                    })
            }
        }
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            line: 0,
            message: format!("{}: {other:?}", path.display()),
        },
    }
}

/// One action broadcast waiting on a link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InFlightMessage {
    pub sender: usize,
    pub recipient: usize,
    pub round: u64,
    pub action: usize,
    pub deliver_at: u64,
    /// Physical send time; equals `round` without clock skew.
    pub sent_at: f64,
}

/// Batches due at one tick: recipient → origin round → `(sender, action)`, senders ascending.
pub type Deliveries = BTreeMap<usize, BTreeMap<u64, Vec<(usize, usize)>>>;

#[derive(Clone, Copy, Debug)]
struct Payload {
    action: usize,
    sent_at: f64,
    delay: u64,
}

/// Deterministic delivery queue keyed by `(deliver_at, recipient, round, sender)`.
#[derive(Clone, Debug, Default)]
pub struct MessageBus {
    queue: BTreeMap<(u64, usize, u64, usize), Payload>,
    staleness_bound: u64,
    max_staleness: u64,
    sent: u64,
    delivered: u64,
}

impl MessageBus {
    pub fn new(staleness_bound: u64) -> Self {
        Self {
            staleness_bound,
            ..Self::default()
        }
    }

    /// Sends `action` from `sender` to every recipient with an independent delay.
    pub fn broadcast<R: Rng + ?Sized>(
        &mut self,
        graph: &CommGraph,
        delays: &DelayModel,
        sender: usize,
        round: u64,
        action: usize,
        sent_at: f64,
        rng: &mut R,
    ) -> Result<Vec<InFlightMessage>> {
        let mut out = Vec::with_capacity(graph.recipients(sender).len());
        for &recipient in graph.recipients(sender) {
            let delay = delays.sample(sender, recipient, round, rng)?;
            if delay > delays.bound() {
                return Err(Error::DelayBound {
                    sender,
                    recipient,
                    delay,
                    bound: delays.bound(),
                });
            }
            let msg = InFlightMessage {
                sender,
                recipient,
                round,
                action,
                deliver_at: round + delay,
                sent_at,
            };
            self.queue.insert(
                (msg.deliver_at, recipient, round, sender),
                Payload {
                    action,
                    sent_at,
                    delay,
                },
            );
            self.sent += 1;
            out.push(msg);
        }
        Ok(out)
    }

    /// Removes and returns every message due at `tick`.
    pub fn deliver(&mut self, tick: u64) -> Result<Deliveries> {
        self.deliver_with_clock(tick, |_| f64::INFINITY)
    }

    /// Like [`MessageBus::deliver`], but a message whose physical arrival
    /// `sent_at + delay` falls after the recipient's execution time for this
    /// tick (given by `recipient_time`) is held over to the next tick.
    pub fn deliver_with_clock(
        &mut self,
        tick: u64,
        mut recipient_time: impl FnMut(usize) -> f64,
    ) -> Result<Deliveries> {
        let due: Vec<_> = self
            .queue
            .range((tick, 0, 0, 0)..(tick + 1, 0, 0, 0))
            .map(|(k, v)| (*k, *v))
            .collect();
        let mut out: Deliveries = BTreeMap::new();
        for (key, payload) in due {
            self.queue.remove(&key);
            let (_, recipient, round, sender) = key;
            if payload.sent_at + payload.delay as f64 > recipient_time(recipient) {
                self.queue.insert((tick + 1, recipient, round, sender), payload);
                continue;
            }
            let staleness = tick - round;
            self.max_staleness = self.max_staleness.max(staleness);
            if staleness > self.staleness_bound {
                return Err(Error::DelayBound {
                    sender,
                    recipient,
                    delay: staleness,
                    bound: self.staleness_bound,
                });
            }
            self.delivered += 1;
            out.entry(recipient)
                .or_default()
                .entry(round)
                .or_default()
                .push((sender, payload.action));
        }
        Ok(out)
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    pub fn sent(&self) -> u64 {
        self.sent
    }

    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    /// Largest `tick − round` seen on any delivery so far.
    pub fn max_staleness(&self) -> u64 {
        self.max_staleness
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn grid_neighborhoods() {
        let g = CommGraph::grid4(4, 4);
        assert_eq!(g.in_neighbors(0).iter().copied().collect::<Vec<_>>(), vec![1, 4]);
        assert_eq!(g.in_neighbors(5).len(), 4);
        assert_eq!(g.in_neighbors(15).len(), 2);
        assert!(CommGraph::from_edges(2, &[(1, 1)]).is_err());
        assert!(CommGraph::from_edges(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn edge_list_parsing() {
        let g = CommGraph::parse_edges(3, "0>1, 2>1").unwrap();
        assert!(g.has_edge(0, 1));
        assert!(!g.has_edge(1, 0));
        assert!(CommGraph::parse_edges(3, "0-1").is_err());
    }

    #[test]
    fn delay_models() {
        let mut r = rng(1);
        assert!((0..100).all(|t| DelayModel::Uniform(0).sample(0, 1, t, &mut r).unwrap() == 0));
        assert!((0..100).all(|t| DelayModel::Constant(3).sample(0, 1, t, &mut r).unwrap() == 3));
        assert!((0..1000).all(|t| DelayModel::Uniform(4).sample(0, 1, t, &mut r).unwrap() <= 4));
        let trace = DelayModel::trace([((0, 1, 1), 2)]);
        assert_eq!(trace.bound(), 2);
        assert_eq!(trace.sample(0, 1, 1, &mut r).unwrap(), 2);
        assert!(matches!(
            trace.sample(0, 1, 2, &mut r),
            Err(Error::TraceMiss { round: 2, .. })
        ));
    }

    #[test]
    fn trace_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        std::fs::write(&path, "sender,recipient,round,delay\n0,1,1,3\n1,0,1,0\n").unwrap();
        let model = DelayModel::load_trace(&path).unwrap();
        assert_eq!(model.bound(), 3);
        assert_eq!(model.sample(0, 1, 1, &mut rng(0)).unwrap(), 3);
        std::fs::write(&path, "sender,recipient,round,delay\n0,1,x,3\n").unwrap();
        assert!(matches!(DelayModel::load_trace(&path), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn isolated_agent_sends_nothing() {
        let g = CommGraph::isolated(3);
        let mut bus = MessageBus::new(0);
        let sent = bus
            .broadcast(&g, &DelayModel::Uniform(0), 1, 1, 0, 1.0, &mut rng(0))
            .unwrap();
        assert!(sent.is_empty());
    }

    #[test]
    fn zero_delay_grid_broadcast() {
        let g = CommGraph::grid4(3, 3);
        let mut bus = MessageBus::new(0);
        let sent = bus
            .broadcast(&g, &DelayModel::Uniform(0), 4, 7, 2, 7.0, &mut rng(0))
            .unwrap();
        assert_eq!(sent.len(), 4);
        assert!(sent.iter().all(|m| m.deliver_at == 7));
        let d = bus.deliver(7).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d[&1][&7], vec![(4, 2)]);
    }

    #[test]
    fn broadcast_delays_are_seeded() {
        let g = CommGraph::grid4(3, 3);
        let delays = |seed| {
            let mut bus = MessageBus::new(10);
            bus.broadcast(&g, &DelayModel::Uniform(10), 4, 1, 0, 1.0, &mut rng(seed))
                .unwrap()
                .iter()
                .map(|m| m.deliver_at)
                .collect::<Vec<_>>()
        };
        assert_eq!(delays(5), delays(5));
    }

    #[test]
    fn deliveries_group_by_round() {
        let g = CommGraph::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        let mut bus = MessageBus::new(5);
        assert!(bus.deliver(0).unwrap().is_empty());
        let trace = DelayModel::trace([((0, 2, 1), 3), ((1, 2, 3), 1), ((0, 2, 3), 1)]);
        bus.broadcast(&g, &trace, 0, 1, 5, 1.0, &mut rng(0)).unwrap();
        bus.broadcast(&g, &trace, 1, 3, 6, 3.0, &mut rng(0)).unwrap();
        bus.broadcast(&g, &trace, 0, 3, 7, 3.0, &mut rng(0)).unwrap();
        let d = bus.deliver(4).unwrap();
        assert_eq!(d[&2][&1], vec![(0, 5)]);
        assert_eq!(d[&2][&3], vec![(0, 7), (1, 6)]);
        assert_eq!(bus.in_flight(), 0);
        assert_eq!(bus.max_staleness(), 3);
    }

    #[test]
    fn messages_are_conserved() {
        let g = CommGraph::grid4(3, 3);
        let model = DelayModel::Uniform(6);
        let mut bus = MessageBus::new(6);
        let mut r = rng(11);
        let mut delivered = 0usize;
        for t in 1..=100u64 {
            for agent in 0..9 {
                bus.broadcast(&g, &model, agent, t, 0, t as f64, &mut r).unwrap();
            }
            delivered += bus
                .deliver(t)
                .unwrap()
                .values()
                .flat_map(|m| m.values())
                .map(Vec::len)
                .sum::<usize>();
        }
        for t in 101..=106 {
            delivered += bus
                .deliver(t)
                .unwrap()
                .values()
                .flat_map(|m| m.values())
                .map(Vec::len)
                .sum::<usize>();
        }
        assert_eq!(delivered as u64, bus.sent());
        assert_eq!(bus.sent(), 100 * 24);
        assert!(bus.max_staleness() <= 6);
    }

    #[test]
    fn staleness_violation_is_an_error() {
        let g = CommGraph::from_edges(2, &[(0, 1)]).unwrap();
        let mut bus = MessageBus::new(1);
        bus.broadcast(&g, &DelayModel::Constant(3), 0, 1, 0, 1.0, &mut rng(0))
            .unwrap();
        assert!(matches!(bus.deliver(4), Err(Error::DelayBound { .. })));
    }

    #[test]
    fn late_physical_arrival_is_held_one_tick() {
        let g = CommGraph::from_edges(2, &[(0, 1)]).unwrap();
        let mut bus = MessageBus::new(2);
        bus.broadcast(&g, &DelayModel::Constant(1), 0, 1, 3, 1.1, &mut rng(0))
            .unwrap();
        assert!(bus.deliver_with_clock(2, |_| 1.95).unwrap().is_empty());
        let d = bus.deliver_with_clock(3, |_| 3.0).unwrap();
        assert_eq!(d[&1][&1], vec![(0, 3)]);
    }
}

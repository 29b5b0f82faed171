use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::sim::{GapRow, TraceRow};
use super::stats::write_rows;
use crate::envs::TargetSystem;
use crate::error::Result;
use crate::rng::{stream, Stream};

#[derive(Serialize)]
struct TraceRecord {
    round: u64,
    chosen_action: usize,
    p_chosen: f64,
    z0: f64,
    batches_applied: usize,
    m_t: Option<f64>,
}

/// Per-agent trace: `round,chosen_action,p_chosen,Z0,batches_applied,M_t`.
/// `M_t` is empty unless estimation errors were instrumented.
pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let records: Vec<_> = rows
        .iter()
        .map(|r| TraceRecord {
            round: r.round,
            chosen_action: r.chosen_action,
            p_chosen: r.p_chosen,
            z0: r.z0,
            batches_applied: r.batches_applied,
            m_t: r.max_error,
        })
        .collect();
    write_rows(
        path,
        &["round", "chosen_action", "p_chosen", "Z0", "batches_applied", "M_t"],
        &records,
    )
}

#[derive(Serialize)]
struct GapRecord {
    round: u64,
    measured_gap: f64,
    bound: Option<f64>,
    holds: Option<bool>,
}

/// `round,measured_gap,bound,holds`; the last two are empty when no bound applies.
pub fn write_gap_csv(path: &Path, rows: &[GapRow]) -> Result<()> {
    let records: Vec<_> = rows
        .iter()
        .map(|r| GapRecord {
            round: r.round,
            measured_gap: r.measured_gap,
            bound: r.bound,
            holds: r.bound.map(|b| r.measured_gap <= b),
        })
        .collect();
    write_rows(path, &["round", "measured_gap", "bound", "holds"], &records)
}

#[derive(Serialize)]
struct SceneRecord {
    step: u64,
    kind: &'static str,
    id: usize,
    x: f64,
    y: f64,
    heading: Option<usize>,
}

/// Per-round scene for offline rendering: every target position and every
/// camera with its executed heading index. `actions[t]` is the joint action
/// of round `t + 1`, as recorded by the harness for `seed`.
pub fn write_scene_csv(config: &ExperimentConfig, seed: u64, actions: &[Vec<usize>], path: &Path) -> Result<()> {
    let cameras = config.cameras()?;
    let mut targets = TargetSystem::spawn(config.target_params(), &mut stream(seed, Stream::Scene))?;
    let mut motion = stream(seed, Stream::Targets);
    let mut records = Vec::new();
    for (k, joint) in actions.iter().enumerate() {
        let step = k as u64 + 1;
        targets.step(&mut motion);
        for (id, p) in targets.positions().iter().enumerate() {
            records.push(SceneRecord { step, kind: "target", id, x: p[0], y: p[1], heading: None });
        }
        for (id, (p, &h)) in cameras.positions().iter().zip(joint).enumerate() {
            records.push(SceneRecord { step, kind: "camera", id, x: p[0], y: p[1], heading: Some(h) });
        }
    }
    write_rows(path, &["step", "kind", "id", "x", "y", "heading"], &records)
}

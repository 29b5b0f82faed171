use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bandit::Algorithm;
use crate::envs::{CameraConfig, TargetParams};
use crate::error::{Error, Result};
use crate::network::{CommGraph, DelayModel};

/// Flat experiment description; every key is optional in the file and
/// defaults to the monitoring setup (16 cameras, 80 targets, `T = 2000`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub horizon: u64,
    pub algorithm: String,
    /// `grid4` or `edges`.
    pub graph: String,
    /// Directed edges `from>to`, comma separated, when `graph = "edges"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<String>,
    /// `constant`, `uniform` or `trace`.
    pub delay_kind: String,
    pub dbar: u64,
    /// CSV with columns `sender,recipient,round,delay` when `delay_kind = "trace"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay_trace: Option<PathBuf>,
    pub rho: f64,
    /// Hold a message one extra tick when its physical arrival is after the
    /// recipient's execution time.
    pub skew_delivery: bool,
    pub lr_scale: f64,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub headings: usize,
    pub fov_half_angle_deg: f64,
    pub sensing_range: f64,
    pub workspace_width: f64,
    pub workspace_height: f64,
    pub targets: usize,
    pub clusters: usize,
    pub target_speed: f64,
    pub noise_sigma: f64,
    pub resample_period: u64,
    pub cluster_spread: f64,
    /// Reward normalization cap; sized by a pilot rollout when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_cap: Option<f64>,
    pub runs: usize,
    pub seed: u64,
    pub smoothing_window: usize,
    /// Run the deferred baseline with synchronized clocks (`ρ = 0`).
    pub sync_baseline: bool,
    /// Action assumed for a neighbor before any of its actions is known.
    pub default_estimate_action: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            horizon: 2000,
            algorithm: "dog-iu".into(),
            graph: "grid4".into(),
            edges: None,
            delay_kind: "uniform".into(),
            dbar: 10,
            delay_trace: None,
            rho: 0.3,
            skew_delivery: false,
            lr_scale: 14.0,
            grid_rows: 4,
            grid_cols: 4,
            headings: 8,
            fov_half_angle_deg: 30.0,
            sensing_range: 20.0,
            workspace_width: 100.0,
            workspace_height: 100.0,
            targets: 80,
            clusters: 8,
            target_speed: 1.0,
            noise_sigma: 0.005,
            resample_period: 30,
            cluster_spread: 3.0,
            norm_cap: None,
            runs: 20,
            seed: 0,
            smoothing_window: 50,
            sync_baseline: true,
            default_estimate_action: 0,
        }
    }
}

fn positive<T: PartialOrd + Default>(field: &str, v: T) -> Result<()> {
    if v > T::default() {
        Ok(())
    } else {
        Err(Error::config(field, "must be positive"))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            match message
                .strip_prefix("unknown field `")
                .and_then(|rest| rest.split('`').next())
            {
                Some(field) => Error::config(field, "unknown key"),
                None => Error::Parse {
                    line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
                    message,
                },
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are plain values")
    }

    pub fn validate(&self) -> Result<()> {
        self.algorithm()?;
        positive("horizon", self.horizon)?;
        positive("runs", self.runs)?;
        positive("grid_rows", self.grid_rows)?;
        positive("grid_cols", self.grid_cols)?;
        positive("smoothing_window", self.smoothing_window)?;
        positive("targets", self.targets)?;
        if self.headings < 2 {
            return Err(Error::config("headings", "need at least 2 headings"));
        }
        if self.default_estimate_action >= self.headings {
            return Err(Error::config("default_estimate_action", "must be a valid heading index"));
        }
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            return Err(Error::config("rho", "must lie in [0, 1)"));
        }
        if !(self.lr_scale > 0.0 && self.lr_scale.is_finite()) {
            return Err(Error::config("lr_scale", "must be positive"));
        }
        if !(self.fov_half_angle_deg > 0.0 && self.fov_half_angle_deg < 90.0) {
            return Err(Error::config("fov_half_angle_deg", "must lie in (0, 90)"));
        }
        positive("sensing_range", self.sensing_range)?;
        if let Some(cap) = self.norm_cap {
            if !(cap > 0.0) {
                return Err(Error::config("norm_cap", "must be positive"));
            }
        }
        match self.graph.as_str() {
            "grid4" => {}
            "edges" if self.edges.is_some() => {}
            "edges" => return Err(Error::config("edges", "required when graph = \"edges\"")),
            other => return Err(Error::config("graph", format!("unknown graph `{other}`, expected grid4 or edges"))),
        }
        match self.delay_kind.as_str() {
            "constant" | "uniform" => {}
            "trace" if self.delay_trace.is_some() => {}
            "trace" => return Err(Error::config("delay_trace", "required when delay_kind = \"trace\"")),
            other => {
                return Err(Error::config(
                    "delay_kind",
                    format!("unknown delay kind `{other}`, expected constant, uniform or trace"),
                ))
            }
        }
        self.target_params().validate()?;
        Ok(())
    }

    pub fn algorithm(&self) -> Result<Algorithm> {
        self.algorithm
            .parse()
            .map_err(|_| Error::config("algorithm", format!("unknown algorithm `{}`", self.algorithm)))
    }

    pub fn agent_count(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    /// Skew applied to the configured algorithm's execution times.
    pub fn effective_rho(&self) -> Result<f64> {
        Ok(if self.sync_baseline && self.algorithm()? == Algorithm::Dog {
            0.0
        } else {
            self.rho
        })
    }

    pub fn graph(&self) -> Result<CommGraph> {
        match self.graph.as_str() {
            "grid4" => Ok(CommGraph::grid4(self.grid_rows, self.grid_cols)),
            _ => CommGraph::parse_edges(self.agent_count(), self.edges.as_deref().unwrap_or(""))
                .map_err(|e| Error::config("edges", e.to_string())),
        }
    }

    pub fn delay_model(&self) -> Result<DelayModel> {
        match self.delay_kind.as_str() {
            "constant" => Ok(DelayModel::Constant(self.dbar)),
            "uniform" => Ok(DelayModel::Uniform(self.dbar)),
            _ => DelayModel::load_trace(self.delay_trace.as_deref().expect("validated")),
        }
    }

    pub fn cameras(&self) -> Result<CameraConfig> {
        CameraConfig::grid(
            self.grid_rows,
            self.grid_cols,
            [self.workspace_width, self.workspace_height],
            self.headings,
            self.fov_half_angle_deg.to_radians(),
            self.sensing_range,
        )
    }

    pub fn target_params(&self) -> TargetParams {
        TargetParams {
            count: self.targets,
            clusters: self.clusters,
            speed: self.target_speed,
            noise_sigma: self.noise_sigma,
            resample_period: self.resample_period,
            spread: self.cluster_spread,
            workspace: [self.workspace_width, self.workspace_height],
        }
    }
}

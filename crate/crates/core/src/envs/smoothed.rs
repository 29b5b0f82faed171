use super::camera::{CameraConfig, Point};
use crate::asynchrony::{Deployment, Lipschitz, TimeStampedReward};
use crate::error::{Error, Result};

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Soft, time-stamped version of the coverage objective.
///
/// A target's membership in a sector is the product of three sigmoids of
/// sharpness `k`: one on the range margin and one on each signed distance
/// to the sector's edge lines. Memberships of the deployed cameras combine
/// by noisy-OR, `1 − Π(1 − m_j)`, a smooth stand-in for their maximum.
///
/// A camera deployed at `τ_j` faces its previous heading until `τ_j − w`
/// and blends linearly into the new one, reaching it at `τ_j`; `w` is the
/// slew window. Targets move linearly between the trajectory's integer steps.
#[derive(Clone, Debug)]
pub struct SmoothedCoverage {
    cameras: CameraConfig,
    trajectory: Vec<Vec<Point>>,
    previous: Vec<usize>,
    sharpness: f64,
    slew: f64,
    cap: f64,
    max_speed: f64,
    edges: Vec<[Point; 2]>,
}

impl SmoothedCoverage {
    /// `trajectory[s]` holds every target at step `s`; `previous[c]` is the
    /// heading camera `c` held before this round.
    pub fn new(
        cameras: CameraConfig,
        trajectory: Vec<Vec<Point>>,
        previous: Vec<usize>,
        sharpness: f64,
        slew: f64,
        cap: f64,
    ) -> Result<Self> {
        if !(sharpness > 0.0) || !(slew > 0.0) || !(cap > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sharpness, slew window and cap must be positive, got {sharpness}, {slew}, {cap}"
            )));
        }
        if trajectory.is_empty() {
            return Err(Error::Shape("trajectory needs at least one step".into()));
        }
        let n = trajectory[0].len();
        if trajectory.iter().any(|f| f.len() != n) {
            return Err(Error::Shape("trajectory frames differ in target count".into()));
        }
        if previous.len() != cameras.camera_count() || previous.iter().any(|&h| h >= cameras.headings()) {
            return Err(Error::Shape("need one valid previous heading per camera".into()));
        }
        let max_speed = trajectory
            .windows(2)
            .flat_map(|w| w[0].iter().zip(&w[1]).map(|(p, q)| (q[0] - p[0]).hypot(q[1] - p[1])))
            .fold(0.0, f64::max);
        let alpha = cameras.half_angle();
        // inward unit normals of the two edge lines of each heading
        let edges = (0..cameras.headings())
            .map(|h| {
                let u = cameras.direction(h);
                let theta = u[1].atan2(u[0]);
                let (l, r) = (theta + alpha, theta - alpha);
                [[l.sin(), -l.cos()], [-r.sin(), r.cos()]]
            })
            .collect();
        Ok(Self {
            cameras,
            trajectory,
            previous,
            sharpness,
            slew,
            cap,
            max_speed,
            edges,
        })
    }

    pub fn cameras(&self) -> &CameraConfig {
        &self.cameras
    }

    pub fn target_count(&self) -> usize {
        self.trajectory[0].len()
    }

    /// Largest per-step target displacement in the trajectory.
    pub fn max_speed(&self) -> f64 {
        self.max_speed
    }

    /// Last time covered by the trajectory.
    pub fn horizon(&self) -> f64 {
        (self.trajectory.len() - 1) as f64
    }

    /// Positions at `time`, clamped to the trajectory span.
    pub fn positions_at(&self, time: f64) -> Vec<Point> {
        let t = time.clamp(0.0, self.horizon());
        let k = (t.floor() as usize).min(self.trajectory.len() - 1);
        let frac = t - k as f64;
        if frac == 0.0 || k + 1 >= self.trajectory.len() {
            return self.trajectory[k].clone();
        }
        self.trajectory[k]
            .iter()
            .zip(&self.trajectory[k + 1])
            .map(|(p, q)| [p[0] + frac * (q[0] - p[0]), p[1] + frac * (q[1] - p[1])])
            .collect()
    }

    /// Soft membership of `point` in `camera`'s sector at `heading`.
    pub fn membership(&self, camera: usize, heading: usize, point: Point) -> f64 {
        let c = self.cameras.positions()[camera];
        let d = [point[0] - c[0], point[1] - c[1]];
        let k = self.sharpness;
        let [n1, n2] = self.edges[heading];
        let s1 = d[0] * n1[0] + d[1] * n1[1];
        let s2 = d[0] * n2[0] + d[1] * n2[1];
        sigmoid(k * (self.cameras.range() - d[0].hypot(d[1]))) * sigmoid(k * s1) * sigmoid(k * s2)
    }

    fn blend(&self, time: f64, d: &Deployment) -> f64 {
        (1.0 + (time - d.time) / self.slew).clamp(0.0, 1.0)
    }
}

impl TimeStampedReward for SmoothedCoverage {
    fn evaluate(&self, time: f64, schedule: &[Deployment]) -> Result<f64> {
        if schedule.is_empty() {
            return Ok(0.0);
        }
        for d in schedule {
            if d.agent >= self.cameras.camera_count() || d.action >= self.cameras.headings() {
                return Err(Error::OutOfRange {
                    agent: d.agent,
                    action: d.action,
                });
            }
        }
        let positions = self.positions_at(time);
        let weights: Vec<f64> = schedule.iter().map(|d| self.blend(time, d)).collect();
        let mut total = 0.0;
        for &p in &positions {
            let mut miss = 1.0;
            for (d, &w) in schedule.iter().zip(&weights) {
                let m = if w == 1.0 {
                    self.membership(d.agent, d.action, p)
                } else {
                    w * self.membership(d.agent, d.action, p)
                        + (1.0 - w) * self.membership(d.agent, self.previous[d.agent], p)
                };
                miss *= 1.0 - m;
            }
            total += 1.0 - miss;
        }
        Ok(total / self.cap)
    }

    /// `L_e = N·C·(1/w + (3k/4)·v_max) / B` and `L_d = N / (w·B)` for `N`
    /// targets and `C` cameras.
    fn lipschitz(&self) -> Option<Lipschitz> {
        let n = self.target_count() as f64;
        let c = self.cameras.camera_count() as f64;
        let k = self.sharpness;
        Some(Lipschitz {
            evaluation: n * c * (1.0 / self.slew + 0.75 * k * self.max_speed) / self.cap,
            deployment: n / (self.slew * self.cap),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asynchrony::audit_lipschitz;

    fn cams() -> CameraConfig {
        CameraConfig::grid(1, 2, [40.0, 20.0], 8, 30f64.to_radians(), 20.0).unwrap()
    }

    #[test]
    fn empty_schedule_is_zero() {
        let f = SmoothedCoverage::new(cams(), vec![vec![[5.0, 5.0]]], vec![0, 0], 2.0, 1.0, 1.0).unwrap();
        assert_eq!(f.evaluate(0.3, &[]).unwrap(), 0.0);
    }

    #[test]
    fn membership_is_high_inside_and_low_outside() {
        let f = SmoothedCoverage::new(cams(), vec![vec![[0.0, 0.0]]], vec![0, 0], 5.0, 1.0, 1.0).unwrap();
        // camera 0 sits at (10, 10)
        assert!(f.membership(0, 0, [20.0, 10.0]) > 0.99);
        assert!(f.membership(0, 4, [20.0, 10.0]) < 1e-6);
        assert!(f.membership(0, 0, [10.0, 20.0]) < 1e-6);
        assert!(f.membership(0, 0, [45.0, 10.0]) < 1e-6);
    }

    #[test]
    fn static_targets_do_not_move_the_reward() {
        let frame = vec![[14.0, 11.0], [25.0, 9.0]];
        let f = SmoothedCoverage::new(cams(), vec![frame.clone(), frame], vec![3, 1], 1.0, 0.5, 2.0).unwrap();
        let d = [Deployment::new(0, 0, 0.2), Deployment::new(1, 4, 0.3)];
        let audit = audit_lipschitz(&f, &[(0.9, d.to_vec())]).unwrap();
        assert!(audit.max_evaluation_slope < 1e-9);
    }

    #[test]
    fn declared_constants_dominate_slopes() {
        let traj: Vec<Vec<Point>> = (0..4)
            .map(|s| vec![[12.0 + s as f64, 10.0], [30.0 - s as f64, 12.0 - 0.5 * s as f64]])
            .collect();
        let f = SmoothedCoverage::new(cams(), traj, vec![2, 5], 1.5, 0.5, 1.0).unwrap();
        let probes: Vec<_> = (0..40)
            .map(|k| {
                let t = 0.5 + 0.05 * k as f64;
                (t, vec![Deployment::new(0, k % 8, t - 0.1), Deployment::new(1, (k + 3) % 8, t + 0.2)])
            })
            .collect();
        let audit = audit_lipschitz(&f, &probes).unwrap();
        assert!(audit.holds, "{audit:?}");
        assert!(audit.max_deployment_slope > 0.0);
    }
}

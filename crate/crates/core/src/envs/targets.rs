use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::camera::Point;
use crate::error::{Error, Result};

/// Motion and layout parameters of the clustered targets.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetParams {
    pub count: usize,
    pub clusters: usize,
    /// Cluster speed in units per step.
    pub speed: f64,
    pub noise_sigma: f64,
    pub resample_period: u64,
    /// Standard deviation of the initial scatter around each cluster center.
    pub spread: f64,
    pub workspace: Point,
}

impl Default for TargetParams {
    fn default() -> Self {
        Self {
            count: 80,
            clusters: 8,
            speed: 1.0,
            noise_sigma: 0.005,
            resample_period: 30,
            spread: 3.0,
            workspace: [100.0, 100.0],
        }
    }
}

impl TargetParams {
    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 {
            return Err(Error::config("clusters", "must be positive"));
        }
        if self.resample_period == 0 {
            return Err(Error::config("resample_period", "must be positive"));
        }
        if !(self.speed >= 0.0) {
            return Err(Error::config("target_speed", "must be non-negative"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::config("noise_sigma", "must be non-negative"));
        }
        if !(self.spread >= 0.0) {
            return Err(Error::config("cluster_spread", "must be non-negative"));
        }
        if !(self.workspace[0] > 0.0 && self.workspace[1] > 0.0) {
            return Err(Error::config("workspace", "width and height must be positive"));
        }
        Ok(())
    }
}

/// Targets moving with their cluster's velocity plus Gaussian jitter.
///
/// Each target carries its own copy of the cluster velocity: a wall bounce
/// flips that target's component only, and the next resample realigns the
/// whole cluster.
#[derive(Clone, Debug)]
pub struct TargetSystem {
    params: TargetParams,
    positions: Vec<Point>,
    cluster_of: Vec<usize>,
    velocities: Vec<Point>,
    step: u64,
}

fn reflect(mut x: f64, mut v: f64, hi: f64) -> (f64, f64) {
    loop {
        if x < 0.0 {
            x = -x;
            v = -v;
        } else if x > hi {
            x = 2.0 * hi - x;
            v = -v;
        } else {
            return (x, v);
        }
    }
}

impl TargetSystem {
    /// Cluster centers uniform in the workspace, targets assigned round-robin
    /// to clusters and scattered around their center.
    pub fn spawn<R: Rng + ?Sized>(params: TargetParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let [w, h] = params.workspace;
        let centers: Vec<Point> = (0..params.clusters)
            .map(|_| [rng.random_range(0.0..=w), rng.random_range(0.0..=h)])
            .collect();
        let scatter = Normal::new(0.0, params.spread).map_err(|e| Error::config("cluster_spread", e.to_string()))?;
        let cluster_of: Vec<usize> = (0..params.count).map(|m| m % params.clusters).collect();
        let positions = cluster_of
            .iter()
            .map(|&c| {
                let x = reflect(centers[c][0] + scatter.sample(rng), 0.0, w).0;
                let y = reflect(centers[c][1] + scatter.sample(rng), 0.0, h).0;
                [x, y]
            })
            .collect();
        let mut system = Self {
            velocities: vec![[0.0, 0.0]; params.count],
            params,
            positions,
            cluster_of,
            step: 0,
        };
        system.resample(rng);
        Ok(system)
    }

    /// Builds a system from explicit state.
    pub fn from_parts(
        params: TargetParams,
        positions: Vec<Point>,
        cluster_of: Vec<usize>,
        velocities: Vec<Point>,
    ) -> Result<Self> {
        params.validate()?;
        if positions.len() != params.count || cluster_of.len() != params.count || velocities.len() != params.count {
            return Err(Error::Shape(format!(
                "{} targets declared, got {} positions, {} cluster ids, {} velocities",
                params.count,
                positions.len(),
                cluster_of.len(),
                velocities.len()
            )));
        }
        if let Some(&c) = cluster_of.iter().find(|&&c| c >= params.clusters) {
            return Err(Error::Shape(format!("cluster id {c} outside {} clusters", params.clusters)));
        }
        Ok(Self {
            params,
            positions,
            cluster_of,
            velocities,
            step: 0,
        })
    }

    pub fn params(&self) -> &TargetParams {
        &self.params
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn velocities(&self) -> &[Point] {
        &self.velocities
    }

    pub fn cluster_of(&self) -> &[usize] {
        &self.cluster_of
    }

    /// Steps taken so far.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let speed = self.params.speed;
        let headings: Vec<Point> = (0..self.params.clusters)
            .map(|_| {
                let a = rng.random_range(0.0..TAU);
                [speed * a.cos(), speed * a.sin()]
            })
            .collect();
        for (v, &c) in self.velocities.iter_mut().zip(&self.cluster_of) {
            *v = headings[c];
        }
    }

    /// Advances one step. Cluster headings are redrawn before the move on
    /// steps `period + 1, 2·period + 1, …`.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.step += 1;
        if self.step > 1 && (self.step - 1) % self.params.resample_period == 0 {
            self.resample(rng);
        }
        let [w, h] = self.params.workspace;
        let sigma = self.params.noise_sigma;
        for (p, v) in self.positions.iter_mut().zip(self.velocities.iter_mut()) {
            let (nx, ny) = if sigma > 0.0 {
                let noise = Normal::new(0.0, sigma).expect("validated sigma");
                (noise.sample(rng), noise.sample(rng))
            } else {
                (0.0, 0.0)
            };
            let (x, vx) = reflect(p[0] + v[0] + nx, v[0], w);
            let (y, vy) = reflect(p[1] + v[1] + ny, v[1], h);
            *p = [x, y];
            *v = [vx, vy];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn still(speed: f64, sigma: f64) -> TargetParams {
        TargetParams {
            count: 1,
            clusters: 1,
            speed,
            noise_sigma: sigma,
            resample_period: 30,
            spread: 0.0,
            workspace: [100.0, 100.0],
        }
    }

    #[test]
    fn straight_motion() {
        let mut s = TargetSystem::from_parts(still(1.0, 0.0), vec![[50.0, 50.0]], vec![0], vec![[1.0, 0.0]]).unwrap();
        s.step(&mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(s.positions()[0], [51.0, 50.0]);
    }

    #[test]
    fn wall_reflection() {
        let mut s = TargetSystem::from_parts(still(1.0, 0.0), vec![[99.5, 50.0]], vec![0], vec![[1.0, 0.0]]).unwrap();
        s.step(&mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(s.positions()[0], [99.5, 50.0]);
        assert_eq!(s.velocities()[0], [-1.0, 0.0]);
    }

    #[test]
    fn jitter_has_declared_std() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = TargetSystem::from_parts(still(0.0, 0.005), vec![[50.0, 50.0]], vec![0], vec![[0.0, 0.0]]).unwrap();
        let mut residuals = Vec::new();
        for _ in 0..10_000 {
            let before = s.positions()[0];
            s.step(&mut rng);
            let after = s.positions()[0];
            residuals.push(after[0] - before[0]);
            residuals.push(after[1] - before[1]);
        }
        let n = residuals.len() as f64;
        let mean = residuals.iter().sum::<f64>() / n;
        let std = (residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((std - 0.005).abs() < 0.0005, "std {std}");
    }

    #[test]
    fn spawn_layout_and_speed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = TargetSystem::spawn(TargetParams::default(), &mut rng).unwrap();
        for c in 0..8 {
            assert_eq!(s.cluster_of().iter().filter(|&&k| k == c).count(), 10);
        }
        for step in 1..=400 {
            s.step(&mut rng);
            for p in s.positions() {
                assert!((0.0..=100.0).contains(&p[0]) && (0.0..=100.0).contains(&p[1]));
            }
            if (step - 1) % 30 == 0 {
                for v in s.velocities() {
                    assert!((v[0].hypot(v[1]) - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cluster_mates_share_velocity_after_resample() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = TargetSystem::spawn(TargetParams::default(), &mut rng).unwrap();
        for _ in 0..31 {
            s.step(&mut rng);
        }
        let v0 = s.velocities()[0];
        let mates: Vec<_> = (0..80).filter(|m| m % 8 == 0).collect();
        let agreeing = mates
            .iter()
            .filter(|&&m| {
                let v = s.velocities()[m];
                v[0].abs() == v0[0].abs() && v[1].abs() == v0[1].abs()
            })
            .count();
        assert_eq!(agreeing, mates.len());
    }
}

use std::f64::consts::TAU;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

const BOUNDARY_SLACK: f64 = 1e-9;

/// Fixed cameras, each choosing one of `headings` equally spaced directions.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraConfig {
    positions: Vec<Point>,
    headings: usize,
    half_angle: f64,
    range: f64,
    directions: Vec<Point>,
    cos_half: f64,
}

impl CameraConfig {
    /// `half_angle` in radians.
    pub fn new(positions: Vec<Point>, headings: usize, half_angle: f64, range: f64) -> Result<Self> {
        if headings == 0 {
            return Err(Error::InvalidArgument("cameras need at least one heading".into()));
        }
        if !(half_angle > 0.0 && half_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!(
                "field-of-view half-angle must be in (0, π/2), got {half_angle}"
            )));
        }
        if !(range > 0.0) {
            return Err(Error::InvalidArgument(format!("sensing range must be positive, got {range}")));
        }
        let directions = (0..headings)
            .map(|k| {
                let a = TAU * k as f64 / headings as f64;
                [a.cos(), a.sin()]
            })
            .collect();
        Ok(Self {
            positions,
            headings,
            half_angle,
            range,
            directions,
            cos_half: half_angle.cos(),
        })
    }

    /// One camera at the center of each cell of a `rows × cols` partition of the workspace.
    pub fn grid(
        rows: usize,
        cols: usize,
        workspace: Point,
        headings: usize,
        half_angle: f64,
        range: f64,
    ) -> Result<Self> {
        let mut positions = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                positions.push([
                    (c as f64 + 0.5) * workspace[0] / cols as f64,
                    (r as f64 + 0.5) * workspace[1] / rows as f64,
                ]);
            }
        }
        Self::new(positions, headings, half_angle, range)
    }

    pub fn camera_count(&self) -> usize {
        self.positions.len()
    }

    pub fn headings(&self) -> usize {
        self.headings
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    /// Unit vector of heading `k`, at angle `2πk / headings`.
    pub fn direction(&self, heading: usize) -> Point {
        self.directions[heading]
    }

    /// Closed-sector membership of `point` for `camera` facing `heading`.
    pub fn sees(&self, camera: usize, heading: usize, point: Point) -> bool {
        let c = self.positions[camera];
        let d = [point[0] - c[0], point[1] - c[1]];
        let dist = d[0].hypot(d[1]);
        if dist > self.range + BOUNDARY_SLACK {
            return false;
        }
        if dist == 0.0 {
            return true;
        }
        self.faces(heading, d, dist)
    }

    fn faces(&self, heading: usize, d: Point, dist: f64) -> bool {
        let u = self.directions[heading];
        d[0] * u[0] + d[1] * u[1] >= dist * (self.cos_half - BOUNDARY_SLACK)
    }

    /// Coverage bitsets of every `(camera, heading)` over `targets`.
    pub fn masks(&self, targets: &[Point]) -> CoverageMasks {
        let mut masks = CoverageMasks::empty(self.camera_count(), self.headings, targets.len());
        for camera in 0..self.camera_count() {
            self.fill(&mut masks, camera, targets);
        }
        masks
    }

    fn fill(&self, masks: &mut CoverageMasks, camera: usize, targets: &[Point]) {
        let c = self.positions[camera];
        let reach = self.range + BOUNDARY_SLACK;
        for (m, p) in targets.iter().enumerate() {
            let d = [p[0] - c[0], p[1] - c[1]];
            let d2 = d[0] * d[0] + d[1] * d[1];
            if d2 > reach * reach {
                continue;
            }
            let dist = d2.sqrt();
            for h in 0..self.headings {
                if dist == 0.0 || self.faces(h, d, dist) {
                    masks.set(camera, h, m);
                }
            }
        }
    }

    /// Number of distinct targets inside at least one selected sector.
    pub fn covered_count(&self, targets: &[Point], headings: &[usize]) -> usize {
        let masks = self.masks(targets);
        let selected: Vec<(usize, usize)> = headings.iter().copied().enumerate().collect();
        masks.union_count(&selected)
    }
}

/// One bitset over targets per `(camera, heading)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageMasks {
    headings: usize,
    words: usize,
    bits: Vec<u64>,
}

impl CoverageMasks {
    pub fn empty(cameras: usize, headings: usize, targets: usize) -> Self {
        let words = targets.div_ceil(64);
        Self {
            headings,
            words,
            bits: vec![0; cameras * headings * words],
        }
    }

    fn offset(&self, camera: usize, heading: usize) -> usize {
        (camera * self.headings + heading) * self.words
    }

    fn set(&mut self, camera: usize, heading: usize, target: usize) {
        let o = self.offset(camera, heading);
        self.bits[o + target / 64] |= 1 << (target % 64);
    }

    pub fn mask(&self, camera: usize, heading: usize) -> &[u64] {
        let o = self.offset(camera, heading);
        &self.bits[o..o + self.words]
    }

    pub fn count(&self, camera: usize, heading: usize) -> usize {
        self.mask(camera, heading).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Size of the union of the given `(camera, heading)` sectors.
    pub fn union_count(&self, selected: &[(usize, usize)]) -> usize {
        (0..self.words)
            .map(|w| {
                selected
                    .iter()
                    .fold(0u64, |acc, &(c, h)| acc | self.mask(c, h)[w])
                    .count_ones() as usize
            })
            .sum()
    }

    /// Targets in `own` that none of `others` covers.
    pub fn gain(&self, own: (usize, usize), others: &[(usize, usize)]) -> usize {
        let mine = self.mask(own.0, own.1);
        (0..self.words)
            .map(|w| {
                let rest = others.iter().fold(0u64, |acc, &(c, h)| acc | self.mask(c, h)[w]);
                (mine[w] & !rest).count_ones() as usize
            })
            .sum()
    }

    /// Largest single-sector count.
    pub fn max_sector(&self) -> usize {
        self.bits
            .chunks(self.words.max(1))
            .map(|m| m.iter().map(|w| w.count_ones() as usize).sum())
            .max()
            .unwrap_or(0)
    }
}

//! Ray-cast planar laser scanner.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::Pose2D;
use crate::scan::{evenly_spaced_bearings, LaserScan};

use super::world::{line_disc, Capsule, Obstacle, RoadGeometry};
use super::SimError;

const MIN_RANGE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaserSpec {
    pub fov: f64,
    pub beams: usize,
    pub max_range: f64,
    pub noise_sigma: f64,
}

impl Default for LaserSpec {
    fn default() -> Self {
        Self {
            fov: std::f64::consts::TAU,
            beams: 360,
            max_range: 20.0,
            noise_sigma: 0.02,
        }
    }
}

impl LaserSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.beams < 2 {
            return Err(SimError::InvalidParameter("laser needs at least 2 beams".into()));
        }
        if !(self.fov > 0.0 && self.fov <= std::f64::consts::TAU + 1e-12) {
            return Err(SimError::InvalidParameter(format!(
                "laser fov {} outside (0, 2π]",
                self.fov
            )));
        }
        if !(self.max_range > MIN_RANGE && self.noise_sigma >= 0.0) {
            return Err(SimError::InvalidParameter("bad laser range or noise".into()));
        }
        Ok(())
    }

    pub fn bearings(&self) -> Vec<f64> {
        evenly_spaced_bearings(self.fov, self.beams)
    }
}

/// Distance along the unit ray at which it leaves the union of road capsules. Zero
/// when the origin is off-road.
fn road_exit(capsules: &[Capsule], o: [f64; 2], d: [f64; 2]) -> f64 {
    let mut ivs: Vec<(f64, f64)> = capsules
        .iter()
        .filter_map(|c| c.line_interval(o, d))
        .filter(|iv| iv.1 > 0.0)
        .collect();
    ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut reach = 0.0;
    for (t0, t1) in ivs {
        if t0 > reach + 1e-9 {
            break;
        }
        reach = f64::max(reach, t1);
    }
    reach
}

/// One sweep from `pose` at time `t`.
pub fn simulate_scan<R: Rng + ?Sized>(
    roads: &RoadGeometry,
    walls_visible: bool,
    obstacles: &[Obstacle],
    pose: &Pose2D,
    t: f64,
    spec: &LaserSpec,
    rng: &mut R,
) -> LaserScan {
    let bearings = spec.bearings();
    let o = pose.position();
    let capsules = if walls_visible {
        roads.nearby(o, spec.max_range)
    } else {
        Vec::new()
    };
    let discs: Vec<([f64; 2], f64)> = obstacles
        .iter()
        .map(|ob| (ob.center_at(t), ob.radius))
        .collect();
    let noise = (spec.noise_sigma > 0.0).then(|| Normal::new(0.0, spec.noise_sigma).unwrap());
    let mut ranges = Vec::with_capacity(bearings.len());
    for &b in &bearings {
        let a = pose.yaw + b;
        let d = [a.cos(), a.sin()];
        let mut r = spec.max_range;
        if walls_visible {
            r = r.min(road_exit(&capsules, o, d));
        }
        for &(c, rad) in &discs {
            if let Some((t0, t1)) = line_disc(o, d, c, rad) {
                let hit = if t0 > 0.0 { t0 } else if t1 > 0.0 { 0.0 } else { continue };
                r = r.min(hit);
            }
        }
        if r < spec.max_range {
            if let Some(n) = &noise {
                r += n.sample(rng);
            }
            r = r.clamp(MIN_RANGE, spec.max_range * (1.0 - 1e-9));
        }
        ranges.push(r);
    }
    LaserScan {
        bearings,
        ranges,
        max_range: spec.max_range,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::courses;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_world_without_walls_sees_nothing() {
        let w = courses::straight();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = simulate_scan(
            &w.geometry(),
            false,
            &[],
            &Pose2D::new(10.0, 0.0, 0.0),
            0.0,
            &LaserSpec::default(),
            &mut rng,
        );
        assert!(s.ranges.iter().all(|&r| r == 20.0));
        s.validate().unwrap();
    }

    #[test]
    fn disc_ahead_hits_at_four_and_a_half() {
        let w = courses::straight();
        let spec = LaserSpec::default();
        let ob = [Obstacle {
            center: [15.0, 0.0],
            radius: 0.5,
            velocity: None,
        }];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = simulate_scan(&w.geometry(), false, &ob, &Pose2D::new(10.0, 0.0, 0.0), 0.0, &spec, &mut rng);
        let k = s.bearings.iter().position(|&b| b.abs() < 1e-12).unwrap();
        assert!((s.ranges[k] - 4.5).abs() <= 3.0 * spec.noise_sigma);
    }

    #[test]
    fn walls_bound_the_road() {
        let w = courses::straight();
        let spec = LaserSpec {
            noise_sigma: 0.0,
            ..LaserSpec::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = simulate_scan(&w.geometry(), true, &[], &Pose2D::new(10.0, 0.0, 0.0), 0.0, &spec, &mut rng);
        let k = s
            .bearings
            .iter()
            .position(|&b| (b - std::f64::consts::FRAC_PI_2).abs() < 1e-9)
            .unwrap();
        assert!((s.ranges[k] - 3.5).abs() < 1e-9);
        let ahead = s.bearings.iter().position(|&b| b.abs() < 1e-12).unwrap();
        assert_eq!(s.ranges[ahead], 20.0);
    }

    #[test]
    fn seeded_scans_repeat() {
        let w = courses::fork_cross();
        let g = w.geometry();
        let pose = Pose2D::new(50.0, 1.0, 0.1);
        let spec = LaserSpec::default();
        let a = simulate_scan(&g, true, &w.obstacles, &pose, 3.0, &spec, &mut ChaCha8Rng::seed_from_u64(5));
        let b = simulate_scan(&g, true, &w.obstacles, &pose, 3.0, &spec, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }
}

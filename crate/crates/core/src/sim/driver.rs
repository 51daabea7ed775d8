//! Scripted pure-pursuit demonstrator.

use serde::{Deserialize, Serialize};

use crate::geometry::Pose2D;
use crate::planner::MAX_CURVATURE;
use crate::polyline::Polyline;
use crate::track::{PoseTrack, TrackSample};

use super::kinematics::{step_vehicle, VehicleState};
use super::world::RoadGeometry;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoParams {
    pub lookahead: f64,
    pub speed: f64,
    pub dt: f64,
    /// Start this far left of the route start (negative: right).
    pub initial_lateral_offset: f64,
}

impl Default for DemoParams {
    fn default() -> Self {
        Self {
            lookahead: 4.0,
            speed: 3.0,
            dt: 0.3,
            initial_lateral_offset: 0.0,
        }
    }
}

impl DemoParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.lookahead > 0.0) {
            return Err(SimError::InvalidParameter(format!(
                "lookahead must be positive, got {}",
                self.lookahead
            )));
        }
        if !(self.speed > 0.0 && self.dt > 0.0) {
            return Err(SimError::InvalidParameter(
                "speed and dt must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DemoRun {
    /// Pose at each frame with the command executed from it.
    pub track: PoseTrack,
    pub curvatures: Vec<f64>,
    /// Arc length along the route at each frame.
    pub progress: Vec<f64>,
    pub cross_track: Vec<f64>,
}

/// Pure-pursuit curvature toward `target` seen from `pose`, clipped to the planner range.
pub fn pursuit_curvature(pose: &Pose2D, target: [f64; 2]) -> f64 {
    let p = pose.to_local(target);
    let d2 = p[0] * p[0] + p[1] * p[1];
    if d2 < 1e-12 {
        return 0.0;
    }
    (2.0 * p[1] / d2).clamp(-MAX_CURVATURE, MAX_CURVATURE)
}

/// Route progress tracker that only searches near the last known arc length, so
/// self-approaching routes do not jump.
#[derive(Debug, Clone)]
pub struct ProgressTracker {
    pub route: Polyline,
    pub s: f64,
}

impl ProgressTracker {
    pub fn new(route: Polyline) -> Self {
        Self { route, s: 0.0 }
    }

    /// Update progress for `p` and return `(s, distance to route)`.
    pub fn update(&mut self, p: [f64; 2]) -> (f64, f64) {
        let pr = self.route.project_in_range(p, self.s - 2.0, self.s + 8.0);
        self.s = self.s.max(pr.s);
        (self.s, pr.distance)
    }
}

/// Drive the route from its start until its end is reached.
pub fn demo_driver(
    roads: &RoadGeometry,
    route: &[[f64; 2]],
    params: &DemoParams,
) -> Result<DemoRun, SimError> {
    params.validate()?;
    let pl = Polyline::new(route);
    if pl.len() < 2 {
        return Err(SimError::InvalidParameter("route needs two distinct points".into()));
    }
    let (p0, h0) = pl.sample(0.0);
    let off = params.initial_lateral_offset;
    let mut state = VehicleState::at(Pose2D::new(
        p0[0] - off * h0.sin(),
        p0[1] + off * h0.cos(),
        h0,
    ));
    let length = pl.length();
    let max_frames = (4.0 * length / (params.speed * params.dt)) as usize + 50;
    let mut tracker = ProgressTracker::new(pl);
    let mut samples = Vec::new();
    let mut curvatures = Vec::new();
    let mut progress = Vec::new();
    let mut cross_track = Vec::new();
    for frame in 0..max_frames {
        let pos = state.pose.position();
        let t = frame as f64 * params.dt;
        if !roads.contains(pos) {
            return Err(SimError::OffRoad {
                frame,
                t,
                position: pos,
            });
        }
        let (s, cte) = tracker.update(pos);
        if s >= length {
            break;
        }
        let (target, _) = tracker.route.sample(s + params.lookahead);
        let k = pursuit_curvature(&state.pose, target);
        samples.push(TrackSample {
            t,
            pose: state.pose,
            v: Some(params.speed),
            w: Some(params.speed * k),
        });
        curvatures.push(k);
        progress.push(s);
        cross_track.push(cte);
        state = step_vehicle(&state, params.speed, k, params.dt);
    }
    Ok(DemoRun {
        track: PoseTrack::new(samples)?,
        curvatures,
        progress,
        cross_track,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::courses;

    #[test]
    fn straight_route_tracks_exactly() {
        let w = courses::straight();
        let g = w.geometry();
        let run = demo_driver(&g, w.route("main").unwrap(), &DemoParams::default()).unwrap();
        assert!(run.cross_track.iter().all(|&e| e < 0.05));
        assert!(run.track.len() > 50);
    }

    #[test]
    fn lateral_offset_converges() {
        let w = courses::straight();
        let g = w.geometry();
        let p = DemoParams {
            initial_lateral_offset: 1.0,
            ..DemoParams::default()
        };
        let run = demo_driver(&g, w.route("main").unwrap(), &p).unwrap();
        for (s, e) in run.progress.iter().zip(&run.cross_track) {
            if *s > 20.0 {
                assert!(*e < 0.1, "cte {e} at s {s}");
            }
        }
    }

    #[test]
    fn nonpositive_lookahead_rejected() {
        let w = courses::straight();
        let p = DemoParams {
            lookahead: 0.0,
            ..DemoParams::default()
        };
        assert!(matches!(
            demo_driver(&w.geometry(), w.route("main").unwrap(), &p),
            Err(SimError::InvalidParameter(_))
        ));
    }

    #[test]
    fn leaving_the_road_faults() {
        let w = courses::straight();
        let route = [[0.0, 0.0], [10.0, 30.0]];
        assert!(matches!(
            demo_driver(&w.geometry(), &route, &DemoParams::default()),
            Err(SimError::OffRoad { .. })
        ));
    }
}

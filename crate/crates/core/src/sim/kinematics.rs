//! Constant-curvature unicycle motion.

use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Pose2D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub pose: Pose2D,
    pub v: f64,
    pub w: f64,
}

impl VehicleState {
    pub fn at(pose: Pose2D) -> Self {
        Self {
            pose,
            v: 0.0,
            w: 0.0,
        }
    }
}

// sin(z)/z, accurate near zero.
fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 - z * z / 6.0
    } else {
        z.sin() / z
    }
}

/// Displacement `[dx, dy, dyaw]` in the starting frame after driving `length`
/// meters at constant `curvature`.
pub fn arc_displacement(length: f64, curvature: f64) -> Pose2D {
    let a = curvature * length;
    let chord = length * sinc(a / 2.0);
    Pose2D {
        x: chord * (a / 2.0).cos(),
        y: chord * (a / 2.0).sin(),
        yaw: wrap_angle(a),
    }
}

/// Drive for `dt` seconds at speed `v` along an arc of `curvature`.
/// Negative speeds are treated as zero; `dt` must be positive.
pub fn step_vehicle(state: &VehicleState, v: f64, curvature: f64, dt: f64) -> VehicleState {
    assert!(dt > 0.0, "time step must be positive");
    let v = v.max(0.0);
    VehicleState {
        pose: state.pose.compose(&arc_displacement(v * dt, curvature)),
        v,
        w: v * curvature,
    }
}

//! Route-conditioned intention masks, navigation score maps and curvature planning
//! for a camera-and-laser ground vehicle.

pub mod annotation;
pub mod dgrid;
pub mod geometry;
pub mod mask;
pub mod metrics;
pub mod navscore;
pub mod pipeline;
pub mod planner;
pub mod polyline;
pub mod route;
pub mod scan;
pub mod sim;
pub mod track;

//! Deterministic planar driving world used to produce demonstrations, sensor data
//! and reference intention.

pub mod closed_loop;
pub mod courses;
pub mod driver;
pub mod kinematics;
pub mod lidar;
pub mod oracle;
pub mod render;
pub mod world;

pub use closed_loop::{run_closed_loop, ClosedLoopConfig, ClosedLoopRun, DelaySpec, DelayStrategy};
pub use driver::{demo_driver, DemoParams, DemoRun};
pub use kinematics::{step_vehicle, VehicleState};
pub use lidar::{simulate_scan, LaserSpec};
pub use oracle::{oracle_intention, OracleParams};
pub use render::{render_camera, RoadMask};
pub use world::{Junction, JunctionKind, Obstacle, Road, RoadGeometry, World};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("unknown route `{0}`")]
    UnknownRoute(String),
    #[error("unknown bundled world `{0}`")]
    UnknownWorld(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("vehicle left the road at frame {frame} (t = {t:.1} s, position {position:?})")]
    OffRoad {
        frame: usize,
        t: f64,
        position: [f64; 2],
    },
    #[error("no road near the vehicle at {0:?}")]
    NoRoad([f64; 2]),
    #[error(transparent)]
    Route(#[from] crate::route::RouteError),
    #[error(transparent)]
    Track(#[from] crate::track::TrackError),
    #[error(transparent)]
    Plan(#[from] crate::planner::PlanError),
    #[error(transparent)]
    Grid(#[from] crate::navscore::GridError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

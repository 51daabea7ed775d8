//! Bundled worlds.
//!
//! `fork_cross` is symmetric about y = 0: a trunk road forks into two avenues, each
//! avenue meets a north-south road at a cross junction, and each north-south road ends
//! at a T junction. Routes `left_goal` and `right_goal` are 500 m long and take the
//! left or right option at every junction.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

use super::world::{path_length, Junction, JunctionKind, Obstacle, PathBuilder, Road, World};
use super::SimError;

pub const ROAD_WIDTH: f64 = 7.0;
pub const FORK_X: f64 = 100.0;
pub const FORK_RADIUS: f64 = 15.0;
pub const FORK_STRAIGHT: f64 = 40.0;
pub const CROSS_X: f64 = 260.0;
pub const T_Y: f64 = 120.0;
pub const TURN_RADIUS: f64 = 15.0;
pub const ROUTE_LENGTH: f64 = 500.0;
pub const BEND_RADIUS: f64 = 7.5;
/// Arc length along `bend`'s route at which the curve starts.
pub const BEND_START: f64 = 60.0;

/// Lateral position of the avenue reached by the left fork.
pub fn avenue_y() -> f64 {
    2.0 * FORK_RADIUS * (1.0 - FRAC_PI_6.cos()) + FORK_STRAIGHT * FRAC_PI_6.sin()
}

pub const BUNDLED: [&str; 3] = ["straight", "fork_cross", "bend"];

pub fn bundled(name: &str) -> Result<World, SimError> {
    match name {
        "straight" => Ok(straight()),
        "fork_cross" => Ok(fork_cross()),
        "bend" => Ok(bend()),
        _ => Err(SimError::UnknownWorld(name.to_string())),
    }
}

/// One straight road with a 100 m route along it.
pub fn straight() -> World {
    let mut routes = BTreeMap::new();
    routes.insert("main".to_string(), vec![[0.0, 0.0], [100.0, 0.0]]);
    World {
        roads: vec![Road {
            name: "main".into(),
            width: ROAD_WIDTH,
            points: vec![[-20.0, 0.0], [120.0, 0.0]],
        }],
        obstacles: vec![],
        junctions: vec![Junction {
            name: "main".into(),
            kind: JunctionKind::Straight,
            position: [50.0, 0.0],
        }],
        routes,
        walls_visible: true,
        vehicle_width: super::world::DEFAULT_VEHICLE_WIDTH,
        seed: 7,
    }
}

/// A straight approach into a 90° left bend.
pub fn bend() -> World {
    let road = PathBuilder::new([-20.0, 0.0], 0.0)
        .straight(BEND_START + 20.0)
        .arc(BEND_RADIUS, FRAC_PI_2)
        .straight(60.0)
        .build();
    let route = PathBuilder::new([0.0, 0.0], 0.0)
        .straight(BEND_START)
        .arc(BEND_RADIUS, FRAC_PI_2)
        .straight(40.0)
        .build();
    let mut routes = BTreeMap::new();
    routes.insert("main".to_string(), route);
    World {
        roads: vec![Road {
            name: "bend".into(),
            width: ROAD_WIDTH,
            points: road,
        }],
        obstacles: vec![],
        junctions: vec![],
        routes,
        walls_visible: true,
        vehicle_width: super::world::DEFAULT_VEHICLE_WIDTH,
        seed: 7,
    }
}

fn mirror(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    points.iter().map(|p| [p[0], -p[1]]).collect()
}

fn left_side_roads() -> Vec<(String, Vec<[f64; 2]>)> {
    let yn = avenue_y();
    let r = TURN_RADIUS;
    let fork = PathBuilder::new([FORK_X, 0.0], 0.0)
        .arc(FORK_RADIUS, FRAC_PI_6)
        .straight(FORK_STRAIGHT)
        .arc(FORK_RADIUS, -FRAC_PI_6)
        .straight_to_x(CROSS_X + 40.0)
        .build();
    vec![
        ("avenue".into(), fork),
        (
            "north_south".into(),
            vec![[CROSS_X, yn - 30.0], [CROSS_X, T_Y]],
        ),
        (
            "cross_w_n".into(),
            PathBuilder::new([CROSS_X - r, yn], 0.0).arc(r, FRAC_PI_2).build(),
        ),
        (
            "cross_w_s".into(),
            PathBuilder::new([CROSS_X - r, yn], 0.0).arc(r, -FRAC_PI_2).build(),
        ),
        (
            "cross_n_e".into(),
            PathBuilder::new([CROSS_X, yn + r], -FRAC_PI_2).arc(r, FRAC_PI_2).build(),
        ),
        (
            "cross_s_e".into(),
            PathBuilder::new([CROSS_X, yn - r], FRAC_PI_2).arc(r, -FRAC_PI_2).build(),
        ),
        ("t_bar".into(), vec![[CROSS_X - 40.0, T_Y], [430.0, T_Y]]),
        (
            "t_n_e".into(),
            PathBuilder::new([CROSS_X, T_Y - r], FRAC_PI_2).arc(r, -FRAC_PI_2).build(),
        ),
        (
            "t_n_w".into(),
            PathBuilder::new([CROSS_X, T_Y - r], FRAC_PI_2).arc(r, FRAC_PI_2).build(),
        ),
    ]
}

/// Route from the trunk start taking the left fork, the left turn at the cross
/// junction and the right turn at the T junction, trimmed to exactly 500 m.
pub fn left_goal_route() -> Vec<[f64; 2]> {
    let r = TURN_RADIUS;
    let b = PathBuilder::new([0.0, 0.0], 0.0)
        .straight(FORK_X)
        .arc(FORK_RADIUS, FRAC_PI_6)
        .straight(FORK_STRAIGHT)
        .arc(FORK_RADIUS, -FRAC_PI_6)
        .straight_to_x(CROSS_X - r)
        .arc(r, FRAC_PI_2)
        .straight_to_y(T_Y - r)
        .arc(r, -FRAC_PI_2);
    let so_far = path_length(&b.clone().build());
    b.straight(ROUTE_LENGTH - so_far).build()
}

pub fn fork_cross() -> World {
    let yn = avenue_y();
    let mut roads = vec![Road {
        name: "trunk".into(),
        width: ROAD_WIDTH,
        points: vec![[-20.0, 0.0], [FORK_X, 0.0]],
    }];
    for (side, sign) in [("left", 1.0), ("right", -1.0)] {
        for (name, pts) in left_side_roads() {
            roads.push(Road {
                name: format!("{side}_{name}"),
                width: ROAD_WIDTH,
                points: if sign > 0.0 { pts } else { mirror(&pts) },
            });
        }
    }
    let left = left_goal_route();
    let mut routes = BTreeMap::new();
    routes.insert("right_goal".to_string(), mirror(&left));
    routes.insert("left_goal".to_string(), left);
    let mut junctions = vec![Junction {
        name: "fork".into(),
        kind: JunctionKind::T,
        position: [FORK_X, 0.0],
    }];
    for (side, sign) in [("left", 1.0), ("right", -1.0)] {
        junctions.push(Junction {
            name: format!("{side}_cross"),
            kind: JunctionKind::Cross,
            position: [CROSS_X, sign * yn],
        });
        junctions.push(Junction {
            name: format!("{side}_t"),
            kind: JunctionKind::T,
            position: [CROSS_X, sign * T_Y],
        });
    }
    let parked = |c: [f64; 2]| Obstacle {
        center: c,
        radius: 0.6,
        velocity: None,
    };
    World {
        roads,
        obstacles: vec![
            parked([50.0, -2.5]),
            parked([200.0, yn + 2.5]),
            parked([200.0, -(yn + 2.5)]),
        ],
        junctions,
        routes,
        walls_visible: true,
        vehicle_width: super::world::DEFAULT_VEHICLE_WIDTH,
        seed: 7,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyline::Polyline;

    #[test]
    fn bundled_worlds_validate() {
        for name in BUNDLED {
            bundled(name).unwrap().validate().unwrap();
        }
        assert!(bundled("nowhere").is_err());
    }

    #[test]
    fn goal_routes_are_five_hundred_meters_and_on_road() {
        let w = fork_cross();
        let g = w.geometry();
        for name in ["left_goal", "right_goal"] {
            let pl = Polyline::new(w.route(name).unwrap());
            assert!((pl.length() - ROUTE_LENGTH).abs() < 1e-9);
            for p in pl.resample(0.5) {
                assert!(g.centerline_distance(p) < 0.02, "{name} {p:?}");
            }
        }
        let end = *w.route("left_goal").unwrap().last().unwrap();
        assert!((end[1] - T_Y).abs() < 1e-9 && (end[0] - 410.83).abs() < 0.05, "{end:?}");
    }

    #[test]
    fn avenue_offset() {
        assert!((avenue_y() - 24.0192).abs() < 1e-4);
    }
}

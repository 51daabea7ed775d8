//! Road network, obstacles and the capsule geometry used for containment and ray tests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::polyline::{dist, project_on_segment, Polyline};

use super::SimError;

pub const DEFAULT_VEHICLE_WIDTH: f64 = 1.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Road {
    pub name: String,
    pub width: f64,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: [f64; 2],
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<[f64; 2]>,
}

impl Obstacle {
    pub fn center_at(&self, t: f64) -> [f64; 2] {
        match self.velocity {
            Some(v) => [self.center[0] + v[0] * t, self.center[1] + v[1] * t],
            None => self.center,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JunctionKind {
    #[serde(rename = "straight")]
    Straight,
    #[serde(rename = "T")]
    T,
    #[serde(rename = "cross")]
    Cross,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Junction {
    pub name: String,
    pub kind: JunctionKind,
    pub position: [f64; 2],
}

fn default_true() -> bool {
    true
}

fn default_vehicle_width() -> f64 {
    DEFAULT_VEHICLE_WIDTH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub roads: Vec<Road>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub junctions: Vec<Junction>,
    /// Named global routes as world-frame polylines.
    #[serde(default)]
    pub routes: BTreeMap<String, Vec<[f64; 2]>>,
    /// Road boundaries return laser hits.
    #[serde(default = "default_true")]
    pub walls_visible: bool,
    #[serde(default = "default_vehicle_width")]
    pub vehicle_width: f64,
    #[serde(default)]
    pub seed: u64,
}

impl World {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.roads.is_empty() {
            return Err(SimError::InvalidWorld("world has no roads".into()));
        }
        for r in &self.roads {
            if !(r.width > 2.0 * self.vehicle_width) {
                return Err(SimError::InvalidWorld(format!(
                    "road `{}` width {} must exceed twice the vehicle width {}",
                    r.name, r.width, self.vehicle_width
                )));
            }
            if Polyline::new(&r.points).len() < 2 {
                return Err(SimError::InvalidWorld(format!(
                    "road `{}` needs at least two distinct points",
                    r.name
                )));
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !(o.radius > 0.0) {
                return Err(SimError::InvalidWorld(format!(
                    "obstacle {i} radius {} must be positive",
                    o.radius
                )));
            }
        }
        for (name, pts) in &self.routes {
            if Polyline::new(pts).len() < 2 {
                return Err(SimError::InvalidWorld(format!(
                    "route `{name}` needs at least two distinct points"
                )));
            }
        }
        Ok(())
    }

    pub fn route(&self, name: &str) -> Result<&[[f64; 2]], SimError> {
        self.routes
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| SimError::UnknownRoute(name.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)?;
        let w: World = serde_json::from_str(&text)?;
        w.validate()?;
        Ok(w)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("world serializes")
    }

    pub fn geometry(&self) -> RoadGeometry {
        RoadGeometry::new(self)
    }
}

/// Segment swept by a disc: the points within `radius` of segment `ab`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub radius: f64,
    pub road: usize,
}

impl Capsule {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        project_on_segment(p, self.a, self.b).1 <= self.radius
    }

    /// Parameter interval of the line `o + t·d` inside the capsule, if any.
    pub fn line_interval(&self, o: [f64; 2], d: [f64; 2]) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in [self.a, self.b] {
            if let Some((t0, t1)) = line_disc(o, d, c, self.radius) {
                lo = lo.min(t0);
                hi = hi.max(t1);
            }
        }
        let e = [self.b[0] - self.a[0], self.b[1] - self.a[1]];
        let len = e[0].hypot(e[1]);
        if len > 0.0 {
            let u = [e[0] / len, e[1] / len];
            let n = [-u[1], u[0]];
            let rel = [o[0] - self.a[0], o[1] - self.a[1]];
            let slabs = [
                (rel[0] * u[0] + rel[1] * u[1], d[0] * u[0] + d[1] * u[1], 0.0, len),
                (
                    rel[0] * n[0] + rel[1] * n[1],
                    d[0] * n[0] + d[1] * n[1],
                    -self.radius,
                    self.radius,
                ),
            ];
            let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
            let mut empty = false;
            for (p, q, smin, smax) in slabs {
                if q.abs() < 1e-15 {
                    if p < smin || p > smax {
                        empty = true;
                    }
                } else {
                    let (a, b) = ((smin - p) / q, (smax - p) / q);
                    t0 = t0.max(a.min(b));
                    t1 = t1.min(a.max(b));
                }
            }
            if !empty && t0 <= t1 {
                lo = lo.min(t0);
                hi = hi.max(t1);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    fn near(&self, p: [f64; 2], range: f64) -> bool {
        project_on_segment(p, self.a, self.b).1 <= range + self.radius
    }
}

/// Parameter interval of `o + t·d` inside the disc.
pub fn line_disc(o: [f64; 2], d: [f64; 2], c: [f64; 2], r: f64) -> Option<(f64, f64)> {
    let f = [o[0] - c[0], o[1] - c[1]];
    let a = d[0] * d[0] + d[1] * d[1];
    if a == 0.0 {
        return None;
    }
    let b = f[0] * d[0] + f[1] * d[1];
    let cc = f[0] * f[0] + f[1] * f[1] - r * r;
    let disc = b * b - a * cc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    Some(((-b - sq) / a, (-b + sq) / a))
}

/// Roads as capsules of half their width around each centerline segment.
#[derive(Debug, Clone)]
pub struct RoadGeometry {
    pub capsules: Vec<Capsule>,
    pub centerlines: Vec<Polyline>,
    pub half_widths: Vec<f64>,
}

impl RoadGeometry {
    pub fn new(world: &World) -> Self {
        let mut capsules = Vec::new();
        let mut centerlines = Vec::new();
        let mut half_widths = Vec::new();
        for (k, r) in world.roads.iter().enumerate() {
            let pl = Polyline::new(&r.points);
            for w in pl.points().windows(2) {
                capsules.push(Capsule {
                    a: w[0],
                    b: w[1],
                    radius: r.width / 2.0,
                    road: k,
                });
            }
            centerlines.push(pl);
            half_widths.push(r.width / 2.0);
        }
        Self {
            capsules,
            centerlines,
            half_widths,
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.capsules.iter().any(|c| c.contains(p))
    }

    /// Capsules within `range` of `p`.
    pub fn nearby(&self, p: [f64; 2], range: f64) -> Vec<Capsule> {
        self.capsules
            .iter()
            .filter(|c| c.near(p, range))
            .copied()
            .collect()
    }

    /// Distance from `p` to the nearest road centerline.
    pub fn centerline_distance(&self, p: [f64; 2]) -> f64 {
        self.capsules
            .iter()
            .map(|c| project_on_segment(p, c.a, c.b).1)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds a centerline from straight pieces and circular arcs.
#[derive(Debug, Clone)]
pub struct PathBuilder {
    points: Vec<[f64; 2]>,
    heading: f64,
    arc_step: f64,
}

impl PathBuilder {
    pub fn new(start: [f64; 2], heading: f64) -> Self {
        Self {
            points: vec![start],
            heading,
            arc_step: 0.5,
        }
    }

    pub fn position(&self) -> [f64; 2] {
        *self.points.last().unwrap()
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn straight(mut self, length: f64) -> Self {
        let p = self.position();
        self.points.push([
            p[0] + length * self.heading.cos(),
            p[1] + length * self.heading.sin(),
        ]);
        self
    }

    /// Straight piece ending where the x coordinate reaches `x`.
    pub fn straight_to_x(self, x: f64) -> Self {
        let len = (x - self.position()[0]) / self.heading.cos();
        self.straight(len)
    }

    /// Straight piece ending where the y coordinate reaches `y`.
    pub fn straight_to_y(self, y: f64) -> Self {
        let len = (y - self.position()[1]) / self.heading.sin();
        self.straight(len)
    }

    /// Circular arc of `radius`; positive `angle` turns left.
    pub fn arc(mut self, radius: f64, angle: f64) -> Self {
        let p0 = self.position();
        let h0 = self.heading;
        let sign = angle.signum();
        let center = [p0[0] - sign * radius * h0.sin(), p0[1] + sign * radius * h0.cos()];
        let n = ((radius * angle.abs()) / self.arc_step).ceil().max(1.0) as usize;
        for k in 1..=n {
            let h = h0 + angle * k as f64 / n as f64;
            self.points.push([
                center[0] + sign * radius * h.sin(),
                center[1] - sign * radius * h.cos(),
            ]);
        }
        self.heading = h0 + angle;
        self
    }

    pub fn build(self) -> Vec<[f64; 2]> {
        self.points
    }
}

/// Arc length of a point sequence.
pub fn path_length(points: &[[f64; 2]]) -> f64 {
    points.windows(2).map(|w| dist(w[0], w[1])).sum()
}

//! Synthetic front camera: binary road masks.

use crate::dgrid::{DGrid, GridData};
use crate::geometry::{CameraModel, Pose2D};

use super::world::RoadGeometry;

/// Ground beyond this forward distance is not rendered.
pub const MAX_RENDER_RANGE: f64 = 40.0;

/// Row-major road (1) / non-road (0) image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoadMask {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<u8>,
}

impl RoadMask {
    pub fn is_road(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.width + col] != 0
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }

    pub fn to_dgrid(&self) -> DGrid {
        DGrid {
            width: self.width,
            height: self.height,
            resolution: 0.0,
            origin: [0.0, 0.0],
            data: GridData::Class(self.cells.clone()),
        }
    }
}

/// Render which pixels see road from `pose`. Each image row views a ground line of
/// constant forward distance, so road spans are found per row by intersecting that
/// line with every nearby road capsule.
pub fn render_camera(roads: &RoadGeometry, pose: &Pose2D, cam: &CameraModel) -> RoadMask {
    let (w, h) = (cam.image_width, cam.image_height);
    let mut cells = vec![0u8; w * h];
    let nearby = roads.nearby(pose.position(), MAX_RENDER_RANGE + cam.forward_offset.abs() + 60.0);
    let left = [-pose.yaw.sin(), pose.yaw.cos()];
    let mut spans: Vec<(f64, f64)> = Vec::new();
    for row in 0..h {
        let Some((x, slope)) = cam.row_ground_line(row as f64 + 0.5) else {
            continue;
        };
        if x > MAX_RENDER_RANGE || x <= 0.0 {
            continue;
        }
        // Ground point for column u: origin + (u - cx) * slope * left.
        let origin = pose.transform_point([x, 0.0]);
        let dir = [slope * left[0], slope * left[1]];
        spans.clear();
        for c in &nearby {
            if let Some(iv) = c.line_interval(origin, dir) {
                spans.push(iv);
            }
        }
        for &(t0, t1) in &spans {
            // Column c is road when its center offset u - cx = c + 0.5 - cx lies in [t0, t1].
            let c0 = (t0 + cam.cx - 0.5).ceil().max(0.0);
            let c1 = (t1 + cam.cx - 0.5).floor().min(w as f64 - 1.0);
            if c0 <= c1 {
                for c in c0 as usize..=c1 as usize {
                    cells[row * w + c] = 1;
                }
            }
        }
    }
    RoadMask {
        width: w,
        height: h,
        cells,
    }
}

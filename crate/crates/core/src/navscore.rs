//! Vehicle-frame metric grids and the Gaussian navigation score map.
//!
//! Grid layout: row index runs along `x_forward`, column index along `y_left`;
//! `origin` is the vehicle-frame corner of cell `(0, 0)` at minimum x and y.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geometry::{CameraModel, Pixel};
use crate::mask::{IntentionMask, MaskClass};
use crate::scan::LaserScan;

/// `(row, col)` of a grid cell.
pub type Cell = (usize, usize);

/// Ordered cell set; iteration order is independent of insertion order.
pub type CellSet = BTreeSet<Cell>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Cells along `x_forward`.
    pub rows: usize,
    /// Cells along `y_left`.
    pub cols: usize,
    pub cell_size: f64,
    pub origin_x: f64,
    pub origin_y: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            rows: 80,
            cols: 80,
            cell_size: 0.5,
            origin_x: -10.0,
            origin_y: -20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("cell size must be positive, got {0}")]
    CellSize(f64),
    #[error("vehicle origin lies outside the grid")]
    OriginOutside,
    #[error("kernel sigma must be positive (intention {sigma_int}, obstacle {sigma_obs})")]
    Sigma { sigma_int: f64, sigma_obs: f64 },
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.cell_size > 0.0) {
            return Err(GridError::CellSize(self.cell_size));
        }
        if self.cell_of([0.0, 0.0]).is_none() {
            return Err(GridError::OriginOutside);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_max(&self) -> f64 {
        self.origin_x + self.rows as f64 * self.cell_size
    }

    pub fn y_max(&self) -> f64 {
        self.origin_y + self.cols as f64 * self.cell_size
    }

    pub fn cell_of(&self, p: [f64; 2]) -> Option<Cell> {
        let r = ((p[0] - self.origin_x) / self.cell_size).floor();
        let c = ((p[1] - self.origin_y) / self.cell_size).floor();
        if r >= 0.0 && c >= 0.0 && (r as usize) < self.rows && (c as usize) < self.cols {
            Some((r as usize, c as usize))
        } else {
            None
        }
    }

    pub fn center(&self, cell: Cell) -> [f64; 2] {
        [
            self.origin_x + (cell.0 as f64 + 0.5) * self.cell_size,
            self.origin_y + (cell.1 as f64 + 0.5) * self.cell_size,
        ]
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.0 * self.cols + cell.1
    }
}

/// Gaussian kernel amplitudes and widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelParams {
    pub sigma_int: f64,
    pub amp_int: f64,
    pub sigma_obs: f64,
    pub amp_obs: f64,
    /// Kernels are cut off beyond this many sigmas.
    pub truncation: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            sigma_int: 0.5,
            amp_int: 1.0,
            sigma_obs: 0.75,
            amp_obs: 2.0,
            truncation: 3.0,
        }
    }
}

/// Real-valued score per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct NavScoreMap {
    pub grid: GridSpec,
    pub kernel: KernelParams,
    scores: Vec<f64>,
}

impl NavScoreMap {
    pub fn from_scores(grid: GridSpec, kernel: KernelParams, scores: Vec<f64>) -> Self {
        assert_eq!(scores.len(), grid.len(), "score count must match the grid");
        Self {
            grid,
            kernel,
            scores,
        }
    }

    pub fn zeros(grid: GridSpec, kernel: KernelParams) -> Self {
        Self::from_scores(grid, kernel, vec![0.0; grid.len()])
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn value(&self, cell: Cell) -> f64 {
        self.scores[self.grid.index(cell)]
    }

    pub fn min(&self) -> f64 {
        self.scores.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bilinear interpolation between cell centers; `None` outside the grid extent.
    pub fn sample(&self, p: [f64; 2]) -> Option<f64> {
        let g = &self.grid;
        if !(p[0] >= g.origin_x && p[0] < g.x_max() && p[1] >= g.origin_y && p[1] < g.y_max()) {
            return None;
        }
        let fr = ((p[0] - g.origin_x) / g.cell_size - 0.5).clamp(0.0, (g.rows - 1) as f64);
        let fc = ((p[1] - g.origin_y) / g.cell_size - 0.5).clamp(0.0, (g.cols - 1) as f64);
        let r0 = (fr.floor() as usize).min(g.rows.saturating_sub(2));
        let c0 = (fc.floor() as usize).min(g.cols.saturating_sub(2));
        let r1 = (r0 + 1).min(g.rows - 1);
        let c1 = (c0 + 1).min(g.cols - 1);
        let tr = fr - r0 as f64;
        let tc = fc - c0 as f64;
        let v00 = self.value((r0, c0));
        let v01 = self.value((r0, c1));
        let v10 = self.value((r1, c0));
        let v11 = self.value((r1, c1));
        Some(
            (1.0 - tr) * ((1.0 - tc) * v00 + tc * v01) + tr * ((1.0 - tc) * v10 + tc * v11),
        )
    }

    /// Mirror across the vehicle x axis (y -> -y). Exact for grids symmetric about y = 0.
    pub fn mirrored(&self) -> NavScoreMap {
        let g = self.grid;
        let mut scores = vec![0.0; g.len()];
        for r in 0..g.rows {
            for c in 0..g.cols {
                scores[g.index((r, g.cols - 1 - c))] = self.value((r, c));
            }
        }
        NavScoreMap {
            grid: g,
            kernel: self.kernel,
            scores,
        }
    }

    /// Cell-wise sum of two maps on the same grid.
    pub fn add(&self, other: &NavScoreMap) -> NavScoreMap {
        assert_eq!(self.grid, other.grid);
        NavScoreMap {
            grid: self.grid,
            kernel: self.kernel,
            scores: self
                .scores
                .iter()
                .zip(&other.scores)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

/// Cells hit by at least one intention pixel below the horizon.
pub fn project_intention(mask: &IntentionMask, cam: &CameraModel, grid: &GridSpec) -> CellSet {
    let mut cells = CellSet::new();
    for (col, row) in mask.pixels(MaskClass::Intention) {
        let px = Pixel {
            u: col as f64 + 0.5,
            v: row as f64 + 0.5,
        };
        if let Some(g) = cam.image_to_ground(px) {
            if let Some(cell) = grid.cell_of(g.as_array()) {
                cells.insert(cell);
            }
        }
    }
    cells
}

/// Endpoint cells of every laser return.
pub fn rasterize_scan(scan: &LaserScan, grid: &GridSpec) -> CellSet {
    scan.hit_points().filter_map(|p| grid.cell_of(p)).collect()
}

fn splat(scores: &mut [f64], grid: &GridSpec, cells: &CellSet, sigma: f64, amp: f64, trunc: f64) {
    let reach = trunc * sigma;
    let reach2 = reach * reach;
    let span = (reach / grid.cell_size).ceil() as i64;
    let inv = 1.0 / (2.0 * sigma * sigma);
    for &(r, c) in cells {
        for dr in -span..=span {
            let rr = r as i64 + dr;
            if rr < 0 || rr >= grid.rows as i64 {
                continue;
            }
            for dc in -span..=span {
                let cc = c as i64 + dc;
                if cc < 0 || cc >= grid.cols as i64 {
                    continue;
                }
                let d2 = ((dr * dr + dc * dc) as f64) * grid.cell_size * grid.cell_size;
                if d2 > reach2 {
                    continue;
                }
                scores[rr as usize * grid.cols + cc as usize] += amp * (-d2 * inv).exp();
            }
        }
    }
}

/// Superpose positive kernels on intention cells and negative kernels on obstacle cells.
pub fn build_score_map(
    grid: &GridSpec,
    intention: &CellSet,
    obstacles: &CellSet,
    kernel: &KernelParams,
) -> Result<NavScoreMap, GridError> {
    if !(kernel.sigma_int > 0.0 && kernel.sigma_obs > 0.0) {
        return Err(GridError::Sigma {
            sigma_int: kernel.sigma_int,
            sigma_obs: kernel.sigma_obs,
        });
    }
    if !(grid.cell_size > 0.0) {
        return Err(GridError::CellSize(grid.cell_size));
    }
    let mut scores = vec![0.0; grid.len()];
    splat(
        &mut scores,
        grid,
        intention,
        kernel.sigma_int,
        kernel.amp_int,
        kernel.truncation,
    );
    splat(
        &mut scores,
        grid,
        obstacles,
        kernel.sigma_obs,
        -kernel.amp_obs,
        kernel.truncation,
    );
    Ok(NavScoreMap {
        grid: *grid,
        kernel: *kernel,
        scores,
    })
}

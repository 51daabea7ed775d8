//! Planar laser scans in the vehicle frame.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScanError {
    #[error("bearings and ranges differ in length ({bearings} vs {ranges})")]
    LengthMismatch { bearings: usize, ranges: usize },
    #[error("bearings must be strictly increasing (index {0})")]
    BearingOrder(usize),
    #[error("range {range} at index {index} outside (0, {max_range}]")]
    RangeOutOfBounds {
        index: usize,
        range: f64,
        max_range: f64,
    },
}

/// One sweep: `ranges[k]` measured along `bearings[k]`. A range equal to
/// `max_range` means no return.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserScan {
    pub bearings: Vec<f64>,
    pub ranges: Vec<f64>,
    pub max_range: f64,
}

impl LaserScan {
    pub fn new(bearings: Vec<f64>, ranges: Vec<f64>, max_range: f64) -> Result<Self, ScanError> {
        let scan = Self {
            bearings,
            ranges,
            max_range,
        };
        scan.validate()?;
        Ok(scan)
    }

    /// A scan with no returns.
    pub fn empty(bearings: Vec<f64>, max_range: f64) -> Self {
        let ranges = vec![max_range; bearings.len()];
        Self {
            bearings,
            ranges,
            max_range,
        }
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        if self.bearings.len() != self.ranges.len() {
            return Err(ScanError::LengthMismatch {
                bearings: self.bearings.len(),
                ranges: self.ranges.len(),
            });
        }
        if let Some(i) = self.bearings.windows(2).position(|w| w[1] <= w[0]) {
            return Err(ScanError::BearingOrder(i + 1));
        }
        for (index, &range) in self.ranges.iter().enumerate() {
            if !(range > 0.0 && range <= self.max_range) {
                return Err(ScanError::RangeOutOfBounds {
                    index,
                    range,
                    max_range: self.max_range,
                });
            }
        }
        Ok(())
    }

    /// Vehicle-frame endpoints of every real return (`range < max_range`).
    pub fn hit_points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.bearings
            .iter()
            .zip(&self.ranges)
            .filter(|(_, &r)| r < self.max_range)
            .map(|(&b, &r)| [r * b.cos(), r * b.sin()])
    }
}

/// `count` bearings evenly covering `fov` centered on the forward axis.
pub fn evenly_spaced_bearings(fov: f64, count: usize) -> Vec<f64> {
    let full_circle = (fov - std::f64::consts::TAU).abs() < 1e-12;
    let step = if full_circle {
        fov / count as f64
    } else {
        fov / (count.max(2) - 1) as f64
    };
    (0..count).map(|k| -fov / 2.0 + k as f64 * step).collect()
}

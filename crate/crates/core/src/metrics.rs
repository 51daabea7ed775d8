//! Mask agreement and motion accuracy metrics.

use serde::{Deserialize, Serialize};

use crate::mask::{IntentionMask, MaskClass, MaskError};
use crate::planner::{candidate_curves, PlanError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error("need intention pixels in at least two rows, found {0}")]
    TooFewRows(usize),
    #[error("prediction and reference lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no samples to evaluate")]
    Empty,
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Intersection over union of the intention class. Two empty masks agree perfectly.
pub fn iou(a: &IntentionMask, b: &IntentionMask) -> Result<f64, MetricError> {
    a.check_same_shape(b)?;
    let code = MaskClass::Intention as u8;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        let (p, q) = (x == code, y == code);
        inter += (p && q) as usize;
        union += (p || q) as usize;
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// Per-row center of the intention region with a straight-line fit `u = a * v + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterLine {
    /// `(row, mean column)` using pixel centers.
    pub dots: Vec<(usize, f64)>,
    pub slope: f64,
    pub intercept: f64,
}

impl CenterLine {
    /// Direction of the fitted line in degrees; 90 is vertical in the image.
    pub fn angle_deg(&self) -> f64 {
        1.0f64.atan2(self.slope).to_degrees()
    }
}

pub fn center_line(mask: &IntentionMask) -> Result<CenterLine, MetricError> {
    let mut dots = Vec::new();
    for row in 0..mask.height {
        let (mut sum, mut n) = (0.0, 0usize);
        for col in 0..mask.width {
            if mask.is_intention(col, row) {
                sum += col as f64 + 0.5;
                n += 1;
            }
        }
        if n > 0 {
            dots.push((row, sum / n as f64));
        }
    }
    if dots.len() < 2 {
        return Err(MetricError::TooFewRows(dots.len()));
    }
    let n = dots.len() as f64;
    let mv = dots.iter().map(|d| d.0 as f64 + 0.5).sum::<f64>() / n;
    let mu = dots.iter().map(|d| d.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(r, u) in &dots {
        let dv = r as f64 + 0.5 - mv;
        sxy += dv * (u - mu);
        sxx += dv * dv;
    }
    let slope = sxy / sxx;
    Ok(CenterLine {
        dots,
        slope,
        intercept: mu - slope * mv,
    })
}

/// Percentage of the predicted center dots that fall on reference intention pixels.
pub fn cover_rate(pred: &IntentionMask, reference: &IntentionMask) -> Result<f64, MetricError> {
    pred.check_same_shape(reference)?;
    let line = center_line(pred)?;
    let hits = line
        .dots
        .iter()
        .filter(|&&(row, u)| {
            let col = u.floor() as usize;
            col < reference.width && reference.is_intention(col, row)
        })
        .count();
    Ok(100.0 * hits as f64 / line.dots.len() as f64)
}

/// Absolute angle between the fitted center lines, in degrees within `[0, 90]`.
pub fn delta_yaw(pred: &IntentionMask, reference: &IntentionMask) -> Result<f64, MetricError> {
    pred.check_same_shape(reference)?;
    let a = center_line(pred)?.angle_deg();
    let b = center_line(reference)?.angle_deg();
    let d = (a - b).abs() % 180.0;
    Ok(if d > 90.0 { 180.0 - d } else { d })
}

/// Mean absolute difference over positions where `valid` is set.
pub fn masked_l1(pred: &[f64], target: &[f64], valid: &[bool]) -> Result<f64, MetricError> {
    if pred.len() != target.len() || pred.len() != valid.len() {
        return Err(MetricError::LengthMismatch(pred.len(), target.len()));
    }
    let (mut sum, mut n) = (0.0, 0usize);
    for ((p, t), &m) in pred.iter().zip(target).zip(valid) {
        if m {
            sum += (p - t).abs();
            n += 1;
        }
    }
    if n == 0 {
        return Err(MetricError::Empty);
    }
    Ok(sum / n as f64)
}

/// Index of the candidate curvature nearest to `curvature`, ties to the smaller index.
pub fn quantize_index(curvature: f64, resolution: usize) -> Result<usize, PlanError> {
    let cands = candidate_curves(resolution)?;
    let step = cands[1] - cands[0];
    let x = (curvature - cands[0]) / step;
    let mut k = (x - 0.5).ceil().clamp(0.0, (resolution - 1) as f64) as usize;
    // The closed form can land one off when x sits within rounding of a half step.
    let d = |i: usize| (curvature - cands[i]).abs();
    if k > 0 && d(k - 1) <= d(k) {
        k -= 1;
    } else if k + 1 < resolution && d(k + 1) < d(k) {
        k += 1;
    }
    Ok(k)
}

/// Percentage of frames whose predicted curvature index is within `delta_g` of the human one.
pub fn motion_accuracy(
    predicted: &[f64],
    human: &[f64],
    resolution: usize,
    delta_g: usize,
) -> Result<f64, MetricError> {
    if predicted.len() != human.len() {
        return Err(MetricError::LengthMismatch(predicted.len(), human.len()));
    }
    if predicted.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut ok = 0usize;
    for (&p, &h) in predicted.iter().zip(human) {
        let a = quantize_index(p, resolution)?;
        let b = quantize_index(h, resolution)?;
        ok += (a.abs_diff(b) <= delta_g) as usize;
    }
    Ok(100.0 * ok as f64 / predicted.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub resolutions: Vec<usize>,
    pub delta_g: Vec<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            resolutions: (3..=23).step_by(2).collect(),
            delta_g: vec![0, 1, 2],
        }
    }
}

//! Image-frame class masks and the polygon rasterizer used to paint them.

use crate::geometry::Pixel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MaskClass {
    Unknown = 0,
    Intention = 1,
    Obstacle = 2,
}

impl MaskClass {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(MaskClass::Unknown),
            1 => Some(MaskClass::Intention),
            2 => Some(MaskClass::Obstacle),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MaskError {
    #[error("mask shape mismatch: {a:?} vs {b:?}")]
    ShapeMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("label {0} is not a mask class")]
    BadLabel(u8),
    #[error("expected {expected} labels, got {got}")]
    BadLength { expected: usize, got: usize },
}

/// Per-pixel class grid, row-major (`height` rows of `width` labels).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntentionMask {
    pub width: usize,
    pub height: usize,
    pub frame_id: u64,
    labels: Vec<u8>,
}

impl IntentionMask {
    pub fn new(width: usize, height: usize, frame_id: u64) -> Self {
        Self {
            width,
            height,
            frame_id,
            labels: vec![MaskClass::Unknown as u8; width * height],
        }
    }

    pub fn from_labels(
        width: usize,
        height: usize,
        frame_id: u64,
        labels: Vec<u8>,
    ) -> Result<Self, MaskError> {
        if labels.len() != width * height {
            return Err(MaskError::BadLength {
                expected: width * height,
                got: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > 2) {
            return Err(MaskError::BadLabel(bad));
        }
        Ok(Self {
            width,
            height,
            frame_id,
            labels,
        })
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, col: usize, row: usize) -> MaskClass {
        MaskClass::from_u8(self.labels[row * self.width + col]).unwrap_or(MaskClass::Unknown)
    }

    pub fn set(&mut self, col: usize, row: usize, class: MaskClass) {
        self.labels[row * self.width + col] = class as u8;
    }

    pub fn is_intention(&self, col: usize, row: usize) -> bool {
        self.labels[row * self.width + col] == MaskClass::Intention as u8
    }

    pub fn count(&self, class: MaskClass) -> usize {
        self.labels.iter().filter(|&&l| l == class as u8).count()
    }

    /// `(col, row)` of every pixel with the given class, in row-major order.
    pub fn pixels(&self, class: MaskClass) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == class as u8)
            .map(move |(k, _)| (k % w, k / w))
    }

    /// Mean `(u, v)` of intention pixel centers.
    pub fn intention_centroid(&self) -> Option<(f64, f64)> {
        let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
        for (c, r) in self.pixels(MaskClass::Intention) {
            su += c as f64 + 0.5;
            sv += r as f64 + 0.5;
            n += 1;
        }
        (n > 0).then(|| (su / n as f64, sv / n as f64))
    }

    pub fn check_same_shape(&self, other: &IntentionMask) -> Result<(), MaskError> {
        if self.shape() != other.shape() {
            return Err(MaskError::ShapeMismatch {
                a: self.shape(),
                b: other.shape(),
            });
        }
        Ok(())
    }

    /// Fill the polygon (even-odd rule on pixel centers) with `class`.
    pub fn fill_polygon(&mut self, poly: &[Pixel], class: MaskClass) {
        let (w, h) = (self.width, self.height);
        fill_polygon_spans(poly, w, h, |row, c0, c1| {
            for c in c0..c1 {
                self.labels[row * w + c] = class as u8;
            }
        });
    }

    /// Draw a 1-pixel line between two continuous image points.
    pub fn draw_line(&mut self, a: Pixel, b: Pixel, class: MaskClass) {
        let (w, h) = (self.width as i64, self.height as i64);
        let pa = (a.u.floor() as i64, a.v.floor() as i64);
        let pb = (b.u.floor() as i64, b.v.floor() as i64);
        // Long lines are clipped coarsely by bounding the walk.
        if (pa.0 - pb.0).abs().max((pa.1 - pb.1).abs()) > 4 * (w + h) {
            return;
        }
        crate::route::bresenham(pa, pb, &mut |c, r| {
            if c >= 0 && r >= 0 && c < w && r < h {
                self.labels[(r * w + c) as usize] = class as u8;
            }
        });
    }
}

/// Scanline polygon fill. Calls `span(row, c0, c1)` for pixel columns `c0..c1` whose
/// centers lie inside the polygon.
pub fn fill_polygon_spans(
    poly: &[Pixel],
    width: usize,
    height: usize,
    mut span: impl FnMut(usize, usize, usize),
) {
    if poly.len() < 3 {
        return;
    }
    let min_v = poly.iter().map(|p| p.v).fold(f64::INFINITY, f64::min);
    let max_v = poly.iter().map(|p| p.v).fold(f64::NEG_INFINITY, f64::max);
    let r0 = (min_v - 0.5).ceil().max(0.0);
    let r1 = (max_v - 0.5).floor().min(height as f64 - 1.0);
    if !(r0 <= r1) {
        return;
    }
    let mut xs: Vec<f64> = Vec::with_capacity(8);
    for row in r0 as usize..=r1 as usize {
        let y = row as f64 + 0.5;
        xs.clear();
        for k in 0..poly.len() {
            let a = poly[k];
            let b = poly[(k + 1) % poly.len()];
            if (a.v <= y && b.v > y) || (b.v <= y && a.v > y) {
                xs.push(a.u + (y - a.v) / (b.v - a.v) * (b.u - a.u));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            // Pixel c is inside when its center c + 0.5 lies in [x0, x1).
            let c0 = (pair[0] - 0.5).ceil().max(0.0);
            let c1 = (pair[1] - 0.5).ceil().min(width as f64);
            if c0 < c1 {
                span(row, c0 as usize, c1 as usize);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn px(u: f64, v: f64) -> Pixel {
        Pixel { u, v }
    }

    #[test]
    fn rectangle_fill_counts_pixel_centers() {
        let mut m = IntentionMask::new(20, 10, 0);
        m.fill_polygon(
            &[px(2.0, 1.0), px(7.0, 1.0), px(7.0, 4.0), px(2.0, 4.0)],
            MaskClass::Intention,
        );
        assert_eq!(m.count(MaskClass::Intention), 15);
        assert!(m.is_intention(2, 1) && m.is_intention(6, 3));
        assert!(!m.is_intention(7, 1));
    }

    #[test]
    fn fill_clips_to_image() {
        let mut m = IntentionMask::new(10, 10, 0);
        m.fill_polygon(
            &[px(-50.0, -50.0), px(60.0, -50.0), px(60.0, 60.0), px(-50.0, 60.0)],
            MaskClass::Obstacle,
        );
        assert_eq!(m.count(MaskClass::Obstacle), 100);
    }

    #[test]
    fn labels_validated() {
        assert_eq!(
            IntentionMask::from_labels(2, 1, 0, vec![0, 3]),
            Err(MaskError::BadLabel(3))
        );
        assert!(IntentionMask::from_labels(2, 2, 0, vec![0; 3]).is_err());
    }

    #[test]
    fn centroid_of_block() {
        let mut m = IntentionMask::new(10, 10, 0);
        for r in 2..4 {
            for c in 4..6 {
                m.set(c, r, MaskClass::Intention);
            }
        }
        assert_eq!(m.intention_centroid(), Some((5.0, 3.0)));
    }
}

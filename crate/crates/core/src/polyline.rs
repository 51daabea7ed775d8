//! Arc-length utilities over 2-D polylines.

/// A polyline with cached cumulative arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<[f64; 2]>,
    cumulative: Vec<f64>,
}

/// Closest point on a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub s: f64,
    pub distance: f64,
    pub point: [f64; 2],
    pub segment: usize,
}

pub fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Parameter in `[0, 1]` of the closest point on segment `ab` and the distance to it.
pub fn project_on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> (f64, f64) {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    (t, dist(p, q))
}

impl Polyline {
    /// Consecutive duplicate points are dropped.
    pub fn new(points: &[[f64; 2]]) -> Self {
        let mut pts: Vec<[f64; 2]> = Vec::with_capacity(points.len());
        for &p in points {
            if pts.last().is_none_or(|&q| dist(p, q) > 1e-12) {
                pts.push(p);
            }
        }
        let mut cumulative = Vec::with_capacity(pts.len());
        let mut acc = 0.0;
        for (i, p) in pts.iter().enumerate() {
            if i > 0 {
                acc += dist(pts[i - 1], *p);
            }
            cumulative.push(acc);
        }
        Self {
            points: pts,
            cumulative,
        }
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    fn segment_at(&self, s: f64) -> usize {
        let n = self.points.len();
        if n < 2 {
            return 0;
        }
        // Segment whose start is the last vertex with cumulative <= s; a vertex
        // exactly at s belongs to the outgoing segment.
        let idx = self.cumulative.partition_point(|&c| c <= s);
        idx.saturating_sub(1).min(n - 2)
    }

    /// Point and tangent heading at arc length `s`, clamped to the polyline.
    pub fn sample(&self, s: f64) -> ([f64; 2], f64) {
        let n = self.points.len();
        if n == 0 {
            return ([0.0, 0.0], 0.0);
        }
        if n == 1 {
            return (self.points[0], 0.0);
        }
        let s = s.clamp(0.0, self.length());
        let i = self.segment_at(s);
        let a = self.points[i];
        let b = self.points[i + 1];
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        let t = if seg > 0.0 {
            ((s - self.cumulative[i]) / seg).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
            (b[1] - a[1]).atan2(b[0] - a[0]),
        )
    }

    pub fn project(&self, p: [f64; 2]) -> Projection {
        self.project_in_range(p, 0.0, f64::INFINITY)
    }

    /// Closest point among segments overlapping the arc-length window `[s_min, s_max]`.
    pub fn project_in_range(&self, p: [f64; 2], s_min: f64, s_max: f64) -> Projection {
        let n = self.points.len();
        if n == 1 {
            return Projection {
                s: 0.0,
                distance: dist(p, self.points[0]),
                point: self.points[0],
                segment: 0,
            };
        }
        let mut best = Projection {
            s: 0.0,
            distance: f64::INFINITY,
            point: self.points.first().copied().unwrap_or([0.0, 0.0]),
            segment: 0,
        };
        for i in 0..n.saturating_sub(1) {
            if self.cumulative[i + 1] < s_min || self.cumulative[i] > s_max {
                continue;
            }
            let (a, b) = (self.points[i], self.points[i + 1]);
            let (t, d) = project_on_segment(p, a, b);
            if d < best.distance {
                best = Projection {
                    s: self.cumulative[i] + t * (self.cumulative[i + 1] - self.cumulative[i]),
                    distance: d,
                    point: [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
                    segment: i,
                };
            }
        }
        best
    }

    /// Sub-polyline between arc lengths `s0 <= s1`.
    pub fn slice(&self, s0: f64, s1: f64) -> Vec<[f64; 2]> {
        let (p0, _) = self.sample(s0);
        let (p1, _) = self.sample(s1);
        let mut out = vec![p0];
        for (p, &c) in self.points.iter().zip(&self.cumulative) {
            if c > s0 && c < s1 {
                out.push(*p);
            }
        }
        if s1 > s0 {
            out.push(p1);
        }
        out
    }

    /// Points every `step` meters from the start, including the final point.
    pub fn resample(&self, step: f64) -> Vec<[f64; 2]> {
        let len = self.length();
        let n = (len / step).floor() as usize;
        let mut out: Vec<[f64; 2]> = (0..=n).map(|k| self.sample(k as f64 * step).0).collect();
        if len - n as f64 * step > 1e-9 {
            out.push(self.sample(len).0);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_and_project_on_l_shape() {
        let pl = Polyline::new(&[[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]]);
        assert_eq!(pl.length(), 20.0);
        let (p, h) = pl.sample(10.0);
        assert_eq!(p, [10.0, 0.0]);
        assert!((h - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let (_, h) = pl.sample(9.5);
        assert_eq!(h, 0.0);
        let pr = pl.project([12.0, 5.0]);
        assert!((pr.s - 15.0).abs() < 1e-12 && (pr.distance - 2.0).abs() < 1e-12);
    }

    #[test]
    fn slice_and_resample() {
        let pl = Polyline::new(&[[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]]);
        let s = pl.slice(5.0, 15.0);
        assert_eq!(s, vec![[5.0, 0.0], [10.0, 0.0], [10.0, 5.0]]);
        let r = pl.resample(3.0);
        assert_eq!(r.len(), 8);
        assert_eq!(*r.last().unwrap(), [10.0, 10.0]);
    }
}

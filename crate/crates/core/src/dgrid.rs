//! Plain-text grid files shared with external tooling.
//!
//! ```text
//! DGRID 1
//! width 4
//! height 2
//! resolution 0.5
//! origin -10 -20
//! encoding class
//! data
//! 0 0 1 1
//! 0 2 1 0
//! ```
//!
//! Class grids hold small integer labels; float grids hold values written in
//! shortest round-trip form so a read recovers every bit.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::mask::{IntentionMask, MaskError};
use crate::navscore::{GridSpec, KernelParams, NavScoreMap};
use crate::route::RouteRaster;

pub const MAGIC: &str = "DGRID 1";

#[derive(Debug, thiserror::Error)]
pub enum DGridError {
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("grid shape {got:?} does not match expected {expected:?}")]
    Shape {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("expected {expected} encoding, found {found}")]
    Encoding {
        expected: &'static str,
        found: &'static str,
    },
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridData {
    Class(Vec<u8>),
    Float(Vec<f64>),
}

impl GridData {
    pub fn encoding(&self) -> &'static str {
        match self {
            GridData::Class(_) => "class",
            GridData::Float(_) => "float",
        }
    }

    fn len(&self) -> usize {
        match self {
            GridData::Class(v) => v.len(),
            GridData::Float(v) => v.len(),
        }
    }
}

/// Row-major grid: `data[row * width + col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DGrid {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: [f64; 2],
    pub data: GridData,
}

impl DGrid {
    pub fn to_text(&self) -> String {
        assert_eq!(self.data.len(), self.width * self.height);
        let mut s = String::with_capacity(self.width * self.height * 2 + 128);
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "width {}", self.width);
        let _ = writeln!(s, "height {}", self.height);
        let _ = writeln!(s, "resolution {}", self.resolution);
        let _ = writeln!(s, "origin {} {}", self.origin[0], self.origin[1]);
        let _ = writeln!(s, "encoding {}", self.data.encoding());
        s.push_str("data\n");
        for row in 0..self.height {
            let range = row * self.width..(row + 1) * self.width;
            match &self.data {
                GridData::Class(v) => {
                    for (k, x) in v[range].iter().enumerate() {
                        if k > 0 {
                            s.push(' ');
                        }
                        let _ = write!(s, "{x}");
                    }
                }
                GridData::Float(v) => {
                    for (k, x) in v[range].iter().enumerate() {
                        if k > 0 {
                            s.push(' ');
                        }
                        let _ = write!(s, "{x:?}");
                    }
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), DGridError> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), DGridError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DGridError> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self, DGridError> {
        let mut lines = reader.lines().enumerate();
        let mut next = |want: &str| -> Result<(usize, String), DGridError> {
            loop {
                match lines.next() {
                    Some((i, l)) => {
                        let l = l?;
                        if l.trim().is_empty() {
                            continue;
                        }
                        return Ok((i + 1, l.trim().to_string()));
                    }
                    None => {
                        return Err(DGridError::Format {
                            line: 0,
                            msg: format!("unexpected end of file, expected {want}"),
                        })
                    }
                }
            }
        };
        let bad = |line: usize, msg: String| DGridError::Format { line, msg };

        let (ln, magic) = next("header")?;
        if magic != MAGIC {
            return Err(bad(ln, format!("expected `{MAGIC}`, found `{magic}`")));
        }
        let mut field = |key: &str| -> Result<(usize, Vec<String>), DGridError> {
            let (ln, l) = next(key)?;
            let mut parts = l.split_whitespace();
            if parts.next() != Some(key) {
                return Err(bad(ln, format!("expected `{key}`")));
            }
            Ok((ln, parts.map(str::to_string).collect()))
        };
        let parse_usize = |ln: usize, v: &[String]| -> Result<usize, DGridError> {
            v.first()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(ln, "expected an integer".into()))
        };
        let parse_f64 = |ln: usize, s: Option<&String>| -> Result<f64, DGridError> {
            s.and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(ln, "expected a number".into()))
        };

        let (ln, v) = field("width")?;
        let width = parse_usize(ln, &v)?;
        let (ln, v) = field("height")?;
        let height = parse_usize(ln, &v)?;
        let (ln, v) = field("resolution")?;
        let resolution = parse_f64(ln, v.first())?;
        let (ln, v) = field("origin")?;
        let origin = [parse_f64(ln, v.first())?, parse_f64(ln, v.get(1))?];
        let (ln, v) = field("encoding")?;
        let float = match v.first().map(String::as_str) {
            Some("class") => false,
            Some("float") => true,
            _ => return Err(bad(ln, "encoding must be `class` or `float`".into())),
        };
        let (ln, l) = next("data")?;
        if l != "data" {
            return Err(bad(ln, "expected `data`".into()));
        }

        let mut classes = Vec::new();
        let mut floats = Vec::new();
        for row in 0..height {
            let (ln, l) = next("a data row")?;
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != width {
                return Err(bad(
                    ln,
                    format!("row {row} has {} values, expected {width}", toks.len()),
                ));
            }
            for t in toks {
                if float {
                    floats.push(t.parse::<f64>().map_err(|_| bad(ln, format!("bad value `{t}`")))?);
                } else {
                    classes.push(t.parse::<u8>().map_err(|_| bad(ln, format!("bad label `{t}`")))?);
                }
            }
        }
        Ok(DGrid {
            width,
            height,
            resolution,
            origin,
            data: if float {
                GridData::Float(floats)
            } else {
                GridData::Class(classes)
            },
        })
    }

    pub fn from_mask(mask: &IntentionMask) -> Self {
        DGrid {
            width: mask.width,
            height: mask.height,
            resolution: 0.0,
            origin: [0.0, 0.0],
            data: GridData::Class(mask.labels().to_vec()),
        }
    }

    pub fn to_mask(&self, frame_id: u64) -> Result<IntentionMask, DGridError> {
        match &self.data {
            GridData::Class(v) => Ok(IntentionMask::from_labels(
                self.width,
                self.height,
                frame_id,
                v.clone(),
            )?),
            GridData::Float(_) => Err(DGridError::Encoding {
                expected: "class",
                found: "float",
            }),
        }
    }

    /// Rows follow the grid's x axis, columns its y axis.
    pub fn from_score_map(map: &NavScoreMap) -> Self {
        DGrid {
            width: map.grid.cols,
            height: map.grid.rows,
            resolution: map.grid.cell_size,
            origin: [map.grid.origin_x, map.grid.origin_y],
            data: GridData::Float(map.scores().to_vec()),
        }
    }

    pub fn to_score_map(&self, kernel: KernelParams) -> Result<NavScoreMap, DGridError> {
        match &self.data {
            GridData::Float(v) => {
                let grid = GridSpec {
                    rows: self.height,
                    cols: self.width,
                    cell_size: self.resolution,
                    origin_x: self.origin[0],
                    origin_y: self.origin[1],
                };
                Ok(NavScoreMap::from_scores(grid, kernel, v.clone()))
            }
            GridData::Class(_) => Err(DGridError::Encoding {
                expected: "float",
                found: "class",
            }),
        }
    }

    /// Origin is the vehicle-frame coordinate of the raster's rear-right corner.
    pub fn from_route_raster(r: &RouteRaster) -> Self {
        let half = r.side as f64 * r.cell_size / 2.0;
        DGrid {
            width: r.side,
            height: r.side,
            resolution: r.cell_size,
            origin: [0.0, -half],
            data: GridData::Class(r.cells.clone()),
        }
    }

    pub fn expect_shape(&self, width: usize, height: usize) -> Result<(), DGridError> {
        if (self.width, self.height) != (width, height) {
            return Err(DGridError::Shape {
                expected: (width, height),
                got: (self.width, self.height),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::MaskClass;

    #[test]
    fn class_text_layout() {
        let g = DGrid {
            width: 3,
            height: 2,
            resolution: 0.5,
            origin: [-10.0, -20.0],
            data: GridData::Class(vec![0, 1, 2, 2, 1, 0]),
        };
        let text = g.to_text();
        assert_eq!(
            text,
            "DGRID 1\nwidth 3\nheight 2\nresolution 0.5\norigin -10 -20\nencoding class\ndata\n0 1 2\n2 1 0\n"
        );
        assert_eq!(DGrid::read_from(text.as_bytes()).unwrap(), g);
    }

    #[test]
    fn floats_round_trip_bitwise() {
        let vals = vec![0.1, -1.0 / 3.0, 1e-300, 2.0f64.sqrt(), 0.0, -0.0, 12345.678901234567];
        let g = DGrid {
            width: 7,
            height: 1,
            resolution: 0.5,
            origin: [0.0, 0.0],
            data: GridData::Float(vals.clone()),
        };
        let back = DGrid::read_from(g.to_text().as_bytes()).unwrap();
        match back.data {
            GridData::Float(v) => {
                for (a, b) in v.iter().zip(&vals) {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
            }
            _ => panic!("wrong encoding"),
        }
    }

    #[test]
    fn mask_round_trip() {
        let mut m = IntentionMask::new(5, 3, 9);
        m.set(1, 1, MaskClass::Intention);
        m.set(4, 2, MaskClass::Obstacle);
        let back = DGrid::read_from(DGrid::from_mask(&m).to_text().as_bytes())
            .unwrap()
            .to_mask(9)
            .unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn malformed_files_rejected() {
        assert!(DGrid::read_from("DGRID 2\n".as_bytes()).is_err());
        let short = "DGRID 1\nwidth 2\nheight 2\nresolution 1\norigin 0 0\nencoding class\ndata\n0 1\n";
        assert!(DGrid::read_from(short.as_bytes()).is_err());
        let ragged = "DGRID 1\nwidth 2\nheight 1\nresolution 1\norigin 0 0\nencoding class\ndata\n0 1 1\n";
        assert!(DGrid::read_from(ragged.as_bytes()).is_err());
        let bad_label = "DGRID 1\nwidth 1\nheight 1\nresolution 0\norigin 0 0\nencoding class\ndata\n7\n";
        let g = DGrid::read_from(bad_label.as_bytes()).unwrap();
        assert!(g.to_mask(0).is_err());
    }
}

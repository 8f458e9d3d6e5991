//! Target intensity patterns for holography and aberration correction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Shape};
use crate::optics::io::read_pgm;
use crate::optics::IntensityImage;

static BOAT: &[u8] = include_bytes!("../../assets/boat.pgm");
static LETTER: &[u8] = include_bytes!("../../assets/letter.pgm");
static DIGIT: &[u8] = include_bytes!("../../assets/digit.pgm");

pub const DEFAULT_GRATING_PERIOD: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum TargetKind {
    /// Vertical binary bars; the first half of every period is bright.
    Grating { period: usize },
    Boat,
    Letter,
    Digit,
}

impl TargetKind {
    /// The four bundled targets.
    pub const ALL: [TargetKind; 4] = [
        TargetKind::Grating {
            period: DEFAULT_GRATING_PERIOD,
        },
        TargetKind::Boat,
        TargetKind::Letter,
        TargetKind::Digit,
    ];
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetKind::Grating { .. } => f.write_str("grating"),
            TargetKind::Boat => f.write_str("boat"),
            TargetKind::Letter => f.write_str("letter"),
            TargetKind::Digit => f.write_str("digit"),
        }
    }
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grating" => Ok(TargetKind::Grating {
                period: DEFAULT_GRATING_PERIOD,
            }),
            "boat" => Ok(TargetKind::Boat),
            "letter" => Ok(TargetKind::Letter),
            "digit" => Ok(TargetKind::Digit),
            other => Err(Error::config(format!(
                "unknown target kind {other:?} (expected grating, boat, letter or digit)"
            ))),
        }
    }
}

/// Target image normalised to `[0, 1]` with maximum exactly 1.
pub fn make_target(kind: TargetKind, shape: Shape) -> Result<IntensityImage> {
    let data = match kind {
        TargetKind::Grating { period } => {
            if period < 2 {
                return Err(Error::config("grating period must be at least 2 pixels"));
            }
            (0..shape.len())
                .map(|i| if (i % shape.cols) % period < period / 2 { 1.0 } else { 0.0 })
                .collect()
        }
        TargetKind::Boat | TargetKind::Letter | TargetKind::Digit => {
            let bytes = match kind {
                TargetKind::Boat => BOAT,
                TargetKind::Letter => LETTER,
                _ => DIGIT,
            };
            let (src_shape, pixels) = read_pgm(bytes)?;
            if src_shape == shape {
                pixels
            } else {
                resize_bilinear(&pixels, src_shape, shape)
            }
        }
    };
    let img = IntensityImage::new(shape, data)?;
    if img.max() <= 0.0 {
        return Err(Error::Data(format!("target {kind} is blank at {shape}")));
    }
    Ok(img.normalized())
}

/// Bilinear resampling with pixel-centre alignment and edge clamping.
pub(crate) fn resize_bilinear(src: &[f64], from: Shape, to: Shape) -> Vec<f64> {
    let sy = from.rows as f64 / to.rows as f64;
    let sx = from.cols as f64 / to.cols as f64;
    let coord = |d: usize, s: f64, n: usize| {
        let x = ((d as f64 + 0.5) * s - 0.5).clamp(0.0, (n - 1) as f64);
        let i = (x.floor() as usize).min(n.saturating_sub(2));
        (i, x - i as f64)
    };
    let mut out = Vec::with_capacity(to.len());
    for r in 0..to.rows {
        let (y0, fy) = coord(r, sy, from.rows);
        let y1 = (y0 + 1).min(from.rows - 1);
        for c in 0..to.cols {
            let (x0, fx) = coord(c, sx, from.cols);
            let x1 = (x0 + 1).min(from.cols - 1);
            let at = |y: usize, x: usize| src[y * from.cols + x];
            let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
            let bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::contrast;

    #[test]
    fn grating_has_eight_bars() {
        let g = make_target(TargetKind::Grating { period: 8 }, Shape::new(64, 64)).unwrap();
        let row = g.row(10);
        let rising = (0..64).filter(|&c| row[c] == 1.0 && (c == 0 || row[c - 1] == 0.0)).count();
        assert_eq!(rising, 8);
        assert_eq!(contrast(row).unwrap(), 1.0);
    }

    #[test]
    fn bundled_targets_are_normalised() {
        for kind in TargetKind::ALL {
            for shape in [Shape::new(64, 64), Shape::new(32, 32)] {
                let t = make_target(kind, shape).unwrap();
                assert_eq!(t.max(), 1.0, "{kind}");
                assert!(t.data().iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn unknown_kind_is_config_error() {
        assert!(matches!("lena".parse::<TargetKind>(), Err(Error::Config(_))));
    }

    #[test]
    fn resize_identity() {
        let src: Vec<f64> = (0..16).map(|v| v as f64).collect();
        assert_eq!(resize_bilinear(&src, Shape::new(4, 4), Shape::new(4, 4)), src);
    }
}

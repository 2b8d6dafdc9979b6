//! Square face box from landmarks, and the crop/resize to the analysis size.

use crate::error::{Error, Result};
use crate::media::{quantize, Frame, LandmarkSet, Point};

pub const DEFAULT_MARGIN: f64 = 1.10;
pub const ANALYSIS_SIDE: usize = 72;

/// Detector rectangle, in frame coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawBox {
    pub x0: f64,
    pub y0: f64,
    pub w: f64,
    pub h: f64,
}

impl RawBox {
    pub fn full_frame(width: usize, height: usize) -> Self {
        Self {
            x0: 0.0,
            y0: 0.0,
            w: width as f64,
            h: height as f64,
        }
    }
}

/// Square region `[x0, x0+side) x [y0, y0+side)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceBox {
    pub x0: f64,
    pub y0: f64,
    pub side: f64,
}

impl FaceBox {
    pub fn center(&self) -> Point {
        Point::new(self.x0 + 0.5 * self.side, self.y0 + 0.5 * self.side)
    }

    /// Maps a frame-coordinate point into the coordinates of an
    /// `out_side`-square crop of this box.
    pub fn to_crop(&self, p: Point, out_side: usize) -> Point {
        let s = out_side as f64 / self.side;
        Point::new((p.x - self.x0) * s, (p.y - self.y0) * s)
    }
}

/// Square box centred on the landmark centroid with side twice the largest
/// Chebyshev distance from it, times `margin`. The box is translated back
/// inside the frame and only shrunk when it cannot fit at all.
///
/// When `landmarks` is `None` the detector box is used instead: a square of
/// side `max(w, h) * margin` around its centre.
pub fn adjust_box(
    raw: RawBox,
    landmarks: Option<&LandmarkSet>,
    margin: f64,
    frame_width: usize,
    frame_height: usize,
) -> Result<FaceBox> {
    if !(margin > 0.0) {
        return Err(Error::InvalidParameter(format!("roi margin must be positive, got {margin}")));
    }
    let (center, side) = match landmarks {
        Some(lm) => {
            let c = lm.centroid();
            let extent = lm
                .points()
                .iter()
                .map(|p| (p.x - c.x).abs().max((p.y - c.y).abs()))
                .fold(0.0f64, f64::max);
            if extent == 0.0 {
                return Err(Error::DegenerateLandmarks);
            }
            (c, 2.0 * extent * margin)
        }
        None => {
            if !(raw.w >= 1.0 && raw.h >= 1.0) {
                return Err(Error::InvalidParameter("detector box must be at least 1x1".into()));
            }
            let c = Point::new(raw.x0 + 0.5 * raw.w, raw.y0 + 0.5 * raw.h);
            (c, raw.w.max(raw.h) * margin)
        }
    };

    let (fw, fh) = (frame_width as f64, frame_height as f64);
    let side = side.max(1.0).min(fw.min(fh));
    let x0 = (center.x - 0.5 * side).clamp(0.0, fw - side);
    let y0 = (center.y - 0.5 * side).clamp(0.0, fh - side);
    Ok(FaceBox { x0, y0, side })
}

const BOUNDS_SLACK: f64 = 1e-9;

/// Crops `bx` out of `frame` and resizes it to `out_side` squared with
/// bilinear interpolation (pixel centres at half-integer coordinates,
/// edge samples clamped).
pub fn crop_resize(frame: &Frame, bx: &FaceBox, out_side: usize) -> Result<Frame> {
    let (w, h) = (frame.width(), frame.height());
    if out_side == 0 {
        return Err(Error::InvalidParameter("output side must be positive".into()));
    }
    if !(bx.side > 0.0)
        || bx.x0 < -BOUNDS_SLACK
        || bx.y0 < -BOUNDS_SLACK
        || bx.x0 + bx.side > w as f64 + BOUNDS_SLACK
        || bx.y0 + bx.side > h as f64 + BOUNDS_SLACK
    {
        return Err(Error::BoxOutOfBounds);
    }
    let scale = bx.side / out_side as f64;
    let axis = |origin: f64, n: usize, len: usize| -> Vec<(usize, usize, f64)> {
        (0..n)
            .map(|i| {
                let s = (origin + (i as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
                let lo = s.floor() as usize;
                let hi = (lo + 1).min(len - 1);
                (lo, hi, s - lo as f64)
            })
            .collect()
    };
    let xs = axis(bx.x0, out_side, w);
    let ys = axis(bx.y0, out_side, h);

    let src = frame.as_bytes();
    let at = |x: usize, y: usize, c: usize| f64::from(src[(y * w + x) * 3 + c]);
    let mut data = Vec::with_capacity(out_side * out_side * 3);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for c in 0..3 {
                let top = at(x0, y0, c) * (1.0 - fx) + at(x1, y0, c) * fx;
                let bottom = at(x0, y1, c) * (1.0 - fx) + at(x1, y1, c) * fx;
                data.push(quantize(top * (1.0 - fy) + bottom * fy));
            }
        }
    }
    Frame::new(out_side, out_side, data)
}

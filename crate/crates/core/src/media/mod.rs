//! Frames, landmark sets and reference signals, plus their on-disk formats.
//!
//! Frames are stored as binary NetPBM (`P6`, maxval 255) one file per frame,
//! landmarks and reference signals as small UTF-8 CSV files.

mod landmarks;
mod pnm;
mod reference;

pub use landmarks::{load_landmarks, save_landmarks};
pub use pnm::{
    decode_pbm, decode_ppm, encode_pbm, encode_ppm, load_frame_sequence, load_masks,
    save_frame_sequence, save_masks,
};
pub use reference::{load_reference, save_reference};

use crate::error::{Error, Result};

/// Round half-to-even and clamp into the 8-bit range.
#[inline]
pub fn quantize(v: f64) -> u8 {
    let r = v.round_ties_even();
    if r.is_nan() || r <= 0.0 {
        0
    } else if r >= 255.0 {
        255
    } else {
        r as u8
    }
}

/// One 8-bit RGB image, row-major, channels interleaved R,G,B.
#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Frame")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidFrame(format!("{width}x{height} has no pixels")));
        }
        if data.len() != width * height * 3 {
            return Err(Error::InvalidFrame(format!(
                "{} bytes for a {width}x{height} RGB frame",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "frame must have at least one pixel");
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self {
            width,
            height,
            data,
        }
    }

    /// Builds a frame by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "frame must have at least one pixel");
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    #[inline]
    pub fn channel(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * 3 + c]
    }

    pub fn same_size(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// One channel as a row-major `f64` plane.
    pub fn plane(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(3).map(|&v| f64::from(v)).collect()
    }

    /// Rebuilds a frame from three real-valued planes, quantizing each value.
    pub fn from_planes(width: usize, height: usize, planes: &[Vec<f64>; 3]) -> Self {
        let n = width * height;
        let mut data = Vec::with_capacity(n * 3);
        for i in 0..n {
            for plane in planes {
                data.push(quantize(plane[i]));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }
}

/// Ordered frames sharing one size, with a frame rate.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    fps: f64,
    source_id: String,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>, fps: f64, source_id: impl Into<String>) -> Result<Self> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::InvalidParameter(format!("fps must be positive, got {fps}")));
        }
        if let Some(first) = frames.first() {
            for (index, f) in frames.iter().enumerate() {
                if !f.same_size(first) {
                    return Err(Error::DimensionMismatch {
                        index,
                        expected_w: first.width,
                        expected_h: first.height,
                        found_w: f.width,
                        found_h: f.height,
                    });
                }
            }
        }
        Ok(Self {
            frames,
            fps,
            source_id: source_id.into(),
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.frames.len() as f64 / self.fps
    }

    /// Same metadata, different frames (which must share one size).
    pub fn with_frames(&self, frames: Vec<Frame>) -> Result<Self> {
        Self::new(frames, self.fps, self.source_id.clone())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

pub const LANDMARK_COUNT: usize = 68;

/// 68 facial points in the Multi-PIE layout, in frame coordinates where pixel
/// `(i, j)` covers `[i, i+1) x [j, j+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkSet {
    points: [Point; LANDMARK_COUNT],
}

impl LandmarkSet {
    pub fn new(points: [Point; LANDMARK_COUNT]) -> Self {
        Self { points }
    }

    pub fn from_slice(points: &[Point]) -> Result<Self> {
        let points: [Point; LANDMARK_COUNT] =
            points.try_into().map_err(|_| Error::WrongPointCount {
                frame: 0,
                count: points.len(),
            })?;
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point; LANDMARK_COUNT] {
        &self.points
    }

    #[inline]
    pub fn get(&self, idx: usize) -> Point {
        self.points[idx]
    }

    pub fn centroid(&self) -> Point {
        let n = LANDMARK_COUNT as f64;
        let (sx, sy) = self
            .points
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Point::new(sx / n, sy / n)
    }

    pub fn mean_of(&self, indices: impl IntoIterator<Item = usize>) -> Point {
        let mut n = 0usize;
        let (mut sx, mut sy) = (0.0, 0.0);
        for i in indices {
            sx += self.points[i].x;
            sy += self.points[i].y;
            n += 1;
        }
        Point::new(sx / n as f64, sy / n as f64)
    }

    /// Applies `f` to every point.
    pub fn map(&self, mut f: impl FnMut(Point) -> Point) -> Self {
        let mut points = self.points;
        for p in &mut points {
            *p = f(*p);
        }
        Self { points }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceKind {
    BvpWaveform,
    HrSeriesBpm,
}

impl ReferenceKind {
    pub fn tag(self) -> &'static str {
        match self {
            ReferenceKind::BvpWaveform => "BVP",
            ReferenceKind::HrSeriesBpm => "HR",
        }
    }
}

/// Ground-truth physiological signal sampled at a uniform rate.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSignal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub kind: ReferenceKind,
}

impl ReferenceSignal {
    pub fn new(samples: Vec<f64>, sample_rate: f64, kind: ReferenceKind) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
            kind,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

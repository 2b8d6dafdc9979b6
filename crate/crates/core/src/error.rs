use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // media
    #[error("missing frame index {index} in {dir}")]
    MissingFrame { dir: PathBuf, index: usize },
    #[error("frame {index} is {found_w}x{found_h}, expected {expected_w}x{expected_h}")]
    DimensionMismatch {
        index: usize,
        expected_w: usize,
        expected_h: usize,
        found_w: usize,
        found_h: usize,
    },
    #[error("malformed pixmap {path}: {reason}")]
    MalformedPixmap { path: PathBuf, reason: String },
    #[error("frame {frame} has {count} landmark rows, expected 68")]
    WrongPointCount { frame: usize, count: usize },
    #[error("landmark frame indices must be consecutive from 0 (saw {found} after {previous:?})")]
    NonMonotonicFrames { previous: Option<usize>, found: usize },
    #[error("reference sampling is not uniform: step {step} deviates from median {median}")]
    NonUniformSampling { step: f64, median: f64 },
    #[error("signal needs at least 2 samples")]
    EmptySignal,
    #[error("malformed csv {path}: {reason}")]
    MalformedCsv { path: PathBuf, reason: String },
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // roi
    #[error("all landmark points coincide")]
    DegenerateLandmarks,
    #[error("face box does not lie inside the frame")]
    BoxOutOfBounds,

    // degrade
    #[error("degenerate mask geometry: {0}")]
    DegenerateGeometry(&'static str),
    #[error("facemask polygon is self-intersecting")]
    SelfIntersectingPolygon,
    #[error("facemask polygon has zero area")]
    ZeroAreaPolygon,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    // restore
    #[error("every pixel is masked; nothing to inpaint from")]
    AllMasked,

    // rppg
    #[error("first frame is fully masked")]
    AllMaskedFirstFrame,
    #[error("channel {0} is constant")]
    ConstantChannel(usize),
    #[error("channel {0} has zero mean")]
    ZeroMeanChannel(usize),
    #[error("gram matrix of the normalized trace is singular")]
    SingularGram,

    // signal
    #[error("need {needed} samples, have {available}")]
    TooShort { needed: usize, available: usize },
    #[error("band {low}..{high} Hz is not inside (0, {nyquist}) Hz")]
    BandOutOfRange { low: f64, high: f64, nyquist: f64 },
    #[error("no positive spectral power inside the band")]
    FlatSpectrum,

    // quality
    #[error("images differ in size: {0}x{1} vs {2}x{3}")]
    SizeMismatch(usize, usize, usize, usize),
    #[error("image side {0} is smaller than the 11 pixel SSIM window")]
    TooSmall(usize),
    #[error("predicted and reference lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("reference values must be positive")]
    NonPositiveReference,

    // pipeline
    #[error("config error: {0}")]
    Config(String),
    #[error("report is inconsistent: {0}")]
    ReportInconsistent(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable code used in report rows.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MissingFrame { .. } => "MissingFrame",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::MalformedPixmap { .. } => "MalformedPixmap",
            Error::WrongPointCount { .. } => "WrongPointCount",
            Error::NonMonotonicFrames { .. } => "NonMonotonicFrames",
            Error::NonUniformSampling { .. } => "NonUniformSampling",
            Error::EmptySignal => "EmptySignal",
            Error::MalformedCsv { .. } => "MalformedCsv",
            Error::InvalidFrame(_) => "InvalidFrame",
            Error::Io { .. } => "IoFailure",
            Error::DegenerateLandmarks => "DegenerateLandmarks",
            Error::BoxOutOfBounds => "BoxOutOfBounds",
            Error::DegenerateGeometry(_) => "DegenerateGeometry",
            Error::SelfIntersectingPolygon => "SelfIntersectingPolygon",
            Error::ZeroAreaPolygon => "ZeroAreaPolygon",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::AllMasked => "AllMasked",
            Error::AllMaskedFirstFrame => "AllMaskedFirstFrame",
            Error::ConstantChannel(_) => "ConstantChannel",
            Error::ZeroMeanChannel(_) => "ZeroMeanChannel",
            Error::SingularGram => "SingularGram",
            Error::TooShort { .. } => "TooShort",
            Error::BandOutOfRange { .. } => "BandOutOfRange",
            Error::FlatSpectrum => "FlatSpectrum",
            Error::SizeMismatch(..) => "DimensionMismatch",
            Error::TooSmall(_) => "TooSmall",
            Error::LengthMismatch(..) => "LengthMismatch",
            Error::NonPositiveReference => "NonPositiveReference",
            Error::Config(_) => "ConfigError",
            Error::ReportInconsistent(_) => "ReportInconsistent",
        }
    }
}

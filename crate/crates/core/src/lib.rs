//! Classical remote-photoplethysmography benchmark toolkit.
//!
//! Frames are degraded ([`degrade`]), optionally restored ([`restore`]),
//! averaged into RGB traces and turned into pulse signals by six classical
//! transforms ([`rppg`]), then scored against a reference heart rate
//! ([`signal`], [`quality`]). [`synth`] generates videos with a known pulse,
//! and [`pipeline`] runs the whole chain over a batch from an INI config.
//!
//! ```
//! use pulsebench::{rppg, signal, synth};
//!
//! let video = synth::generate(&synth::SynthSpec::default()).unwrap();
//! let trace = rppg::extract_trace(video.frames.frames(), video.frames.fps(), None).unwrap();
//! let pulse = rppg::pos(&trace).unwrap();
//! let filtered = signal::butterworth_bandpass(&pulse.samples, pulse.fps, 0.75, 2.5).unwrap();
//! let hr = signal::estimate_hr(&filtered, pulse.fps, 0.75, 2.5).unwrap();
//! assert!((hr.bpm - 72.0).abs() < 2.0);
//! ```

mod border;
pub mod degrade;
mod error;
pub mod media;
pub mod pipeline;
pub mod quality;
pub mod restore;
pub mod roi;
pub mod rppg;
pub mod seed;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
